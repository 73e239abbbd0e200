"""SMT-LIB v2 encoding of (circuit, property) pairs and the solver driver.

The query asserts the preconditions, one single-assignment transition per
gate, and the negation of the property. ``unsat`` therefore means the
property holds for every assignment of the free bits.

Each qubit field gets a new version only when a gate writes it, so the
number of declared variables grows with gates + qubits.
"""

from __future__ import annotations

import enum
import os
import re
import shlex
import shutil
import subprocess
import tempfile
import threading
import time
from dataclasses import dataclass, field
from typing import Mapping

from .circuit import AbstractQubitState, Circuit, GateKind, validate_circuit
from .errors import BindingError, CircuitError, ModelParseError, SolverError
from .properties import (
    STAGES,
    And,
    BvXor,
    Concat,
    Const,
    Eq,
    Extract,
    FreeRef,
    Implies,
    Not,
    Or,
    PropertySpec,
    Singular,
    StateRef,
    Term,
    postconditions,
    preconditions,
)

SOLVER_ENV = "QBVCHECK_SOLVER"
DEFAULT_SOLVER = "z3 {file}"
DEFAULT_TIMEOUT = 300.0
LOGIC = "QF_BV"


def _bin(value: int, w: int) -> str:
    return "#b" + format(value, f"0{w}b")


def _sort(field_: str) -> str:
    return "(_ BitVec 3)" if field_ == "s" else "(_ BitVec 2)"


def label_key(label: str) -> str:
    """``P1(ii)`` -> ``p1_ii``: an SMT-safe form of a condition label."""
    return re.sub(r"[^0-9a-z]+", "_", label.lower()).strip("_")


@dataclass(frozen=True)
class Encoding:
    """An SMT-LIB document plus the bookkeeping needed to read its model."""

    text: str
    spec: PropertySpec
    stage_vars: Mapping[tuple[int, str, str], str]
    free_bits: tuple[str, ...]
    violation_vars: tuple[tuple[str, str], ...]  # (condition label, Bool var)

    def __str__(self) -> str:
        return self.text

    def declared_variables(self) -> list[str]:
        return re.findall(r"^\(declare-const (\S+) ", self.text, flags=re.M)


class _SymbolicState:
    """Current SSA version of every qubit field."""

    def __init__(self, n: int):
        self.versions: dict[tuple[str, int], list[tuple[int, str]]] = {}
        self.counter: dict[tuple[str, int], int] = {}
        self.lines: list[str] = []
        for i in range(n):
            for f in ("s", "q"):
                self.versions[(f, i)] = []
                self.counter[(f, i)] = 0

    def current(self, f: str, i: int) -> str:
        return self.versions[(f, i)][-1][1]

    def fresh(self, f: str, i: int, at: int, definition: str) -> str:
        k = self.counter[(f, i)]
        self.counter[(f, i)] = k + 1
        name = f"{f}_{i}_v{k}"
        self.lines.append(f"(declare-const {name} {_sort(f)})")
        self.lines.append(f"(assert (= {name} {definition}))")
        self.versions[(f, i)].append((at, name))
        return name

    def at(self, f: str, i: int, trace_index: int) -> str:
        name = None
        for idx, v in self.versions[(f, i)]:
            if idx > trace_index:
                break
            name = v
        assert name is not None
        return name


def _emit(t: Term, resolve) -> str:
    if isinstance(t, Const):
        return _bin(t.value, t.width)
    if isinstance(t, StateRef):
        return resolve(t)
    if isinstance(t, FreeRef):
        return t.name
    if isinstance(t, Extract):
        return f"((_ extract {t.hi} {t.lo}) {_emit(t.arg, resolve)})"
    if isinstance(t, Concat):
        if len(t.args) == 1:
            return _emit(t.args[0], resolve)
        return "(concat " + " ".join(_emit(a, resolve) for a in t.args) + ")"
    if isinstance(t, BvXor):
        return f"(bvxor {_emit(t.a, resolve)} {_emit(t.b, resolve)})"
    if isinstance(t, Eq):
        return f"(= {_emit(t.a, resolve)} {_emit(t.b, resolve)})"
    if isinstance(t, (And, Or)):
        if not t.args:
            return "true" if isinstance(t, And) else "false"
        if len(t.args) == 1:
            return _emit(t.args[0], resolve)
        op = "and" if isinstance(t, And) else "or"
        return f"({op} " + " ".join(_emit(a, resolve) for a in t.args) + ")"
    if isinstance(t, Not):
        return f"(not {_emit(t.arg, resolve)})"
    if isinstance(t, Implies):
        return f"(=> {_emit(t.a, resolve)} {_emit(t.b, resolve)})"
    if isinstance(t, Singular):
        n = len(t.args)
        if n == 1:
            return f"(= {_emit(t.args[0], resolve)} #b1)"
        # Exactly one bit set: v != 0 and v & (v - 1) == 0.
        v = "(concat " + " ".join(_emit(a, resolve) for a in t.args) + ")"
        zero, one = _bin(0, n), _bin(1, n)
        return f"(and (distinct {v} {zero}) (= (bvand {v} (bvsub {v} {one})) {zero}))"
    raise TypeError(f"cannot encode term {t!r}")


def encode(c: Circuit, spec: PropertySpec) -> Encoding:
    """Compile ``c`` and the negation of ``spec`` into a QF_BV query."""
    errors = [d for d in validate_circuit(c) if d.is_error]
    if errors:
        raise CircuitError(f"cannot encode invalid circuit {c.name}: {errors[0]}")
    if spec.n_gates != len(c.gates) or len(spec.qubits) != c.n:
        raise BindingError(f"property was bound to a different circuit than {c.name}")

    pre = preconditions(spec)
    conds = postconditions(spec)
    st = _SymbolicState(c.n)
    head = [
        f"; circuit {c.name}: {c.n} qubits, {len(c.gates)} gates; property {spec.label}",
        f"(set-logic {LOGIC})",
        "(set-option :produce-models true)",
    ]
    head += [f"(declare-const {v.name} (_ BitVec 1))" for v in pre.free]

    for d in c.qubits:
        i = d.index
        st.fresh("s", i, 0, _bin(0, 3))
        if i in spec.free_inputs:
            st.fresh("q", i, 0, f"(concat #b0 x_{i})")
        else:
            st.fresh("q", i, 0, _bin(d.init.q, 2))

    inject_at = spec.stage_markers["1"]

    def inject() -> None:
        for v in pre.flips:
            st.fresh("q", v.qubit, inject_at, f"(bvxor {st.current('q', v.qubit)} (concat #b0 {v.name}))")

    for k, g in enumerate(c.gates):
        if pre.flips and k == inject_at:
            inject()
        at = k + 1
        if g.kind is GateKind.H:
            i = g.target
            cur = st.current("s", i)
            st.fresh("s", i, at, f"(ite (= {cur} #b111) #b110 (bvadd {cur} #b001))")
        elif g.kind is GateKind.X:
            i = g.target
            st.fresh("q", i, at, f"(bvxor {st.current('q', i)} #b01)")
        elif g.kind is GateKind.CNOT:
            ctl, tgt = g.qubits
            cq, tq = st.current("q", ctl), st.current("q", tgt)
            st.fresh("q", tgt, at, f"(ite (= ((_ extract 0 0) {cq}) #b1) (bvxor {tq} #b01) {tq})")
        elif g.kind is GateKind.MEASURE:
            i = g.target
            st.fresh("q", i, at, f"(bvor {st.current('q', i)} #b10)")
        else:  # pragma: no cover - GateKind is closed
            raise CircuitError(f"unsupported gate {g!r}")
    if pre.flips and inject_at == len(c.gates):
        inject()

    markers = spec.stage_markers
    stage_vars = {
        (i, stage, f): st.at(f, i, markers[stage])
        for i in range(c.n) for stage in STAGES for f in ("s", "q")
    }

    def resolve(ref: StateRef) -> str:
        return stage_vars[(ref.qubit, ref.stage, ref.field)]

    tail = [f"(assert (! {_emit(t, resolve)} :named pre_{j}))" for j, t in enumerate(pre.assumptions)]
    viol = []
    for cond in conds:
        key = label_key(cond.label)
        var = f"viol_{key}"
        viol.append((cond.label, var))
        tail.append(f"(declare-const {var} Bool)")
        tail.append(f"(assert (! (= {var} (not {_emit(cond.term, resolve)})) :named cond_{key}))")
    tail.append("(assert (or " + " ".join(v for _, v in viol) + "))")
    tail += ["(check-sat)", "(get-model)"]

    text = "\n".join(head + st.lines + tail) + "\n"
    return Encoding(text, spec, stage_vars, tuple(v.name for v in pre.free), tuple(viol))


# ---------------------------------------------------------------------------
# Verdicts and model decoding
# ---------------------------------------------------------------------------


class Status(enum.Enum):
    VERIFIED = "Verified"
    VIOLATED = "Violated"
    UNKNOWN = "Unknown"


@dataclass
class Counterexample:
    free_bits: dict[str, int]
    values: dict[str, int | bool]
    violated_condition: str | None
    stages: dict[str, list[AbstractQubitState]] | None = None

    def to_json(self) -> dict:
        out: dict = {"free_bits": dict(self.free_bits), "violated_condition": self.violated_condition}
        if self.stages is not None:
            out["stages"] = {
                stage: [{"s": f"{st.s:03b}", "q": f"{st.q:02b}"} for st in states]
                for stage, states in self.stages.items()
            }
        return out


@dataclass
class VerificationVerdict:
    status: Status
    counterexample: Counterexample | None = None
    solver_time: float = 0.0
    peak_memory: int | None = None
    violated_condition: str | None = None
    reason: str | None = None

    def __post_init__(self) -> None:
        if (self.counterexample is not None) != (self.status is Status.VIOLATED):
            raise ValueError("a counterexample is present exactly when the verdict is Violated")


_TOKEN = re.compile(r'\s+|;[^\n]*|(\()|(\))|(\|[^|]*\|)|("(?:[^"]|"")*")|([^\s()|";]+)')


def parse_sexprs(text: str) -> list:
    """Parse SMT-LIB s-expressions into nested Python lists of strings."""
    stack: list[list] = [[]]
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise ModelParseError(f"unexpected character {text[pos]!r} at offset {pos}")
        pos = m.end()
        if m.group(1):
            stack.append([])
        elif m.group(2):
            if len(stack) == 1:
                raise ModelParseError(f"unbalanced ')' at offset {m.start()}")
            done = stack.pop()
            stack[-1].append(done)
        elif m.group(3):
            stack[-1].append(m.group(3)[1:-1])
        elif m.group(4) or m.group(5):
            stack[-1].append(m.group(4) or m.group(5))
    if len(stack) != 1:
        raise ModelParseError("unbalanced '(' in model text")
    return stack[0]


def _value(v) -> int | bool:
    if v == "true":
        return True
    if v == "false":
        return False
    if isinstance(v, str) and v.startswith("#b"):
        return int(v[2:], 2)
    if isinstance(v, str) and v.startswith("#x"):
        return int(v[2:], 16)
    if isinstance(v, list) and len(v) == 3 and v[0] == "_" and v[1].startswith("bv"):
        return int(v[1][2:])
    raise ModelParseError(f"unsupported model value {v!r}")


def parse_model(raw: str) -> dict[str, int | bool]:
    exprs = parse_sexprs(raw)
    if len(exprs) != 1 or not isinstance(exprs[0], list):
        raise ModelParseError(f"expected one parenthesized model, got: {raw[:200]!r}")
    body = exprs[0]
    if body and body[0] == "model":
        body = body[1:]
    values: dict[str, int | bool] = {}
    for entry in body:
        if not (isinstance(entry, list) and len(entry) == 5 and entry[0] == "define-fun"):
            raise ModelParseError(f"unexpected model entry {entry!r}")
        _, name, args, _sort_, val = entry
        if args:
            continue
        if _sort_ == "Bool" and isinstance(val, list):
            # Named assertions show up as Bool definitions over other symbols.
            continue
        values[name] = _value(val)
    return values


def decode_model(raw: str, spec: PropertySpec, encoding: Encoding | None = None) -> Counterexample:
    """Read a ``sat`` model: free bits, stage states and the first violated condition."""
    values = parse_model(raw)
    free = {v.name: int(values.get(v.name, 0)) for v in preconditions(spec).free}
    violated = None
    for cond in postconditions(spec):
        if values.get(f"viol_{label_key(cond.label)}") is True:
            violated = cond.label
            break
    stages = None
    if encoding is not None:
        stages = {}
        try:
            for stage in STAGES:
                stages[stage] = [
                    AbstractQubitState(
                        int(values[encoding.stage_vars[(i, stage, "s")]]),
                        int(values[encoding.stage_vars[(i, stage, "q")]]),
                    )
                    for i in spec.qubits
                ]
        except KeyError as exc:
            raise ModelParseError(f"model lacks stage variable {exc.args[0]}") from None
    return Counterexample(free, values, violated, stages)


# ---------------------------------------------------------------------------
# Solver process
# ---------------------------------------------------------------------------


def solver_argv(solver_cmd: str | None, path: str) -> list[str]:
    template = solver_cmd or os.environ.get(SOLVER_ENV) or DEFAULT_SOLVER
    argv = shlex.split(template)
    if not argv:
        raise SolverError("empty solver command")
    if any("{file}" in a for a in argv):
        argv = [a.replace("{file}", path) for a in argv]
    else:
        argv.append(path)
    if shutil.which(argv[0]) is None:
        raise SolverError(f"solver executable {argv[0]!r} not found on PATH")
    return argv


@dataclass
class _ProcResult:
    stdout: str
    stderr: str
    returncode: int
    timed_out: bool
    wall: float
    maxrss: int = field(default=0)


def _run(argv: list[str], timeout: float) -> _ProcResult:
    with tempfile.TemporaryFile() as out, tempfile.TemporaryFile() as err:
        start = time.perf_counter()
        proc = subprocess.Popen(argv, stdout=out, stderr=err, stdin=subprocess.DEVNULL)
        box: dict = {}

        def reap() -> None:
            _, status, usage = os.wait4(proc.pid, 0)
            box["status"], box["usage"] = status, usage
            box["end"] = time.perf_counter()

        waiter = threading.Thread(target=reap, daemon=True)
        waiter.start()
        waiter.join(timeout)
        timed_out = waiter.is_alive()
        if timed_out:
            proc.kill()
            waiter.join()
        # wait4 already reaped the child; keep Popen from trying again.
        proc.returncode = os.waitstatus_to_exitcode(box["status"])
        out.seek(0)
        err.seek(0)
        return _ProcResult(
            out.read().decode(errors="replace"),
            err.read().decode(errors="replace"),
            proc.returncode,
            timed_out,
            box["end"] - start,
            box["usage"].ru_maxrss * 1024,
        )


def run_solver(
    doc: Encoding | str,
    solver_cmd: str | None = None,
    timeout: float = DEFAULT_TIMEOUT,
) -> VerificationVerdict:
    """Run an external SMT-LIB solver on ``doc`` and classify its answer.

    ``unsat`` maps to Verified, ``sat`` to Violated with a decoded model,
    and ``unknown`` or a timeout to Unknown.
    """
    text = doc.text if isinstance(doc, Encoding) else doc
    with tempfile.TemporaryDirectory(prefix="qbvcheck-") as tmp:
        path = os.path.join(tmp, "query.smt2")
        with open(path, "w") as fh:
            fh.write(text)
        argv = solver_argv(solver_cmd, path)
        res = _run(argv, timeout)

    if res.timed_out:
        return VerificationVerdict(Status.UNKNOWN, solver_time=res.wall, peak_memory=res.maxrss,
                                   reason=f"timeout after {timeout:g} s")
    stripped = res.stdout.lstrip()
    first, _, rest = stripped.partition("\n")
    answer = first.strip()
    if answer == "unsat":
        return VerificationVerdict(Status.VERIFIED, solver_time=res.wall, peak_memory=res.maxrss)
    if answer in ("unknown", "timeout"):
        return VerificationVerdict(Status.UNKNOWN, solver_time=res.wall, peak_memory=res.maxrss,
                                   reason=f"solver answered {answer}")
    if answer != "sat":
        raise SolverError(
            f"unexpected solver output (exit {res.returncode}):\n{res.stdout}{res.stderr}")
    if isinstance(doc, Encoding):
        cex = decode_model(rest, doc.spec, doc)
    else:
        values = parse_model(rest)
        cex = Counterexample({}, values, None)
    return VerificationVerdict(Status.VIOLATED, cex, res.wall, res.maxrss, cex.violated_condition)


def verify_smt(c: Circuit, spec: PropertySpec, solver_cmd: str | None = None,
               timeout: float = DEFAULT_TIMEOUT) -> VerificationVerdict:
    return run_solver(encode(c, spec), solver_cmd, timeout)
