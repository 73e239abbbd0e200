"""Correctness properties as small bit-vector formulas.

A property is bound to a circuit as a ``PropertySpec``. Its preconditions
(free bits plus assumptions) and numbered postconditions are expressed in a
tiny term language over the circuit's state at named stages. The same terms
are evaluated concretely by the oracle and printed as SMT-LIB by the
encoder, so both engines check literally the same formula.

Stages: ``in`` is the input, ``1`` the point after the leading Hadamard
layer, ``out-1`` the point before the trailing measure layer and ``out``
the final state.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Callable, Mapping, Sequence

from .circuit import FREE, AbstractQubitState, Circuit, GateKind
from .errors import BindingError
from .semantics import MachineState, evaluate, singular

STAGES = ("in", "1", "out-1", "out")


class PropertyId(enum.Enum):
    P1 = "p1"  # bit-flip detection
    P2 = "p2"  # phase-flip detection
    P3 = "p3"  # entanglement

    @classmethod
    def parse(cls, text: str | PropertyId) -> PropertyId:
        if isinstance(text, PropertyId):
            return text
        try:
            return cls(text.strip().lower())
        except ValueError:
            raise BindingError(f"unknown property {text!r}; expected p1, p2 or p3") from None


# ---------------------------------------------------------------------------
# Term language
# ---------------------------------------------------------------------------


class Term:
    __slots__ = ()


@dataclass(frozen=True)
class Const(Term):
    value: int
    width: int


@dataclass(frozen=True)
class StateRef(Term):
    qubit: int
    stage: str
    field: str  # "s" or "q"


@dataclass(frozen=True)
class FreeRef(Term):
    name: str


@dataclass(frozen=True)
class Extract(Term):
    arg: Term
    hi: int
    lo: int


@dataclass(frozen=True)
class Concat(Term):
    args: tuple[Term, ...]  # most significant first


@dataclass(frozen=True)
class BvXor(Term):
    a: Term
    b: Term


@dataclass(frozen=True)
class Eq(Term):
    a: Term
    b: Term


@dataclass(frozen=True)
class And(Term):
    args: tuple[Term, ...]


@dataclass(frozen=True)
class Or(Term):
    args: tuple[Term, ...]


@dataclass(frozen=True)
class Not(Term):
    arg: Term


@dataclass(frozen=True)
class Implies(Term):
    a: Term
    b: Term


@dataclass(frozen=True)
class Singular(Term):
    """True iff exactly one of the 1-bit ``args`` is set."""

    args: tuple[Term, ...]


def width(t: Term) -> int:
    """Bit width of a bit-vector term (0 for boolean terms)."""
    if isinstance(t, Const):
        return t.width
    if isinstance(t, StateRef):
        return 3 if t.field == "s" else 2
    if isinstance(t, FreeRef):
        return 1
    if isinstance(t, Extract):
        return t.hi - t.lo + 1
    if isinstance(t, Concat):
        return sum(width(a) for a in t.args)
    if isinstance(t, BvXor):
        return width(t.a)
    return 0


Env = Callable[[Term], int]


def eval_term(t: Term, env: Env):
    """Evaluate ``t`` concretely; ``env`` resolves StateRef and FreeRef leaves."""
    if isinstance(t, Const):
        return t.value
    if isinstance(t, (StateRef, FreeRef)):
        return env(t)
    if isinstance(t, Extract):
        return (eval_term(t.arg, env) >> t.lo) & ((1 << (t.hi - t.lo + 1)) - 1)
    if isinstance(t, Concat):
        v = 0
        for a in t.args:
            v = (v << width(a)) | eval_term(a, env)
        return v
    if isinstance(t, BvXor):
        return eval_term(t.a, env) ^ eval_term(t.b, env)
    if isinstance(t, Eq):
        return eval_term(t.a, env) == eval_term(t.b, env)
    if isinstance(t, And):
        return all(eval_term(a, env) for a in t.args)
    if isinstance(t, Or):
        return any(eval_term(a, env) for a in t.args)
    if isinstance(t, Not):
        return not eval_term(t.arg, env)
    if isinstance(t, Implies):
        return (not eval_term(t.a, env)) or bool(eval_term(t.b, env))
    if isinstance(t, Singular):
        return singular([eval_term(a, env) for a in t.args]) == 1
    raise TypeError(f"unknown term {t!r}")


Compiled = Callable[[Sequence["MachineState"], Mapping[str, int]], int]


def compile_term(t: Term, markers: Mapping[str, int]) -> Compiled:
    """Turn ``t`` into a closure over (trace, assignment), resolving stage
    names through ``markers`` once instead of on every evaluation."""
    if isinstance(t, Const):
        value = t.value
        return lambda tr, asg: value
    if isinstance(t, StateRef):
        k, i = markers[t.stage], t.qubit
        if t.field == "s":
            return lambda tr, asg: tr[k][i].s
        return lambda tr, asg: tr[k][i].q
    if isinstance(t, FreeRef):
        name = t.name
        return lambda tr, asg: asg[name]
    if isinstance(t, Extract):
        f, lo, mask = compile_term(t.arg, markers), t.lo, (1 << (t.hi - t.lo + 1)) - 1
        return lambda tr, asg: (f(tr, asg) >> lo) & mask
    if isinstance(t, Concat):
        parts = [(compile_term(a, markers), width(a)) for a in t.args]

        def concat(tr, asg):
            v = 0
            for f, w in parts:
                v = (v << w) | f(tr, asg)
            return v
        return concat
    if isinstance(t, BvXor):
        a, b = compile_term(t.a, markers), compile_term(t.b, markers)
        return lambda tr, asg: a(tr, asg) ^ b(tr, asg)
    if isinstance(t, Eq):
        a, b = compile_term(t.a, markers), compile_term(t.b, markers)
        return lambda tr, asg: a(tr, asg) == b(tr, asg)
    if isinstance(t, And):
        fs = [compile_term(a, markers) for a in t.args]
        return lambda tr, asg: all(f(tr, asg) for f in fs)
    if isinstance(t, Or):
        fs = [compile_term(a, markers) for a in t.args]
        return lambda tr, asg: any(f(tr, asg) for f in fs)
    if isinstance(t, Not):
        f = compile_term(t.arg, markers)
        return lambda tr, asg: not f(tr, asg)
    if isinstance(t, Implies):
        a, b = compile_term(t.a, markers), compile_term(t.b, markers)
        return lambda tr, asg: (not a(tr, asg)) or bool(b(tr, asg))
    if isinstance(t, Singular):
        fs = [compile_term(a, markers) for a in t.args]
        return lambda tr, asg: singular([f(tr, asg) for f in fs]) == 1
    raise TypeError(f"unknown term {t!r}")


def s_at(i: int, stage: str) -> StateRef:
    return StateRef(i, stage, "s")


def q_at(i: int, stage: str) -> StateRef:
    return StateRef(i, stage, "q")


def basis(t: Term) -> Term:
    return Extract(t, 0, 0)


def flag(t: Term) -> Term:
    return Extract(t, 1, 1)


def bv(value: int, w: int) -> Const:
    return Const(value, w)


def conj(terms) -> Term:
    terms = tuple(terms)
    return terms[0] if len(terms) == 1 else And(terms)


# ---------------------------------------------------------------------------
# Binding
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FreeVar:
    """A universally quantified bit: an input basis bit or an injected flip."""

    name: str
    kind: str  # "input" or "flip"
    qubit: int


@dataclass(frozen=True)
class PropertySpec:
    id: PropertyId
    logical: tuple[int, ...]
    ancilla: tuple[int, ...]
    qubits: tuple[int, ...]
    stage_markers: Mapping[str, int]
    free_inputs: tuple[int, ...]
    n_gates: int

    @property
    def label(self) -> str:
        return self.id.name

    def condition_labels(self) -> list[str]:
        return [f"{self.label}({r})" for r in ("i", "ii", "iii")]


def stage_markers(c: Circuit) -> dict[str, int]:
    gates = c.gates
    lead = 0
    while lead < len(gates) and gates[lead].kind is GateKind.H:
        lead += 1
    tail = 0
    while tail < len(gates) and gates[len(gates) - 1 - tail].kind is GateKind.MEASURE:
        tail += 1
    return {"in": 0, "1": lead, "out-1": len(gates) - tail, "out": len(gates)}


def bind_property(c: Circuit, id: PropertyId | str) -> PropertySpec:
    """Attach property ``id`` to ``c``, checking that the qubit roles fit."""
    pid = PropertyId.parse(id)
    logical = tuple(c.logical)
    ancilla = tuple(c.ancilla)
    circuit_free = {d.index for d in c.qubits if d.init is FREE}
    if pid is PropertyId.P1:
        if not ancilla:
            raise BindingError(f"{c.name}: bit-flip property needs at least one ancilla")
        if len(logical) < len(ancilla) + 1:
            raise BindingError(
                f"{c.name}: bit-flip property needs {len(ancilla) + 1} logical qubits for "
                f"{len(ancilla)} ancilla(s), found {len(logical)}")
        quantified = set(logical)
    elif pid is PropertyId.P2:
        if len(ancilla) != 2 or len(logical) != 9:
            raise BindingError(
                f"{c.name}: phase-flip property needs 9 logical qubits and 2 ancillas, "
                f"found {len(logical)} and {len(ancilla)}")
        quantified = set()
    else:
        if ancilla:
            raise BindingError(f"{c.name}: entanglement property does not allow ancillas")
        if c.n < 2:
            raise BindingError(f"{c.name}: entanglement property needs at least 2 qubits")
        quantified = {0}
    return PropertySpec(
        id=pid,
        logical=logical,
        ancilla=ancilla,
        qubits=tuple(range(c.n)),
        stage_markers=stage_markers(c),
        free_inputs=tuple(sorted(quantified | circuit_free)),
        n_gates=len(c.gates),
    )


def default_property(c: Circuit) -> PropertyId:
    """The property a generated family is meant to satisfy, judged by its roles."""
    if not c.ancilla:
        return PropertyId.P3
    if len(c.ancilla) == 2 and len(c.logical) == 9:
        return PropertyId.P2
    return PropertyId.P1


# ---------------------------------------------------------------------------
# Preconditions and postconditions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Preconditions:
    free: tuple[FreeVar, ...]
    assumptions: tuple[Term, ...]

    @property
    def inputs(self) -> tuple[FreeVar, ...]:
        return tuple(v for v in self.free if v.kind == "input")

    @property
    def flips(self) -> tuple[FreeVar, ...]:
        return tuple(v for v in self.free if v.kind == "flip")


def preconditions(spec: PropertySpec) -> Preconditions:
    free = [FreeVar(f"x_{i}", "input", i) for i in spec.free_inputs]
    if spec.id is PropertyId.P2:
        free += [FreeVar(f"e_{i}", "flip", i) for i in spec.logical]
    assumptions: list[Term] = [Eq(s_at(i, "in"), bv(0, 3)) for i in spec.qubits]
    assumptions += [Eq(flag(q_at(i, "in")), bv(0, 1)) for i in spec.free_inputs]
    if spec.id is PropertyId.P2:
        assumptions += [Eq(q_at(i, "in"), bv(0, 2)) for i in spec.logical]
    elif spec.id is PropertyId.P3:
        assumptions += [Eq(q_at(i, "in"), bv(0, 2)) for i in spec.qubits[1:] if i not in spec.free_inputs]
    return Preconditions(tuple(free), tuple(assumptions))


@dataclass(frozen=True)
class Condition:
    label: str
    term: Term


def _ancilla_setup(spec: PropertySpec) -> Term:
    return conj(
        And((Eq(q_at(a, "in"), bv(0, 2)), Eq(flag(q_at(a, "out-1")), bv(0, 1))))
        for a in spec.ancilla
    )


def _data_intact(spec: PropertySpec, ref_stage: str) -> list[Term]:
    return [Eq(q_at(i, "out"), q_at(i, ref_stage)) for i in spec.logical]


def postconditions(spec: PropertySpec) -> list[Condition]:
    """The property's numbered conditions, in reporting order."""
    lab = spec.condition_labels()
    if spec.id is PropertyId.P1:
        l0 = spec.logical[0]
        codes = [
            Eq(q_at(a, "out"), Concat((bv(1, 1), BvXor(basis(q_at(l0, "in")), basis(q_at(spec.logical[k + 1], "in"))))))
            for k, a in enumerate(spec.ancilla)
        ]
        return [
            Condition(lab[0], conj(Eq(s_at(i, "out"), bv(0, 3)) for i in (*spec.ancilla, *spec.logical))),
            Condition(lab[1], _ancilla_setup(spec)),
            Condition(lab[2], conj(codes + _data_intact(spec, "in"))),
        ]
    if spec.id is PropertyId.P2:
        a0, a1 = spec.ancilla
        superpos = [Eq(s_at(a, "out"), bv(0, 3)) for a in spec.ancilla]
        superpos += [Eq(s_at(i, "1"), bv(0b001, 3)) for i in spec.logical]
        superpos += [Eq(s_at(i, "out"), bv(0b010, 3)) for i in spec.logical]
        flips = tuple(basis(q_at(i, "1")) for i in spec.logical)
        code = Concat((q_at(a1, "out"), q_at(a0, "out")))
        by_block = And(tuple(
            Implies(Singular(flips[3 * b:3 * b + 3]), Eq(code, bv(value, 4)))
            for b, value in enumerate((0b1011, 0b1111, 0b1110))
        ))
        no_flip = And(tuple(Eq(f, bv(0, 1)) for f in flips))
        detect = [Implies(Singular(flips), by_block), Implies(no_flip, Eq(code, bv(0b1010, 4)))]
        return [
            Condition(lab[0], conj(superpos)),
            Condition(lab[1], _ancilla_setup(spec)),
            Condition(lab[2], conj(detect + _data_intact(spec, "1"))),
        ]
    first, rest = spec.qubits[0], spec.qubits[1:]
    cond1 = conj([Eq(s_at(first, "in"), bv(0, 3)), Eq(s_at(first, "1"), bv(1, 3)), Eq(s_at(first, "out"), bv(1, 3))])
    cond2 = conj(Eq(s_at(i, st), bv(0, 3)) for i in rest for st in ("in", "out"))
    antecedent = conj([Eq(flag(q_at(first, "in")), bv(0, 1))] + [Eq(q_at(i, "in"), bv(0, 2)) for i in rest])
    cond3 = Implies(antecedent, conj(Eq(q_at(i, "out"), q_at(first, "out")) for i in rest))
    return [Condition(lab[0], cond1), Condition(lab[1], cond2), Condition(lab[2], cond3)]


# ---------------------------------------------------------------------------
# Concrete instantiation
# ---------------------------------------------------------------------------


def input_states(c: Circuit, spec: PropertySpec, assignment: Mapping[str, int]) -> list[AbstractQubitState]:
    states = []
    for d in c.qubits:
        if d.index in spec.free_inputs:
            states.append(AbstractQubitState(0, assignment[f"x_{d.index}"] & 1))
        else:
            states.append(d.init)
    return states


def run_trace(
    c: Circuit, spec: PropertySpec, assignment: Mapping[str, int], pre: Preconditions | None = None
) -> list[MachineState]:
    """Evaluate ``c`` on one assignment of the free bits.

    For the phase-flip property the flip bits are applied to the logical
    basis bits at stage ``1``; the trace entry at that stage holds the
    flipped state.
    """
    inputs = input_states(c, spec, assignment)
    pre = pre or preconditions(spec)
    if not pre.flips:
        return evaluate(c, inputs)
    k = spec.stage_markers["1"]
    head = evaluate(c.with_gates(c.gates[:k]), inputs)
    state = list(head[-1])
    for v in pre.flips:
        if assignment[v.name] & 1:
            st = state[v.qubit]
            state[v.qubit] = AbstractQubitState(st.s, st.q ^ 1)
    tail = evaluate(c.with_gates(c.gates[k:]), state)
    return head[:-1] + tail


def trace_env(spec: PropertySpec, trace: Sequence[MachineState], assignment: Mapping[str, int]) -> Env:
    def env(t: Term) -> int:
        if isinstance(t, FreeRef):
            return assignment[t.name]
        st = trace[spec.stage_markers[t.stage]][t.qubit]
        return st.s if t.field == "s" else st.q
    return env


Checker = Callable[[Sequence[MachineState], Mapping[str, int]], "list[str] | None"]


def make_checker(spec: PropertySpec) -> Checker:
    """Compile the property once; the result maps (trace, assignment) to the
    violated labels, or None when an assumption fails."""
    markers = spec.stage_markers
    assumptions = [compile_term(t, markers) for t in preconditions(spec).assumptions]
    conditions = [(cond.label, compile_term(cond.term, markers)) for cond in postconditions(spec)]

    def check(trace: Sequence[MachineState], assignment: Mapping[str, int]) -> list[str] | None:
        if not all(f(trace, assignment) for f in assumptions):
            return None
        return [label for label, f in conditions if not f(trace, assignment)]
    return check


def violated_conditions(
    spec: PropertySpec, trace: Sequence[MachineState], assignment: Mapping[str, int]
) -> list[str] | None:
    """Labels of the conditions the trace violates, or None if an assumption fails."""
    env = trace_env(spec, trace, assignment)
    if not all(eval_term(t, env) for t in preconditions(spec).assumptions):
        return None
    return [cond.label for cond in postconditions(spec) if not eval_term(cond.term, env)]


def stage_states(spec: PropertySpec, trace: Sequence[MachineState]) -> dict[str, MachineState]:
    return {name: trace[idx] for name, idx in spec.stage_markers.items()}

