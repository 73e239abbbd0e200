"""Circuit intermediate representation and its line-oriented text format.

A circuit file looks like::

    qubits 5
    role logical 0 1 2
    role ancilla 3 4
    init 0 free
    cnot 0 3
    measure 3

``serialize_circuit`` always emits statements in the order qubits, roles,
inits, gates, so serialized text is a canonical form of the circuit.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Iterable, Sequence, Union

from .errors import CircuitError

S_WIDTH = 3
Q_WIDTH = 2
MEASURED_FLAG = 0b10
BASIS_BIT = 0b01


@dataclass(frozen=True, order=True)
class AbstractQubitState:
    """One abstract qubit: a 3-bit superposition counter and a 2-bit q.

    Bit 1 of ``q`` is the measured flag, bit 0 the basis value.
    """

    s: int
    q: int

    def __post_init__(self) -> None:
        if not 0 <= self.s < (1 << S_WIDTH):
            raise ValueError(f"s must fit in {S_WIDTH} bits, got {self.s!r}")
        if not 0 <= self.q < (1 << Q_WIDTH):
            raise ValueError(f"q must fit in {Q_WIDTH} bits, got {self.q!r}")

    @property
    def measured(self) -> int:
        return self.q >> 1

    @property
    def basis(self) -> int:
        return self.q & BASIS_BIT

    def __repr__(self) -> str:
        return f"Q(s=0b{self.s:03b}, q=0b{self.q:02b})"


ZERO = AbstractQubitState(0, 0)


class Free(enum.Enum):
    """Marker for an input whose basis bit is left symbolic."""

    FREE = "free"

    def __repr__(self) -> str:
        return "FREE"


FREE = Free.FREE

Init = Union[AbstractQubitState, Free]


class Role(enum.Enum):
    PLAIN = "plain"
    LOGICAL = "logical"
    ANCILLA = "ancilla"


@dataclass(frozen=True)
class QubitDecl:
    index: int
    role: Role = Role.PLAIN
    init: Init = ZERO


class GateKind(enum.Enum):
    H = "h"
    X = "x"
    CNOT = "cnot"
    MEASURE = "measure"

    @property
    def arity(self) -> int:
        return 2 if self is GateKind.CNOT else 1


@dataclass(frozen=True)
class Gate:
    kind: GateKind
    qubits: tuple[int, ...]

    def __post_init__(self) -> None:
        if len(self.qubits) != self.kind.arity:
            raise ValueError(f"{self.kind.value} takes {self.kind.arity} qubit(s), got {self.qubits}")

    @classmethod
    def h(cls, target: int) -> Gate:
        return cls(GateKind.H, (target,))

    @classmethod
    def x(cls, target: int) -> Gate:
        return cls(GateKind.X, (target,))

    @classmethod
    def cnot(cls, control: int, target: int) -> Gate:
        return cls(GateKind.CNOT, (control, target))

    @classmethod
    def measure(cls, target: int) -> Gate:
        return cls(GateKind.MEASURE, (target,))

    @property
    def target(self) -> int:
        return self.qubits[-1]

    @property
    def control(self) -> int:
        if self.kind is not GateKind.CNOT:
            raise AttributeError(f"{self.kind.value} gate has no control")
        return self.qubits[0]

    def __repr__(self) -> str:
        if self.kind is GateKind.CNOT:
            return f"C({self.qubits[0]},{self.qubits[1]})"
        label = "Measure" if self.kind is GateKind.MEASURE else self.kind.name
        return f"{label}({self.qubits[0]})"


@dataclass(frozen=True)
class Circuit:
    """An ordered gate list over densely indexed qubits.

    ``name`` and ``metadata`` are descriptive only and do not take part in
    equality, so a circuit equals its own parsed serialization.
    """

    qubits: tuple[QubitDecl, ...]
    gates: tuple[Gate, ...] = ()
    name: str = field(default="circuit", compare=False)
    metadata: dict = field(default_factory=dict, compare=False, hash=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "qubits", tuple(self.qubits))
        object.__setattr__(self, "gates", tuple(self.gates))

    @property
    def n(self) -> int:
        return len(self.qubits)

    def indices(self, role: Role) -> list[int]:
        return [d.index for d in self.qubits if d.role is role]

    @property
    def logical(self) -> list[int]:
        return self.indices(Role.LOGICAL)

    @property
    def ancilla(self) -> list[int]:
        return self.indices(Role.ANCILLA)

    def count(self, kind: GateKind) -> int:
        return sum(1 for g in self.gates if g.kind is kind)

    def with_gates(self, gates: Iterable[Gate], name: str | None = None) -> Circuit:
        return Circuit(self.qubits, tuple(gates), name or self.name, dict(self.metadata))

    def with_init(self, index: int, init: Init, name: str | None = None) -> Circuit:
        decls = tuple(
            QubitDecl(d.index, d.role, init) if d.index == index else d for d in self.qubits
        )
        return Circuit(decls, self.gates, name or self.name, dict(self.metadata))


def make_circuit(
    n: int,
    gates: Sequence[Gate],
    *,
    logical: Iterable[int] = (),
    ancilla: Iterable[int] = (),
    free: Iterable[int] = (),
    name: str = "circuit",
    metadata: dict | None = None,
) -> Circuit:
    """Build a circuit with ``n`` qubits; unlisted qubits are plain and start at zero."""
    logical, ancilla, free = set(logical), set(ancilla), set(free)
    decls = []
    for i in range(n):
        role = Role.LOGICAL if i in logical else Role.ANCILLA if i in ancilla else Role.PLAIN
        decls.append(QubitDecl(i, role, FREE if i in free else ZERO))
    return Circuit(tuple(decls), tuple(gates), name, dict(metadata or {}))


# ---------------------------------------------------------------------------
# Validation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Diagnostic:
    severity: str  # "error" or "warning"
    message: str
    gate: int | None = None
    qubit: int | None = None

    @property
    def is_error(self) -> bool:
        return self.severity == "error"

    def __str__(self) -> str:
        where = []
        if self.gate is not None:
            where.append(f"gate {self.gate}")
        if self.qubit is not None:
            where.append(f"qubit {self.qubit}")
        loc = f" ({', '.join(where)})" if where else ""
        return f"{self.severity}: {self.message}{loc}"


MAX_H_PER_QUBIT = 2


def validate_circuit(c: Circuit) -> list[Diagnostic]:
    """Return every invariant violation of ``c``; an empty list means valid."""
    diags: list[Diagnostic] = []
    n = c.n
    for pos, d in enumerate(c.qubits):
        if d.index != pos:
            diags.append(Diagnostic("error", f"qubit declared at position {pos} has index {d.index}", qubit=pos))
        if isinstance(d.init, AbstractQubitState):
            if d.init.s != 0:
                diags.append(Diagnostic("error", "initial superposition counter must be b'000", qubit=pos))
            if d.init.measured:
                diags.append(Diagnostic("error", "initial measured flag must be 0", qubit=pos))
            if d.role is Role.ANCILLA and d.init != ZERO:
                diags.append(Diagnostic("warning", "ancilla is not initialized to b'00", qubit=pos))

    measured: set[int] = set()
    h_count = [0] * n
    for k, g in enumerate(c.gates):
        bad = [i for i in g.qubits if not 0 <= i < n]
        if bad:
            diags.append(Diagnostic("error", f"qubit index {bad[0]} out of range 0..{n - 1}", gate=k))
            continue
        if g.kind is GateKind.CNOT and g.qubits[0] == g.qubits[1]:
            diags.append(Diagnostic("error", "CNOT self-loop: control equals target", gate=k, qubit=g.qubits[0]))
        for i in g.qubits:
            if i in measured:
                diags.append(Diagnostic("error", "gate after measure", gate=k, qubit=i))
        if g.kind is GateKind.MEASURE:
            measured.add(g.target)
        elif g.kind is GateKind.H:
            h_count[g.target] += 1

    for i, cnt in enumerate(h_count):
        if cnt > MAX_H_PER_QUBIT:
            diags.append(Diagnostic(
                "warning", f"superposition counter exceeds b'010 ({cnt} H gates)", qubit=i))
    return diags


def check_circuit(c: Circuit) -> Circuit:
    """Raise ``CircuitError`` on the first error diagnostic; return ``c`` otherwise."""
    for d in validate_circuit(c):
        if d.is_error:
            raise CircuitError(str(d))
    return c


# ---------------------------------------------------------------------------
# Text format
# ---------------------------------------------------------------------------


def serialize_circuit(c: Circuit) -> str:
    lines = [f"qubits {c.n}"]
    for role in (Role.LOGICAL, Role.ANCILLA):
        idx = c.indices(role)
        if idx:
            lines.append(f"role {role.value} " + " ".join(map(str, idx)))
    for d in c.qubits:
        if d.init is FREE:
            lines.append(f"init {d.index} free")
        elif d.init != ZERO:
            lines.append(f"init {d.index} {d.init.q:02b}")
    for g in c.gates:
        lines.append(" ".join([g.kind.value, *map(str, g.qubits)]))
    return "\n".join(lines)


def _tokens(line: str) -> list[tuple[str, int]]:
    out = []
    col = 0
    for part in line.split(" "):
        if part:
            out.append((part, col + 1))
        col += len(part) + 1
    return out


def parse_circuit(text: str, name: str = "circuit") -> Circuit:
    """Parse DSL text into a validated circuit.

    Raises ``CircuitError`` carrying the line and column of the offending
    token for syntax errors, duplicate declarations, out-of-range indices,
    gates after a measure and CNOT self-loops.
    """
    n: int | None = None
    roles: dict[int, Role] = {}
    inits: dict[int, Init] = {}
    gates: list[Gate] = []
    measured: set[int] = set()

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].replace("\t", " ").rstrip()
        toks = _tokens(line)
        if not toks:
            continue
        head, head_col = toks[0]
        args = toks[1:]

        def fail(msg: str, col: int = head_col) -> CircuitError:
            return CircuitError(msg, lineno, col)

        def index(tok: tuple[str, int]) -> int:
            word, col = tok
            if not word.isdigit():
                raise fail(f"expected a qubit index, got {word!r}", col)
            i = int(word)
            if n is not None and i >= n:
                raise fail(f"qubit index {i} out of range 0..{n - 1}", col)
            return i

        if n is None:
            if head != "qubits":
                raise fail("first statement must be 'qubits <n>'")
            if len(args) != 1 or not args[0][0].isdigit() or int(args[0][0]) < 1:
                raise fail("'qubits' takes one positive integer", args[0][1] if args else head_col)
            n = int(args[0][0])
            continue

        if head == "qubits":
            raise fail("'qubits' declared twice")
        elif head == "role":
            if len(args) < 2 or args[0][0] not in ("logical", "ancilla"):
                raise fail("expected 'role logical|ancilla <i...>'", args[0][1] if args else head_col)
            role = Role(args[0][0])
            for tok in args[1:]:
                i = index(tok)
                if i in roles:
                    raise fail(f"duplicate qubit index {i} in role declaration", tok[1])
                roles[i] = role
        elif head == "init":
            if len(args) != 2:
                raise fail("expected 'init <i> <bb>|free'")
            i = index(args[0])
            if i in inits:
                raise fail(f"duplicate qubit index {i} in init declaration", args[0][1])
            word, col = args[1]
            if word == "free":
                inits[i] = FREE
            elif len(word) == 2 and set(word) <= {"0", "1"}:
                q = int(word, 2)
                if q & MEASURED_FLAG:
                    raise fail("initial measured flag must be 0", col)
                inits[i] = AbstractQubitState(0, q)
            else:
                raise fail(f"expected two binary digits or 'free', got {word!r}", col)
        elif head in ("h", "x", "measure", "cnot"):
            kind = GateKind(head)
            if len(args) != kind.arity:
                raise fail(f"'{head}' takes {kind.arity} qubit index(es)")
            qs = tuple(index(tok) for tok in args)
            if kind is GateKind.CNOT and qs[0] == qs[1]:
                raise fail("CNOT self-loop: control equals target", args[1][1])
            for tok, i in zip(args, qs):
                if i in measured:
                    raise fail(f"gate after measure on qubit {i}", tok[1])
            if kind is GateKind.MEASURE:
                measured.add(qs[0])
            gates.append(Gate(kind, qs))
        else:
            raise fail(f"unknown statement {head!r}")

    if n is None:
        raise CircuitError("empty circuit: missing 'qubits <n>'", 1, 1)
    decls = tuple(QubitDecl(i, roles.get(i, Role.PLAIN), inits.get(i, ZERO)) for i in range(n))
    return check_circuit(Circuit(decls, tuple(gates), name))
