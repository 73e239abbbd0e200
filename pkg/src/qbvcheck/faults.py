"""Structural fault injection for the generated circuit families.

``mutate`` applies exactly one structural edit. ``enumerate_faults`` lists
every applicable edit, minus *equivalent* mutants: edits after which every
qubit looks the same at every property stage under every input. Those are
detected statically with a GF(2) affine dataflow pass (X and CNOT only ever
xor basis bits, and s/measured flags do not depend on inputs), so no
property can tell them apart from the original circuit.

Insertion points: extra H gates go in front of the circuit; extra CNOTs go
right after the last existing CNOT (before any trailing measures).
"""

from __future__ import annotations

import enum
import random
from dataclasses import dataclass

from .circuit import AbstractQubitState, Circuit, Gate, GateKind, Role, validate_circuit
from .errors import MutationError
from .properties import STAGES, PropertyId, PropertySpec, bind_property, default_property, preconditions
from .semantics import apply_h


class FaultClass(enum.Enum):
    ANCILLA_INIT_FLIP = "AncillaInitFlip"
    ANCILLA_EXTRA_H = "AncillaExtraH"
    LOGICAL_H_MISSING = "LogicalHMissing"
    LOGICAL_H_EXTRA = "LogicalHExtra"
    CNOT_CONTROL_WRONG = "CnotControlWrong"
    CNOT_TARGET_WRONG = "CnotTargetWrong"
    CNOT_MISSING = "CnotMissing"
    CNOT_EXTRA = "CnotExtra"
    BELL_GHZ_H_MISSING = "BellGhzHMissing"
    BELL_GHZ_H_EXTRA = "BellGhzHExtra"

    @classmethod
    def parse(cls, text: str) -> FaultClass:
        for fc in cls:
            if text.strip().lower() in (fc.value.lower(), fc.name.lower()):
                return fc
        raise MutationError(f"unknown fault class {text!r}")


CNOT_CLASSES = frozenset({
    FaultClass.CNOT_CONTROL_WRONG, FaultClass.CNOT_TARGET_WRONG,
    FaultClass.CNOT_MISSING, FaultClass.CNOT_EXTRA,
})

# Condition each fault class is expected to break first.
PREDICTED = {
    FaultClass.ANCILLA_INIT_FLIP: ("ii",),
    FaultClass.ANCILLA_EXTRA_H: ("i",),
    FaultClass.LOGICAL_H_MISSING: ("i",),
    FaultClass.LOGICAL_H_EXTRA: ("i",),
    FaultClass.CNOT_CONTROL_WRONG: ("iii",),
    FaultClass.CNOT_TARGET_WRONG: ("iii",),
    FaultClass.CNOT_MISSING: ("iii",),
    FaultClass.CNOT_EXTRA: ("iii",),
    FaultClass.BELL_GHZ_H_MISSING: ("i",),
    FaultClass.BELL_GHZ_H_EXTRA: ("i", "ii"),
}


@dataclass(frozen=True)
class FaultDescriptor:
    """One structural fault.

    ``location`` is a qubit index for the init/extra-H classes, the
    control qubit for ``CnotExtra``, and otherwise the ordinal of the gate
    among gates of the same kind (``CnotMissing@3`` drops the fourth CNOT). ``replacement`` is the new control or target qubit for
    the rewiring classes and the target qubit for ``CnotExtra``.
    """

    cls: FaultClass
    location: int
    replacement: int | None = None

    def __str__(self) -> str:
        s = f"{self.cls.value}@{self.location}"
        return s if self.replacement is None else f"{s}->{self.replacement}"

    def predicted_conditions(self, prop: PropertyId) -> list[str]:
        return [f"{prop.name}({r})" for r in PREDICTED[self.cls]]


def _position(c: Circuit, kind: GateKind, k: int) -> int:
    """Gate-list position of the ``k``-th gate of ``kind``."""
    positions = [p for p, g in enumerate(c.gates) if g.kind is kind]
    if not 0 <= k < len(positions):
        raise MutationError(f"{c.name} has no {kind.value} gate number {k}")
    return positions[k]


def _of_kind(c: Circuit, kind: GateKind) -> list[Gate]:
    return [g for g in c.gates if g.kind is kind]


def _qubit(c: Circuit, i: int | None, what: str) -> int:
    if i is None or not 0 <= i < c.n:
        raise MutationError(f"{what} {i!r} is not a qubit of {c.name}")
    return i


def extra_cnot_position(c: Circuit) -> int:
    cnots = [k for k, g in enumerate(c.gates) if g.kind is GateKind.CNOT]
    if cnots:
        return cnots[-1] + 1
    pos = len(c.gates)
    while pos > 0 and c.gates[pos - 1].kind is GateKind.MEASURE:
        pos -= 1
    return pos


def mutate(c: Circuit, f: FaultDescriptor) -> Circuit:
    """Return a copy of ``c`` with fault ``f`` applied; ``c`` is unchanged."""
    gates = list(c.gates)
    name = f"{c.name}+{f}"
    fc = f.cls
    has_ancilla = bool(c.ancilla)

    if fc is FaultClass.ANCILLA_INIT_FLIP:
        a = _qubit(c, f.location, "ancilla")
        decl = c.qubits[a]
        if decl.role is not Role.ANCILLA or not isinstance(decl.init, AbstractQubitState):
            raise MutationError(f"qubit {a} is not an ancilla with a concrete init")
        out = c.with_init(a, AbstractQubitState(decl.init.s, decl.init.q ^ 1), name)
    elif fc in (FaultClass.ANCILLA_EXTRA_H, FaultClass.LOGICAL_H_EXTRA, FaultClass.BELL_GHZ_H_EXTRA):
        i = _qubit(c, f.location, "qubit")
        role = c.qubits[i].role
        if fc is FaultClass.ANCILLA_EXTRA_H and role is not Role.ANCILLA:
            raise MutationError(f"qubit {i} is not an ancilla")
        if fc is FaultClass.LOGICAL_H_EXTRA and (role is not Role.LOGICAL or not has_ancilla):
            raise MutationError(f"qubit {i} is not a logical qubit of a detection circuit")
        if fc is FaultClass.BELL_GHZ_H_EXTRA and has_ancilla:
            raise MutationError(f"{c.name} is not an entanglement circuit")
        out = c.with_gates([Gate.h(i), *gates], name)
    elif fc in (FaultClass.LOGICAL_H_MISSING, FaultClass.BELL_GHZ_H_MISSING):
        k = _position(c, GateKind.H, f.location)
        if fc is FaultClass.LOGICAL_H_MISSING and (c.qubits[gates[k].target].role is not Role.LOGICAL or not has_ancilla):
            raise MutationError(f"H gate {f.location} is not on a logical qubit of a detection circuit")
        if fc is FaultClass.BELL_GHZ_H_MISSING and has_ancilla:
            raise MutationError(f"{c.name} is not an entanglement circuit")
        del gates[k]
        out = c.with_gates(gates, name)
    elif fc is FaultClass.CNOT_MISSING:
        del gates[_position(c, GateKind.CNOT, f.location)]
        out = c.with_gates(gates, name)
    elif fc is FaultClass.CNOT_CONTROL_WRONG:
        k = _position(c, GateKind.CNOT, f.location)
        g = gates[k]
        r = _qubit(c, f.replacement, "replacement control")
        if r == g.control:
            raise MutationError("replacement control equals the original control")
        if r == g.target:
            raise MutationError("replacement control would create a CNOT self-loop")
        gates[k] = Gate.cnot(r, g.target)
        out = c.with_gates(gates, name)
    elif fc is FaultClass.CNOT_TARGET_WRONG:
        k = _position(c, GateKind.CNOT, f.location)
        g = gates[k]
        r = _qubit(c, f.replacement, "replacement target")
        if r == g.target:
            raise MutationError("replacement target equals the original target")
        # Retargeting onto the control reverses the gate's orientation.
        gates[k] = Gate.cnot(g.target, r) if r == g.control else Gate.cnot(g.control, r)
        out = c.with_gates(gates, name)
    elif fc is FaultClass.CNOT_EXTRA:
        ctl = _qubit(c, f.location, "control")
        tgt = _qubit(c, f.replacement, "target")
        if ctl == tgt:
            raise MutationError("extra CNOT would be a self-loop")
        gates.insert(extra_cnot_position(c), Gate.cnot(ctl, tgt))
        out = c.with_gates(gates, name)
    else:  # pragma: no cover - FaultClass is closed
        raise MutationError(f"unsupported fault class {fc}")

    errors = [d for d in validate_circuit(out) if d.is_error]
    if errors:
        raise MutationError(f"{f} makes {c.name} ill-formed: {errors[0]}")
    out.metadata["faults"] = [*c.metadata.get("faults", []), str(f)]
    return out


# ---------------------------------------------------------------------------
# Equivalent-mutant detection
# ---------------------------------------------------------------------------


def observation_signature(c: Circuit, spec: PropertySpec) -> tuple:
    """What a property can observe: each qubit's (s, measured, basis) per stage.

    Basis bits are GF(2) affine forms over the free bits, encoded as an int
    whose low bits are variable coefficients and whose top bit is the
    constant term.
    """
    pre = preconditions(spec)
    var = {v.name: 1 << j for j, v in enumerate(pre.free)}
    const = 1 << len(pre.free)
    s, flag, form = [], [], []
    for d in c.qubits:
        if d.index in spec.free_inputs:
            s.append(0), flag.append(0), form.append(var[f"x_{d.index}"])
        else:
            s.append(d.init.s), flag.append(d.init.measured), form.append(const if d.init.basis else 0)

    markers = spec.stage_markers
    inject_at = markers["1"] if pre.flips else None
    by_index: dict[int, list[str]] = {}
    for stage in STAGES:
        by_index.setdefault(markers[stage], []).append(stage)
    snaps: dict[str, tuple] = {}

    def visit(k: int) -> None:
        if k == inject_at:
            for v in pre.flips:
                form[v.qubit] ^= var[v.name]
        for stage in by_index.get(k, ()):
            snaps[stage] = tuple(zip(s, flag, form))

    for k, g in enumerate(c.gates):
        visit(k)
        if g.kind is GateKind.H:
            s[g.target] = apply_h(AbstractQubitState(s[g.target], 0)).s
        elif g.kind is GateKind.X:
            form[g.target] ^= const
        elif g.kind is GateKind.CNOT:
            form[g.target] ^= form[g.control]
        else:
            flag[g.target] = 1
    visit(len(c.gates))
    return tuple(snaps[stage] for stage in STAGES)


def is_equivalent(original: Circuit, mutant: Circuit, prop: PropertyId) -> bool:
    return observation_signature(original, bind_property(original, prop)) == \
        observation_signature(mutant, bind_property(mutant, prop))


# ---------------------------------------------------------------------------
# Enumeration
# ---------------------------------------------------------------------------


def candidate_faults(c: Circuit) -> list[FaultDescriptor]:
    """Every structurally applicable single fault, equivalent or not."""
    out: list[FaultDescriptor] = []
    detection = bool(c.ancilla)
    if detection:
        for a in c.ancilla:
            if isinstance(c.qubits[a].init, AbstractQubitState):
                out.append(FaultDescriptor(FaultClass.ANCILLA_INIT_FLIP, a))
            out.append(FaultDescriptor(FaultClass.ANCILLA_EXTRA_H, a))
        logical = set(c.logical)
        out += [FaultDescriptor(FaultClass.LOGICAL_H_MISSING, k)
                for k, g in enumerate(_of_kind(c, GateKind.H)) if g.target in logical]
        out += [FaultDescriptor(FaultClass.LOGICAL_H_EXTRA, i) for i in c.logical]
    else:
        out += [FaultDescriptor(FaultClass.BELL_GHZ_H_MISSING, k)
                for k in range(len(_of_kind(c, GateKind.H)))]
        out += [FaultDescriptor(FaultClass.BELL_GHZ_H_EXTRA, i) for i in range(c.n)]
    for k, g in enumerate(_of_kind(c, GateKind.CNOT)):
        out.append(FaultDescriptor(FaultClass.CNOT_MISSING, k))
        out += [FaultDescriptor(FaultClass.CNOT_CONTROL_WRONG, k, r)
                for r in range(c.n) if r not in g.qubits]
        out += [FaultDescriptor(FaultClass.CNOT_TARGET_WRONG, k, r)
                for r in range(c.n) if r != g.target]
    out += [FaultDescriptor(FaultClass.CNOT_EXTRA, ctl, tgt)
            for ctl in range(c.n) for tgt in range(c.n) if ctl != tgt]
    return out


@dataclass
class FaultEnumeration:
    faults: list[FaultDescriptor]
    equivalent: list[FaultDescriptor]


def enumerate_faults_detailed(c: Circuit, prop: PropertyId | str | None = None) -> FaultEnumeration:
    pid = PropertyId.parse(prop) if prop is not None else default_property(c)
    reference = observation_signature(c, bind_property(c, pid))
    kept, equivalent = [], []
    for f in candidate_faults(c):
        try:
            m = mutate(c, f)
        except MutationError:
            continue
        if observation_signature(m, bind_property(m, pid)) == reference:
            equivalent.append(f)
        else:
            kept.append(f)
    return FaultEnumeration(kept, equivalent)


def enumerate_faults(c: Circuit, prop: PropertyId | str | None = None) -> list[FaultDescriptor]:
    """All single faults of ``c`` that are not equivalent mutants."""
    return enumerate_faults_detailed(c, prop).faults


FaultPair = tuple[FaultDescriptor, FaultDescriptor]

SMALL_FIRST_SET = 40
MAX_DRAWS_PER_PAIR = 20


@dataclass
class PairSample:
    pairs: list[FaultPair]
    self_cancelling: list[FaultPair]


def apply_faults(c: Circuit, faults) -> Circuit:
    for f in faults:
        c = mutate(c, f)
    return c


def sample_fault_pairs(
    c: Circuit,
    cap: int = 200,
    seed: int = 0,
    prop: PropertyId | str | None = None,
) -> PairSample:
    """Draw up to ``cap`` distinct fault pairs with a seeded RNG.

    The second fault of a pair indexes into the circuit produced by the
    first. Pairs whose combined mutant is equivalent to ``c`` (for example a
    CNOT removed and then re-added) are set aside as self-cancelling.
    """
    pid = PropertyId.parse(prop) if prop is not None else default_property(c)
    reference = observation_signature(c, bind_property(c, pid))
    firsts = enumerate_faults(c, pid)
    rng = random.Random(seed)
    cache: dict[FaultDescriptor, tuple[Circuit, list[FaultDescriptor]]] = {}

    def after(f: FaultDescriptor) -> tuple[Circuit, list[FaultDescriptor]]:
        if f not in cache:
            m = mutate(c, f)
            cache[f] = (m, enumerate_faults(m, pid))
        return cache[f]

    raw_cache: dict[FaultDescriptor, tuple[Circuit, list[FaultDescriptor], tuple]] = {}

    def first_mutant(f: FaultDescriptor):
        if f not in raw_cache:
            m = mutate(c, f)
            raw_cache[f] = (m, candidate_faults(m), observation_signature(m, bind_property(m, pid)))
        return raw_cache[f]

    def draws():
        if len(firsts) <= SMALL_FIRST_SET:
            universe = [(f, g) for f in firsts for g in after(f)[1]]
            rng.shuffle(universe)
            yield from universe
            return
        # Rejection sampling: draw a raw candidate and keep it only if it is
        # a proper (non-equivalent) single fault of the first mutant.
        for _ in range(MAX_DRAWS_PER_PAIR * cap):
            f = rng.choice(firsts)
            m, raw, ref = first_mutant(f)
            g = rng.choice(raw)
            try:
                m2 = mutate(m, g)
            except MutationError:
                continue
            if observation_signature(m2, bind_property(m2, pid)) != ref:
                yield f, g

    pairs: list[FaultPair] = []
    cancelling: list[FaultPair] = []
    seen: set[FaultPair] = set()
    for f, g in draws():
        if len(pairs) >= cap:
            break
        if (f, g) in seen:
            continue
        seen.add((f, g))
        m2 = mutate(mutate(c, f), g)
        if observation_signature(m2, bind_property(m2, pid)) == reference:
            cancelling.append((f, g))
        else:
            pairs.append((f, g))
    return PairSample(pairs, cancelling)
