"""Builders for the verified circuit families.

Qubit numbering: detection circuits put logical qubits first and ancillas
after them; Bell and GHZ circuits mark every qubit logical and leave
qubit 0 free.
"""

from __future__ import annotations

import enum

from .circuit import Circuit, Gate, make_circuit
from .errors import CircuitError


class GhzTopology(enum.Enum):
    CHAIN = "chain"
    STAR = "star"


def gen_bell() -> Circuit:
    return make_circuit(
        2, [Gate.h(0), Gate.cnot(0, 1)], logical=range(2), free=[0], name="bell",
        metadata={"family": "bell"},
    )


def gen_ghz(m: int, topo: GhzTopology = GhzTopology.CHAIN) -> Circuit:
    if m < 3:
        raise CircuitError(f"GHZ circuits need at least 3 qubits, got {m}")
    topo = GhzTopology(topo)
    if topo is GhzTopology.CHAIN:
        cnots = [Gate.cnot(i, i + 1) for i in range(m - 1)]
    else:
        cnots = [Gate.cnot(0, i) for i in range(1, m)]
    return make_circuit(
        m, [Gate.h(0), *cnots], logical=range(m), free=[0],
        name=f"ghz:{m}:{topo.value}", metadata={"family": "ghz", "topology": topo.value},
    )


def gen_bitflip_detect(width: int) -> Circuit:
    """Syndrome extraction for the 2- or 3-qubit repetition code.

    Ancilla ``k`` ends up holding the parity of logical 0 and logical k+1.
    """
    if width not in (2, 3):
        raise CircuitError(f"bit-flip detection width must be 2 or 3, got {width}")
    anc = list(range(width, 2 * width - 1))
    gates = []
    for k, a in enumerate(anc):
        gates += [Gate.cnot(0, a), Gate.cnot(k + 1, a)]
    gates += [Gate.measure(a) for a in anc]
    return make_circuit(
        2 * width - 1, gates, logical=range(width), ancilla=anc, free=range(width),
        name=f"bitflip{width}", metadata={"family": f"bitflip{width}"},
    )


def gen_shor9_phase_detect() -> Circuit:
    """Phase-flip block syndrome for the Shor code.

    Ancilla 9 collects the parity of blocks 1 and 2, ancilla 10 of blocks 2
    and 3, both read in the Hadamard basis between two H layers.
    """
    logical = range(9)
    a0, a1 = 9, 10
    gates = [Gate.h(i) for i in logical]
    gates += [Gate.cnot(i, a0) for i in range(0, 6)]
    gates += [Gate.cnot(i, a1) for i in range(3, 9)]
    gates += [Gate.h(i) for i in logical]
    gates += [Gate.measure(a0), Gate.measure(a1)]
    return make_circuit(
        11, gates, logical=logical, ancilla=[a0, a1], name="shor9",
        metadata={"family": "shor9"},
    )


FAMILIES = ("bell", "ghz:<m>[:chain|star]", "bitflip2", "bitflip3", "shor9")


def from_family(spec: str, topology: GhzTopology | str | None = None) -> Circuit:
    """Build a circuit from a family name such as ``ghz:16:star`` or ``shor9``."""
    parts = spec.strip().lower().split(":")
    head = parts[0]
    if head == "bell" and len(parts) == 1:
        return gen_bell()
    if head == "bitflip2" and len(parts) == 1:
        return gen_bitflip_detect(2)
    if head == "bitflip3" and len(parts) == 1:
        return gen_bitflip_detect(3)
    if head == "shor9" and len(parts) == 1:
        return gen_shor9_phase_detect()
    if head == "ghz" and len(parts) in (2, 3):
        if not parts[1].isdigit():
            raise CircuitError(f"bad GHZ size in {spec!r}")
        topo = parts[2] if len(parts) == 3 else (topology or GhzTopology.CHAIN)
        try:
            topo = GhzTopology(topo)
        except ValueError:
            raise CircuitError(f"unknown GHZ topology in {spec!r}") from None
        return gen_ghz(int(parts[1]), topo)
    raise CircuitError(f"unknown circuit family {spec!r}; expected one of {', '.join(FAMILIES)}")
