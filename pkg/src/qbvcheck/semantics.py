"""Concrete semantics of the abstract gates.

These functions are the reference behaviour: the SMT encoding is checked
against them, never the other way round.
"""

from __future__ import annotations

from typing import Sequence, Union

from .circuit import BASIS_BIT, MEASURED_FLAG, AbstractQubitState, Circuit, GateKind
from .errors import PreconditionError

MachineState = tuple[AbstractQubitState, ...]

S_SATURATED = 0b111
S_TOGGLE = 0b110


def apply_h(st: AbstractQubitState) -> AbstractQubitState:
    """Count one more Hadamard; past b'111 the counter toggles with b'110."""
    if st.s == S_SATURATED:
        return AbstractQubitState(S_TOGGLE, st.q)
    return AbstractQubitState(st.s + 1, st.q)


def apply_x(st: AbstractQubitState) -> AbstractQubitState:
    # Only the basis bit flips; the measured flag is kept.
    return AbstractQubitState(st.s, st.q ^ BASIS_BIT)


def apply_cnot(
    ctrl: AbstractQubitState, tgt: AbstractQubitState
) -> tuple[AbstractQubitState, AbstractQubitState]:
    if ctrl.q & BASIS_BIT:
        return ctrl, AbstractQubitState(tgt.s, tgt.q ^ BASIS_BIT)
    return ctrl, tgt


def apply_measure(st: AbstractQubitState) -> AbstractQubitState:
    return AbstractQubitState(st.s, st.q | MEASURED_FLAG)


def step(state: list[AbstractQubitState], kind: GateKind, qubits: Sequence[int]) -> None:
    """Apply one gate to ``state`` in place."""
    if kind is GateKind.CNOT:
        c, t = qubits
        state[c], state[t] = apply_cnot(state[c], state[t])
        return
    (t,) = qubits
    if kind is GateKind.H:
        state[t] = apply_h(state[t])
    elif kind is GateKind.X:
        state[t] = apply_x(state[t])
    else:
        if state[t].measured:
            raise PreconditionError(f"qubit {t} measured twice")
        state[t] = apply_measure(state[t])


def evaluate(c: Circuit, inputs: Sequence[AbstractQubitState]) -> list[MachineState]:
    """Run ``c`` on concrete ``inputs`` and return the state after every gate.

    ``trace[0]`` is the input and ``trace[k]`` the state after gate ``k-1``,
    so the trace has ``len(c.gates) + 1`` entries.
    """
    n = c.n
    if len(inputs) != n:
        raise PreconditionError(f"expected {n} input states, got {len(inputs)}")
    for i, st in enumerate(inputs):
        if not isinstance(st, AbstractQubitState):
            raise PreconditionError(f"input {i} is not a concrete state: {st!r}")
    state = list(inputs)
    trace = [tuple(state)]
    for k, g in enumerate(c.gates):
        for i in g.qubits:
            if not 0 <= i < n:
                raise PreconditionError(f"gate {k} references a qubit outside 0..{n - 1}")
        step(state, g.kind, g.qubits)
        trace.append(tuple(state))
    return trace


def singular(m: Union[int, Sequence[int]]) -> int:
    """1 if exactly one bit of ``m`` is set, else 0.

    ``m`` is either a sequence of 0/1 values or a non-negative integer.
    """
    if isinstance(m, int):
        if m < 0:
            raise ValueError("bit vector must be non-negative")
        ones = bin(m).count("1")
    else:
        if len(m) < 1:
            raise ValueError("bit vector must have length >= 1")
        ones = sum(1 for b in m if b)
    return 1 if ones == 1 else 0
