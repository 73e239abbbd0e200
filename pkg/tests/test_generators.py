from __future__ import annotations

import itertools

import pytest

from qbvcheck.circuit import AbstractQubitState as Q
from qbvcheck.circuit import Gate, GateKind, validate_circuit
from qbvcheck.errors import CircuitError
from qbvcheck.generators import (
    GhzTopology,
    from_family,
    gen_bell,
    gen_bitflip_detect,
    gen_ghz,
    gen_shor9_phase_detect,
)
from qbvcheck.semantics import apply_x, evaluate

from conftest import FAMILY_CASES


@pytest.mark.parametrize("name, build, prop", FAMILY_CASES, ids=[c[0] for c in FAMILY_CASES])
def test_generators_emit_valid_circuits(name, build, prop):
    assert [d for d in validate_circuit(build()) if d.is_error] == []


class TestBell:
    def test_structure(self):
        c = gen_bell()
        assert c.count(GateKind.H) == 1 and c.count(GateKind.CNOT) == 1

    def test_outputs_follow_input(self):
        for q in (0, 1):
            final = evaluate(gen_bell(), [Q(0, q), Q(0, 0)])[-1]
            assert [st.basis for st in final] == [q, q]


class TestGhz:
    def test_chain(self):
        assert list(gen_ghz(4, GhzTopology.CHAIN).gates) == [
            Gate.h(0), Gate.cnot(0, 1), Gate.cnot(1, 2), Gate.cnot(2, 3)]

    def test_star(self):
        assert list(gen_ghz(4, GhzTopology.STAR).gates) == [
            Gate.h(0), Gate.cnot(0, 1), Gate.cnot(0, 2), Gate.cnot(0, 3)]

    def test_too_small(self):
        with pytest.raises(CircuitError):
            gen_ghz(2)


# Ancilla value bits <A1 A0> for each 3-qubit input, read off the 3-qubit
# error-code table (kets there list the rightmost qubit first).
ERROR_CODES = {
    (0, 0, 0): (0, 0), (1, 1, 1): (0, 0),
    (1, 0, 0): (1, 1), (0, 1, 1): (1, 1),
    (0, 1, 0): (0, 1), (1, 0, 1): (0, 1),
    (0, 0, 1): (1, 0), (1, 1, 0): (1, 0),
}


def bitflip_codes(logical: tuple[int, ...]) -> tuple[int, ...]:
    c = gen_bitflip_detect(len(logical))
    inputs = [Q(0, b) for b in logical] + [Q(0, 0)] * len(c.ancilla)
    final = evaluate(c, inputs)[-1]
    return tuple(final[a].q for a in reversed(c.ancilla))


class TestBitflip:
    def test_examples(self):
        assert tuple(q & 1 for q in bitflip_codes((0, 1, 0))) == (0, 1)
        assert tuple(q & 1 for q in bitflip_codes((0, 0, 0))) == (0, 0)
        assert tuple(q & 1 for q in bitflip_codes((1, 0, 0))) == (1, 1)

    def test_error_code_table(self):
        for logical, code in ERROR_CODES.items():
            measured = bitflip_codes(logical)
            assert all(q & 0b10 for q in measured)
            assert tuple(q & 1 for q in measured) == code

    def test_two_qubit_code(self):
        for a, b in itertools.product((0, 1), repeat=2):
            (q,) = bitflip_codes((a, b))
            assert q == 0b10 | (a ^ b)


def shor9_code(flips: set[int]) -> int:
    c = gen_shor9_phase_detect()
    k = 9  # leading H layer
    head = evaluate(c.with_gates(c.gates[:k]), [Q(0, 0)] * c.n)[-1]
    state = [apply_x(st) if i in flips else st for i, st in enumerate(head)]
    final = evaluate(c.with_gates(c.gates[k:]), state)[-1]
    return final[10].q << 2 | final[9].q


class TestShor9:
    def test_examples(self):
        assert shor9_code({4}) == 0b1111
        assert shor9_code({0}) == 0b1011
        assert shor9_code(set()) == 0b1010

    def test_every_single_flip(self):
        expected = {0: 0b1011, 1: 0b1111, 2: 0b1110}
        for i in range(9):
            assert shor9_code({i}) == expected[i // 3]


class TestFamilies:
    @pytest.mark.parametrize(
        "spec, n", [("bell", 2), ("ghz:8", 8), ("ghz:5:star", 5), ("bitflip2", 3), ("bitflip3", 5), ("shor9", 11)])
    def test_sizes(self, spec, n):
        assert from_family(spec).n == n

    def test_topology_override(self):
        assert from_family("ghz:4", GhzTopology.STAR) == gen_ghz(4, GhzTopology.STAR)

    @pytest.mark.parametrize("spec", ["", "ghz", "ghz:x", "ghz:2", "bitflip4", "shor9:1", "ghz:4:ring"])
    def test_bad_specs(self, spec):
        with pytest.raises((CircuitError, ValueError)):
            from_family(spec)
