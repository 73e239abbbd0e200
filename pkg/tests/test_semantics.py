from __future__ import annotations

import itertools

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qbvcheck.circuit import AbstractQubitState as Q
from qbvcheck.circuit import Gate, make_circuit
from qbvcheck.errors import PreconditionError
from qbvcheck.generators import gen_bell
from qbvcheck.semantics import apply_cnot, apply_h, apply_measure, apply_x, evaluate, singular

ALL_STATES = [Q(s, q) for s in range(8) for q in range(4)]


class TestH:
    def test_examples(self):
        assert apply_h(Q(0b000, 0b00)) == Q(0b001, 0b00)
        assert apply_h(Q(0b111, 0b01)) == Q(0b110, 0b01)

    def test_eight_applications(self):
        seen, st_ = [], Q(0, 0)
        for _ in range(8):
            st_ = apply_h(st_)
            seen.append(st_.s)
        assert seen == [0b001, 0b010, 0b011, 0b100, 0b101, 0b110, 0b111, 0b110]

    @pytest.mark.parametrize("st_", ALL_STATES, ids=repr)
    def test_preserves_q(self, st_):
        assert apply_h(st_).q == st_.q


    def test_injective_below_saturation(self):
        outs = [apply_h(Q(s, 0)).s for s in range(0b111)]
        assert len(set(outs)) == len(outs)
        assert apply_h(Q(0b110, 0)).s == 0b111 and apply_h(Q(0b111, 0)).s == 0b110


class TestX:
    def test_examples(self):
        assert apply_x(Q(0b000, 0b00)) == Q(0b000, 0b01)
        assert apply_x(Q(0b001, 0b11)) == Q(0b001, 0b10)

    def test_involution(self):
        for st_ in ALL_STATES:
            assert apply_x(apply_x(st_)) == st_


class TestCnot:
    def test_examples(self):
        assert apply_cnot(Q(0, 0b00), Q(0, 0b01)) == (Q(0, 0b00), Q(0, 0b01))
        assert apply_cnot(Q(0, 0b01), Q(0, 0b00)) == (Q(0, 0b01), Q(0, 0b01))

    def test_xor_table(self):
        for qc, qt in itertools.product(range(4), repeat=2):
            ctrl, tgt = apply_cnot(Q(0, qc), Q(0, qt))
            assert ctrl == Q(0, qc)
            assert tgt.q & 1 == (qt & 1) ^ (qc & 1)
            assert tgt.q & 0b10 == qt & 0b10

    def test_s_and_flag_untouched(self):
        for c, t in itertools.product(ALL_STATES, repeat=2):
            for before, after in zip((c, t), apply_cnot(c, t)):
                assert (after.s, after.measured) == (before.s, before.measured)
            assert (apply_x(c).s, apply_x(c).measured) == (c.s, c.measured)

    def test_squared_is_identity(self):
        for c, t in itertools.product(ALL_STATES, repeat=2):
            assert apply_cnot(*apply_cnot(c, t)) == (c, t)


class TestMeasure:
    def test_examples(self):
        assert apply_measure(Q(0b000, 0b01)) == Q(0b000, 0b11)
        assert apply_measure(Q(0b010, 0b00)) == Q(0b010, 0b10)

    def test_basis_bit_kept(self):
        for st_ in ALL_STATES:
            out = apply_measure(st_)
            assert out.q & 1 == st_.q & 1 and out.s == st_.s and out.measured == 1


class TestEvaluate:
    def test_bell_zero(self):
        trace = evaluate(gen_bell(), [Q(0, 0b00), Q(0, 0b00)])
        assert trace[-1] == (Q(0b001, 0b00), Q(0b000, 0b00))

    def test_bell_one(self):
        trace = evaluate(gen_bell(), [Q(0, 0b01), Q(0, 0b00)])
        assert trace[-1] == (Q(0b001, 0b01), Q(0b000, 0b01))

    def test_empty_circuit(self):
        inputs = [Q(0, 1), Q(0, 0)]
        assert evaluate(make_circuit(2, []), inputs) == [tuple(inputs)]

    def test_trace_length_and_width(self):
        c = gen_bell()
        trace = evaluate(c, [Q(0, 0), Q(0, 0)])
        assert len(trace) == len(c.gates) + 1
        assert all(len(state) == c.n for state in trace)

    def test_wrong_input_length(self):
        with pytest.raises(PreconditionError):
            evaluate(gen_bell(), [Q(0, 0)])


class TestSingular:
    def test_examples(self):
        assert singular(0b0100) == 1
        assert singular(0b0000) == 0
        assert singular(0b0110) == 0
        assert singular([0, 1, 0]) == 1

    @pytest.mark.parametrize("n", range(1, 13))
    def test_matches_popcount(self, n):
        for v in range(2 ** n):
            assert singular(v) == int(bin(v).count("1") == 1)


gates = st.one_of(
    st.builds(Gate.h, st.integers(0, 2)),
    st.builds(Gate.x, st.integers(0, 2)),
    st.sampled_from([Gate.cnot(c, t) for c in range(3) for t in range(3) if c != t]),
)


@settings(max_examples=300, deadline=None)
@given(
    st.lists(gates, max_size=10),
    st.lists(gates, max_size=10),
    st.lists(st.sampled_from([Q(0, 0), Q(0, 1)]), min_size=3, max_size=3),
)
def test_evaluation_composes(first, second, inputs):
    whole = evaluate(make_circuit(3, first + second), inputs)
    head = evaluate(make_circuit(3, first), inputs)
    tail = evaluate(make_circuit(3, second), list(head[-1]))
    assert whole == head + tail[1:]
