from __future__ import annotations

import re
from pathlib import Path

import pytest

from qbvcheck.circuit import AbstractQubitState as Q
from qbvcheck.circuit import Gate, make_circuit
from qbvcheck.errors import BindingError, CircuitError, ModelParseError, SolverError
from qbvcheck.faults import FaultClass, FaultDescriptor, mutate
from qbvcheck.generators import from_family, gen_bell, gen_bitflip_detect, gen_ghz, gen_shor9_phase_detect
from qbvcheck.properties import bind_property
from qbvcheck.smt import (
    Counterexample,
    Status,
    VerificationVerdict,
    decode_model,
    encode,
    label_key,
    parse_model,
    parse_sexprs,
    run_solver,
    solver_argv,
)

from conftest import FAMILY_CASES, needs_solver

FIXTURES = Path(__file__).parent / "fixtures"
GOLDEN = {
    "bell_p3": ("bell", "p3"),
    "ghz4_chain_p3": ("ghz:4", "p3"),
    "bitflip2_p1": ("bitflip2", "p1"),
    "bitflip3_p1": ("bitflip3", "p1"),
    "shor9_p2": ("shor9", "p2"),
}


def enc(c, prop):
    return encode(c, bind_property(c, prop))


class TestEncode:
    def test_bell_counts(self):
        e = enc(gen_bell(), "p3")
        assert e.free_bits == ("x_0",)
        assert len(re.findall(r"\(declare-const x_", e.text)) == 1
        versions = set(re.findall(r"\b[sq]_\d+_v\d+\b", e.text))
        assert len(versions) <= 8

    @pytest.mark.parametrize("name", sorted(GOLDEN))
    def test_golden(self, name):
        family, prop = GOLDEN[name]
        assert enc(from_family(family), prop).text == (FIXTURES / f"{name}.smt2").read_text()

    def test_deterministic(self):
        c = gen_shor9_phase_detect()
        assert enc(c, "p2").text == enc(c, "p2").text

    def test_single_assignment(self):
        text = enc(gen_shor9_phase_detect(), "p2").text
        declared = re.findall(r"\(declare-const (\S+)", text)
        assert len(declared) == len(set(declared))
        defined = re.findall(r"\(assert \(= ([sq]_\d+_v\d+) ", text)
        assert len(defined) == len(set(defined))

    def test_linear_growth(self):
        counts = {m: len(enc(gen_ghz(m), "p3").declared_variables()) for m in (4, 8, 16, 32, 64)}
        assert all(counts[m] == 3 * m + 4 for m in counts)

    def test_violations_labelled(self):
        e = enc(gen_bitflip_detect(3), "p1")
        assert [v for _, v in e.violation_vars] == ["viol_p1_i", "viol_p1_ii", "viol_p1_iii"]
        assert "(assert (or viol_p1_i viol_p1_ii viol_p1_iii))" in e.text
        assert e.text.rstrip().endswith("(check-sat)\n(get-model)")

    def test_invalid_circuit(self):
        c = make_circuit(2, [Gate.measure(0), Gate.h(0)])
        with pytest.raises(CircuitError):
            encode(c, bind_property(make_circuit(2, [Gate.h(0)]), "p3"))
        with pytest.raises(CircuitError):
            encode(c, bind_property(c, "p3"))

    def test_spec_mismatch(self):
        spec = bind_property(gen_ghz(4), "p3")
        with pytest.raises(BindingError):
            encode(gen_ghz(5), spec)

    def test_label_key(self):
        assert label_key("P1(ii)") == "p1_ii"


class TestModelParsing:
    def test_sexprs(self):
        assert parse_sexprs("(a (b #b01) |x y|)") == [["a", ["b", "#b01"], "x y"]]

    def test_values(self):
        raw = """(
          (define-fun x_0 () (_ BitVec 1) #b1)
          (define-fun q_0_v0 () (_ BitVec 2) #x1)
          (define-fun s_1_v0 () (_ BitVec 3) (_ bv5 3))
          (define-fun viol_p3_i () Bool false)
          (define-fun cond_p3_i () Bool (= viol_p3_i (not true)))
        )"""
        values = parse_model(raw)
        assert values == {"x_0": 1, "q_0_v0": 1, "s_1_v0": 5, "viol_p3_i": False}

    def test_garbage(self):
        with pytest.raises(ModelParseError):
            parse_model("((define-fun x () (_ BitVec 1) #q1))")

    def test_decode_first_violation(self):
        spec = bind_property(gen_ghz(4), "p3")
        raw = """((define-fun x_0 () (_ BitVec 1) #b1)
                  (define-fun viol_p3_i () Bool false)
                  (define-fun viol_p3_ii () Bool true)
                  (define-fun viol_p3_iii () Bool true))"""
        cex = decode_model(raw, spec)
        assert cex.free_bits == {"x_0": 1}
        assert cex.violated_condition == "P3(ii)"


class TestVerdict:
    def test_counterexample_iff_violated(self):
        with pytest.raises(ValueError):
            VerificationVerdict(Status.VERIFIED, Counterexample({}, {}, None))
        with pytest.raises(ValueError):
            VerificationVerdict(Status.VIOLATED)


@needs_solver
class TestSolver:
    @pytest.mark.parametrize("name, build, prop", FAMILY_CASES, ids=[c[0] for c in FAMILY_CASES])
    def test_families_verified(self, name, build, prop):
        v = run_solver(enc(build(), prop))
        assert v.status is Status.VERIFIED
        assert v.counterexample is None and v.peak_memory > 0

    def test_ghz_error_variant(self):
        c = mutate(gen_ghz(4), FaultDescriptor(FaultClass.CNOT_CONTROL_WRONG, 0, 3))
        v = run_solver(enc(c, "p3"))
        assert v.status is Status.VIOLATED
        assert v.violated_condition == "P3(iii)"

    def test_ancilla_init_flip(self):
        c = mutate(gen_bitflip_detect(3), FaultDescriptor(FaultClass.ANCILLA_INIT_FLIP, 3))
        v = run_solver(enc(c, "p1"))
        assert v.status is Status.VIOLATED
        assert v.violated_condition == "P1(ii)"
        assert v.counterexample.stages["in"][3] == Q(0, 0b01)

    def test_logical_h_missing(self):
        c = mutate(gen_shor9_phase_detect(), FaultDescriptor(FaultClass.LOGICAL_H_MISSING, 4))
        v = run_solver(enc(c, "p2"))
        assert v.violated_condition == "P2(i)"
        assert v.counterexample.stages["1"][4].s != 0b001

    def test_raw_document(self):
        text = (FIXTURES / "bell_p3.smt2").read_text()
        assert run_solver(text).status is Status.VERIFIED

    def test_timeout_is_unknown(self):
        v = run_solver(enc(gen_bell(), "p3"), "sh -c 'sleep 5' {file}", timeout=0.3)
        assert v.status is Status.UNKNOWN
        assert "timeout" in v.reason and v.solver_time < 5

    def test_env_override(self, monkeypatch):
        monkeypatch.setenv("QBVCHECK_SOLVER", "sh -c 'echo unknown' {file}")
        assert run_solver(enc(gen_bell(), "p3")).status is Status.UNKNOWN

    def test_unexpected_output(self):
        with pytest.raises(SolverError):
            run_solver(enc(gen_bell(), "p3"), "sh -c 'echo hello' {file}")


def test_missing_solver():
    with pytest.raises(SolverError, match="not found"):
        solver_argv("no-such-solver-binary {file}", "/tmp/q.smt2")


def test_file_placeholder_appended():
    assert solver_argv("sh -c true", "/tmp/q.smt2")[-1] == "/tmp/q.smt2"
