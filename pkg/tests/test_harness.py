from __future__ import annotations

import pytest

from qbvcheck.circuit import Gate
from qbvcheck.faults import FaultClass, FaultDescriptor, mutate
from qbvcheck.generators import GhzTopology, from_family, gen_ghz
from qbvcheck.harness import RunReport, bench_fault, is_monotone, replay, run_mutation_suite, verify
from qbvcheck.smt import Status, VerificationVerdict

from conftest import needs_solver

FAMILIES = [("bell", "p3"), ("ghz:4", "p3"), ("ghz:5:star", "p3"), ("bitflip2", "p1"), ("bitflip3", "p1"),
            ("shor9", "p2")]


@needs_solver
@pytest.mark.parametrize("family, prop", FAMILIES)
def test_every_condition_falsifiable(family, prop):
    report = run_mutation_suite(from_family(family), prop, "smt")
    assert report.kill_rate == 1.0
    assert report.conditions_covered == [f"{prop.upper()}({r})" for r in ("i", "ii", "iii")]
    assert all(r.prediction_ok for r in report.singles)
    assert all(r.replay_ok for r in report.singles)


@pytest.mark.parametrize("m", [3, 4, 9])
@pytest.mark.parametrize("topo", list(GhzTopology))
def test_bench_fault(m, topo):
    c = gen_ghz(m, topo)
    f = bench_fault(c)
    mutant = mutate(c, f)
    assert mutant.gates[1] == Gate.cnot(m - 1, 1)
    assert verify(mutant, "p3", engine="oracle").violated_condition == "P3(iii)"


@needs_solver
def test_replay_detects_forged_label():
    c = mutate(gen_ghz(4), bench_fault(gen_ghz(4)))
    v = verify(c, "p3")
    assert replay(c, "p3", v)
    v.violated_condition = "P3(i)"
    assert not replay(c, "p3", v)


def test_oracle_engine_counterexample():
    c = mutate(from_family("bitflip3"), FaultDescriptor(FaultClass.ANCILLA_INIT_FLIP, 4))
    v = verify(c, "p1", engine="oracle")
    assert v.status is Status.VIOLATED and v.violated_condition == "P1(ii)"
    assert set(v.counterexample.stages) == {"in", "1", "out-1", "out"}


def test_unknown_engine():
    with pytest.raises(ValueError):
        verify(gen_ghz(4), "p3", engine="bdd")


@pytest.mark.parametrize(
    "status, code", [(Status.VERIFIED, 0), (Status.UNKNOWN, 2)])
def test_exit_codes(status, code):
    assert RunReport("c", "p3", "smt", VerificationVerdict(status)).exit_code == code


def test_monotone():
    assert is_monotone([0.010, 0.011, 0.009, 0.02])
    assert not is_monotone([0.010, 0.03, 0.01])
    assert is_monotone([0.1, 0.1, 0.2], resolution=0.1)
