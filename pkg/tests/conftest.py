from __future__ import annotations

import shutil
import sys

import pytest

from qbvcheck.generators import GhzTopology, gen_bell, gen_bitflip_detect, gen_ghz, gen_shor9_phase_detect

HAS_SOLVER = shutil.which("z3") is not None
needs_solver = pytest.mark.skipif(not HAS_SOLVER, reason="z3 not on PATH")

# Circuit families paired with the property each one is checked against.
FAMILY_CASES = [
    ("bell", gen_bell, "p3"),
    ("ghz4-chain", lambda: gen_ghz(4, GhzTopology.CHAIN), "p3"),
    ("ghz5-star", lambda: gen_ghz(5, GhzTopology.STAR), "p3"),
    ("bitflip2", lambda: gen_bitflip_detect(2), "p1"),
    ("bitflip3", lambda: gen_bitflip_detect(3), "p1"),
    ("shor9", gen_shor9_phase_detect, "p2"),
]


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    module = sys.modules.get("test_acceptance")
    results = getattr(module, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(results):
        ok, detail = results[number]
        terminalreporter.write_line(f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}")
