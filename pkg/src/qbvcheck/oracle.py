"""Exhaustive checker: evaluate every assignment of the free bits."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

from .circuit import Circuit
from .errors import OracleCapExceeded
from .properties import Checker, Preconditions, PropertySpec, make_checker, preconditions, run_trace

DEFAULT_FREE_BIT_CAP = 20


@dataclass
class OracleReport:
    total_cases: int
    failing_cases: list[tuple[dict[str, int], str]] = field(default_factory=list)
    vacuous_cases: int = 0

    @property
    def verdict(self) -> str:
        return "Violated" if self.failing_cases else "Verified"

    def merge(self, other: OracleReport) -> OracleReport:
        return OracleReport(
            self.total_cases + other.total_cases,
            self.failing_cases + other.failing_cases,
            self.vacuous_cases + other.vacuous_cases,
        )


def assignments(names: list[str]):
    for bits in itertools.product((0, 1), repeat=len(names)):
        yield dict(zip(names, bits))


def check_assignment(
    c: Circuit,
    spec: PropertySpec,
    assignment: dict[str, int],
    checker: Checker | None = None,
    pre: Preconditions | None = None,
) -> list[str] | None:
    """Violated condition labels for one assignment (None when an assumption fails)."""
    return (checker or make_checker(spec))(run_trace(c, spec, assignment, pre), assignment)


def enumerate_check(c: Circuit, spec: PropertySpec, free_bit_cap: int = DEFAULT_FREE_BIT_CAP) -> OracleReport:
    pre = preconditions(spec)
    names = [v.name for v in pre.free]
    if len(names) > free_bit_cap:
        raise OracleCapExceeded(
            f"{len(names)} free bits exceed the oracle cap of {free_bit_cap}; use the solver engine")
    report = OracleReport(total_cases=2 ** len(names))
    checker = make_checker(spec)
    for assignment in assignments(names):
        bad = check_assignment(c, spec, assignment, checker, pre)
        if bad is None:
            report.vacuous_cases += 1
        elif bad:
            report.failing_cases.append((assignment, bad[0]))
    return report
