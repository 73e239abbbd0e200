"""Verification workflows behind the command line: single runs, mutation
suites and the GHZ scaling benchmark."""

from __future__ import annotations

import datetime as _dt
import json
import os
import resource
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from importlib import resources
from typing import Callable, Iterable, Sequence

from . import __version__
from .circuit import Circuit, GateKind
from .faults import (
    FaultClass,
    FaultDescriptor,
    apply_faults,
    enumerate_faults_detailed,
    mutate,
    sample_fault_pairs,
)
from .generators import GhzTopology, gen_ghz
from .oracle import DEFAULT_FREE_BIT_CAP, check_assignment, enumerate_check
from .properties import PropertyId, bind_property, preconditions, run_trace, stage_states
from .smt import DEFAULT_TIMEOUT, Counterexample, Status, VerificationVerdict, encode, run_solver

REPORT_SCHEMA_VERSION = 1
ENGINES = ("smt", "oracle")


def load_schema(kind: str) -> dict:
    """JSON schema for ``run``, ``mutation`` or ``bench`` reports."""
    return json.loads(resources.files(__package__).joinpath(f"schemas/{kind}_report.schema.json").read_text())


def verify(
    c: Circuit,
    prop: PropertyId | str,
    engine: str = "smt",
    solver_cmd: str | None = None,
    timeout: float = DEFAULT_TIMEOUT,
    free_bit_cap: int = DEFAULT_FREE_BIT_CAP,
) -> VerificationVerdict:
    spec = bind_property(c, prop)
    if engine == "smt":
        return run_solver(encode(c, spec), solver_cmd, timeout)
    if engine != "oracle":
        raise ValueError(f"unknown engine {engine!r}; expected one of {ENGINES}")
    start = time.perf_counter()
    report = enumerate_check(c, spec, free_bit_cap)
    elapsed = time.perf_counter() - start
    if not report.failing_cases:
        return VerificationVerdict(Status.VERIFIED, solver_time=elapsed)
    assignment, label = report.failing_cases[0]
    stages = {k: list(v) for k, v in stage_states(spec, run_trace(c, spec, assignment)).items()}
    cex = Counterexample(dict(assignment), dict(assignment), label, stages)
    return VerificationVerdict(Status.VIOLATED, cex, elapsed, None, label)


def replay(c: Circuit, prop: PropertyId | str, verdict: VerificationVerdict) -> bool:
    """Check a Violated verdict's counterexample against the concrete evaluator."""
    if verdict.counterexample is None:
        return False
    spec = bind_property(c, prop)
    names = [v.name for v in preconditions(spec).free]
    assignment = {n: verdict.counterexample.free_bits.get(n, 0) for n in names}
    bad = check_assignment(c, spec, assignment)
    return bool(bad) and bad[0] == verdict.violated_condition


def tool_peak_memory() -> int:
    return resource.getrusage(resource.RUSAGE_SELF).ru_maxrss * 1024


def _now() -> str:
    return _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")


@dataclass
class RunReport:
    circuit: str
    property: str
    engine: str
    verdict: VerificationVerdict
    timestamp: str = field(default_factory=_now)

    @property
    def exit_code(self) -> int:
        return {Status.VERIFIED: 0, Status.VIOLATED: 1}.get(self.verdict.status, 2)

    def to_json(self) -> dict:
        v = self.verdict
        return {
            "schema": "qbvcheck/run-report",
            "schema_version": REPORT_SCHEMA_VERSION,
            "tool_version": __version__,
            "timestamp": self.timestamp,
            "circuit": self.circuit,
            "property": self.property,
            "engine": self.engine,
            "verdict": v.status.value,
            "solver_time": v.solver_time,
            "peak_memory": v.peak_memory,
            "tool_peak_memory": tool_peak_memory(),
            "violated_condition": v.violated_condition,
            "counterexample": v.counterexample.to_json() if v.counterexample else None,
            "reason": v.reason,
        }

    def summary(self) -> str:
        v = self.verdict
        mem = f", solver peak {v.peak_memory / 2**20:.1f} MB" if v.peak_memory else ""
        line = f"{self.circuit} {self.property} [{self.engine}]: {v.status.value} in {v.solver_time:.3f} s{mem}"
        if v.violated_condition:
            line += f"; violated {v.violated_condition}"
            cex = v.counterexample
            if cex and cex.free_bits:
                bits = " ".join(f"{k}={val}" for k, val in cex.free_bits.items())
                line += f" with {bits}"
        if v.reason:
            line += f" ({v.reason})"
        return line


def _pool_map(fn: Callable, items: Sequence, jobs: int) -> list:
    if jobs <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))


# ---------------------------------------------------------------------------
# Mutation suite
# ---------------------------------------------------------------------------


@dataclass
class MutantResult:
    faults: tuple[FaultDescriptor, ...]
    status: Status
    violated_condition: str | None
    predicted: list[str]
    replay_ok: bool | None
    solver_time: float

    @property
    def killed(self) -> bool:
        return self.status is Status.VIOLATED

    @property
    def prediction_ok(self) -> bool | None:
        if not self.predicted:
            return None
        return self.violated_condition in self.predicted

    def to_json(self) -> dict:
        return {
            "faults": [str(f) for f in self.faults],
            "verdict": self.status.value,
            "violated_condition": self.violated_condition,
            "predicted": self.predicted,
            "prediction_ok": self.prediction_ok,
            "replay_ok": self.replay_ok,
            "solver_time": self.solver_time,
        }


@dataclass
class MutationReport:
    circuit: str
    property: str
    engine: str
    singles: list[MutantResult]
    pairs: list[MutantResult]
    equivalent: list[FaultDescriptor]
    self_cancelling: list[tuple[FaultDescriptor, FaultDescriptor]]
    timestamp: str = field(default_factory=_now)

    @staticmethod
    def _rate(results: list[MutantResult]) -> float:
        return sum(r.killed for r in results) / len(results) if results else 1.0

    @property
    def kill_rate(self) -> float:
        return self._rate(self.singles)

    @property
    def pair_kill_rate(self) -> float:
        return self._rate(self.pairs)

    @property
    def conditions_covered(self) -> list[str]:
        return sorted({r.violated_condition for r in self.singles if r.violated_condition})

    @property
    def exit_code(self) -> int:
        return 0 if self.kill_rate == 1.0 else 1

    def to_json(self) -> dict:
        return {
            "schema": "qbvcheck/mutation-report",
            "schema_version": REPORT_SCHEMA_VERSION,
            "tool_version": __version__,
            "timestamp": self.timestamp,
            "circuit": self.circuit,
            "property": self.property,
            "engine": self.engine,
            "kill_rate": self.kill_rate,
            "pair_kill_rate": self.pair_kill_rate,
            "conditions_covered": self.conditions_covered,
            "singles": [r.to_json() for r in self.singles],
            "pairs": [r.to_json() for r in self.pairs],
            "excluded_equivalent": [str(f) for f in self.equivalent],
            "excluded_self_cancelling": [[str(f), str(g)] for f, g in self.self_cancelling],
        }

    def summary(self) -> str:
        lines = [
            f"{self.circuit} {self.property} [{self.engine}]: "
            f"{sum(r.killed for r in self.singles)}/{len(self.singles)} single-fault mutants violated "
            f"(kill rate {self.kill_rate:.1%}); {len(self.equivalent)} equivalent mutants excluded",
        ]
        if self.pairs or self.self_cancelling:
            lines.append(
                f"  fault pairs: {sum(r.killed for r in self.pairs)}/{len(self.pairs)} violated; "
                f"{len(self.self_cancelling)} self-cancelling pairs excluded")
        lines.append(f"  conditions violated by single faults: {', '.join(self.conditions_covered) or '-'}")
        for r in self.singles + self.pairs:
            if not r.killed:
                lines.append(f"  SURVIVED {' + '.join(map(str, r.faults))}: {r.status.value}")
            elif r.prediction_ok is False:
                lines.append(f"  {' + '.join(map(str, r.faults))}: violated {r.violated_condition}, "
                             f"expected {' or '.join(r.predicted)}")
        return "\n".join(lines)


def run_mutation_suite(
    c: Circuit,
    prop: PropertyId | str,
    engine: str = "smt",
    classes: Iterable[FaultClass] | None = None,
    pair_cap: int = 0,
    seed: int = 0,
    jobs: int = 1,
    solver_cmd: str | None = None,
    timeout: float = DEFAULT_TIMEOUT,
) -> MutationReport:
    pid = PropertyId.parse(prop)
    bind_property(c, pid)
    enum_ = enumerate_faults_detailed(c, pid)
    wanted = set(classes) if classes else None
    singles = [f for f in enum_.faults if wanted is None or f.cls in wanted]
    equivalent = [f for f in enum_.equivalent if wanted is None or f.cls in wanted]
    sample = sample_fault_pairs(c, pair_cap, seed, pid) if pair_cap > 0 else None
    pairs = sample.pairs if sample else []

    def run(faults: tuple[FaultDescriptor, ...]) -> MutantResult:
        m = apply_faults(c, faults)
        v = verify(m, pid, engine, solver_cmd, timeout)
        replay_ok = None
        if engine == "smt" and v.status is Status.VIOLATED and len(preconditions(bind_property(m, pid)).free) <= DEFAULT_FREE_BIT_CAP:
            replay_ok = replay(m, pid, v)
        predicted = faults[0].predicted_conditions(pid) if len(faults) == 1 else []
        return MutantResult(faults, v.status, v.violated_condition, predicted, replay_ok, v.solver_time)

    single_results = _pool_map(run, [(f,) for f in singles], jobs)
    pair_results = _pool_map(run, [tuple(p) for p in pairs], jobs)
    return MutationReport(
        c.name, pid.value, engine, single_results, pair_results, equivalent,
        sample.self_cancelling if sample else [],
    )


# ---------------------------------------------------------------------------
# GHZ benchmark
# ---------------------------------------------------------------------------


def bench_fault(c: Circuit) -> FaultDescriptor:
    """The benchmark's erroneous variant: the CNOT feeding qubit 1 (qubit 2
    when counting from one) takes its control from the last, still
    unentangled qubit."""
    cnots = [g for g in c.gates if g.kind is GateKind.CNOT]
    k = next(k for k, g in enumerate(cnots) if g.target == 1)
    return FaultDescriptor(FaultClass.CNOT_CONTROL_WRONG, k, c.n - 1)


@dataclass
class BenchRun:
    status: Status
    time: float
    peak_memory: int | None
    violated_condition: str | None = None
    replay_ok: bool | None = None

    def to_json(self) -> dict:
        return {
            "verdict": self.status.value,
            "time": self.time,
            "peak_memory": self.peak_memory,
            "violated_condition": self.violated_condition,
            "replay_ok": self.replay_ok,
        }


@dataclass
class BenchRow:
    qubits: int
    no_error: BenchRun
    error: BenchRun | None

    def to_json(self) -> dict:
        return {
            "qubits": self.qubits,
            "no_error": self.no_error.to_json(),
            "error": self.error.to_json() if self.error else None,
        }


@dataclass
class BenchReport:
    topology: str
    rows: list[BenchRow]
    repeat: int
    timeout: float
    timestamp: str = field(default_factory=_now)

    def to_json(self) -> dict:
        return {
            "schema": "qbvcheck/bench-report",
            "schema_version": REPORT_SCHEMA_VERSION,
            "tool_version": __version__,
            "timestamp": self.timestamp,
            "topology": self.topology,
            "repeat": self.repeat,
            "timeout": self.timeout,
            "tool_peak_memory": tool_peak_memory(),
            "rows": [r.to_json() for r in self.rows],
        }

    def table(self) -> str:
        def cells(run: BenchRun | None) -> list[str]:
            if run is None:
                return ["-", "-", "-"]
            mem = f"{run.peak_memory / 2**20:.1f}" if run.peak_memory else "-"
            return [f"{run.time:.2f}", mem, run.status.value]

        header = ["Qubit Count", "No-Error Time(s)", "Memory(MB)", "Verdict",
                  "Error Time(s)", "Memory(MB)", "Verdict"]
        body = [[str(r.qubits), *cells(r.no_error), *cells(r.error)] for r in self.rows]
        widths = [max(len(row[i]) for row in [header, *body]) for i in range(len(header))]
        fmt = lambda row: "| " + " | ".join(x.rjust(w) for x, w in zip(row, widths)) + " |"  # noqa: E731
        rule = "|" + "|".join("-" * (w + 2) for w in widths) + "|"
        return "\n".join([fmt(header), rule, *map(fmt, body)])


def is_monotone(times: Sequence[float], resolution: float = 0.01) -> bool:
    """Nondecreasing when compared at ``resolution`` seconds."""
    ticks = [round(t / resolution) for t in times]
    return all(a <= b for a, b in zip(ticks, ticks[1:]))


def _bench_one(c: Circuit, repeat: int, solver_cmd: str | None, timeout: float, check_replay: bool) -> BenchRun:
    enc = encode(c, bind_property(c, PropertyId.P3))
    best: VerificationVerdict | None = None
    peak = 0
    for _ in range(max(1, repeat)):
        v = run_solver(enc, solver_cmd, timeout)
        peak = max(peak, v.peak_memory or 0)
        if best is None or v.solver_time < best.solver_time:
            best = v
        if v.status is Status.UNKNOWN:
            break
    replay_ok = replay(c, PropertyId.P3, best) if check_replay and best.status is Status.VIOLATED else None
    return BenchRun(best.status, best.solver_time, peak or None, best.violated_condition, replay_ok)


def run_bench(
    sizes: Sequence[int],
    topology: GhzTopology | str = GhzTopology.CHAIN,
    error: bool = True,
    repeat: int = 3,
    jobs: int = 1,
    solver_cmd: str | None = None,
    timeout: float = DEFAULT_TIMEOUT,
    replay_limit: int = 2048,
) -> BenchReport:
    """Verify GHZ circuits of each size, optionally with the benchmark fault.

    Times are the fastest of ``repeat`` solver runs; memory is the largest
    solver peak resident size seen across them.
    """
    topo = GhzTopology(topology)

    def one(m: int) -> BenchRow:
        c = gen_ghz(m, topo)
        ok = _bench_one(c, repeat, solver_cmd, timeout, False)
        bad = None
        if error:
            bad = _bench_one(mutate(c, bench_fault(c)), repeat, solver_cmd, timeout, m <= replay_limit)
        return BenchRow(m, ok, bad)

    rows = _pool_map(one, list(sizes), jobs)
    return BenchReport(topo.value, rows, repeat, timeout)


def default_jobs() -> int:
    return os.cpu_count() or 1
