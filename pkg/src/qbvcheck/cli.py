"""Command-line entry point: ``qbvcheck gen|verify|emit-smt|mutate|bench``."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Sequence

from . import __version__
from .circuit import Circuit, GateKind, parse_circuit, serialize_circuit
from .errors import QbvError
from .faults import FaultClass
from .generators import GhzTopology, from_family
from .harness import (
    ENGINES,
    RunReport,
    default_jobs,
    run_bench,
    run_mutation_suite,
    verify,
)
from .properties import bind_property
from .smt import DEFAULT_TIMEOUT, SOLVER_ENV, encode

EXIT_ERROR = 2


def load_circuit(target: str, topology: str | None = None) -> Circuit:
    """A circuit file path, or a generator family such as ``ghz:8``."""
    path = Path(target)
    if path.is_file():
        return parse_circuit(path.read_text(), name=path.stem)
    return from_family(target, GhzTopology(topology) if topology else None)


def _write_json(path: str | None, payload: dict) -> None:
    if path is None:
        return
    text = json.dumps(payload, indent=2) + "\n"
    if path == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def _counts(c: Circuit) -> str:
    cnots = c.count(GateKind.CNOT)
    return (f"{c.name}: {c.n} qubits, {len(c.gates)} gates "
            f"({c.count(GateKind.H)} H, {c.count(GateKind.X)} X, {cnots} CNOT, "
            f"{c.count(GateKind.MEASURE)} measure)")


def cmd_gen(args: argparse.Namespace) -> int:
    c = load_circuit(args.family, args.topology)
    text = serialize_circuit(c) + "\n"
    if args.output:
        Path(args.output).write_text(text)
        print(f"wrote {args.output}: {_counts(c)}")
    else:
        sys.stdout.write(text)
        print(_counts(c), file=sys.stderr)
    return 0


def cmd_verify(args: argparse.Namespace) -> int:
    c = load_circuit(args.target, args.topology)
    verdict = verify(c, args.property, args.engine, args.solver, args.timeout)
    report = RunReport(c.name, args.property.lower(), args.engine, verdict)
    print(report.summary())
    _write_json(args.json, report.to_json())
    return report.exit_code


def cmd_emit_smt(args: argparse.Namespace) -> int:
    c = load_circuit(args.target, args.topology)
    enc = encode(c, bind_property(c, args.property))
    if args.output in (None, "-"):
        sys.stdout.write(enc.text)
    else:
        Path(args.output).write_text(enc.text)
        print(f"wrote {args.output}: {len(enc.declared_variables())} variables", file=sys.stderr)
    return 0


def _parse_classes(raw: str | None) -> list[FaultClass] | None:
    if not raw:
        return None
    return [FaultClass.parse(x.strip()) for x in raw.split(",") if x.strip()]


def cmd_mutate(args: argparse.Namespace) -> int:
    c = load_circuit(args.target, args.topology)
    report = run_mutation_suite(
        c, args.property, args.engine, _parse_classes(args.fault_class), args.pair_cap,
        args.seed, args.jobs, args.solver, args.timeout,
    )
    print(report.summary())
    if args.verbose:
        for r in report.singles + report.pairs:
            print(f"  {' + '.join(map(str, r.faults))}: {r.status.value} {r.violated_condition or ''}".rstrip())
    _write_json(args.json, report.to_json())
    return report.exit_code


def _parse_sizes(raw: str) -> list[int]:
    sizes = []
    for part in raw.split(","):
        part = part.strip()
        if ".." in part:
            lo, hi = (int(x) for x in part.split(".."))
            m = lo
            while m <= hi:
                sizes.append(m)
                m *= 2
        elif part:
            sizes.append(int(part))
    if not sizes or min(sizes) < 3:
        raise argparse.ArgumentTypeError("sizes must be integers >= 3")
    return sizes


def cmd_bench(args: argparse.Namespace) -> int:
    report = run_bench(
        args.sizes, args.topology or GhzTopology.CHAIN.value, args.error, args.repeat, args.jobs,
        args.solver, args.timeout,
    )
    table = report.table()
    print(table)
    if args.output:
        Path(args.output).write_text(
            f"GHZ {report.topology} benchmark, qbvcheck {__version__}, {report.timestamp}, "
            f"best of {report.repeat}, timeout {report.timeout:g} s\n\n{table}\n")
    _write_json(args.json, report.to_json())
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qbvcheck",
        description="Verify quantum error-detection and entanglement circuits with bit-vector abstraction.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    solver = argparse.ArgumentParser(add_help=False)
    solver.add_argument("--solver", metavar="CMD",
                        help=f"solver command template with {{file}} placeholder (env {SOLVER_ENV}; default 'z3 {{file}}')")
    solver.add_argument("--timeout", type=float, default=DEFAULT_TIMEOUT, metavar="S",
                        help="per-query solver timeout in seconds")
    topo = argparse.ArgumentParser(add_help=False)
    topo.add_argument("--topology", choices=[t.value for t in GhzTopology], help="GHZ CNOT layout")

    p = sub.add_parser("gen", parents=[topo], help="write a generated circuit in the text format")
    p.add_argument("family", help="bell, ghz:<m>[:chain|star], bitflip2, bitflip3 or shor9")
    p.add_argument("output", nargs="?", help="output path (stdout if omitted)")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("verify", parents=[solver, topo], help="verify a circuit against a property")
    p.add_argument("target", help="circuit file or generator family")
    p.add_argument("property", help="p1, p2 or p3")
    p.add_argument("--engine", choices=ENGINES, default="smt")
    p.add_argument("--json", metavar="PATH", help="write the JSON run report ('-' for stdout)")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("emit-smt", parents=[topo], help="write the SMT-LIB query for a circuit")
    p.add_argument("target", help="circuit file or generator family")
    p.add_argument("property", help="p1, p2 or p3")
    p.add_argument("output", nargs="?", help="output path (stdout if omitted)")
    p.set_defaults(func=cmd_emit_smt)

    p = sub.add_parser("mutate", parents=[solver, topo], help="inject faults and check each mutant is caught")
    p.add_argument("target", help="circuit file or generator family")
    p.add_argument("property", help="p1, p2 or p3")
    p.add_argument("--engine", choices=ENGINES, default="smt")
    p.add_argument("--class", dest="fault_class", metavar="CLASSES",
                   help="comma-separated fault classes to keep (e.g. LogicalHMissing)")
    p.add_argument("--pair-cap", type=int, default=200, metavar="N", help="sampled fault pairs (0 disables)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--jobs", type=int, default=default_jobs(), metavar="N")
    p.add_argument("--json", metavar="PATH", help="write the JSON suite report ('-' for stdout)")
    p.add_argument("-v", "--verbose", action="store_true", help="list every mutant")
    p.set_defaults(func=cmd_mutate)

    p = sub.add_parser("bench", parents=[solver, topo], help="GHZ scaling benchmark")
    p.add_argument("--sizes", type=_parse_sizes, default=_parse_sizes("4..1024"), metavar="CSV",
                   help="qubit counts, e.g. 4,8,16 or 4..1024 (doubling)")
    p.add_argument("--error", action=argparse.BooleanOptionalAction, default=True,
                   help="also verify the erroneous variant at each size")
    p.add_argument("--repeat", type=int, default=3, metavar="N", help="solver runs per query; fastest is kept")
    p.add_argument("--jobs", type=int, default=1, metavar="N",
                   help="parallel sizes (default 1 so timings do not contend)")
    p.add_argument("--output", metavar="PATH", help="write the table to a file")
    p.add_argument("--json", metavar="PATH", help="write the JSON bench report ('-' for stdout)")
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (QbvError, ValueError, OSError) as exc:
        print(f"qbvcheck: error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
