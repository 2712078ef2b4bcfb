"""Command-line entry point.

Subcommands:
  run <scenario> [--until S] [--trace PATH] [--format csv|jsonl] [--seed N]
  validate <scenario>
  report <trace>
  scenarios

Exit codes: 0 success, 1 validation failure, 2 I/O failure, 3 run stopped at
--until with live tenants.
"""

from __future__ import annotations

import argparse
import sys

from .engine import Simulation
from .report import format_report, summarize, summarize_run
from .scenario import (
    BUNDLED_SCENARIOS,
    ScenarioError,
    bundled_scenario_text,
    load_scenario,
    parse_scenario,
)
from .traceio import TraceFormatError, emit_run, read_trace

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_IO = 2
EXIT_NONQUIESCENT = 3


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="laissez-sim",
        description="Deterministic market-based accelerator-cloud simulator.")
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run a scenario to quiescence")
    run_p.add_argument("scenario", help="bundled scenario name or path")
    run_p.add_argument("--until", type=int, metavar="S",
                       help="stop after S seconds of simulated time")
    run_p.add_argument("--trace", metavar="PATH", help="write the trace here")
    run_p.add_argument("--format", choices=("csv", "jsonl"), default="csv")
    run_p.add_argument("--seed", type=int, default=None,
                       help="override the scenario seed (recorded in the trace)")

    val_p = sub.add_parser("validate", help="check a scenario file")
    val_p.add_argument("scenario")

    rep_p = sub.add_parser("report", help="summarize an emitted trace")
    rep_p.add_argument("trace")

    sub.add_parser("scenarios", help="list bundled scenarios")
    return parser


def _load(spec: str):
    try:
        return load_scenario(spec), None
    except ScenarioError as exc:
        for message in exc.errors:
            print(f"error: {message}", file=sys.stderr)
        return None, EXIT_VALIDATION
    except OSError as exc:
        print(f"error: cannot read {spec!r}: {exc}", file=sys.stderr)
        return None, EXIT_IO


def _cmd_run(args) -> int:
    scenario, code = _load(args.scenario)
    if scenario is None:
        return code
    sim = Simulation(scenario, seed=args.seed)
    until_ms = None if args.until is None else args.until * 1000
    result = sim.run(until=until_ms)
    if args.trace:
        document = emit_run(result, args.format)
        try:
            with open(args.trace, "w") as fh:
                fh.write(document)
        except OSError as exc:
            print(f"error: cannot write {args.trace!r}: {exc}", file=sys.stderr)
            return EXIT_IO
    print(format_report(summarize_run(result)))
    if not result.quiescent:
        print(f"warning: {args.until}s reached with live tenants", file=sys.stderr)
        return EXIT_NONQUIESCENT
    return EXIT_OK


def _cmd_validate(args) -> int:
    scenario, code = _load(args.scenario)
    if scenario is None:
        return code
    print(f"{args.scenario}: ok ({len(scenario.tenants)} tenants, "
          f"{len(scenario.accelerators)} accelerator types)")
    return EXIT_OK


def _cmd_report(args) -> int:
    try:
        with open(args.trace) as fh:
            text = fh.read()
    except OSError as exc:
        print(f"error: cannot read {args.trace!r}: {exc}", file=sys.stderr)
        return EXIT_IO
    try:
        header, records = read_trace(text)
    except (TraceFormatError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    print(format_report(summarize(records, header)))
    return EXIT_OK


def _cmd_scenarios(args) -> int:
    for name in BUNDLED_SCENARIOS:
        text = bundled_scenario_text(name)
        scenario = parse_scenario(text)
        tenants = ", ".join(t.tenant_id for t in scenario.tenants)
        print(f"{name}: {tenants}")
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    handler = {
        "run": _cmd_run,
        "validate": _cmd_validate,
        "report": _cmd_report,
        "scenarios": _cmd_scenarios,
    }[args.command]
    return handler(args)


if __name__ == "__main__":
    sys.exit(main())
