"""Command-line entry point.

Exit status: 0 when every requested check passed, 1 when any failed,
2 on usage or configuration errors.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import scenarios, tensors
from .fields import FieldExprError
from .scenarios import ScenarioError


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="kinmom",
        description="Verify the operator identities of a charged particle "
                    "in a static electromagnetic field on finite-difference "
                    "grids.")
    parser.add_argument("--list-scenarios", action="store_true",
                        help="list the builtin scenarios and exit")
    sub = parser.add_subparsers(dest="command")

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=("json", "csv"), default="json",
                        help="report encoding (default json)")
    common.add_argument("--seed", type=int, default=None,
                        help="override the scenario seed")
    common.add_argument("--tolerance-scale", type=float, default=1.0,
                        help="multiply every check tolerance by this factor")
    common.add_argument("--trace-out", metavar="DIR", default=None,
                        help="write propagation traces as CSV files here")

    sub.add_parser("verify-tensors", parents=[common],
                   help="run the exact tensor-identity suite")
    run_p = sub.add_parser("run", parents=[common],
                           help="run the checks of one scenario file")
    run_p.add_argument("scenario", metavar="SCENARIO",
                       help="scenario file path, or the name of a builtin")
    sub.add_parser("run-all", parents=[common],
                   help="run the whole builtin scenario pack")
    return parser


def _emit(report, args):
    sys.stdout.write(scenarios.emit_report(report, args.format))
    if args.trace_out:
        outdir = Path(args.trace_out)
        outdir.mkdir(parents=True, exist_ok=True)
        for key, trace in report.traces.items():
            name = report.scenario.get("name", "scenario")
            with open(outdir / f"{name}-{key}.csv", "w", newline="") as fh:
                trace.write_csv(fh)


def _load_scenario(spec):
    if spec in scenarios.builtin_names():
        return scenarios.builtin_scenario(spec)
    path = Path(spec)
    if not path.exists():
        raise ScenarioError(
            f"no such scenario file or builtin: {spec!r}", kind="invalid-value")
    return scenarios.parse_scenario(path.read_text())


def _run_one(scenario, args):
    report = scenarios.run(scenario, tolerance_scale=args.tolerance_scale,
                           seed=args.seed, collect_traces=bool(args.trace_out))
    _emit(report, args)
    return report.passed


def main(argv=None):
    parser = _build_parser()
    args = parser.parse_args(argv)

    if args.list_scenarios:
        for name in scenarios.builtin_names():
            print(name)
        return 0
    if not args.command:
        parser.print_usage(sys.stderr)
        return 2

    try:
        if args.command == "verify-tensors":
            seed = 0 if args.seed is None else args.seed
            reports = tensors.run_full_suite(samples=100, seed=seed)
            if args.format == "json":
                print(json.dumps([r.as_dict() for r in reports], indent=2,
                                 sort_keys=True))
            else:
                print("name,residual,tolerance,order,pass")
                for r in reports:
                    print(f"{r.name},{len(r.failures)},0,,{r.passed}")
            return 0 if all(r.passed for r in reports) else 1

        if args.command == "run":
            scenario = _load_scenario(args.scenario)
            return 0 if _run_one(scenario, args) else 1

        if args.command == "run-all":
            ok = True
            for name in scenarios.builtin_names():
                scenario = scenarios.builtin_scenario(name)
                ok = _run_one(scenario, args) and ok
            return 0 if ok else 1
    except (ScenarioError, FieldExprError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 2


if __name__ == "__main__":
    sys.exit(main())
