"""Command-line front end.

    isoholo run SCENARIO.json [--out FILE] [--format csv|json] [--jobs N]
    isoholo verify CHECK
    isoholo list-checks

Exit codes: 0 success, 1 failed or unknown check, 2 invalid scenario,
3 numerical failure.
"""

import argparse
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor

from .checks import ALIASES, ORDER, run_check
from .errors import HolonomyError, NumericalError, SchemaError, UnknownCheck
from .scenario import compute_row, load

EXIT_OK, EXIT_FAIL, EXIT_SCHEMA, EXIT_NUMERIC = 0, 1, 2, 3

CSV_HEADER = ("scenario_id", "omega_solid", "r", "R", "u00_re", "u00_im", "u01_re", "u01_im",
              "u10_re", "u10_im", "u11_re", "u11_im", "bloch_x", "bloch_y", "bloch_z", "purity",
              "method", "unitarity_defect", "infidelity")


def _num(x):
    return "" if x is None else format(float(x), ".17g")


def csv_line(row):
    u = row["U"]
    if u is not None and u.shape != (2, 2):
        raise SchemaError("CSV output needs a frame of two vectors; use --format json")
    entries = [""] * 8 if u is None else [_num(f(z)) for z in u.ravel() for f in (lambda z: z.real, lambda z: z.imag)]
    bloch = [""] * 3 if row["bloch"] is None else [_num(v) for v in row["bloch"]]
    fields = [row["scenario_id"], _num(row["omega_solid"]), _num(row["r"]), _num(row["R"])]
    fields += entries + bloch
    fields += [_num(row["purity"]), row["method"], _num(row["unitarity_defect"]), _num(row["infidelity"])]
    return ",".join(fields)


def json_row(row):
    out = {k: row[k] for k in ("scenario_id", "omega_solid", "r", "R", "purity", "method",
                               "unitarity_defect", "infidelity")}
    u = row["U"]
    out["U"] = None if u is None else [[[z.real, z.imag] for z in line] for line in u.tolist()]
    out["bloch"] = None if row["bloch"] is None else list(row["bloch"])
    return out


def render(rows, fmt):
    if fmt == "json":
        return json.dumps([json_row(r) for r in rows], indent=2) + "\n"
    return "\n".join([",".join(CSV_HEADER)] + [csv_line(r) for r in rows]) + "\n"


def evaluate(scenario, jobs=None):
    """Rows for a scenario; sweep points may run in parallel but keep their order."""
    points = scenario.points()
    if jobs is None:
        jobs = os.cpu_count() or 1
    if jobs <= 1 or len(points) <= 1:
        return [compute_row(p) for p in points]
    with ProcessPoolExecutor(max_workers=min(jobs, len(points))) as pool:
        return list(pool.map(compute_row, points))


def _report(kind, message):
    for line in str(message).splitlines() or [""]:
        print(f"{kind}: {line}", file=sys.stderr)


def cmd_run(args):
    try:
        scenario = load(args.scenario)
        text = render(evaluate(scenario, args.jobs), args.format)
    except NumericalError as exc:
        _report(type(exc).__name__, exc)
        return EXIT_NUMERIC
    except (HolonomyError, ValueError) as exc:
        # bad input that only shows once the scenario is evaluated, such as a
        # loop leaving its chart, counts as a schema error
        _report(type(exc).__name__, exc)
        return EXIT_SCHEMA
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_verify(args):
    try:
        result = run_check(args.name)
    except UnknownCheck:
        _report("UnknownCheck", f"no check named {args.name!r}; see list-checks")
        return EXIT_FAIL
    print("\n".join(result.lines()))
    return EXIT_OK if result.passed else EXIT_FAIL


def cmd_list_checks(args):
    for name in ORDER:
        aliases = [a for a, target in ALIASES.items() if target == name]
        print(name + (f" (alias: {', '.join(aliases)})" if aliases else ""))
    return EXIT_OK


def _jobs(text):
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("--jobs must be at least 1")
    return value


def build_parser():
    parser = argparse.ArgumentParser(
        prog="isoholo",
        description="Mixed-state holonomies of degenerate subspaces. All angles are in radians.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="evaluate a scenario file")
    run.add_argument("scenario", help="scenario JSON file")
    run.add_argument("--out", help="write results here instead of stdout")
    run.add_argument("--format", choices=("csv", "json"), default="csv")
    run.add_argument("--jobs", type=_jobs, default=None,
                     help="parallel sweep points (default: number of processors)")
    run.set_defaults(func=cmd_run)

    verify = sub.add_parser("verify", help="run a built-in check and print PASS/FAIL")
    verify.add_argument("name")
    verify.set_defaults(func=cmd_verify)

    checks = sub.add_parser("list-checks", help="list built-in check names")
    checks.set_defaults(func=cmd_list_checks)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
