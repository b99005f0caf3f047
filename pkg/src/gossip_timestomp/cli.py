"""Command-line front end.

Exit codes: 0 success, 1 tolerance failure (``compare``), 2 invalid
configuration or input schema, 3 I/O error.
"""

from __future__ import annotations

import argparse
import csv
import io
import logging
import sys

from .engine import ConfigError
from .experiment import (
    COMPARE_FIELDS,
    SIM_FIELDS,
    SOLVE_FIELDS,
    ExperimentPlan,
    PlanError,
    aggregate,
    build_plan,
    exact_values,
    header_comment,
    read_plan_file,
    run_replications,
    simulation_rows,
    solve_rows,
)
from .svgplot import SchemaError, collect_series, read_rows, render_svg

log = logging.getLogger("gossip_timestomp")

EXIT_OK, EXIT_TOLERANCE, EXIT_CONFIG, EXIT_IO = 0, 1, 2, 3
Z95 = 1.959963984540054


class _ArgumentParser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise PlanError(message)


def _plan_flags(parser):
    parser.add_argument("--plan", help="flat key=value plan file; flags override its entries")
    parser.add_argument("--scenario", choices=("baseline", "capture", "capture-thinned", "mitm"))
    parser.add_argument("--n", help="comma list, start:stop:step, or start:stop:*factor")
    parser.add_argument("--p", help="probability node n stamps outgoing packets as current")
    parser.add_argument("--q", help="probability node n stamps incoming packets as stale (default p)")
    parser.add_argument("--lambda", dest="lambda_", metavar="LAMBDA", help="per-node gossip rate")
    parser.add_argument("--horizon-mult", help="simulated time per run is this times n (default 1000)")
    parser.add_argument("--reps", help="replications per n")
    parser.add_argument("--seed", help="master seed")
    parser.add_argument("--mode", choices=("coin", "thinned"), help="node-capture simulation mode")
    parser.add_argument("--tolerance", help="relative error allowed by compare (default 0.10)")
    parser.add_argument("--jobs", help="worker threads for replications")
    parser.add_argument("--csv", help="CSV output path (default stdout)")
    parser.add_argument("--svg", help="optional SVG chart output path")


def make_parser() -> argparse.ArgumentParser:
    parser = _ArgumentParser(prog="gossip-timestomp", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_ArgumentParser)
    _plan_flags(sub.add_parser("simulate", help="run seeded replications, one CSV row each"))
    _plan_flags(sub.add_parser("solve", help="exact stationary ages from the recursions"))
    compare = sub.add_parser("compare", help="check simulation against the exact solver")
    _plan_flags(compare)
    compare.add_argument(
        "--reference", choices=("exact", "modes"),
        help="compare to the solver (default) or coin mode to thinned mode",
    )
    plot = sub.add_parser("plot", help="line chart of age versus n from CSV outputs")
    plot.add_argument("inputs", nargs="+", help="CSV files from simulate or solve")
    plot.add_argument("--svg", required=True, help="SVG output path")
    plot.add_argument("--title", default="Age of information versus network size")
    return parser


def _plan_from_args(args) -> ExperimentPlan:
    values = read_plan_file(args.plan) if args.plan else {}
    flags = {
        "scenario": args.scenario, "n": args.n, "p": args.p, "q": args.q,
        "lambda": args.lambda_, "horizon-mult": args.horizon_mult, "reps": args.reps,
        "seed": args.seed, "mode": args.mode, "tolerance": args.tolerance,
        "jobs": args.jobs, "csv": args.csv, "svg": args.svg,
        "reference": getattr(args, "reference", None),
    }
    values.update({k: v for k, v in flags.items() if v is not None})
    return build_plan(values)


def _csv_text(command, fields, rows) -> str:
    buf = io.StringIO()
    buf.write(header_comment(command) + "\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(fields)
    writer.writerows(rows)
    return buf.getvalue()


def _emit(text: str, path) -> None:
    if path is None:
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


def _plot_text(text: str, kind: str, title: str) -> str:
    lines = [line for line in text.splitlines() if not line.startswith("#")]
    reader = csv.reader(lines)
    header = next(reader)
    rows = [dict(zip(header, row)) for row in reader]
    return render_svg(collect_series([(kind, rows)]), title)


def cmd_simulate(plan: ExperimentPlan) -> int:
    reports = run_replications(plan)
    text = _csv_text("simulate", SIM_FIELDS, simulation_rows(plan, reports))
    _emit(text, plan.csv)
    if plan.svg:
        _emit(_plot_text(text, "sim", f"Simulated ages, {plan.scenario}"), plan.svg)
    return EXIT_OK


def cmd_solve(plan: ExperimentPlan) -> int:
    text = _csv_text("solve", SOLVE_FIELDS, solve_rows(plan.scenario, plan.n_values, plan.lam, plan.p, plan.q))
    _emit(text, plan.csv)
    if plan.svg:
        _emit(_plot_text(text, "exact", f"Exact ages, {plan.scenario}"), plan.svg)
    return EXIT_OK


def _roles(scenario):
    if scenario == "baseline":
        return ("v1",)
    if scenario == "mitm":
        return ("v1", "vn", "vA")
    return ("v1", "vn")


def _compare_exact(plan):
    reports = run_replications(plan)
    rows = []
    for n in plan.n_values:
        agg = aggregate(reports, n, plan.replications)
        exact = exact_values(plan.scenario, n, plan.lam, plan.p, plan.q)
        for role in _roles(plan.scenario):
            mean, stderr = agg[role]
            rel = abs(mean - exact[role]) / exact[role]
            rows.append((n, role, mean, stderr, exact[role], rel, rel <= plan.tolerance))
    return rows


def _compare_modes(plan):
    if not plan.capture:
        raise PlanError("mode comparison needs a node-capture scenario")
    if plan.replications < 2:
        raise PlanError("mode comparison needs at least 2 replications for confidence intervals")
    coin = run_replications(plan, "node_capture")
    thinned = run_replications(plan, "node_capture_thinned")
    rows = []
    for n in plan.n_values:
        a = aggregate(coin, n, plan.replications)
        b = aggregate(thinned, n, plan.replications)
        for role in _roles("node_capture"):
            (ma, sa), (mb, sb) = a[role], b[role]
            overlap = abs(ma - mb) <= Z95 * (sa + sb)
            rows.append((n, role, ma, sa, mb, abs(ma - mb) / mb, overlap))
    return rows


def cmd_compare(plan: ExperimentPlan) -> int:
    rows = _compare_modes(plan) if plan.reference == "modes" else _compare_exact(plan)
    ref_name = "thinned" if plan.reference == "modes" else "exact"
    out_rows = []
    for n, role, mean, stderr, ref, rel, ok in rows:
        verdict = "pass" if ok else "fail"
        err = "" if stderr is None else f" +/- {stderr:.4g}"
        print(
            f"n={n} {role}: simulated {mean:.6g}{err}, {ref_name} {ref:.6g}, "
            f"rel error {rel:.4f} {verdict.upper()}"
        )
        out_rows.append([
            plan.scenario, str(n), role, repr(mean), "" if stderr is None else repr(stderr),
            repr(ref), repr(rel), verdict,
        ])
    if plan.csv:
        _emit(_csv_text("compare", COMPARE_FIELDS, out_rows), plan.csv)
    passed = all(row[-1] for row in rows)
    print("verdict:", "PASS" if passed else "FAIL")
    return EXIT_OK if passed else EXIT_TOLERANCE


def cmd_plot(inputs, svg_path, title="Age of information versus network size") -> int:
    tables = [read_rows(path) for path in inputs]
    svg = render_svg(collect_series(tables), title)
    _emit(svg, svg_path)
    return EXIT_OK


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s: %(message)s")
    try:
        args = make_parser().parse_args(argv)
        if args.verbose:
            log.setLevel(logging.INFO)
        if args.command == "plot":
            return cmd_plot(args.inputs, args.svg, args.title)
        plan = _plan_from_args(args)
        log.info("plan: %s", plan)
        return {"simulate": cmd_simulate, "solve": cmd_solve, "compare": cmd_compare}[args.command](plan)
    except (PlanError, ConfigError, SchemaError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
