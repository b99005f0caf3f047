"""Experiment plans, seeded replications and the CSV row formats."""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Iterable, Optional

import numpy as np

from . import __version__
from .analytics import asymptotics, solve_baseline, solve_mitm, solve_node_capture
from .engine import SimReport
from .scenarios import config_for, simulate

SIM_FIELDS = (
    "scenario", "n", "lambda", "p", "q", "seed", "replication", "horizon",
    "v1_hat", "vn_hat", "vA_hat", "events", "v1_stderr", "vn_stderr", "vA_stderr",
)
SOLVE_FIELDS = (
    "scenario", "n", "lambda", "p", "q", "v1", "vn", "vA", "vSn_min", "vSn_max",
    "v1_p1", "v1_p0", "bracket_lower", "bracket_upper", "vA_quarter",
)
COMPARE_FIELDS = (
    "scenario", "n", "role", "simulated", "stderr", "reference", "rel_error", "verdict",
)
AGGREGATE = -1

SCENARIO_ALIASES = {
    "baseline": "baseline",
    "capture": "node_capture",
    "node_capture": "node_capture",
    "capture-thinned": "node_capture_thinned",
    "node_capture_thinned": "node_capture_thinned",
    "mitm": "mitm",
}
DEFAULT_GRIDS = {
    "mitm": [4 * 2**i for i in range(7)],  # 4..256
    None: [4 * 2**i for i in range(9)],  # 4..1024
}
ROLES = ("v1", "vn", "vA")


class PlanError(ValueError):
    """Invalid experiment configuration."""


def header_comment(command: str) -> str:
    return f"# gossip_timestomp {__version__} {command}"


@dataclass(frozen=True)
class ExperimentPlan:
    scenario: str
    n_values: tuple
    p: float = 1.0
    q: float = 1.0
    lam: float = 1.0
    horizon_multiplier: float = 1000.0
    replications: int = 1
    master_seed: int = 0
    csv: Optional[str] = None
    svg: Optional[str] = None
    tolerance: float = 0.10
    jobs: int = 1
    reference: str = "exact"

    @property
    def adversarial(self) -> bool:
        return self.scenario != "baseline"

    @property
    def capture(self) -> bool:
        return self.scenario.startswith("node_capture")

    def horizon(self, n: int) -> float:
        return self.horizon_multiplier * n


def parse_n_values(text: str) -> list:
    """Parse ``"4,8,16"``, ``"10:50:10"`` (inclusive) or ``"4:1024:*2"`` (geometric)."""
    text = str(text).strip()
    try:
        if ":" not in text:
            return [int(tok) for tok in text.split(",") if tok.strip()]
        start, stop, step = (tok.strip() for tok in text.split(":"))
        start, stop = int(start), int(stop)
        if step.startswith("*"):
            factor = int(step[1:])
            if factor < 2 or start < 1:
                raise PlanError(f"bad geometric grid {text!r}")
            values = []
            while start <= stop:
                values.append(start)
                start *= factor
            return values
        step = int(step)
        if step < 1:
            raise PlanError(f"grid step must be positive in {text!r}")
        return list(range(start, stop + 1, step))
    except ValueError as exc:
        if isinstance(exc, PlanError):
            raise
        raise PlanError(f"cannot parse n grid {text!r}") from None


def read_plan_file(path: str) -> dict:
    """Read flat ``key = value`` lines; ``#`` starts a comment."""
    values = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise PlanError(f"{path}:{lineno}: expected key=value")
            key, value = (part.strip() for part in line.split("=", 1))
            values[key.replace("_", "-")] = value
    return values


def build_plan(values: dict) -> ExperimentPlan:
    """Validate a merged flag/plan-file mapping (keys are flag names)."""
    known = {
        "scenario", "n", "p", "q", "lambda", "horizon-mult", "reps", "seed", "mode",
        "tolerance", "jobs", "csv", "svg", "reference",
    }
    unknown = set(values) - known
    if unknown:
        raise PlanError(f"unknown plan keys: {', '.join(sorted(unknown))}")

    def num(key, default, kind=float):
        raw = values.get(key)
        if raw is None:
            return default
        try:
            value = kind(raw)
        except (TypeError, ValueError):
            raise PlanError(f"{key}: cannot parse {raw!r}") from None
        if kind is float and not math.isfinite(value):
            raise PlanError(f"{key} must be finite")
        return value

    raw_scenario = str(values.get("scenario", "capture"))
    if raw_scenario not in SCENARIO_ALIASES:
        raise PlanError(f"unknown scenario {raw_scenario!r}")
    scenario = SCENARIO_ALIASES[raw_scenario]
    mode = values.get("mode")
    if mode not in (None, "coin", "thinned"):
        raise PlanError(f"unknown mode {mode!r}")
    if mode == "thinned":
        if not scenario.startswith("node_capture"):
            raise PlanError("thinned mode only applies to node capture")
        scenario = "node_capture_thinned"

    if values.get("n") is None:
        n_values = DEFAULT_GRIDS.get(scenario, DEFAULT_GRIDS[None])
    else:
        n_values = parse_n_values(values["n"])
    if not n_values:
        raise PlanError("n grid is empty")
    floor = 1 if scenario == "baseline" else 2
    if min(n_values) < floor:
        raise PlanError(f"scenario {scenario} needs every n >= {floor}")

    p = num("p", 1.0)
    q = num("q", p)
    for name, value in (("p", p), ("q", q)):
        if not 0.0 <= value <= 1.0:
            raise PlanError(f"{name} must lie in [0, 1], got {value}")
    lam = num("lambda", 1.0)
    mult = num("horizon-mult", 1000.0)
    reps = num("reps", 1, int)
    seed = num("seed", 0, int)
    tolerance = num("tolerance", 0.10)
    jobs = num("jobs", os.cpu_count() or 1, int)
    reference = values.get("reference", "exact")
    if lam <= 0:
        raise PlanError("lambda must be positive")
    if mult <= 0:
        raise PlanError("horizon-mult must be positive")
    if reps < 1:
        raise PlanError("reps must be at least 1")
    if not 0 <= seed < 2**64:
        raise PlanError("seed must be a 64-bit unsigned integer")
    if tolerance <= 0:
        raise PlanError("tolerance must be positive")
    if jobs < 1:
        raise PlanError("jobs must be at least 1")
    if reference not in ("exact", "modes"):
        raise PlanError(f"unknown reference {reference!r}")
    return ExperimentPlan(
        scenario=scenario, n_values=tuple(n_values), p=p, q=q, lam=lam,
        horizon_multiplier=mult, replications=reps, master_seed=seed,
        csv=values.get("csv"), svg=values.get("svg"), tolerance=tolerance,
        jobs=jobs, reference=reference,
    )


def replication_seed(master_seed: int, n: int, replication: int) -> int:
    """Independent 64-bit seed for one (n, replication) cell of a sweep."""
    seq = np.random.SeedSequence(master_seed, spawn_key=(n, replication))
    return int(seq.generate_state(1, dtype=np.uint64)[0])


def run_replications(plan: ExperimentPlan, scenario: Optional[str] = None) -> dict:
    """Simulate every (n, replication) cell; returns reports keyed by that pair.

    Cells run on a thread pool of ``plan.jobs`` workers. Keying by cell keeps
    the reduction independent of completion order.
    """
    scenario = scenario or plan.scenario
    cells = [(n, r) for n in plan.n_values for r in range(plan.replications)]

    def one(cell):
        n, r = cell
        config = config_for(
            scenario, n, plan.lam, plan.p, plan.q,
            horizon=plan.horizon(n), seed=replication_seed(plan.master_seed, n, r),
        )
        return cell, simulate(config)

    if plan.jobs == 1:
        return dict(map(one, cells))
    with ThreadPoolExecutor(max_workers=plan.jobs) as pool:
        return dict(pool.map(one, cells))


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _role_values(report: SimReport) -> dict:
    return {"v1": report.v1_hat, "vn": report.vn_hat, "vA": report.vA_hat}


def mean_stderr(values: list) -> tuple:
    if any(v is None for v in values) or not values:
        return None, None
    arr = np.asarray(values, dtype=float)
    mean = float(math.fsum(values) / len(values))
    if len(values) < 2:
        return mean, None
    return mean, float(np.std(arr, ddof=1) / math.sqrt(len(values)))


def aggregate(reports: dict, n: int, replications: int) -> dict:
    """Mean and standard error of each role across the replications at ``n``."""
    cell = [reports[(n, r)] for r in range(replications)]
    out = {}
    for role in ROLES:
        out[role] = mean_stderr([_role_values(rep)[role] for rep in cell])
    out["events"] = sum(rep.events for rep in cell)
    return out


def simulation_rows(plan: ExperimentPlan, reports: dict, scenario: Optional[str] = None) -> list:
    scenario = scenario or plan.scenario
    capture = scenario.startswith("node_capture")
    p = plan.p if capture else None
    q = plan.q if capture else None
    rows = []
    for n in plan.n_values:
        for r in range(plan.replications):
            rep = reports[(n, r)]
            rows.append([
                scenario, n, plan.lam, p, q, rep.config.seed, r, float(rep.config.horizon),
                rep.v1_hat, rep.vn_hat, rep.vA_hat, rep.events, None, None, None,
            ])
        agg = aggregate(reports, n, plan.replications)
        rows.append([
            scenario, n, plan.lam, p, q, plan.master_seed, AGGREGATE, float(plan.horizon(n)),
            agg["v1"][0], agg["vn"][0], agg["vA"][0], agg["events"],
            agg["v1"][1], agg["vn"][1], agg["vA"][1],
        ])
    return [[_fmt(v) for v in row] for row in rows]


def exact_values(scenario: str, n: int, lam: float, p: float, q: float) -> dict:
    """Exact per-role ages plus the auxiliary solver columns."""
    out = dict.fromkeys(SOLVE_FIELDS[5:])
    if scenario == "baseline":
        out["v1"] = solve_baseline(n, lam).v1
    elif scenario == "mitm":
        sol = solve_mitm(n, lam)
        out.update(v1=sol.v1, vn=sol.v_n, vA=sol.v_A, vA_quarter=sol.v_A / 4)
        out.update(vSn_min=min(sol.v_Sn), vSn_max=max(sol.v_Sn))
    else:
        sol = solve_node_capture(n, lam, p, q)
        asym = asymptotics(n, lam, p, q)
        out.update(v1=sol.v1, vn=sol.v_n, v1_p1=asym["v1_p1"], v1_p0=asym["v1_p0"])
        out.update(bracket_lower=asym["lower"], bracket_upper=asym["upper"])
    return out


def solve_rows(scenario: str, n_values: Iterable[int], lam: float, p: float, q: float) -> list:
    if scenario == "node_capture_thinned":
        scenario = "node_capture"
    capture = scenario == "node_capture"
    rows = []
    for n in n_values:
        vals = exact_values(scenario, n, lam, p, q)
        row = [scenario, n, lam, p if capture else None, q if capture else None]
        row += [vals[key] for key in SOLVE_FIELDS[5:]]
        rows.append([_fmt(v) for v in row])
    return rows

