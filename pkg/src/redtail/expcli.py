"""Experiment orchestration: TOML configs, seeded runs, CSV/JSON reports, CLI.

A config file declares an experiment: scenario tables plus run-level knobs
(jobs, seed, replications, grid, fit window).  `run_experiment` simulates
every scenario, merges replication counters in a fixed order, fits tail
slopes, evaluates predictions and bound curves, and writes one response CCDF
CSV (plus a waiting CCDF CSV for FCFS scenarios) per scenario and one summary
JSON per run.  Identical spec+seed gives byte-identical outputs at any
worker count: replication substreams are assigned by index, never by
scheduling order.

The four shipped presets (`redtail figure 1..4`) are ordinary config files
under redtail/presets/, each a three-scenario sweep over fork width.
"""

from __future__ import annotations

import argparse
import importlib.resources
import json
import math
import re
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # py3.10
    import tomli as tomllib

from . import boundsys
from . import heavytail as ht
from .asymptotics import (
    ScenarioConfig,
    TailPrediction,
    coc_fcfs_bound_curves,
    cos_fcfs_bound_curves,
    lcfs_busy_period_asymptote,
    tail_index_prediction,
)
from .engine import RunSummary, default_warmup, run_coc_fcfs, run_coc_lcfs_pr, run_cos_lcfs_pr
from .errors import ConfigurationError, DomainError, EstimationError
from .recursion import run_cos_fcfs
from .tailstats import FIT_MIN_COUNT, FIT_WINDOW, CcdfTable, SlopeFit, TailCounter, default_grid, fit_tail_slope

DEFAULT_N_JOBS = 10_000_000
DEFAULT_TOLERANCE = 0.1
VERIFY_JOB_CAP = 200_000
FIGURE_NUMBERS = (1, 2, 3, 4)

_DRIVERS = {
    ("cos", "fcfs"): run_cos_fcfs,
    ("cos", "lcfs_pr"): run_cos_lcfs_pr,
    ("coc", "fcfs"): run_coc_fcfs,
    ("coc", "lcfs_pr"): run_coc_lcfs_pr,
}

_LABEL_RE = re.compile(r"^[A-Za-z0-9_.-]+$")


@dataclass(frozen=True)
class ScenarioPlan:
    """A scenario plus its per-scenario reporting knobs."""

    cfg: ScenarioConfig
    fit_window: tuple[float, float]
    min_count: int
    tolerance: float


@dataclass(frozen=True)
class ExperimentSpec:
    """Everything that determines an experiment's outputs, bit for bit."""

    name: str
    plans: tuple[ScenarioPlan, ...]
    n_jobs: int
    seed: int
    replications: int
    grid: np.ndarray
    warmup: int | None = None
    out_dir: str | None = None
    workers: int = 1


# ---------------------------------------------------------------------------
# Config parsing.
# ---------------------------------------------------------------------------

_TOP_KEYS = {"name", "n_jobs", "seed", "replications", "warmup", "out", "workers", "grid", "fit", "scenario"}
_GRID_KEYS = {"lo", "hi", "points"}
_FIT_KEYS = {"window", "min_count", "tolerance"}
_SCENARIO_KEYS = {
    "label", "servers", "fork", "join", "variant", "discipline", "dependence",
    "job_size", "arrival", "load", "delta", "fit_window", "min_count", "tolerance",
}


def _window(value, where: str, errors: list[str]) -> tuple[float, float] | None:
    if not (isinstance(value, list) and len(value) == 2):
        errors.append(f"{where}: window must be a [lo, hi] pair")
        return None
    lo, hi = float(value[0]), float(value[1])
    if not (0 < lo < hi):
        errors.append(f"{where}: window needs 0 < lo < hi, got [{lo}, {hi}]")
        return None
    return lo, hi


def _parse_scenario(idx: int, tab: dict, defaults: dict, errors: list[str]) -> ScenarioPlan | None:
    label = str(tab.get("label", f"s{idx + 1}"))
    where = f"scenario {idx + 1} ({label})"
    if not isinstance(tab, dict):
        errors.append(f"{where}: expected a table")
        return None
    for key in set(tab) - _SCENARIO_KEYS:
        errors.append(f"{where}: unknown key {key!r}")
    if not _LABEL_RE.match(label):
        errors.append(f"{where}: label must match [A-Za-z0-9_.-]+ (used in file names)")
        return None
    missing = [k for k in ("servers", "fork", "join", "variant", "discipline", "dependence", "job_size") if k not in tab]
    if missing:
        errors.append(f"{where}: missing keys {missing}")
        return None
    try:
        job_size = ht.parse_distribution(str(tab["job_size"]))
    except (ConfigurationError, ValueError) as exc:
        errors.append(f"{where}: job_size: {exc}")
        return None

    has_arrival, has_load = "arrival" in tab, "load" in tab
    if has_arrival == has_load:
        errors.append(f"{where}: give exactly one of 'arrival' (a law) or 'load' (exponential arrivals implied)")
        return None
    if has_arrival:
        try:
            arrival = ht.parse_distribution(str(tab["arrival"]))
        except (ConfigurationError, ValueError) as exc:
            errors.append(f"{where}: arrival: {exc}")
            return None
    else:
        mean_size = ht.mean(job_size)
        if not math.isfinite(mean_size):
            errors.append(f"{where}: 'load' needs a finite replica-size mean; give 'arrival' explicitly")
            return None
        arrival = ht.exponential(float(tab["load"]) / mean_size)

    try:
        cfg = ScenarioConfig(
            n_servers=int(tab["servers"]),
            n_fork=int(tab["fork"]),
            n_join=int(tab["join"]),
            variant=str(tab["variant"]),
            discipline=str(tab["discipline"]),
            dependence=str(tab["dependence"]),
            arrival=arrival,
            job_size=job_size,
            delta=float(tab.get("delta", 0.05)),
            label=label,
        )
    except ConfigurationError as exc:
        errors.append(f"{where}: {exc}")
        return None

    window = defaults["window"]
    if "fit_window" in tab:
        window = _window(tab["fit_window"], where, errors)
        if window is None:
            return None
    return ScenarioPlan(
        cfg,
        fit_window=window,
        min_count=int(tab.get("min_count", defaults["min_count"])),
        tolerance=float(tab.get("tolerance", defaults["tolerance"])),
    )


def spec_from_dict(data: dict, default_name: str) -> ExperimentSpec:
    """Build and validate an ExperimentSpec; raises one ConfigurationError
    itemizing every problem found."""
    errors: list[str] = []
    for key in set(data) - _TOP_KEYS:
        errors.append(f"unknown top-level key {key!r}")

    grid_tab = data.get("grid", {})
    for key in set(grid_tab) - _GRID_KEYS:
        errors.append(f"grid: unknown key {key!r}")
    try:
        grid = default_grid(
            float(grid_tab.get("lo", 1.0)), float(grid_tab.get("hi", 2.0e6)), int(grid_tab.get("points", 200))
        )
    except ConfigurationError as exc:
        errors.append(f"grid: {exc}")
        grid = default_grid()

    fit_tab = data.get("fit", {})
    for key in set(fit_tab) - _FIT_KEYS:
        errors.append(f"fit: unknown key {key!r}")
    default_window = FIT_WINDOW
    if "window" in fit_tab:
        default_window = _window(fit_tab["window"], "fit", errors) or FIT_WINDOW
    defaults = {
        "window": default_window,
        "min_count": int(fit_tab.get("min_count", FIT_MIN_COUNT)),
        "tolerance": float(fit_tab.get("tolerance", DEFAULT_TOLERANCE)),
    }

    raw_scenarios = data.get("scenario", [])
    if not isinstance(raw_scenarios, list):
        errors.append("scenario must be an array of tables ([[scenario]])")
        raw_scenarios = []
    if not raw_scenarios:
        errors.append("no [[scenario]] tables: an experiment needs at least one scenario")
    plans = [p for i, tab in enumerate(raw_scenarios) if (p := _parse_scenario(i, tab, defaults, errors))]
    labels = [p.cfg.label for p in plans]
    for dup in sorted({x for x in labels if labels.count(x) > 1}):
        errors.append(f"duplicate scenario label {dup!r}")

    n_jobs = int(data.get("n_jobs", DEFAULT_N_JOBS))
    replications = int(data.get("replications", 1))
    workers = int(data.get("workers", 1))
    if n_jobs <= 0:
        errors.append(f"n_jobs must be positive, got {n_jobs}")
    if replications < 1:
        errors.append(f"replications must be >= 1, got {replications}")
    elif n_jobs > 0 and n_jobs < replications:
        errors.append(f"n_jobs {n_jobs} smaller than replications {replications}")
    if workers < 1:
        errors.append(f"workers must be >= 1, got {workers}")
    warmup = data.get("warmup")
    if warmup is not None and int(warmup) < 0:
        errors.append(f"warmup must be >= 0, got {warmup}")

    if errors:
        raise ConfigurationError("invalid experiment spec:\n  " + "\n  ".join(errors))
    return ExperimentSpec(
        name=str(data.get("name", default_name)),
        plans=tuple(plans),
        n_jobs=n_jobs,
        seed=int(data.get("seed", 0)),
        replications=replications,
        grid=grid,
        warmup=None if warmup is None else int(warmup),
        out_dir=data.get("out"),
        workers=workers,
    )


def load_spec(path: str | Path) -> ExperimentSpec:
    path = Path(path)
    data = tomllib.loads(path.read_text())
    return spec_from_dict(data, default_name=path.stem)


def load_preset(number: int) -> ExperimentSpec:
    if number not in FIGURE_NUMBERS:
        raise ConfigurationError(f"no preset figure{number}; choose from {FIGURE_NUMBERS}")
    text = importlib.resources.files("redtail").joinpath(f"presets/figure{number}.toml").read_text()
    return spec_from_dict(tomllib.loads(text), default_name=f"figure{number}")


# ---------------------------------------------------------------------------
# Running.
# ---------------------------------------------------------------------------


@dataclass
class ScenarioResult:
    plan: ScenarioPlan
    wait_counter: TailCounter
    resp_counter: TailCounter
    rep_summaries: list[RunSummary]
    slope: SlopeFit | None
    slope_error: str
    prediction: TailPrediction | None
    prediction_error: str

    @property
    def within_tolerance(self) -> bool | None:
        if self.slope is None or self.prediction is None:
            return None
        return abs(self.slope.slope - self.prediction.exponent) <= self.plan.tolerance


@dataclass
class ExperimentResult:
    spec: ExperimentSpec
    scenarios: list[ScenarioResult]
    out_dir: Path
    summary_path: Path
    summary: dict


def _replication_sizes(n_jobs: int, replications: int) -> list[int]:
    base, extra = divmod(n_jobs, replications)
    return [base + 1] * extra + [base] * (replications - extra)


def _auto_warmup(n_jobs: int) -> int:
    # engine default, capped so short diagnostic runs keep 90% of their jobs
    return min(default_warmup(n_jobs), n_jobs // 10)


def _run_replication(
    cfg: ScenarioConfig, n_jobs: int, warmup: int | None, grid: np.ndarray, child: np.random.SeedSequence
) -> tuple[TailCounter, TailCounter, RunSummary]:
    sinks = (TailCounter(grid), TailCounter(grid))
    driver = _DRIVERS[(cfg.variant, cfg.discipline)]
    w = _auto_warmup(n_jobs) if warmup is None else min(warmup, n_jobs - 1)
    summary = driver(cfg, n_jobs, sinks, child, warmup=w)
    return sinks[0], sinks[1], summary


def run_experiment(spec: ExperimentSpec, out_dir: str | Path | None = None, echo=None) -> ExperimentResult:
    """Simulate every scenario, write CSVs and the summary JSON, return the bundle.

    `echo` is an optional callable for progress lines (the CLI passes print).
    """
    say = echo or (lambda _msg: None)
    out = Path(out_dir or spec.out_dir or Path("results") / spec.name)
    out.mkdir(parents=True, exist_ok=True)
    root = np.random.SeedSequence(spec.seed)
    children = root.spawn(len(spec.plans) * spec.replications)
    sizes = _replication_sizes(spec.n_jobs, spec.replications)

    tasks = [
        (plan.cfg, sizes[r], spec.warmup, spec.grid, children[s * spec.replications + r])
        for s, plan in enumerate(spec.plans)
        for r in range(spec.replications)
    ]
    if spec.workers > 1:
        with ProcessPoolExecutor(max_workers=spec.workers) as pool:
            futures = [pool.submit(_run_replication, *t) for t in tasks]
            outcomes = [f.result() for f in futures]  # index order, not completion order
    else:
        outcomes = []
        for s, plan in enumerate(spec.plans):
            say(f"running {plan.cfg.label}: {plan.cfg.describe()}")
            for r in range(spec.replications):
                outcomes.append(_run_replication(*tasks[s * spec.replications + r]))

    results: list[ScenarioResult] = []
    for s, plan in enumerate(spec.plans):
        chunk = outcomes[s * spec.replications : (s + 1) * spec.replications]
        wait_counter, resp_counter = chunk[0][0], chunk[0][1]
        for more_wait, more_resp, _ in chunk[1:]:
            wait_counter = wait_counter.merge(more_wait)
            resp_counter = resp_counter.merge(more_resp)
        slope, slope_error = None, ""
        try:
            slope = fit_tail_slope(resp_counter, plan.fit_window, plan.min_count)
        except (EstimationError, ConfigurationError) as exc:
            slope_error = str(exc)
        prediction, prediction_error = None, ""
        try:
            prediction = tail_index_prediction(plan.cfg)
        except DomainError as exc:
            prediction_error = str(exc)
        res = ScenarioResult(
            plan, wait_counter, resp_counter, [c[2] for c in chunk], slope, slope_error, prediction, prediction_error
        )
        results.append(res)
        _write_scenario_csvs(out, res)
        say(f"  {scenario_line(res)}")

    summary = _summary_dict(spec, results)
    summary_path = out / "summary.json"
    summary_path.write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    return ExperimentResult(spec, results, out, summary_path, summary)


# ---------------------------------------------------------------------------
# Reporting.
# ---------------------------------------------------------------------------


def _anchored_power_line(table: CcdfTable, window: tuple[float, float], min_count: int, exponent: float) -> np.ndarray | None:
    """Slope-only reference curve p0 (x/x0)^exponent anchored on the empirical
    ccdf at the first trustworthy grid point inside the fit window."""
    eligible = (table.x >= window[0]) & (table.x <= window[1]) & (table.counts >= min_count)
    if not eligible.any():
        return None
    i0 = int(np.argmax(eligible))
    return table.p[i0] * (table.x / table.x[i0]) ** exponent


def _bound_columns(cfg: ScenarioConfig, grid: np.ndarray, which: str) -> dict[str, np.ndarray]:
    """bound_lower/bound_upper columns for the given CSV ('waiting'/'response')."""
    if which == "waiting" and cfg.discipline == "fcfs":
        curves = cos_fcfs_bound_curves(cfg, grid) if cfg.variant == "cos" else coc_fcfs_bound_curves(cfg, grid)
    elif which == "response" and cfg.variant == "coc" and cfg.discipline == "lcfs_pr":
        try:
            curves = lcfs_busy_period_asymptote(cfg, grid)
        except DomainError:  # non-exponential arrivals: busy-period factor unknown
            return {}
    else:
        return {}
    lowers = [c.y for c in curves if c.kind == "lower"]
    uppers = [c.y for c in curves if c.kind == "upper"]
    cols: dict[str, np.ndarray] = {}
    if lowers:
        cols["bound_lower"] = np.fmax.reduce(lowers)  # fmax: invalid curves are NaN, not binding
    if uppers:
        cols["bound_upper"] = np.fmin.reduce(uppers)
    return cols


def _write_csv(path: Path, columns: dict[str, np.ndarray]) -> None:
    names = list(columns)
    rows = zip(*(columns[c] for c in names))
    with path.open("w") as fh:
        fh.write(",".join(names) + "\n")
        for row in rows:
            fh.write(",".join(repr(float(v)) for v in row) + "\n")


def _write_scenario_csvs(out: Path, res: ScenarioResult) -> dict[str, str]:
    cfg, grid = res.plan.cfg, res.resp_counter.grid
    files: dict[str, str] = {}

    table = res.resp_counter.ccdf()
    cols = {"x": table.x, "ccdf": table.p, "stderr": table.stderr}
    cols.update(_bound_columns(cfg, grid, "response"))
    if res.prediction is not None:
        line = _anchored_power_line(table, res.plan.fit_window, res.plan.min_count, res.prediction.exponent)
        if line is not None:
            cols["asymptote"] = line
    name = f"{cfg.label}_response.csv"
    _write_csv(out / name, cols)
    files["response"] = name

    if cfg.discipline == "fcfs":
        wtable = res.wait_counter.ccdf()
        wcols = {"x": wtable.x, "ccdf": wtable.p, "stderr": wtable.stderr}
        wcols.update(_bound_columns(cfg, grid, "waiting"))
        wname = f"{cfg.label}_waiting.csv"
        _write_csv(out / wname, wcols)
        files["waiting"] = wname
    return files


def _num(x) -> float | str | None:
    """JSON-safe number: plain float when finite, repr string otherwise."""
    if x is None:
        return None
    x = float(x)
    return x if math.isfinite(x) else repr(x)


def _summary_dict(spec: ExperimentSpec, results: list[ScenarioResult]) -> dict:
    scenarios = []
    for res in results:
        cfg = res.plan.cfg
        n_recorded = sum(s.n_recorded for s in res.rep_summaries)
        mean_response = sum(s.mean_response * s.n_recorded for s in res.rep_summaries) / n_recorded
        rec = {
            "label": cfg.label,
            "config": cfg.describe(),
            "arrival": str(cfg.arrival),
            "job_size": str(cfg.job_size),
            "dependence": cfg.dependence,
            "load": _num(cfg.load),
            "k_floor": cfg.k_floor,
            "d_cap": cfg.d_cap,
            "thinning_factor": cfg.thinning_factor,
            "rho_lower": _num(cfg.rho_lower),
            "rho_upper": _num(cfg.rho_upper),
            "fit_window": list(res.plan.fit_window),
            "tolerance": res.plan.tolerance,
            "slope": None if res.slope is None else {
                "value": res.slope.slope,
                "stderr": res.slope.stderr,
                "n_points": res.slope.n_points,
            },
            "slope_error": res.slope_error or None,
            "prediction": None if res.prediction is None else {
                "exponent": res.prediction.exponent,
                "exact_index_known": res.prediction.exact_index_known,
                "notes": list(res.prediction.notes),
            },
            "prediction_error": res.prediction_error or None,
            "within_tolerance": res.within_tolerance,
            "n_recorded": n_recorded,
            "mean_response": _num(mean_response),
            "measured_load": _num(res.rep_summaries[0].measured_load),
            "files": {
                "response": f"{cfg.label}_response.csv",
                **({"waiting": f"{cfg.label}_waiting.csv"} if cfg.discipline == "fcfs" else {}),
            },
        }
        scenarios.append(rec)
    return {
        "name": spec.name,
        "seed": spec.seed,
        "n_jobs": spec.n_jobs,
        "replications": spec.replications,
        "warmup": spec.warmup,
        "grid": {"lo": float(spec.grid[0]), "hi": float(spec.grid[-1]), "points": int(len(spec.grid))},
        "scenarios": scenarios,
    }


def scenario_line(res: ScenarioResult) -> str:
    cfg = res.plan.cfg
    if res.slope is None:
        fit = f"slope unavailable ({res.slope_error})"
    else:
        fit = f"slope = {res.slope.slope:+.4f} +/- {res.slope.stderr:.4f} ({res.slope.n_points} pts)"
    if res.prediction is None:
        pred = f"prediction refused ({res.prediction_error})"
    else:
        pred = f"predicted = {res.prediction.exponent:+.4f}"
    verdict = {True: "OK", False: "MISS", None: "n/a"}[res.within_tolerance]
    return f"{cfg.label}: {fit}, {pred}, within {res.plan.tolerance}: {verdict}"


# ---------------------------------------------------------------------------
# predict / verify.
# ---------------------------------------------------------------------------


def predict(spec: ExperimentSpec) -> list[dict]:
    """Predicted response-tail exponents per scenario; refusals become rows."""
    rows = []
    for plan in spec.plans:
        cfg = plan.cfg
        row = {"label": cfg.label, "config": cfg.describe()}
        try:
            pred = tail_index_prediction(cfg)
            row.update(
                exponent=pred.exponent,
                exact_index_known=pred.exact_index_known,
                notes=list(pred.notes),
                refused=None,
            )
        except DomainError as exc:
            row.update(exponent=None, exact_index_known=None, notes=[], refused=str(exc))
        rows.append(row)
    return rows


def format_prediction_table(rows: list[dict]) -> str:
    width = max([len(r["label"]) for r in rows] + [8])
    lines = [f"{'scenario':<{width}}  exponent  exact  notes"]
    for r in rows:
        if r["refused"]:
            lines.append(f"{r['label']:<{width}}  refused: {r['refused']}")
            continue
        exact = "yes" if r["exact_index_known"] else "ORV"
        notes = "; ".join(r["notes"]) if r["notes"] else "-"
        lines.append(f"{r['label']:<{width}}  {r['exponent']:+8.4f}  {exact:<5}  {notes}")
    return "\n".join(lines)


def verify(spec: ExperimentSpec, n_jobs: int | None = None, seed: int | None = None) -> list[tuple[str, object]]:
    """Dominance reports per scenario: (label, DominanceReport) or (label, skip reason)."""
    n = n_jobs if n_jobs is not None else min(spec.n_jobs, VERIFY_JOB_CAP)
    root = np.random.SeedSequence(spec.seed if seed is None else seed)
    children = root.spawn(len(spec.plans))
    out: list[tuple[str, object]] = []
    for plan, child in zip(spec.plans, children):
        cfg = plan.cfg
        if cfg.variant == "cos" and cfg.discipline != "fcfs":
            out.append((cfg.label, "skipped: no dominance construction for cos lcfs_pr scenarios"))
        else:
            out.append((cfg.label, boundsys.verify_dominance(cfg, n, child)))
    return out


# ---------------------------------------------------------------------------
# CLI.
# ---------------------------------------------------------------------------


def _add_run_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--jobs", type=int, help="override total jobs per scenario")
    p.add_argument("--seed", type=int, help="override the spec seed")
    p.add_argument("--out", help="output directory (default from the config, else results/<name>)")
    p.add_argument("--workers", type=int, help="process-parallel replications (default from the config)")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="redtail", description="Heavy-tail experiments for redundancy scheduling.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_sim = sub.add_parser("simulate", help="run the scenarios in a config file")
    p_sim.add_argument("--config", required=True, help="experiment TOML")
    _add_run_flags(p_sim)

    p_fig = sub.add_parser("figure", help="reproduce a shipped figure preset")
    p_fig.add_argument("number", type=int, choices=FIGURE_NUMBERS)
    _add_run_flags(p_fig)

    p_pred = sub.add_parser("predict", help="print predicted tail exponents for a config")
    p_pred.add_argument("--config", required=True)

    p_ver = sub.add_parser("verify", help="run dominance checks for a config")
    p_ver.add_argument("--config", required=True)
    p_ver.add_argument("--jobs", type=int, help=f"jobs per check (default min(spec n_jobs, {VERIFY_JOB_CAP}))")
    p_ver.add_argument("--seed", type=int, help="override the spec seed")
    return parser


def _apply_overrides(spec: ExperimentSpec, args: argparse.Namespace) -> ExperimentSpec:
    updates = {}
    if args.jobs is not None:
        if args.jobs < spec.replications:
            raise ConfigurationError(f"--jobs {args.jobs} smaller than replications {spec.replications}")
        updates["n_jobs"] = args.jobs
    if args.seed is not None:
        updates["seed"] = args.seed
    if args.workers is not None:
        if args.workers < 1:
            raise ConfigurationError(f"--workers must be >= 1, got {args.workers}")
        updates["workers"] = args.workers
    return replace(spec, **updates) if updates else spec


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command in ("simulate", "figure"):
            spec = load_spec(args.config) if args.command == "simulate" else load_preset(args.number)
            spec = _apply_overrides(spec, args)
            result = run_experiment(spec, out_dir=args.out, echo=print)
            print(f"summary: {result.summary_path}")
            return 0
        if args.command == "predict":
            print(format_prediction_table(predict(load_spec(args.config))))
            return 0
        # verify
        spec = load_spec(args.config)
        reports = verify(spec, n_jobs=args.jobs, seed=args.seed)
        failed = False
        for label, rep in reports:
            if isinstance(rep, str):
                print(f"{label}: {rep}")
            else:
                print(rep.format())
                failed |= not rep.passed
            print()
        print("verdict:", "FAIL" if failed else "PASS")
        return 1 if failed else 0
    except (ConfigurationError, DomainError, EstimationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
