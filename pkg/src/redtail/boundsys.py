"""Coupled single-server bound systems and dominance verification.

The fork/join systems are sandwiched between tractable single-server queues:
an upper system fed every arrival with the joined size, a lower system fed a
Bernoulli-thinned subsequence, and (for identical replicas) a sharper thinned
upper system with the raw size.  This module realizes those systems on the
same input streams as the simulated system, so the comparisons hold path by
path, and packages the checks behind `verify_dominance`.

All single-server recursions here reuse the simulator kernels with the same
floating-point op order, so the degenerate configurations (full fork with
identical replicas, single sampling) match the engine bit for bit, not just
to tolerance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal

import numpy as np

from . import heavytail as ht
from . import kernels
from .asymptotics import ScenarioConfig
from .engine import DEFAULT_CAP_REPLICAS, draw_streams
from .errors import ConfigurationError, DomainError

PATHWISE_TOL = 1e-9


@dataclass
class CoupledStreams:
    """Shared input streams plus the extra randomness the bound systems need.

    `coins` is one uniform(0,1) draw per arrival; every thinning keeps job n
    when coins[n] < p, so thinned streams at nested probabilities are nested.
    `joined` is the n_join-th smallest replica size per job.  `fresh` seeds
    draws that exist only in an auxiliary system (the batch queues' fill-in
    sizes); it is reserved for `auxiliary_batch_dg1`.
    """

    gaps: np.ndarray
    sizes: np.ndarray
    servers: np.ndarray
    joined: np.ndarray
    coins: np.ndarray
    fresh: np.random.SeedSequence

    @property
    def n_jobs(self) -> int:
        return len(self.gaps)


def draw_coupled(cfg: ScenarioConfig, n_jobs: int, rng_stream: np.random.SeedSequence) -> CoupledStreams:
    """Draw the scenario's streams and attach coins/joined sizes.

    Built on the same substream layout as the run drivers, so a bound system
    and a simulation run handed the same SeedSequence see the same arrivals.
    """
    st = draw_streams(cfg, n_jobs, rng_stream)
    coin_ss, fresh_ss = st.aux.spawn(2)
    coins = np.random.default_rng(coin_ss).random(n_jobs)
    joined = np.sort(st.sizes, axis=1)[:, cfg.n_join - 1] if st.sizes.shape[1] > 1 else st.sizes[:, 0].copy()
    return CoupledStreams(st.gaps, st.sizes, st.servers, joined, coins, fresh_ss)


@dataclass(frozen=True)
class BoundRun:
    """One bound system's outcome on a coupled stream.

    `kept` holds the arrival indices the system served (all of them for the
    unthinned upper system).  `stable` flags whether the system's load is
    below 1; an unstable bound system still runs, its output just bounds
    nothing useful."""

    name: str
    kept: np.ndarray
    waits: np.ndarray
    responses: np.ndarray
    load: float
    stable: bool


def _single_lcfs(gaps: np.ndarray, sizes: np.ndarray) -> np.ndarray:
    resp = np.empty(len(gaps))
    status, _ = kernels.lcfs_kernel(
        gaps, sizes[:, None], np.zeros((len(gaps), 1), dtype=np.int8), 1, 1, False, DEFAULT_CAP_REPLICAS, resp
    )
    if status != kernels.COMPLETED:  # pragma: no cover - single queue, finite sizes
        raise RuntimeError("single-server LCFS run tripped the replica cap")
    return resp


def _thinned_run(cfg: ScenarioConfig, cs: CoupledStreams, name: str, keep: np.ndarray, sizes: np.ndarray, load: float) -> BoundRun:
    """Single-server queue over the kept subsequence of the arrival stream.

    FCFS runs the full-length recursion with zero-size phantoms for dropped
    jobs: the workload then evolves with exactly the same subtraction sequence
    as any coupled per-server recursion, so subsequence equalities hold in
    floating point, not just in value.
    """
    keep = np.asarray(keep)
    if keep.dtype == np.bool_:
        mask, kept = keep, np.flatnonzero(keep)
    else:
        kept = keep
        mask = np.zeros(cs.n_jobs, dtype=bool)
        mask[kept] = True
    if cfg.discipline == "fcfs":
        masked = sizes if kept.size == cs.n_jobs else np.where(mask, sizes, 0.0)
        all_waits = np.empty(cs.n_jobs)
        kernels.lindley_kernel(cs.gaps, masked, all_waits)
        waits = all_waits[kept]
        responses = waits + sizes[kept]
    else:
        arrivals = np.cumsum(cs.gaps)
        kept_gaps = np.diff(arrivals[kept], prepend=0.0) if kept.size else np.empty(0)
        responses = _single_lcfs(kept_gaps, sizes[kept])
        waits = np.zeros_like(responses)
    return BoundRun(name, kept, waits, responses, load, stable=math.isfinite(load) and load < 1.0)


def upper_gig1(cfg: ScenarioConfig, cs: CoupledStreams) -> BoundRun:
    """Single server fed every arrival with the joined size.

    Serving the n_join-th order statistic of each replica vector on one
    server can only finish later than the fork/join system, whichever
    cancellation rule is in force, so this run's waits/responses dominate the
    engine's path by path."""
    every = np.ones(cs.n_jobs, dtype=bool)
    return _thinned_run(cfg, cs, "upper_gig1", every, cs.joined, cfg.rho_upper)


def lower_gig1(cfg: ScenarioConfig, cs: CoupledStreams, keep: np.ndarray | None = None) -> BoundRun:
    """1-in-K thinned single server fed the joined size.

    A kept job is one whose sampled servers and replica finishing order land
    on one fixed pattern out of the K = C(N,nF) nF!/(nF-nJ+1)! equally likely
    ones; such jobs behave like customers of an isolated single-server queue,
    so their waits sit below the full system's joined waits in distribution.
    Pass `keep` (bool mask or index array) to override the coin thinning -
    e.g. the single-sampling case where keep = "sampled server 0" makes the
    correspondence exact per path.
    """
    if keep is None:
        keep = cs.coins < 1.0 / cfg.thinning_factor
    return _thinned_run(cfg, cs, "lower_gig1", np.asarray(keep), cs.joined, cfg.rho_lower)


def identical_remark_upper(cfg: ScenarioConfig, cs: CoupledStreams) -> BoundRun:
    """Sharper upper system for identical replicas: serve every replica fully.

    With identical sizes the joined size is the raw size, and a system that
    never cancels splits into per-server queues each fed the jobs that
    sampled it: a Bernoulli(nF/N) thinning.  Load nF/N * E[B]/E[A], usually
    far below the every-arrival upper system's."""
    if cfg.dependence != "identical":
        raise DomainError("the full-service upper system needs identical replicas")
    p = cfg.n_fork / cfg.n_servers
    return _thinned_run(cfg, cs, "identical_remark_upper", cs.coins < p, cs.sizes[:, 0], p * cfg.load)


# ---------------------------------------------------------------------------
# Auxiliary batch queues (deterministic-arrival construction).
# ---------------------------------------------------------------------------


def admissible_h_interval(cfg: ScenarioConfig) -> tuple[float, float]:
    """Open interval of batch-compression slacks h keeping the batch queues
    stable: ((k/(k+1))(a' - E[B]/(k+1)), a' - E[B]/(k+1)) with k = floor(load).
    """
    if not math.isfinite(cfg.load):
        raise DomainError("the batch construction needs a finite load")
    k = cfg.k_floor
    a_prime = cfg.mean_gap
    hi = a_prime - ht.mean(cfg.job_size) / (k + 1)
    return (k / (k + 1)) * hi, hi


@dataclass(frozen=True)
class AuxiliaryBatchRun:
    """N parallel deterministic-gap single-server queues, one job per queue
    per batch, coupled to a join-least run through `joined_server`:
    queue joined_server[n] receives the run's own joined size at batch n,
    the other queues receive fresh independent sizes."""

    waits: np.ndarray  # (n_jobs, n_servers)
    joined_server: np.ndarray
    joined_size: np.ndarray
    batch_gap: float
    h: float
    h_interval: tuple[float, float]


def auxiliary_batch_dg1(cfg: ScenarioConfig, cs: CoupledStreams, h: float) -> AuxiliaryBatchRun:
    """Batch-arrival comparison system for the sampled-FCFS model.

    Batches arrive every (k+1)(a' - h) with a' the deterministic interarrival
    time; each of the N queues gets one job per batch.  The coupling pins the
    size at the queue the real system joined; everything else is independent
    fill-in, drawn from the streams' reserved substream so a replay is
    byte-identical.
    """
    if cfg.variant != "cos" or cfg.discipline != "fcfs":
        raise DomainError("the batch construction applies to cos fcfs scenarios")
    if cfg.arrival.kind != "deterministic":
        raise DomainError("the batch construction is defined for deterministic interarrival times")
    lo, hi = admissible_h_interval(cfg)
    if not (lo < h < hi):
        raise ConfigurationError(f"h={h} outside the admissible interval ({lo}, {hi})")
    n = cs.n_jobs
    waits = np.empty(n)
    resp = np.empty(n)
    joined = np.empty(n)
    joined_srv = np.empty(n, dtype=np.int8)
    kernels.jsw_kernel(cs.gaps, cs.sizes, cs.servers, cfg.n_servers, waits, resp, joined, joined_srv)
    rng = np.random.default_rng(cs.fresh)
    fill = ht.sample_many(cfg.job_size, n * cfg.n_servers, rng).reshape(n, cfg.n_servers)
    fill[np.arange(n), joined_srv] = joined
    k = cfg.k_floor
    assert k is not None
    gap = (k + 1) * (cfg.mean_gap - h)
    u = np.empty((n, cfg.n_servers))
    kernels.batch_lindley_kernel(gap, fill, u)
    return AuxiliaryBatchRun(u, joined_srv, joined, gap, h, (lo, hi))


# ---------------------------------------------------------------------------
# Dominance verification.
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CheckResult:
    """One dominance check: `violations` out of `n_samples` comparisons,
    `worst_margin` the most adverse left-minus-right difference seen (a
    negative worst margin means the inequality held with room)."""

    name: str
    kind: Literal["pathwise", "distributional"]
    n_samples: int
    violations: int
    worst_margin: float
    passed: bool
    detail: str = ""

    def format(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        line = (
            f"[{status}] {self.name:<34} {self.kind:<14} n={self.n_samples:<9} "
            f"violations={self.violations}  worst_margin={self.worst_margin:.3e}"
        )
        return line + (f"  ({self.detail})" if self.detail else "")


@dataclass(frozen=True)
class DominanceReport:
    scenario: str
    n_jobs: int
    seed_entropy: tuple[int, ...]
    checks: tuple[CheckResult, ...]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def format(self) -> str:
        lines = [f"scenario: {self.scenario}", f"jobs: {self.n_jobs}   seed entropy: {list(self.seed_entropy)}"]
        lines += [c.format() for c in self.checks]
        lines.append(f"overall: {'PASS' if self.passed else 'FAIL'}")
        return "\n".join(lines)


def _pathwise(name: str, lhs: np.ndarray, rhs: np.ndarray, detail: str = "") -> CheckResult:
    margin = lhs - rhs
    worst = float(margin.max()) if margin.size else -math.inf
    viol = int((margin > PATHWISE_TOL).sum())
    return CheckResult(name, "pathwise", len(lhs), viol, worst, viol == 0, detail)


def _ccdf_below(name: str, low: np.ndarray, high: np.ndarray, n_points: int = 20) -> CheckResult:
    """One-sided two-sample comparison: P(low > t) <= P(high > t) within
    3 combined binomial standard errors, on a log grid of thresholds."""
    pos = high[high > 0]
    if low.size == 0 or pos.size < 10:
        return CheckResult(name, "distributional", 0, 0, -math.inf, True, "too few positive samples; trivially below")
    t_lo = max(float(np.quantile(pos, 0.5)), 1e-12)
    t_hi = max(float(np.quantile(pos, 0.999)), t_lo * (1 + 1e-9))
    grid = np.geomspace(t_lo, t_hi, n_points)
    p_low = (low[:, None] > grid).mean(axis=0)
    p_high = (high[:, None] > grid).mean(axis=0)
    se = np.sqrt(p_low * (1 - p_low) / low.size + p_high * (1 - p_high) / high.size)
    margin = p_low - p_high - 3.0 * se
    viol = int((margin > 0).sum())
    return CheckResult(
        name, "distributional", n_points, viol, float(margin.max()), viol == 0,
        f"{low.size} thinned vs {high.size} full samples",
    )


def gap_discrepancy_allowance(a_prime: float, gaps: np.ndarray) -> np.ndarray:
    """Pathwise slack M_n = (M_{n-1} + a' - a_n)^+ absorbing the gap mismatch
    between a run with gaps `a_n` and its constant-gap twin at a'.  Computed
    in closed form from the running minimum of the partial sums."""
    s = np.cumsum(a_prime - gaps)
    return s - np.minimum(np.minimum.accumulate(s), 0.0)


def _gap_coupling_check(cfg: ScenarioConfig, cs: CoupledStreams) -> CheckResult:
    """Waits under the scenario's arrivals vs the deterministic-gap twin.

    Both runs share sizes and sampled ranks; the twin replaces every gap by
    a' = E[A].  The discrepancy allowance M_n = (M_{n-1} + a' - a_n)^+ makes
    the comparison exact per path; with deterministic arrivals to begin with,
    M vanishes and the two runs coincide.
    """
    a_prime = cfg.mean_gap
    ranks = cs.servers.min(axis=1).astype(np.int64)
    sizes = cs.sizes[:, 0]
    w_real = np.empty(cs.n_jobs)
    w_det = np.empty(cs.n_jobs)
    kernels.ranked_jsw_kernel(cs.gaps, sizes, ranks, cfg.n_servers, w_real)
    kernels.ranked_jsw_kernel(np.full(cs.n_jobs, a_prime), sizes, ranks, cfg.n_servers, w_det)
    m = gap_discrepancy_allowance(a_prime, cs.gaps)
    return _pathwise("gap_coupling_det_twin", w_real, w_det + m, detail=f"a'={a_prime:.6g}")


def verify_dominance(cfg: ScenarioConfig, n_jobs: int, seed: int | np.random.SeedSequence) -> DominanceReport:
    """Run every dominance check the scenario admits on one coupled stream.

    Cancel-on-completion scenarios: per-job response below the every-arrival
    single-server system (pathwise), response above the joined size
    (pathwise), and for FCFS the thinned lower system's waits below the
    joined waits (distributional).  Sampled-FCFS (cancel-on-start) scenarios:
    the deterministic-twin gap coupling.  Report-only: nothing raises on a
    failed check.
    """
    if cfg.variant == "cos" and cfg.discipline != "fcfs":
        raise ConfigurationError("verify_dominance covers coc scenarios and cos fcfs")
    ss = np.random.SeedSequence(seed) if isinstance(seed, int) else seed
    cs = draw_coupled(cfg, n_jobs, ss)
    checks: list[CheckResult] = []

    if cfg.variant == "coc":
        up = upper_gig1(cfg, cs)
        if cfg.discipline == "fcfs":
            waits = np.empty(n_jobs)
            resp = np.empty(n_jobs)
            status, _ = kernels.coc_fcfs_kernel(
                cs.gaps, cs.sizes, cs.servers, cfg.n_servers, cfg.n_join, DEFAULT_CAP_REPLICAS, waits, resp
            )
        else:
            resp = np.empty(n_jobs)
            status, _ = kernels.lcfs_kernel(
                cs.gaps, cs.sizes, cs.servers, cfg.n_servers, cfg.n_join, True, DEFAULT_CAP_REPLICAS, resp
            )
            waits = None
        if status != kernels.COMPLETED:
            checks.append(CheckResult("simulation", "pathwise", 0, 1, math.inf, False, "replica cap hit; system looks unstable"))
            return DominanceReport(cfg.describe(), n_jobs, tuple(np.atleast_1d(ss.entropy).tolist()), tuple(checks))
        detail = "" if up.stable else f"upper system unstable (rho_U={up.load:.3g}); bound vacuous but still pathwise"
        checks.append(_pathwise("response_upper_gig1", resp, up.responses, detail))
        checks.append(_pathwise("response_above_joined_size", cs.joined, resp))
        if cfg.discipline == "fcfs":
            low = lower_gig1(cfg, cs)
            checks.append(_ccdf_below("waiting_lower_gig1", low.waits, waits))
    else:
        checks.append(_gap_coupling_check(cfg, cs))

    return DominanceReport(cfg.describe(), n_jobs, tuple(np.atleast_1d(ss.entropy).tolist()), tuple(checks))
