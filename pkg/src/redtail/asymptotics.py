"""Scenario configuration, tail-index predictions, analytic bound curves.

A scenario is a fork(nF)/join(nJ) system on N parallel unit-speed servers with
renewal arrivals, one of two cancellation rules (cancel-on-start "cos",
cancel-on-completion "coc"), FCFS or preemptive-resume LCFS service, and
identical or iid replica sizes.  This module holds the closed-form side:
predicted response-tail indices, the four waiting-tail bound curves for the
cos-FCFS system, the single-server bound prefactors for coc systems, and the
busy-period asymptote for LCFS-PR.

All curves drop vanishing correction terms: they are asymptotic shapes, valid
for large x, not finite-x bounds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Literal

import numpy as np

from . import heavytail as ht
from .errors import ConfigurationError, DomainError

Variant = Literal["cos", "coc"]
Discipline = Literal["fcfs", "lcfs_pr"]

MAX_SERVERS = 64  # simulator kernels index servers with small ints
DEFAULT_DELTA = 0.05


@dataclass(frozen=True)
class ScenarioConfig:
    """One simulated/predicted system.

    `arrival` is the interarrival law; `job_size` the replica-size law, with
    `dependence` saying whether one draw is copied to all replicas or each
    replica draws independently.  `delta` is the slack used by the asymptotic
    bound curves.  `label` names the scenario in summaries and CSV files.
    """

    n_servers: int
    n_fork: int
    n_join: int
    variant: Variant
    discipline: Discipline
    dependence: ht.ReplicaDependence
    arrival: ht.Distribution
    job_size: ht.Distribution
    delta: float = DEFAULT_DELTA
    label: str = ""

    def __post_init__(self) -> None:
        issues = self.validation_issues()
        if issues:
            raise ConfigurationError("; ".join(issues))

    def validation_issues(self) -> list[str]:
        out = []
        if not (1 <= self.n_servers <= MAX_SERVERS):
            out.append(f"n_servers must be in [1, {MAX_SERVERS}], got {self.n_servers}")
        if not (1 <= self.n_fork <= self.n_servers):
            out.append(f"n_fork must be in [1, n_servers], got {self.n_fork}")
        if not (1 <= self.n_join <= self.n_fork):
            out.append(f"n_join must be in [1, n_fork], got {self.n_join}")
        if self.variant not in ("cos", "coc"):
            out.append(f"variant must be cos or coc, got {self.variant!r}")
        if self.discipline not in ("fcfs", "lcfs_pr"):
            out.append(f"discipline must be fcfs or lcfs_pr, got {self.discipline!r}")
        if self.dependence not in ("identical", "iid"):
            out.append(f"dependence must be identical or iid, got {self.dependence!r}")
        if self.variant == "cos" and self.discipline == "fcfs" and self.n_join != 1:
            out.append("cos fcfs requires n_join == 1 (whole job served by one server)")
        if not (0.0 < self.delta < 1.0):
            out.append(f"delta must be in (0, 1), got {self.delta}")
        if not out:
            if self.mean_gap <= 0 or not math.isfinite(self.mean_gap):
                out.append(f"arrival law needs a positive finite mean, got {self.mean_gap}")
            elif self.variant == "cos":
                if not math.isfinite(self.load):
                    out.append("cos scenarios need a finite replica-size mean")
                elif self.discipline == "fcfs" and self.load >= self.n_servers:
                    out.append(f"unstable: load {self.load:.4g} >= n_servers {self.n_servers}")
                elif self.discipline == "lcfs_pr" and self.load * self.n_join >= self.n_servers:
                    out.append(f"unstable: load*n_join {self.load * self.n_join:.4g} >= n_servers {self.n_servers}")
        return out

    # -- derived quantities ------------------------------------------------

    @property
    def mean_gap(self) -> float:
        return ht.mean(self.arrival)

    @property
    def load(self) -> float:
        """System load E[B]/E[A] in units of one server; inf when the replica
        marginal has no mean."""
        return ht.mean(self.job_size) / self.mean_gap

    @property
    def k_floor(self) -> int | None:
        """floor(load); None when the load is infinite."""
        return int(math.floor(self.load)) if math.isfinite(self.load) else None

    @property
    def d_cap(self) -> int | None:
        """min(n_fork, n_servers - k_floor): how many of the sampled servers can
        still be blocked by long jobs without saturating the system."""
        k = self.k_floor
        return None if k is None else min(self.n_fork, self.n_servers - k)

    @property
    def joined_size_mean(self) -> float:
        return ht.joined_size_mean(self.job_size, self.dependence, self.n_fork, self.n_join)

    @property
    def thinning_factor(self) -> int:
        """K = C(N, nF) nF!/(nF-nJ+1)!: one in K jobs survives the lower-bound
        thinning (fixed server assignment and completion order)."""
        return thinning_factor(self.n_servers, self.n_fork, self.n_join)

    @property
    def rho_upper(self) -> float:
        """Load of the single-server upper-bound system: every job, size B_(nJ)."""
        return self.joined_size_mean / self.mean_gap

    @property
    def rho_lower(self) -> float:
        """Load of the thinned single-server lower-bound system."""
        return self.rho_upper / self.thinning_factor

    @property
    def bound_load_valid(self) -> bool:
        """Whether the coc single-server bound pair is stable (rho_U < 1)."""
        return math.isfinite(self.rho_upper) and self.rho_upper < 1.0

    def with_label(self, label: str) -> "ScenarioConfig":
        return replace(self, label=label)

    def describe(self) -> str:
        dep = "id" if self.dependence == "identical" else "iid"
        return (
            f"{self.variant}-{self.discipline} N={self.n_servers} fork={self.n_fork} "
            f"join={self.n_join} {dep} A={self.arrival} B={self.job_size}"
        )


def thinning_factor(n_servers: int, n_fork: int, n_join: int) -> int:
    """K = C(N, nF) * nF! / (nF - nJ + 1)!.

    One specific sampled server set times one specific ordering of which
    replicas would finish first: a 1/K thinning keeps jobs whose geometry is
    fully pinned, making them independent single-server customers.
    """
    if not (1 <= n_join <= n_fork <= n_servers):
        raise DomainError(f"need 1 <= n_join <= n_fork <= n_servers, got {(n_servers, n_fork, n_join)}")
    return math.comb(n_servers, n_fork) * math.factorial(n_fork) // math.factorial(n_fork - n_join + 1)


# ---------------------------------------------------------------------------
# Tail-index predictions for the response time.
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TailPrediction:
    """Predicted ccdf power of the response time: P(R > x) ~ x^exponent.

    `exact_index_known` is False where theory gives the index only up to the
    O-regular-variation class (coc identical-replica cases); the exponent is
    still the predicted decay power.  `notes` carry validity caveats.
    """

    exponent: float
    exact_index_known: bool = True
    notes: tuple[str, ...] = ()


def tail_index_prediction(cfg: ScenarioConfig) -> TailPrediction:
    """Predicted response-tail exponent for a Pareto(nu) replica-size scenario."""
    if cfg.job_size.kind != "pareto":
        raise DomainError("tail-index predictions need a pareto job-size law")
    nu = cfg.job_size.nu
    notes: list[str] = []

    if cfg.variant == "cos":
        if cfg.discipline == "fcfs":
            d_cap = cfg.d_cap
            if d_cap is None:
                raise DomainError("cos fcfs prediction needs a finite load")
            if nu <= 1.0:
                raise DomainError("cos fcfs prediction needs nu > 1 (finite replica mean)")
            if float(cfg.load).is_integer():
                notes.append("integer load: waiting-tail index has a slowly-varying correction at the boundary")
            # waiting decays like x^(-d_cap (nu-1)); response adds one replica size
            return TailPrediction(-min(d_cap * (nu - 1.0), nu), notes=tuple(notes))
        # preemptive LCFS: response tail follows one busy period, index -nu,
        # for any dependence (only started replicas matter)
        return TailPrediction(-nu, notes=tuple(notes))

    # coc: response sandwiched between single-server systems fed B_(nJ)
    if cfg.dependence == "identical":
        exact = False
        joined_nu = nu
    else:
        exact = False
        joined_nu = (cfg.n_fork + 1 - cfg.n_join) * nu
    if cfg.discipline == "fcfs":
        if joined_nu <= 1.0:
            raise DomainError("coc fcfs prediction needs a finite joined-size mean (nu (nF+1-nJ) > 1)")
        exponent = 1.0 - joined_nu
    else:
        exponent = -joined_nu
    if not cfg.bound_load_valid:
        notes.append("upper-bound system unstable (rho_U >= 1): prediction has no valid sandwich")
    return TailPrediction(exponent, exact_index_known=exact, notes=tuple(notes))


# ---------------------------------------------------------------------------
# Bound curves.
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BoundCurve:
    """An asymptotic curve y(x) over a grid: a lower/upper bound shape or a
    slope-only asymptote.  `valid` is False when the curve's regime condition
    fails for the scenario (y is then NaN).  `exponent` is the power of the
    curve's eventual decay, when it has a pure power tail."""

    name: str
    kind: Literal["lower", "upper", "asymptote"]
    x: np.ndarray
    y: np.ndarray
    valid: bool = True
    exponent: float | None = None
    note: str = "asymptotic shape; vanishing corrections dropped"


def _curve(name: str, kind: str, x: np.ndarray, y, valid: bool = True, exponent: float | None = None) -> BoundCurve:
    x = np.asarray(x, dtype=np.float64)
    yarr = np.full_like(x, math.nan) if not valid else np.asarray(y, dtype=np.float64)
    return BoundCurve(name, kind, x, yarr, valid, exponent)  # type: ignore[arg-type]


def cos_fcfs_curve_params(cfg: ScenarioConfig, delta: float | None = None) -> dict[str, dict]:
    """Prefactor/scale/power for the four cos-FCFS waiting-tail curves.

    Each curve has the shape  prefactor * residual_ccdf(scale * x) ** power.
    Regimes: `lower_sampled` needs nothing extra (all nF sampled servers busy
    with long jobs); `upper_low_load` needs load < N - nF; `lower_saturated`
    needs load > k (non-integer load); `upper_high_load` needs load > N - nF.
    """
    if cfg.variant != "cos" or cfg.discipline != "fcfs":
        raise DomainError("cos_fcfs curves apply to cos fcfs scenarios only")
    if not math.isfinite(cfg.load):
        raise DomainError("cos fcfs curves need a finite load")
    delta = cfg.delta if delta is None else delta
    if not (0.0 < delta < 1.0):
        raise DomainError(f"delta must be in (0,1), got {delta}")
    N, d, rho = cfg.n_servers, cfg.n_fork, cfg.load
    k = cfg.k_floor
    assert k is not None
    out = {
        "lower_sampled": {
            "valid": True,
            "prefactor": rho**d / (math.comb(N, d) * math.factorial(d)),
            "scale": 1.0 + delta,
            "power": d,
        },
        "upper_low_load": {
            "valid": rho < N - d,
            "prefactor": math.comb(N, d) * ((k + 1) * rho / (k + 1 - rho)) ** d,
            "scale": (1.0 - delta) / (k + 1),
            "power": d,
        },
        "lower_saturated": {
            "valid": rho > k,
            "prefactor": rho ** (N - k) / math.factorial(N - k),
            "scale": (rho + delta) / (rho - k) if rho > k else math.nan,
            "power": N - k,
        },
        "upper_high_load": {
            "valid": rho > N - d,
            "prefactor": math.comb(N, k) * ((k + 1) * rho / (k + 1 - rho)) ** (N - k),
            "scale": (k + 1 - N + d) * (1.0 - delta) / (k + 1),
            "power": N - k,
        },
    }
    return out


def cos_fcfs_bound_curves(cfg: ScenarioConfig, grid: np.ndarray, delta: float | None = None) -> list[BoundCurve]:
    """The four asymptotic waiting-tail curves for the cos-FCFS system.

    Lower curves bound P(W > x) from below for large x, upper curves from
    above; each is a power `power` of the size residual at a rescaled
    argument.  Invalid regimes produce valid=False curves with NaN values.
    """
    grid = np.asarray(grid, dtype=np.float64)
    params = cos_fcfs_curve_params(cfg, delta)
    res = lambda z: ht.residual_ccdf(cfg.job_size, z)
    nu = cfg.job_size.nu if cfg.job_size.kind == "pareto" else None
    out = []
    for name, p in params.items():
        kind = "lower" if name.startswith("lower") else "upper"
        if p["valid"]:
            y = p["prefactor"] * np.asarray(res(p["scale"] * grid)) ** p["power"]
        else:
            y = None
        expo = -(nu - 1.0) * p["power"] if (nu is not None and p["valid"]) else None
        out.append(_curve(name, kind, grid, y, valid=p["valid"], exponent=expo))
    return out


def single_server_fcfs_asymptote(rho: float, dist: ht.Distribution, grid: np.ndarray) -> BoundCurve:
    """Large-x waiting-tail shape of a single FCFS queue at load rho fed sizes
    from `dist`:  (rho / (1 - rho)) * residual_ccdf(x)."""
    if not (0.0 < rho < 1.0):
        raise DomainError(f"single-server asymptote needs rho in (0,1), got {rho}")
    grid = np.asarray(grid, dtype=np.float64)
    y = (rho / (1.0 - rho)) * np.asarray(ht.residual_ccdf(dist, grid))
    expo = -(dist.nu - 1.0) if dist.kind == "pareto" else None
    return _curve("single_server_fcfs", "asymptote", grid, y, exponent=expo)


def coc_fcfs_bound_curves(cfg: ScenarioConfig, grid: np.ndarray) -> list[BoundCurve]:
    """Waiting-tail sandwich for coc-FCFS: thinned single-server below, full
    single-server above, both fed the joined size B_(nJ)."""
    if cfg.variant != "coc" or cfg.discipline != "fcfs":
        raise DomainError("coc_fcfs curves apply to coc fcfs scenarios only")
    grid = np.asarray(grid, dtype=np.float64)
    res = lambda z: np.asarray(ht.joined_size_residual_ccdf(cfg.job_size, cfg.dependence, cfg.n_fork, cfg.n_join, z))
    joined_nu = ht.joined_size_rv_index(cfg.job_size, cfg.dependence, cfg.n_fork, cfg.n_join)
    expo = None if joined_nu is None else joined_nu + 1.0  # residual is one power slower
    rho_l, rho_u = cfg.rho_lower, cfg.rho_upper
    lower_ok = 0.0 < rho_l < 1.0
    upper_ok = 0.0 < rho_u < 1.0
    return [
        _curve("lower_thinned", "lower", grid, (rho_l / (1.0 - rho_l)) * res(grid) if lower_ok else None, valid=lower_ok, exponent=expo),
        _curve("upper_every_job", "upper", grid, (rho_u / (1.0 - rho_u)) * res(grid) if upper_ok else None, valid=upper_ok, exponent=expo),
    ]


def lcfs_busy_period_asymptote(cfg: ScenarioConfig, grid: np.ndarray, n_bp_factor: float | None = None) -> list[BoundCurve]:
    """Response-tail sandwich for coc LCFS-PR.

    Upper: busy-period tail of the single-server upper system,
    E[N_bp] (1-rho_U)^(-nu_joined) P(B_(nJ) > x), with E[N_bp] = 1/(1-rho_U)
    exact for exponential arrivals (pass `n_bp_factor` otherwise).
    Lower: P(B_(nJ) > x) (one replica set must be served in full).
    """
    if cfg.variant != "coc" or cfg.discipline != "lcfs_pr":
        raise DomainError("busy-period curves apply to coc lcfs_pr scenarios only")
    if cfg.job_size.kind != "pareto":
        raise DomainError("busy-period asymptote needs a pareto size law")
    grid = np.asarray(grid, dtype=np.float64)
    tail = np.asarray(ht.joined_size_ccdf(cfg.job_size, cfg.dependence, cfg.n_fork, cfg.n_join, grid))
    joined_nu = -ht.joined_size_rv_index(cfg.job_size, cfg.dependence, cfg.n_fork, cfg.n_join)
    rho_u = cfg.rho_upper
    upper_ok = 0.0 < rho_u < 1.0
    if n_bp_factor is None:
        if cfg.arrival.kind != "exponential":
            raise DomainError("E[N_bp] is exact only for exponential arrivals; pass n_bp_factor")
        n_bp = 1.0 / (1.0 - rho_u) if upper_ok else math.nan
    else:
        n_bp = n_bp_factor
    upper_y = n_bp * (1.0 - rho_u) ** (-joined_nu) * tail if upper_ok else None
    return [
        _curve("lower_joined_size", "lower", grid, tail, exponent=-joined_nu),
        _curve("upper_busy_period", "upper", grid, upper_y, valid=upper_ok, exponent=-joined_nu),
    ]
