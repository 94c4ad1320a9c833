"""Job-size and interarrival laws, replica-vector sampling, order-statistic calculus.

Three families are supported: Pareto(nu, xm) with ccdf (xm/x)^nu on [xm, inf),
exponential(rate), and deterministic(value).  Pareto is the heavy-tailed family;
its tail-class memberships and regular-variation index are exposed so scenario
code can reason about predictions without re-deriving them.

Replica vectors are either `identical` (one draw copied to every replica) or
`iid` (independent draws per replica).  The joined size of a fork(nF)/join(nJ)
job is the nJ-th order statistic of its replica vector; closed forms are used
for Pareto and exponential, quadrature otherwise.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Literal

import numpy as np
from scipy import integrate

from .errors import ConfigurationError, DomainError

ReplicaDependence = Literal["identical", "iid"]

# Tail-class tags carried by Distribution.tail_classes.  Pareto sits in all of
# them; the light-tailed families in none.
TAIL_CLASSES = frozenset(
    {
        "heavy_tailed",
        "long_tailed",
        "subexponential",
        "regularly_varying",
        "o_regularly_varying",
        "dominated_varying",
    }
)


@dataclass(frozen=True)
class Distribution:
    """A nonnegative size/interarrival law.

    Exactly the parameters for `kind` must be set: pareto -> (nu, xm),
    exponential -> (rate,), deterministic -> (value,).
    """

    kind: Literal["pareto", "exponential", "deterministic"]
    nu: float | None = None
    xm: float | None = None
    rate: float | None = None
    value: float | None = None

    def __post_init__(self) -> None:
        if self.kind == "pareto":
            if self.nu is None or self.xm is None or self.rate is not None or self.value is not None:
                raise ConfigurationError("pareto needs exactly nu and xm")
            if not (self.nu > 0) or not (self.xm > 0):
                raise ConfigurationError(f"pareto requires nu > 0 and xm > 0, got nu={self.nu}, xm={self.xm}")
        elif self.kind == "exponential":
            if self.rate is None or self.nu is not None or self.xm is not None or self.value is not None:
                raise ConfigurationError("exponential needs exactly rate")
            if not (self.rate > 0):
                raise ConfigurationError(f"exponential requires rate > 0, got {self.rate}")
        elif self.kind == "deterministic":
            if self.value is None or self.nu is not None or self.xm is not None or self.rate is not None:
                raise ConfigurationError("deterministic needs exactly value")
            if not (self.value >= 0):
                raise ConfigurationError(f"deterministic requires value >= 0, got {self.value}")
        else:
            raise ConfigurationError(f"unknown distribution kind {self.kind!r}")

    @property
    def tail_classes(self) -> frozenset[str]:
        return TAIL_CLASSES if self.kind == "pareto" else frozenset()

    @property
    def rv_index(self) -> float | None:
        """Regular-variation index of the ccdf (-nu for Pareto), None otherwise."""
        return -self.nu if self.kind == "pareto" else None

    def __str__(self) -> str:
        return format_distribution(self)


def pareto(nu: float, xm: float) -> Distribution:
    return Distribution("pareto", nu=float(nu), xm=float(xm))


def exponential(rate: float) -> Distribution:
    return Distribution("exponential", rate=float(rate))


def deterministic(value: float) -> Distribution:
    return Distribution("deterministic", value=float(value))


_LITERAL_RE = re.compile(r"^\s*([a-z_]+)\s*\{(.*)\}\s*$", re.S)
_KINDS = {"pareto": pareto, "exp": exponential, "exponential": exponential, "det": deterministic, "deterministic": deterministic}
_PARAM_NAMES = {"pareto": ("nu", "xm"), "exponential": ("rate",), "deterministic": ("value",)}


def parse_distribution(text: str) -> Distribution:
    """Parse a literal like ``pareto{nu=1.5, xm=0.3333333333}`` or ``exp{rate=2.5}``."""
    m = _LITERAL_RE.match(text)
    if not m:
        raise ConfigurationError(f"cannot parse distribution literal {text!r}")
    name, body = m.group(1), m.group(2)
    ctor = _KINDS.get(name)
    if ctor is None:
        raise ConfigurationError(f"unknown distribution {name!r} in {text!r}")
    params: dict[str, float] = {}
    body = body.strip()
    if body:
        for piece in body.split(","):
            if "=" not in piece:
                raise ConfigurationError(f"bad parameter {piece!r} in {text!r}")
            key, _, val = piece.partition("=")
            try:
                params[key.strip()] = float(val)
            except ValueError as exc:
                raise ConfigurationError(f"bad numeric value in {text!r}: {piece!r}") from exc
    try:
        return ctor(**params)
    except TypeError as exc:
        raise ConfigurationError(f"wrong parameters for {name!r} in {text!r}") from exc


def format_distribution(dist: Distribution) -> str:
    """Inverse of parse_distribution, shortest round-tripping floats."""
    names = _PARAM_NAMES[dist.kind]
    short = {"exponential": "exp", "deterministic": "det"}.get(dist.kind, dist.kind)
    body = ", ".join(f"{n}={getattr(dist, n)!r}" for n in names)
    return f"{short}{{{body}}}"


def mean(dist: Distribution) -> float:
    """E[X]; +inf for Pareto with nu <= 1."""
    if dist.kind == "pareto":
        if dist.nu <= 1.0:
            return math.inf
        return dist.nu * dist.xm / (dist.nu - 1.0)
    if dist.kind == "exponential":
        return 1.0 / dist.rate
    return dist.value


def ccdf(dist: Distribution, x):
    """P(X > x), elementwise over scalar or ndarray x."""
    x = np.asarray(x, dtype=np.float64)
    if dist.kind == "pareto":
        out = np.where(x < dist.xm, 1.0, (dist.xm / np.maximum(x, dist.xm)) ** dist.nu)
    elif dist.kind == "exponential":
        out = np.exp(-dist.rate * np.maximum(x, 0.0))
        out = np.where(x < 0, 1.0, out)
    else:
        out = np.where(x < dist.value, 1.0, 0.0)
    return float(out) if out.ndim == 0 else out


def sample(dist: Distribution, rng: np.random.Generator) -> float:
    """One draw.  Pareto uses inverse transform on u = 1 - U in (0, 1]."""
    return float(sample_many(dist, 1, rng)[0])


def sample_many(dist: Distribution, n: int, rng: np.random.Generator) -> np.ndarray:
    """n draws as float64.  Sequential per-stream draws; chunking by callers is safe
    because each call consumes exactly n uniforms/exponentials from `rng`."""
    if dist.kind == "pareto":
        u = 1.0 - rng.random(n)  # in (0, 1], avoids the u=0 pole
        return dist.xm * u ** (-1.0 / dist.nu)
    if dist.kind == "exponential":
        return rng.exponential(1.0 / dist.rate, n)
    return np.full(n, dist.value, dtype=np.float64)


def draw_replicas(dist: Distribution, dependence: ReplicaDependence, n_fork: int, rng: np.random.Generator) -> np.ndarray:
    """One job's replica size vector, shape (n_fork,)."""
    if dependence == "identical":
        return np.full(n_fork, sample(dist, rng))
    if dependence == "iid":
        return sample_many(dist, n_fork, rng)
    raise ConfigurationError(f"unknown replica dependence {dependence!r}")


def replica_matrix(dist: Distribution, dependence: ReplicaDependence, n_fork: int, n_jobs: int, rng: np.random.Generator) -> np.ndarray:
    """Replica sizes for n_jobs jobs, shape (n_jobs, n_fork).

    identical: one draw per job broadcast across the row (consumes n_jobs draws);
    iid: independent draws per cell, row-major (consumes n_jobs * n_fork draws).
    """
    if dependence == "identical":
        col = sample_many(dist, n_jobs, rng)
        return np.repeat(col[:, None], n_fork, axis=1)
    if dependence == "iid":
        return sample_many(dist, n_jobs * n_fork, rng).reshape(n_jobs, n_fork)
    raise ConfigurationError(f"unknown replica dependence {dependence!r}")


def _tail_integral(dist: Distribution, x: float) -> float:
    """int_x^inf P(X > y) dy by quadrature (oracle path for non-Pareto laws)."""
    f = lambda y: ccdf(dist, y)
    brk = dist.xm if dist.kind == "pareto" else (dist.value if dist.kind == "deterministic" else None)
    if brk is not None and x < brk:
        head, _ = integrate.quad(f, x, brk)
        tail, _ = integrate.quad(f, brk, math.inf)
        return head + tail
    val, _ = integrate.quad(f, x, math.inf)
    return val


def residual_ccdf(dist: Distribution, x):
    """Stationary-excess (residual) ccdf: (1/E[X]) int_x^inf P(X > y) dy.

    Closed form for Pareto: 1 - (nu-1) x / (nu xm) below xm, and
    xm^(nu-1) x^(1-nu) / nu above.  Exponential is memoryless so the residual
    equals the ccdf; deterministic(v) gives (v - x)/v on [0, v].  Requires a
    finite, positive mean.
    """
    m = mean(dist)
    if not math.isfinite(m) or m <= 0.0:
        raise DomainError(f"residual law undefined for {dist} with mean {m}")
    xs = np.asarray(x, dtype=np.float64)
    if dist.kind == "pareto":
        if dist.nu <= 1.0:  # unreachable, mean guard above fires first
            raise DomainError("pareto residual needs nu > 1")
        below = 1.0 - (dist.nu - 1.0) * xs / (dist.nu * dist.xm)
        xc = np.maximum(xs, dist.xm)
        above = dist.xm ** (dist.nu - 1.0) * xc ** (1.0 - dist.nu) / dist.nu
        out = np.where(xs < dist.xm, below, above)
    elif dist.kind == "exponential":
        out = np.exp(-dist.rate * np.maximum(xs, 0.0))
    else:
        out = np.clip(1.0 - xs / dist.value, 0.0, 1.0) if dist.value > 0 else np.zeros_like(xs)
    out = np.where(xs < 0, 1.0, out)
    return float(out) if out.ndim == 0 else out


# ---------------------------------------------------------------------------
# Order statistics of iid replica vectors.
#
# For the j-th smallest of n iid draws, P(X_(j) > x) = sum_{i<j} C(n,i) F^i Fbar^{n-i}.
# For Pareto this is a mixture of pure power tails: with t = (xm/x)^nu and x >= xm,
# expanding (1-t)^i gives  P(X_(j) > x) = sum_q c_q t^q  with q in [n-j+1, n].
# ---------------------------------------------------------------------------


def _pareto_orderstat_coeffs(n: int, j: int) -> dict[int, float]:
    coeffs: dict[int, float] = {}
    for i in range(j):
        for l in range(i + 1):
            q = n - i + l
            coeffs[q] = coeffs.get(q, 0.0) + math.comb(n, i) * math.comb(i, l) * (-1.0) ** l
    return {q: c for q, c in coeffs.items() if c != 0.0}


def _check_orderstat_args(n: int, j: int) -> None:
    if not (1 <= j <= n):
        raise DomainError(f"order statistic j={j} out of range for n={n}")


def orderstat_ccdf(dist: Distribution, n: int, j: int, x):
    """P(X_(j) > x) for the j-th smallest of n iid draws of `dist`."""
    _check_orderstat_args(n, j)
    xs = np.asarray(x, dtype=np.float64)
    F = 1.0 - ccdf(dist, xs)
    Fbar = 1.0 - F
    out = np.zeros_like(xs, dtype=np.float64)
    for i in range(j):
        out += math.comb(n, i) * F**i * Fbar ** (n - i)
    return float(out) if out.ndim == 0 else out


def orderstat_mean(dist: Distribution, n: int, j: int) -> float:
    """E[X_(j)].  Closed for Pareto (inf when nu (n-j+1) <= 1) and exponential;
    quadrature otherwise."""
    _check_orderstat_args(n, j)
    if dist.kind == "pareto":
        if dist.nu * (n - j + 1) <= 1.0:
            return math.inf
        coeffs = _pareto_orderstat_coeffs(n, j)
        return dist.xm * (1.0 + sum(c / (dist.nu * q - 1.0) for q, c in coeffs.items()))
    if dist.kind == "exponential":
        # memoryless spacings: E[X_(j)] = (1/rate) sum_{i=n-j+1}^{n} 1/i
        return sum(1.0 / i for i in range(n - j + 1, n + 1)) / dist.rate
    if dist.kind == "deterministic":
        return dist.value
    raise DomainError(f"unsupported law {dist}")


def orderstat_residual_ccdf(dist: Distribution, n: int, j: int, x):
    """Residual ccdf of X_(j): (1/E[X_(j)]) int_x^inf P(X_(j) > y) dy."""
    _check_orderstat_args(n, j)
    m = orderstat_mean(dist, n, j)
    if not math.isfinite(m) or m <= 0.0:
        raise DomainError(f"residual of order statistic undefined: mean {m}")
    xs = np.asarray(x, dtype=np.float64)
    if dist.kind == "pareto":
        coeffs = _pareto_orderstat_coeffs(n, j)
        # int_x^inf t(y)^q dy = x t(x)^q / (nu q - 1) for x >= xm
        xc = np.maximum(xs, dist.xm)
        t = (dist.xm / xc) ** dist.nu
        above = sum(c * xc * t**q / (dist.nu * q - 1.0) for q, c in coeffs.items())
        at_xm = dist.xm * sum(c / (dist.nu * q - 1.0) for q, c in coeffs.items())
        below = (dist.xm - xs) + at_xm
        out = np.where(xs < dist.xm, below, above) / m
    elif dist.kind == "deterministic":
        out = np.clip(1.0 - xs / dist.value, 0.0, 1.0) if dist.value > 0 else np.zeros_like(xs)
    else:
        flat = np.atleast_1d(xs)
        vals = np.empty_like(flat)
        for idx, xv in enumerate(flat):
            if xv < 0:
                vals[idx] = 1.0
                continue
            v, _ = integrate.quad(lambda y: orderstat_ccdf(dist, n, j, y), xv, math.inf)
            vals[idx] = v / m
        out = vals.reshape(xs.shape)
    out = np.where(xs < 0, 1.0, out)
    return float(out) if out.ndim == 0 else out


# ---------------------------------------------------------------------------
# Joined size B_(nJ) of a fork/join job: identical replicas collapse to the base
# law, iid replicas give the nJ-th order statistic of nF draws.
# ---------------------------------------------------------------------------


def joined_size_mean(dist: Distribution, dependence: ReplicaDependence, n_fork: int, n_join: int) -> float:
    if dependence == "identical":
        return mean(dist)
    return orderstat_mean(dist, n_fork, n_join)


def joined_size_ccdf(dist: Distribution, dependence: ReplicaDependence, n_fork: int, n_join: int, x):
    if dependence == "identical":
        return ccdf(dist, x)
    return orderstat_ccdf(dist, n_fork, n_join, x)


def joined_size_residual_ccdf(dist: Distribution, dependence: ReplicaDependence, n_fork: int, n_join: int, x):
    if dependence == "identical":
        return residual_ccdf(dist, x)
    return orderstat_residual_ccdf(dist, n_fork, n_join, x)


def joined_size_rv_index(dist: Distribution, dependence: ReplicaDependence, n_fork: int, n_join: int) -> float | None:
    """Regular-variation index of B_(nJ): -nu for identical Pareto replicas,
    -(nF + 1 - nJ) nu for iid (minimum of the surviving set rules the tail)."""
    if dist.kind != "pareto":
        return None
    if dependence == "identical":
        return -dist.nu
    return -(n_fork + 1 - n_join) * dist.nu
