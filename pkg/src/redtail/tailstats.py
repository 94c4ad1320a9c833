"""Streaming tail statistics: log-grid exceedance counters, slope fits, Hill estimator.

A TailCounter holds strict-exceedance counts over a fixed log-spaced grid so
that CCDFs from arbitrarily long runs (or merged replications) can be formed
without keeping samples.  The slope fit regresses log10 ccdf on log10 x over a
window, dropping grid points too thin to trust.  The Hill estimator works on a
reservoir of the largest observations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .errors import ConfigurationError, EstimationError

GRID_LO = 1.0
GRID_HI = 2.0e6
GRID_POINTS = 200
FIT_WINDOW = (1.0e2, 1.0e5)
FIT_MIN_COUNT = 100
FIT_MIN_POINTS = 5


def default_grid(lo: float = GRID_LO, hi: float = GRID_HI, points: int = GRID_POINTS) -> np.ndarray:
    if not (0 < lo < hi) or points < 2:
        raise ConfigurationError(f"bad grid spec lo={lo} hi={hi} points={points}")
    return np.geomspace(lo, hi, points)


class CcdfPoint(NamedTuple):
    x: float
    p: float
    stderr: float


class CcdfTable(NamedTuple):
    x: np.ndarray
    p: np.ndarray
    stderr: np.ndarray
    counts: np.ndarray
    total: int


@dataclass
class TailCounter:
    """Exceedance counter: counts[i] = #{values > grid[i]} (strict), total = #values."""

    grid: np.ndarray = field(default_factory=default_grid)
    counts: np.ndarray = field(default=None)  # type: ignore[assignment]
    total: int = 0

    def __post_init__(self) -> None:
        self.grid = np.asarray(self.grid, dtype=np.float64)
        if self.grid.ndim != 1 or self.grid.size < 2 or not (np.diff(self.grid) > 0).all():
            raise ConfigurationError("grid must be strictly increasing, length >= 2")
        if self.grid[0] <= 0:
            raise ConfigurationError("grid thresholds must be positive (log-log tail grid)")
        if self.counts is None:
            self.counts = np.zeros(self.grid.size, dtype=np.int64)
        else:
            self.counts = np.asarray(self.counts, dtype=np.int64)
            if self.counts.shape != self.grid.shape:
                raise ConfigurationError("counts shape must match grid")

    def record(self, values) -> None:
        """Add one value or a batch.  Exceedance is strict (> threshold)."""
        arr = np.atleast_1d(np.asarray(values, dtype=np.float64))
        if arr.size == 0:
            return
        # searchsorted('left') on the sorted grid: index of first grid point >= v,
        # so v strictly exceeds exactly the grid points before it.
        idx = np.searchsorted(self.grid, arr, side="left")
        hist = np.bincount(idx, minlength=self.grid.size + 1)
        # counts[i] += #{v : idx(v) > i} = total - cumulative hist through i
        exceed = arr.size - np.cumsum(hist[:-1])
        self.counts += exceed
        self.total += arr.size

    def record_zeros(self, n: int) -> None:
        """Count n zero-valued observations (they exceed no positive threshold)."""
        if n < 0:
            raise ConfigurationError("cannot record a negative count")
        self.total += int(n)

    def merge(self, other: "TailCounter") -> "TailCounter":
        """Fold another counter on the same grid into this one.  Returns self."""
        if not np.array_equal(self.grid, other.grid):
            raise ConfigurationError("cannot merge counters with different grids")
        self.counts += other.counts
        self.total += other.total
        return self

    def copy(self) -> "TailCounter":
        return TailCounter(grid=self.grid.copy(), counts=self.counts.copy(), total=self.total)

    def ccdf(self) -> CcdfTable:
        """Empirical P(X > grid) with binomial standard errors sqrt(p(1-p)/n)."""
        if self.total == 0:
            raise EstimationError("empty counter has no ccdf")
        p = self.counts / self.total
        se = np.sqrt(p * (1.0 - p) / self.total)
        return CcdfTable(self.grid.copy(), p, se, self.counts.copy(), self.total)


def record(counter: TailCounter, values) -> None:
    counter.record(values)


def ccdf(counter: TailCounter) -> CcdfTable:
    return counter.ccdf()


class SlopeFit(NamedTuple):
    slope: float
    stderr: float
    intercept: float
    n_points: int
    window: tuple[float, float]


def fit_tail_slope(
    counter: TailCounter,
    window: tuple[float, float] = FIT_WINDOW,
    min_count: int = FIT_MIN_COUNT,
    min_points: int = FIT_MIN_POINTS,
) -> SlopeFit:
    """OLS slope of log10 ccdf vs log10 x over `window`.

    Grid points with fewer than `min_count` exceedances are dropped (their ccdf
    estimate is noise); fewer than `min_points` survivors is an error, not a
    silent fit.
    """
    lo, hi = window
    if not (0 < lo < hi):
        raise ConfigurationError(f"bad fit window {window}")
    tab = counter.ccdf()
    mask = (tab.x >= lo) & (tab.x <= hi) & (tab.counts >= min_count)
    n = int(mask.sum())
    if n < min_points:
        raise EstimationError(f"only {n} grid points qualify in window {window} (need {min_points})")
    lx = np.log10(tab.x[mask])
    ly = np.log10(tab.p[mask])
    dx = lx - lx.mean()
    sxx = float(dx @ dx)
    slope = float(dx @ ly) / sxx
    intercept = float(ly.mean() - slope * lx.mean())
    resid = ly - (intercept + slope * lx)
    dof = max(n - 2, 1)
    se = math.sqrt(float(resid @ resid) / dof / sxx)
    return SlopeFit(slope, se, intercept, n, (lo, hi))


class TopReservoir:
    """Keeps the `capacity` largest values seen, for top-order-statistic estimators."""

    def __init__(self, capacity: int = 100_000):
        if capacity < 2:
            raise ConfigurationError("reservoir capacity must be >= 2")
        self.capacity = capacity
        self._buf = np.empty(0, dtype=np.float64)

    def update(self, values) -> None:
        arr = np.asarray(values, dtype=np.float64).ravel()
        if arr.size == 0:
            return
        merged = np.concatenate([self._buf, arr])
        if merged.size > self.capacity:
            # largest `capacity` values; ties at the cut keep an arbitrary but
            # value-identical subset, so downstream results don't depend on order
            cut = np.partition(merged, merged.size - self.capacity)
            merged = cut[merged.size - self.capacity :]
        self._buf = merged

    def merge(self, other: "TopReservoir") -> "TopReservoir":
        self.update(other._buf)
        return self

    def __len__(self) -> int:
        return int(self._buf.size)

    def as_array(self) -> np.ndarray:
        """Descending sort; deterministic regardless of insertion order."""
        return np.sort(self._buf)[::-1].copy()


class HillEstimate(NamedTuple):
    exponent: float  # tail-index estimate, sign convention of a ccdf power: -1/H
    hill_stat: float  # H, mean log-excess over the (k+1)-th order statistic
    k_order: int
    no_heavy_tail: bool


def hill_estimate(sample, k_order: int) -> HillEstimate:
    """Hill estimator on the top k_order observations.

    H = (1/k) sum_{i=1..k} ln(X_(i) / X_(k+1)) with X_(1) >= X_(2) >= ...;
    the returned exponent is -1/H.  H below 0.1 (|exponent| > 10) raises the
    no_heavy_tail flag: at this k the sample is indistinguishable from
    light-tailed.
    """
    if k_order < 10:
        raise EstimationError(f"k_order {k_order} too small, need >= 10")
    arr = sample.as_array() if isinstance(sample, TopReservoir) else np.sort(np.asarray(sample, dtype=np.float64))[::-1]
    if arr.size <= k_order:
        raise EstimationError(f"need more than k_order={k_order} observations, have {arr.size}")
    ref = arr[k_order]
    if ref <= 0:
        raise EstimationError("Hill estimator needs positive observations at the cut")
    h = float(np.mean(np.log(arr[:k_order] / ref)))
    if h <= 0:
        # all top values equal the reference: degenerate, certainly not heavy
        return HillEstimate(-math.inf, h, k_order, True)
    return HillEstimate(-1.0 / h, h, k_order, h < 0.1)
