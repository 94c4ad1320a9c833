"""Counters, slope fits, reservoir, Hill estimator.

Brute-force recounts are the oracle for the streaming counter; fabricated
exact power-law counts pin the slope fit; analytic Pareto/exponential
quantiles pin the Hill estimator (values checked numerically beforehand).
"""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from redtail import tailstats as ts
from redtail.errors import ConfigurationError, EstimationError


class TestGrid:
    def test_default_shape(self):
        g = ts.default_grid()
        assert g.size == 200 and g[0] == 1.0 and g[-1] == pytest.approx(2.0e6)
        assert (np.diff(g) > 0).all()

    def test_rejects_bad(self):
        with pytest.raises(ConfigurationError):
            ts.default_grid(10.0, 1.0)
        with pytest.raises(ConfigurationError):
            ts.default_grid(0.0, 10.0)


class TestCounter:
    def brute(self, grid, vals):
        return np.array([(vals > g).sum() for g in grid], dtype=np.int64)

    def test_matches_brute_force(self):
        rng = np.random.default_rng(2)
        grid = ts.default_grid(0.1, 1e4, 37)
        c = ts.TailCounter(grid=grid)
        vals = rng.lognormal(2.0, 3.0, 5000)
        c.record(vals)
        np.testing.assert_array_equal(c.counts, self.brute(grid, vals))
        assert c.total == 5000

    def test_strict_exceedance_at_grid_points(self):
        grid = np.array([1.0, 10.0, 100.0])
        c = ts.TailCounter(grid=grid)
        c.record([1.0, 10.0, 100.0])  # values equal to thresholds never count
        np.testing.assert_array_equal(c.counts, [2, 1, 0])

    def test_scalar_and_batch_agree(self):
        grid = ts.default_grid(0.5, 100.0, 11)
        a, b = ts.TailCounter(grid=grid), ts.TailCounter(grid=grid)
        vals = [0.1, 0.7, 3.0, 250.0]
        a.record(vals)
        for v in vals:
            ts.record(b, v)
        np.testing.assert_array_equal(a.counts, b.counts)
        assert a.total == b.total == 4

    def test_merge_equals_single_pass(self):
        rng = np.random.default_rng(3)
        grid = ts.default_grid(1.0, 1e3, 20)
        whole = ts.TailCounter(grid=grid)
        parts = [ts.TailCounter(grid=grid) for _ in range(3)]
        chunks = [rng.pareto(1.2, 400) for _ in range(3)]
        whole.record(np.concatenate(chunks))
        for part, chunk in zip(parts, chunks):
            part.record(chunk)
        merged = parts[0].merge(parts[1]).merge(parts[2])
        np.testing.assert_array_equal(merged.counts, whole.counts)
        assert merged.total == whole.total

    def test_merge_rejects_grid_mismatch(self):
        with pytest.raises(ConfigurationError):
            ts.TailCounter(grid=ts.default_grid(1, 10, 5)).merge(ts.TailCounter(grid=ts.default_grid(1, 20, 5)))

    def test_ccdf_values_and_stderr(self):
        grid = np.array([1.0, 10.0])
        c = ts.TailCounter(grid=grid)
        c.record([0.5, 2.0, 20.0, 30.0])
        tab = ts.ccdf(c)
        np.testing.assert_allclose(tab.p, [0.75, 0.5])
        np.testing.assert_allclose(tab.stderr, [math.sqrt(0.75 * 0.25 / 4), math.sqrt(0.25 / 4)])

    def test_empty_ccdf_rejected(self):
        with pytest.raises(EstimationError):
            ts.TailCounter().ccdf()

    @given(st.lists(st.floats(0.001, 1e7), min_size=1, max_size=200))
    @settings(max_examples=50)
    def test_counts_monotone_nonincreasing(self, vals):
        c = ts.TailCounter()
        c.record(vals)
        assert (np.diff(c.counts) <= 0).all()
        assert c.counts[0] <= c.total


class TestSlopeFit:
    def exact_counter(self, slope, total=10**12):
        # counts = total * x^slope on a decade grid are exact integers
        grid = np.geomspace(1e1, 1e6, 6)
        counts = (total * grid**slope).astype(np.int64)
        return ts.TailCounter(grid=grid, counts=counts, total=total)

    def test_recovers_exact_power_law(self):
        c = self.exact_counter(-2.0)
        fit = ts.fit_tail_slope(c, window=(1e1, 1e6), min_count=1)
        assert fit.slope == pytest.approx(-2.0, abs=1e-12)
        assert fit.stderr == pytest.approx(0.0, abs=1e-9)
        assert fit.n_points == 6

    def test_window_restricts_points(self):
        c = self.exact_counter(-1.0)
        fit = ts.fit_tail_slope(c, window=(1e2, 1e4), min_count=1, min_points=3)
        assert fit.n_points == 3
        assert fit.slope == pytest.approx(-1.0, abs=1e-12)

    def test_min_count_drops_thin_points(self):
        grid = np.geomspace(1e1, 1e6, 6)
        counts = np.array([10**7, 10**5, 10**3, 50, 2, 0], dtype=np.int64)
        c = ts.TailCounter(grid=grid, counts=counts, total=10**9)
        fit = ts.fit_tail_slope(c, window=(1e1, 1e6), min_count=100, min_points=3)
        assert fit.n_points == 3  # the 50, 2, 0 points are dropped

    def test_too_few_points_is_an_error(self):
        c = self.exact_counter(-1.5)
        with pytest.raises(EstimationError):
            ts.fit_tail_slope(c, window=(1e2, 1e3), min_count=1, min_points=5)

    def test_pareto_sample_slope(self):
        rng = np.random.default_rng(8)
        u = 1.0 - rng.random(2_000_000)
        x = u ** (-1 / 1.5)  # pareto(1.5, 1)
        c = ts.TailCounter(grid=ts.default_grid(1.0, 1e4, 60))
        c.record(x)
        fit = ts.fit_tail_slope(c, window=(1e0, 1e2), min_count=100)
        assert fit.slope == pytest.approx(-1.5, abs=0.05)


class TestReservoir:
    def test_keeps_largest(self):
        rng = np.random.default_rng(4)
        r = ts.TopReservoir(50)
        vals = rng.normal(size=1000)
        for chunk in np.array_split(vals, 7):
            r.update(chunk)
        want = np.sort(vals)[::-1][:50]
        np.testing.assert_allclose(r.as_array(), want)

    def test_merge_order_irrelevant(self):
        rng = np.random.default_rng(5)
        a_vals, b_vals = rng.pareto(1.0, 300), rng.pareto(1.0, 400)
        r1, r2 = ts.TopReservoir(100), ts.TopReservoir(100)
        r1.update(a_vals)
        r2.update(b_vals)
        m12 = ts.TopReservoir(100)
        m12.update(a_vals)
        m12.merge(r2)
        m21 = ts.TopReservoir(100)
        m21.update(b_vals)
        m21.merge(r1)
        np.testing.assert_allclose(m12.as_array(), m21.as_array())

    def test_len_below_capacity(self):
        r = ts.TopReservoir(100)
        r.update([1.0, 2.0])
        assert len(r) == 2


class TestHill:
    def pareto_quantiles(self, nu, n, m):
        i = np.arange(1, m + 1)
        return (i / n) ** (-1.0 / nu) / 3.0  # largest m of n, deterministic

    def test_estimate_on_exact_pareto_quantiles(self):
        # independent recomputation: H = mean log excess, estimate = -1/H
        x = self.pareto_quantiles(1.5, 100_000, 5000)
        est = ts.hill_estimate(x, 2000)
        h_oracle = float(np.mean(np.log(x[:2000] / x[2000])))
        assert est.hill_stat == pytest.approx(h_oracle, rel=1e-12)
        assert est.exponent == pytest.approx(-1.0 / h_oracle, rel=1e-12)
        assert not est.no_heavy_tail

    def test_converges_to_minus_nu(self):
        x = self.pareto_quantiles(1.5, 100_000, 5000)
        err_small_k = abs(ts.hill_estimate(x, 100).exponent + 1.5)
        err_big_k = abs(ts.hill_estimate(x, 2000).exponent + 1.5)
        assert err_big_k < err_small_k
        assert err_big_k < 0.01

    def test_exponential_not_heavy(self):
        # analytic exp quantiles ln(n/i): H = 0.0775 < 0.1 at n=1e6, k=15
        n = 1_000_000
        x = np.log(n / np.arange(1, 200))
        est = ts.hill_estimate(x, 15)
        assert est.no_heavy_tail
        # and on an actual sample
        rng = np.random.default_rng(0)
        s = rng.exponential(1.0, n)
        assert ts.hill_estimate(s, 15).no_heavy_tail

    def test_reservoir_input(self):
        r = ts.TopReservoir(3000)
        r.update(self.pareto_quantiles(2.0, 50_000, 3000))
        est = ts.hill_estimate(r, 1000)
        assert est.exponent == pytest.approx(-2.0, abs=0.05)

    def test_degenerate_sample(self):
        est = ts.hill_estimate(np.full(100, 7.0), 20)
        assert est.no_heavy_tail

    def test_guards(self):
        x = self.pareto_quantiles(1.5, 1000, 100)
        with pytest.raises(EstimationError):
            ts.hill_estimate(x, 5)
        with pytest.raises(EstimationError):
            ts.hill_estimate(x, 100)
