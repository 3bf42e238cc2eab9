import math

import numpy as np
import pytest
from scipy import stats

from ruinflow.processes import (
    BrownianDrift,
    CompoundPoissonDrift,
    Deterministic,
    Erlang,
    ExponentialJumps,
    FixedJumps,
    Poisson,
    RenewalIID,
    check_bounded_below,
    check_discount_summability,
    discount_integral_tail_bound,
    laplace_exponent,
    renewal_density,
    renewal_function,
    sample_arrivals,
    truncation_horizon,
)

from oracles import erlang2_renewal_function


class TestRenewalFunction:
    def test_poisson_exact(self):
        assert renewal_function(Poisson(1.0), 10.0) == 10.0
        assert renewal_function(Poisson(2.0), 0.0) == 0.0

    def test_erlang_matches_closed_form(self):
        spec = RenewalIID(Erlang(2, 2.0))
        for t in (0.5, 3.0, 10.0):
            assert renewal_function(spec, t) == pytest.approx(
                erlang2_renewal_function(2.0, t), abs=1e-7)

    def test_erlang_matches_monte_carlo(self):
        spec = RenewalIID(Erlang(2, 2.0))
        rng = np.random.default_rng(21)
        t = 10.0
        n = 200_000
        gaps = rng.gamma(2.0, 0.5, size=(n, 40))
        times = np.cumsum(gaps, axis=1)
        assert times[:, -1].min() > t
        counts = (times <= t).sum(axis=1)
        se = counts.std(ddof=1) / math.sqrt(n)
        assert abs(counts.mean() - renewal_function(spec, t)) < 3 * se

    def test_density_poisson(self):
        assert renewal_density(Poisson(1.7), 3.0) == 1.7

    def test_density_erlang_integrates_to_renewal_function(self):
        from scipy import integrate

        spec = RenewalIID(Erlang(2, 2.0))
        val, _ = integrate.quad(lambda s: renewal_density(spec, s, horizon=5.0), 0, 5.0,
                                limit=200)
        assert val == pytest.approx(renewal_function(spec, 5.0), rel=1e-6)


class TestArrivalSampling:
    def test_poisson_mean_count(self):
        rng = np.random.default_rng(22)
        counts = [sample_arrivals(Poisson(1.0), 10.0, rng).size for _ in range(4000)]
        se = np.std(counts, ddof=1) / math.sqrt(len(counts))
        assert abs(np.mean(counts) - 10.0) < 3 * se

    def test_poisson_count_chisquare(self):
        rng = np.random.default_rng(23)
        n = 20_000
        counts = np.array([sample_arrivals(Poisson(1.0), 10.0, rng).size for _ in range(n)])
        kmax = 22
        observed = np.bincount(np.minimum(counts, kmax), minlength=kmax + 1)
        pmf = stats.poisson.pmf(np.arange(kmax), 10.0)
        expected = np.append(pmf, 1.0 - pmf.sum()) * n
        chi2 = float(((observed - expected) ** 2 / expected).sum())
        assert chi2 < stats.chi2.isf(1e-3, kmax)

    def test_short_horizon_usually_empty(self):
        rng = np.random.default_rng(24)
        empties = sum(sample_arrivals(Poisson(1.0), 1e-4, rng).size == 0 for _ in range(2000))
        assert empties > 1990

    def test_strictly_increasing(self):
        rng = np.random.default_rng(25)
        t = sample_arrivals(RenewalIID(Erlang(3, 1.0)), 50.0, rng)
        assert np.all(np.diff(t) > 0)
        assert t.max() <= 50.0


class TestLaplaceExponent:
    def test_examples(self):
        assert laplace_exponent(Deterministic(0.05), 2.0) == pytest.approx(-0.1)
        assert laplace_exponent(BrownianDrift(0.1, 0.2), 2.0) == pytest.approx(-0.12)
        cp = CompoundPoissonDrift(0.02, 1.5, ExponentialJumps(0.5))
        assert laplace_exponent(cp, 1.0) == pytest.approx(-0.02 + 1.5 * (1 / 1.5 - 1))

    @pytest.mark.parametrize("proc", [
        Deterministic(0.05),
        BrownianDrift(0.1, 0.2),
        CompoundPoissonDrift(0.02, 1.0, ExponentialJumps(0.3)),
        CompoundPoissonDrift(-0.01, 2.0, FixedJumps(0.1)),
    ])
    def test_zero_and_convexity(self, proc):
        assert laplace_exponent(proc, 0.0) == 0.0
        ks = np.linspace(0.0, 3.0, 31)
        vals = np.array([laplace_exponent(proc, float(k)) for k in ks])
        second = np.diff(vals, 2)
        assert np.all(second >= -1e-9)

    def test_domain_error(self):
        cp = CompoundPoissonDrift(0.0, 1.0, ExponentialJumps(0.5))
        with pytest.raises(ValueError):
            laplace_exponent(cp, -3.0)


class TestMomentIdentity:
    def test_brownian_discount_moment(self):
        proc = BrownianDrift(0.1, 0.2)
        t, k = 3.0, 1.5
        rng = np.random.default_rng(26)
        n = 1_000_000
        xi = proc.mu * t + proc.sigma * math.sqrt(t) * rng.standard_normal(n)
        vals = np.exp(-k * xi)
        se = vals.std(ddof=1) / math.sqrt(n)
        assert abs(vals.mean() - math.exp(t * laplace_exponent(proc, k))) < 3 * se

    def test_compound_poisson_discount_moment(self):
        proc = CompoundPoissonDrift(0.05, 2.0, ExponentialJumps(0.4))
        t, k = 2.0, 1.2
        rng = np.random.default_rng(27)
        n = 500_000
        xi = np.array(proc.sample_at(np.full((n, 1), t), rng)).ravel()
        vals = np.exp(-k * xi)
        se = vals.std(ddof=1) / math.sqrt(n)
        assert abs(vals.mean() - math.exp(t * laplace_exponent(proc, k))) < 3 * se

    def test_path_sampling_at_arrival_epochs(self):
        proc = BrownianDrift(0.1, 0.2)
        rng = np.random.default_rng(28)
        times = np.array([0.5, 1.5, 4.0])
        n = 200_000
        xi = proc.sample_at(np.tile(times, (n, 1)), rng)
        for j, t in enumerate(times):
            assert xi[:, j].mean() == pytest.approx(0.1 * t, abs=3 * 0.2 * math.sqrt(t / n) + 1e-4)
            assert xi[:, j].var() == pytest.approx(0.04 * t, rel=0.02)


class TestBoundedBelow:
    def test_deterministic(self):
        out = check_bounded_below(Deterministic(0.05), 10.0)
        assert out.holds and out.bound == 0.0

    def test_brownian_fails(self):
        out = check_bounded_below(BrownianDrift(0.1, 0.2), 10.0)
        assert not out.holds and out.bound is None

    def test_compound_poisson_nonnegative(self):
        out = check_bounded_below(CompoundPoissonDrift(0.02, 1.0, ExponentialJumps(0.5)), 5.0)
        assert out.holds and out.bound == 0.0

    def test_negative_drift_gets_linear_floor(self):
        out = check_bounded_below(CompoundPoissonDrift(-0.1, 1.0, ExponentialJumps(0.5)), 5.0)
        assert out.holds and out.bound == pytest.approx(0.5)

    def test_signed_jumps_fail(self):
        out = check_bounded_below(CompoundPoissonDrift(0.1, 1.0, FixedJumps(-0.2)), 5.0)
        assert not out.holds


class TestSummability:
    def test_deterministic_example(self):
        out = check_discount_summability(Deterministic(0.05), Poisson(1.0), 1.0, 3.0, 1.5)
        assert out.holds
        assert out.rho == 3.0  # upper exponent >= 1 picks p2
        assert out.series_bound is not None and out.series_bound < math.inf

    def test_rho_is_one_below_unit_index(self):
        out = check_discount_summability(Deterministic(0.05), Poisson(1.0), 0.2, 0.9, 0.5)
        assert out.rho == 1.0

    def test_brownian_negative_exponent_holds(self):
        out = check_discount_summability(BrownianDrift(0.1, 0.2), Poisson(1.0), 1.0, 3.0, 1.5)
        assert out.holds
        assert out.phi_p2 == pytest.approx(-0.12)

    def test_brownian_positive_exponent_fails(self):
        out = check_discount_summability(BrownianDrift(0.05, 0.5), Poisson(1.0), 1.0, 2.0, 1.5)
        assert not out.holds
        assert out.phi_p2 == pytest.approx(0.4)
        assert out.series_bound is None

    def test_exponent_order_enforced(self):
        with pytest.raises(ValueError):
            check_discount_summability(Deterministic(0.05), Poisson(1.0), 3.0, 1.0, 1.5)


class TestTruncation:
    def test_poisson_deterministic_horizon(self):
        # tail/total < 1e-3 exactly when exp(phi T)/(1 - exp(phi T)) < 1e-3
        T = truncation_horizon(Deterministic(0.05), Poisson(1.0), 1.5, rel_bound=1e-3)
        phi = -1.5 * 0.05
        assert math.exp(phi * T) / (1 - math.exp(phi * T)) <= 1e-3
        assert math.exp(phi * T / 1.25) / (1 - math.exp(phi * T / 1.25)) > 1e-3 * 0.5

    def test_tail_bound_decreases(self):
        b1 = discount_integral_tail_bound(BrownianDrift(0.1, 0.2), Poisson(1.0), 1.5, 40.0)
        b2 = discount_integral_tail_bound(BrownianDrift(0.1, 0.2), Poisson(1.0), 1.5, 80.0)
        assert b2 < b1

    def test_divergent_exponent_rejected(self):
        with pytest.raises(ValueError):
            truncation_horizon(BrownianDrift(0.05, 0.5), Poisson(1.0), 2.0)
