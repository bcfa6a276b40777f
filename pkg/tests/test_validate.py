"""Unit tests for the Monte Carlo and statistical check machinery."""

import math

import numpy as np
import pytest
from scipy import stats

from gradual_release import (
    PrivacyBoundary,
    SensitivityBudget,
    open_session,
    realized_privacy_loss,
    step,
    tune_boundary,
)
from gradual_release import validate
from gradual_release._rng import stream


def linear_boundary(delta=0.05):
    a = 1.0
    return PrivacyBoundary(
        kind="linear", delta=delta, sensitivity=1.0, a=a, b=math.log(1 / delta) / (2 * a)
    )


class TestKsTest:
    def test_null_holds_for_matching_reference(self):
        samples = np.random.default_rng(0).standard_normal(20000)
        _, p = validate.ks_test(samples, stats.norm.cdf)
        assert p > 1e-3

    def test_power_against_wrong_reference(self):
        samples = np.random.default_rng(1).laplace(0, 1, 20000)
        _, p = validate.ks_test(samples, stats.norm.cdf)
        assert p < 1e-6

    def test_constant_samples_have_large_statistic(self):
        d, _ = validate.ks_test(np.zeros(500), stats.norm.cdf)
        assert d >= 0.5

    def test_too_few_samples_rejected(self):
        with pytest.raises(ValueError):
            validate.ks_test(np.zeros(10), stats.norm.cdf)

    def test_agrees_with_scipy(self):
        samples = np.random.default_rng(2).standard_normal(5000)
        d, p = validate.ks_test(samples, stats.norm.cdf)
        ref = stats.kstest(samples, "norm")
        assert d == pytest.approx(ref.statistic, abs=1e-12)
        assert p == pytest.approx(ref.pvalue, abs=0.02)


class TestEmpiricalCf:
    def test_zero_frequency_is_one(self):
        est = validate.empirical_cf(np.random.default_rng(3).standard_normal(2000), 0.0)
        assert est.value == 1.0 + 0.0j

    def test_symmetric_samples_have_small_imaginary_part(self):
        rng = np.random.default_rng(4)
        s = rng.laplace(0, 1, 20000)
        s = np.concatenate([s, -s])  # exactly symmetric
        est = validate.empirical_cf(s, 1.3, seed=4)
        assert abs(est.value.imag) <= 3 * max(est.se_imag, 1e-12)

    def test_matches_laplace_cf(self):
        # CF of Laplace(scale b) is 1/(1 + b^2 lam^2).
        rng = np.random.default_rng(5)
        s = rng.laplace(0, 0.7, 50000)
        est = validate.empirical_cf(s, 1.0, seed=5)
        target = 1.0 / (1.0 + 0.49)
        assert abs(est.value.real - target) <= 5 * est.se_real

    def test_too_few_samples_rejected(self):
        with pytest.raises(ValueError):
            validate.empirical_cf(np.zeros(100), 1.0)


class TestBoundaryCrossing:
    def test_zero_sensitivity_never_crosses(self):
        est = validate.mc_boundary_crossing(
            linear_boundary(), 0.0, np.logspace(1, -1, 10), trials=2000, seed=0
        )
        assert est.estimate == 0.0

    def test_increasing_grid_rejected(self):
        with pytest.raises(ValueError):
            validate.mc_boundary_crossing(
                linear_boundary(), 1.0, np.array([0.1, 1.0]), trials=2000, seed=0
            )

    def test_too_few_trials_rejected(self):
        with pytest.raises(ValueError):
            validate.mc_boundary_crossing(
                linear_boundary(), 1.0, np.array([1.0]), trials=10, seed=0
            )

    def test_single_time_matches_closed_form(self):
        b = linear_boundary()
        for t in (0.5, 2.0, 8.0):
            closed = validate.single_time_crossing_prob(b, 1.0, t)
            est = validate.mc_boundary_crossing(b, 1.0, np.array([t]), trials=20000, seed=1)
            tol = 3 * max(est.se, math.sqrt(closed * (1 - closed) / 20000))
            assert abs(est.estimate - closed) <= tol + 1e-4

    def test_crossing_rate_below_delta(self):
        b = tune_boundary("mixture", 1.0, 0.05, 0.5)
        est = validate.mc_boundary_crossing(b, 1.0, np.logspace(2, -2, 25), trials=4000, seed=2)
        assert est.estimate <= 0.05 + 3 * est.se


class TestLineCrossing:
    def test_huge_intercept_never_crosses(self):
        est = validate.line_crossing_check(1.0, 20.0, horizon=5.0, grid_step=0.01, trials=1000, seed=0)
        assert est.estimate == 0.0

    def test_refinement_is_monotone(self):
        coarse = validate.line_crossing_check(1.0, 1.0, horizon=10.0, grid_step=0.05, trials=2000, seed=3)
        fine = validate.line_crossing_check(1.0, 1.0, horizon=10.0, grid_step=0.01, trials=2000, seed=3)
        assert fine.estimate >= coarse.estimate - 0.02

    def test_estimate_below_exact_probability(self):
        est = validate.line_crossing_check(1.0, 1.0, horizon=20.0, grid_step=0.01, trials=4000, seed=4)
        assert est.estimate <= math.exp(-2.0) + 3 * est.se


class TestPrivacyLossSample:
    def test_matches_realized_loss(self):
        boundary = tune_boundary("linear", 1.0, 0.05, 0.5)
        session = open_session(
            "brownian", np.zeros(3), SensitivityBudget(l2=1.0), stream(40, 0), boundary=boundary
        )
        for e in (0.5, 0.8, 1.2):
            step(session, target_eps=e)
        h = np.array([0.6, 0.0, 0.8])
        sample = validate.privacy_loss_sample(session, boundary, h, session_id=7)
        assert list(sample.losses) == realized_privacy_loss(session, h)
        assert sample.session_id == 7
        assert len(sample.times) == 3
        assert all(v > 0 for v in sample.boundary_values)


class TestMcEstimate:
    def test_standard_error(self):
        est = validate.McEstimate(estimate=0.25, trials=400)
        assert est.se == pytest.approx(math.sqrt(0.25 * 0.75 / 400))
