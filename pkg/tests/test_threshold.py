"""Unit tests for the noise-reduced above-threshold check."""

import math

import numpy as np
import pytest

from gradual_release import (
    BudgetError,
    ConfigurationError,
    HaltedSessionError,
    MonotonicityError,
    StateError,
    rat_expost_bound,
    rat_open,
    rat_step,
    rat_utility_margin,
)
from gradual_release._rng import stream


class TestOpen:
    def test_eta_formula(self):
        session = rat_open(10.0, 0.0, 0.1, stream(0, 0))
        assert session.eta == pytest.approx(0.02)

    def test_zero_sensitivity_rejected(self):
        with pytest.raises(ConfigurationError):
            rat_open(10.0, 0.0, 0.0, stream(0, 0))

    def test_nonpositive_eps_max_rejected(self):
        with pytest.raises(ConfigurationError):
            rat_open(0.0, 0.0, 0.1, stream(0, 0))

    def test_equal_seeds_share_zeta_path(self):
        a = rat_open(2.0, 0.0, 0.1, stream(1, 0), t_hi=4.0)
        b = rat_open(2.0, 0.0, 0.1, stream(1, 0), t_hi=4.0)
        assert a.zeta_path.jump_times == b.zeta_path.jump_times


class TestStep:
    def test_huge_utility_halts(self):
        hits = 0
        for i in range(200):
            session = rat_open(1.0, 0.0, 0.1, stream(2, i))
            if rat_step(session, 1e6, 1.0) == 1:
                hits += 1
        assert hits == 200

    def test_budget_and_monotonicity_errors(self):
        session = rat_open(1.0, 0.0, 0.1, stream(3, 0))
        with pytest.raises(BudgetError):
            rat_step(session, -1e6, 2.0)
        rat_step(session, -1e6, 0.5)
        with pytest.raises(MonotonicityError):
            rat_step(session, -1e6, 0.4)

    def test_halted_session_rejects_steps(self):
        session = rat_open(1.0, 0.0, 0.1, stream(4, 0))
        assert rat_step(session, 1e6, 1.0) == 1
        with pytest.raises(HaltedSessionError):
            rat_step(session, 1e6, 1.0)

    def test_constant_eps_shares_one_zeta(self):
        # Classical AboveThreshold: with a constant schedule the threshold
        # noise is a single Laplace draw reused every round.
        session = rat_open(1.0, 0.0, 0.1, stream(5, 0))
        for _ in range(5):
            rat_step(session, -1e6, 1.0)
        zetas = {r.zeta for r in session.rounds}
        assert len(zetas) == 1

    def test_symmetric_bit_rate_at_threshold(self):
        hits = 0
        trials = 3000
        for i in range(trials):
            session = rat_open(1.0, 0.5, 0.1, stream(6, i))
            hits += rat_step(session, 0.5, 1.0)
        assert 0.4 < hits / trials < 0.6

    def test_decreasing_eps_reuses_shared_path(self):
        session = rat_open(4.0, 0.0, 0.1, stream(7, 0))
        rat_step(session, -1e6, 1.0)
        rat_step(session, -1e6, 1.0)
        rat_step(session, -1e6, 2.0)
        r = session.rounds
        assert r[0].zeta == r[1].zeta  # equal times, identical path value
        assert r[2].time == pytest.approx(0.1)
        # The later (smaller-time) read comes from the same path realization.
        assert r[2].zeta == session.zeta_path.value(r[2].time)[0]


class TestAccounting:
    def test_expost_bound_is_additive(self):
        session = rat_open(1.0, 0.0, 0.1, stream(8, 0))
        rat_step(session, 1e6, 0.3)
        assert rat_expost_bound(session, 0.3) == pytest.approx(0.6)

    def test_first_round_at_eps_max(self):
        session = rat_open(2.0, 0.0, 0.1, stream(9, 0))
        rat_step(session, 1e6, 2.0)
        assert rat_expost_bound(session, 0.7) == pytest.approx(2.7)

    def test_unhalted_session_rejected(self):
        session = rat_open(1.0, 0.0, 0.1, stream(10, 0))
        rat_step(session, -1e6, 0.5)
        with pytest.raises(StateError):
            rat_expost_bound(session, 0.5)

    def test_transcript_hides_noise_by_default(self):
        session = rat_open(1.0, 0.0, 0.1, stream(11, 0))
        rat_step(session, 1e6, 1.0)
        public = session.transcript()
        assert "zeta" not in public["rounds"][0]
        debug = session.transcript(include_noise=True)
        assert "zeta" in debug["rounds"][0] and "xi" in debug["rounds"][0]
        assert public["N"] == 1


class TestMargins:
    def test_frozen_formula_value(self):
        # gamma = 2/e^2 makes ln(2/gamma) = 2; single round, p = 1.
        margins = rat_utility_margin(2 * math.exp(-2.0), [1.0], [1.0], 1.0)
        assert margins == [pytest.approx(8.0)]

    def test_linearity_in_sensitivity(self):
        m1 = rat_utility_margin(0.1, [0.5, 0.5], [0.5, 1.0], 1.0)
        m2 = rat_utility_margin(0.1, [0.5, 0.5], [0.5, 1.0], 2.0)
        assert m2 == [pytest.approx(2 * v) for v in m1]

    def test_zero_weight_infinite_margin(self):
        margins = rat_utility_margin(0.1, [0.0, 1.0], [0.5, 1.0], 1.0)
        assert math.isinf(margins[0]) and math.isfinite(margins[1])

    def test_invalid_weights_rejected(self):
        with pytest.raises(ConfigurationError):
            rat_utility_margin(0.1, [0.8, 0.8], [0.5, 1.0], 1.0)
        with pytest.raises(ConfigurationError):
            rat_utility_margin(1.5, [1.0], [0.5], 1.0)
