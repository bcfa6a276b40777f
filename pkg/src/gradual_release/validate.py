"""Monte Carlo and statistical machinery for checking the toolkit's claims.

Every check is seeded and replayable.  Estimates always carry standard
errors; nothing here reports a bare point estimate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import boundaries as bnd
from .mechanisms import MechanismSession, realized_privacy_loss


@dataclass(frozen=True)
class McEstimate:
    """A Monte Carlo proportion with its binomial standard error."""

    estimate: float
    trials: int

    def __post_init__(self):
        if self.trials <= 0:
            raise ValueError("trials must be positive")

    @property
    def se(self) -> float:
        p = self.estimate
        return math.sqrt(max(p * (1 - p), 0.0) / self.trials)


@dataclass(frozen=True)
class PrivacyLossSample:
    """A session's per-step losses against the worst-case neighbor direction."""

    session_id: int
    times: tuple[float, ...]
    losses: tuple[float, ...]
    boundary_values: tuple[float, ...]
    h: tuple[float, ...]
    projections: tuple[float, ...]  # W_T = <noise, h>/||h|| per step


def privacy_loss_sample(
    session: MechanismSession,
    boundary: bnd.PrivacyBoundary,
    h: np.ndarray,
    session_id: int = 0,
) -> PrivacyLossSample:
    """Collect (T_n, L_n, psi(T_n), W_{T_n}) for every step of a Brownian session."""
    h = np.asarray(h, dtype=float)
    losses = realized_privacy_loss(session, h)
    h_norm = float(np.linalg.norm(h))
    times, psis, projections = [], [], []
    for rec in session.history:
        times.append(rec.time)
        psis.append(bnd.eval_boundary(boundary, rec.time))
        noise = rec.iterate - session.center
        projections.append(float(noise @ h) / h_norm if h_norm > 0 else 0.0)
    return PrivacyLossSample(
        session_id=session_id,
        times=tuple(times),
        losses=tuple(losses),
        boundary_values=tuple(psis),
        h=tuple(h.tolist()),
        projections=tuple(projections),
    )


def mc_boundary_crossing(
    boundary: bnd.PrivacyBoundary,
    delta2: float,
    time_grid: np.ndarray,
    trials: int,
    seed: int,
) -> McEstimate:
    """Fraction of worst-case sessions whose loss crosses psi anywhere on the grid.

    The worst case puts the full l2 sensitivity on one direction, so losses
    reduce to D^2/(2t) + (D/t) W_t for a scalar standard Brownian motion W.
    """
    time_grid = np.asarray(time_grid, dtype=float)
    if np.any(np.diff(time_grid) >= 0):
        raise ValueError("time grid must be strictly decreasing")
    if trials < 1000:
        raise ValueError("need at least 1000 trials")
    if delta2 == 0.0:
        return McEstimate(estimate=0.0, trials=trials)
    t_inc = time_grid[::-1]  # increasing for forward simulation
    psi = np.array([bnd.eval_boundary(boundary, t) for t in t_inc])
    rng = np.random.default_rng(seed)
    increments = np.sqrt(np.diff(t_inc, prepend=0.0))
    crossed = 0
    batch = max(1, min(trials, 10_000))
    done = 0
    while done < trials:
        m = min(batch, trials - done)
        w = np.cumsum(rng.standard_normal((m, len(t_inc))) * increments, axis=1)
        loss = delta2**2 / (2 * t_inc) + (delta2 / t_inc) * w
        crossed += int(np.sum(np.any(loss > psi, axis=1)))
        done += m
    return McEstimate(estimate=crossed / trials, trials=trials)


def single_time_crossing_prob(
    boundary: bnd.PrivacyBoundary, delta2: float, t: float
) -> float:
    """Closed-form P(loss > psi(t)) at one time: a Gaussian tail.

    The loss at time t is N(D^2/(2t), D^2/t).
    """
    psi = bnd.eval_boundary(boundary, t)
    mean = delta2**2 / (2 * t)
    sd = delta2 / math.sqrt(t)
    return 0.5 * math.erfc((psi - mean) / (sd * math.sqrt(2.0)))


def line_crossing_check(
    a: float,
    b: float,
    horizon: float,
    grid_step: float,
    trials: int,
    seed: int,
) -> McEstimate:
    """Discretized frequency of Brownian paths crossing the line a*t + b.

    Finite horizon and grid resolution both bias the estimate downward; the
    exact crossing probability is exp(-2ab).
    """
    if a <= 0 or b <= 0:
        raise ValueError("a and b must be positive")
    rng = np.random.default_rng(seed)
    n_steps = int(round(horizon / grid_step))
    sqrt_dt = math.sqrt(grid_step)
    # Batch trials so the (trials x n_steps) increments stay in memory bounds.
    batch = max(1, int(2e7 // n_steps))
    crossed = 0
    done = 0
    line = a * (np.arange(1, n_steps + 1) * grid_step) + b
    while done < trials:
        m = min(batch, trials - done)
        w = np.cumsum(rng.standard_normal((m, n_steps)) * sqrt_dt, axis=1)
        crossed += int(np.sum(np.any(w >= line, axis=1)))
        done += m
    return McEstimate(estimate=crossed / trials, trials=trials)


def ks_test(samples: np.ndarray, reference_cdf) -> tuple[float, float]:
    """One-sample Kolmogorov-Smirnov statistic and asymptotic p-value.

    The p-value uses the asymptotic Kolmogorov series truncated at 100
    terms, with Stephens' small-sample correction to the effective sample
    size.
    """
    samples = np.sort(np.asarray(samples, dtype=float))
    n = len(samples)
    if n < 100:
        raise ValueError(f"KS test needs at least 100 samples, got {n}")
    cdf_vals = np.asarray(reference_cdf(samples), dtype=float)
    i = np.arange(1, n + 1)
    d_plus = np.max(i / n - cdf_vals)
    d_minus = np.max(cdf_vals - (i - 1) / n)
    d = max(d_plus, d_minus)
    sqrt_n = math.sqrt(n)
    lam = (sqrt_n + 0.12 + 0.11 / sqrt_n) * d
    k = np.arange(1, 101)
    p = 2.0 * np.sum((-1.0) ** (k - 1) * np.exp(-2.0 * (k * lam) ** 2))
    return float(d), float(min(max(p, 0.0), 1.0))


@dataclass(frozen=True)
class CfEstimate:
    """Empirical characteristic function value with bootstrap standard errors."""

    value: complex
    se_real: float
    se_imag: float
    samples: int


def empirical_cf(
    samples: np.ndarray, freq: float, n_boot: int = 200, seed: int = 0
) -> CfEstimate:
    """Mean of exp(i * freq * s) with bootstrap errors on both parts."""
    samples = np.asarray(samples, dtype=float)
    n = len(samples)
    if n < 1000:
        raise ValueError(f"empirical CF needs at least 1000 samples, got {n}")
    if freq == 0.0:
        return CfEstimate(value=1.0 + 0.0j, se_real=0.0, se_imag=0.0, samples=n)
    phases = np.exp(1j * freq * samples)
    value = complex(np.mean(phases))
    rng = np.random.default_rng(seed)
    reals, imags = np.empty(n_boot), np.empty(n_boot)
    for b in range(n_boot):
        idx = rng.integers(0, n, n)
        m = np.mean(phases[idx])
        reals[b], imags[b] = m.real, m.imag
    return CfEstimate(
        value=value,
        se_real=float(np.std(reals, ddof=1)),
        se_imag=float(np.std(imags, ddof=1)),
        samples=n,
    )
