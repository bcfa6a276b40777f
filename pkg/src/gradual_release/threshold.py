"""ReducedAboveThreshold: private threshold checks with a denoising threshold.

Each round n the caller supplies a utility value (computed elsewhere; this
module never sees raw data) and a privacy level eps_n <= eps_max that is
nondecreasing across rounds.  The threshold noise zeta_n is read off one
shared Laplace-marginal path at time 2*Delta/eps_n, so it is never
resampled: successive rounds only strip noise from the threshold.  The query
noise xi_n is drawn fresh every round with scale 4*Delta/eps_n.  The session
emits 0 until the first round where utility + xi_n >= tau + zeta_n, emits 1
there, and halts.

With a constant eps schedule the threshold noise is a single Laplace draw
reused across rounds, which is exactly classical AboveThreshold.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    BudgetError,
    ConfigurationError,
    HaltedSessionError,
    MonotonicityError,
    StateError,
)
from .stochastic import LaplacePath


@dataclass(frozen=True)
class RatRound:
    index: int
    eps: float
    time: float  # 2*Delta/eps, where zeta was read
    zeta: float
    xi: float
    bit: int


@dataclass
class RatSession:
    """State of one ReducedAboveThreshold run."""

    eps_max: float
    tau: float
    delta_u: float  # sensitivity of the utility function
    zeta_path: LaplacePath
    rng: np.random.Generator
    rounds: list[RatRound] = field(default_factory=list)
    halted: bool = False

    @property
    def eta(self) -> float:
        return 2 * self.delta_u / self.eps_max

    @property
    def last_eps(self) -> float:
        return self.rounds[-1].eps if self.rounds else 0.0

    @property
    def halting_index(self) -> int | None:
        if self.halted and self.rounds and self.rounds[-1].bit == 1:
            return self.rounds[-1].index
        return None

    def transcript(self, include_noise: bool = False) -> dict:
        """Public JSON view; noise values only with an explicit debug flag."""
        rounds = []
        for r in self.rounds:
            entry = {"n": r.index, "eps": r.eps, "zeta_time": r.time, "bit": r.bit}
            if include_noise:
                entry["zeta"] = r.zeta
                entry["xi"] = r.xi
            rounds.append(entry)
        return {
            "eps_max": self.eps_max,
            "tau": self.tau,
            "delta_u": self.delta_u,
            "rounds": rounds,
            "halted": self.halted,
            "N": self.halting_index,
        }


DEFAULT_EPS_MAX = 10.0


def rat_open(
    eps_max: float,
    tau: float,
    delta_u: float,
    rng: np.random.Generator,
    t_hi: float | None = None,
) -> RatSession:
    """Open a session; the threshold path starts at eta = 2*delta_u/eps_max.

    `t_hi` presizes the path for the smallest anticipated eps; it is grown
    automatically when a round queries beyond it.
    """
    if eps_max <= 0:
        raise ConfigurationError(f"eps_max must be positive, got {eps_max}")
    if delta_u <= 0:
        raise ConfigurationError(f"utility sensitivity must be positive, got {delta_u}")
    eta = 2 * delta_u / eps_max
    path = LaplacePath(1, eta, t_hi if t_hi is not None else eta, rng)
    return RatSession(eps_max=eps_max, tau=tau, delta_u=delta_u, zeta_path=path, rng=rng)


def rat_step(session: RatSession, utility_value: float, eps_n: float) -> int:
    """Run one round: compare noisy utility against the denoised threshold."""
    if session.halted:
        raise HaltedSessionError("ReducedAboveThreshold has halted")
    if eps_n > session.eps_max * (1 + 1e-12):
        raise BudgetError(f"eps_n={eps_n} exceeds eps_max={session.eps_max}")
    if eps_n < session.last_eps:
        raise MonotonicityError(
            f"eps schedule must be nondecreasing; got {eps_n} after {session.last_eps}"
        )
    t_n = 2 * session.delta_u / eps_n
    if t_n > session.zeta_path.t_hi:
        session.zeta_path.extend(t_n)
    zeta = float(session.zeta_path.value(min(t_n, session.zeta_path.t_hi))[0])
    xi = float(session.rng.laplace(0.0, 4 * session.delta_u / eps_n))
    bit = int(utility_value + xi >= session.tau + zeta)
    session.rounds.append(
        RatRound(index=len(session.rounds) + 1, eps=eps_n, time=t_n, zeta=zeta, xi=xi, bit=bit)
    )
    if bit == 1:
        session.halted = True
    return bit


def rat_expost_bound(session: RatSession, alg_receipt_eps: float) -> float:
    """Total ex-post epsilon after a successful halt: mechanism receipt + eps_N.

    When the driving mechanism charges the same schedule, this equals twice
    the schedule epsilon at the halting round.
    """
    if session.halting_index is None:
        raise StateError("session has not halted with a success bit")
    return alg_receipt_eps + session.rounds[-1].eps


def rat_utility_margin(
    gamma: float,
    weights: list[float],
    eps_list: list[float],
    delta_u: float,
) -> list[float]:
    """Per-round accuracy margins eta_n = (4*Delta/eps_n)(log(2/gamma) - log(p_n)).

    With probability at least 1 - gamma, the utility at the halting round is
    at least tau - eta_N.  A zero weight yields an infinite margin for that
    round (no guarantee there).
    """
    if not 0 < gamma < 1:
        raise ConfigurationError(f"gamma must lie in (0, 1), got {gamma}")
    if len(weights) != len(eps_list):
        raise ConfigurationError("weights and eps_list must have equal length")
    w = np.asarray(weights, dtype=float)
    if np.any(w < 0):
        raise ConfigurationError("weights must be nonnegative")
    if w.sum() > 1 + 1e-12:
        raise ConfigurationError(f"weights must sum to at most 1, got {w.sum()}")
    margins = []
    for p_n, eps_n in zip(w, eps_list):
        if p_n == 0:
            margins.append(math.inf)
        else:
            margins.append((4 * delta_u / eps_n) * (math.log(2 / gamma) - math.log(p_n)))
    return margins
