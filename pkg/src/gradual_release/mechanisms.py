"""Interactive noise-reduction sessions with ex-post privacy accounting.

A session hides a secret center vector f(x) and answers queries at
nonincreasing noise times, revealing iterates center + path(t).  Each reveal
carries an ex-post receipt:

* Brownian sessions charge eps = psi(t) under the session's delta-privacy
  boundary.
* Laplace sessions charge the deterministic eps = l1_sensitivity / t with
  delta = 0.
* Skellam sessions release values but issue no receipts; no privacy-loss
  analysis is available for Skellam noise reduction.

`realized_privacy_loss` and `joint_privacy_loss` are validation oracles:
they read the secret center and exist only to check the accounting against
the mechanism's actual privacy loss.  They break the privacy abstraction by
design and must never back a production release decision.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import boundaries as bnd
from .errors import (
    BudgetFloorError,
    ConfigurationError,
    HaltedSessionError,
    MonotonicityError,
    StateError,
)
from .stochastic import BrownianPath, LaplacePath, SkellamPath

_EQUAL_TIME_RTOL = 1e-12


@dataclass(frozen=True)
class SensitivityBudget:
    """Sensitivities of the released function; l2 drives Brownian, l1 Laplace."""

    l2: float | None = None
    l1: float | None = None

    def __post_init__(self):
        if self.l2 is not None and self.l2 < 0:
            raise ConfigurationError(f"l2 sensitivity must be nonnegative, got {self.l2}")
        if self.l1 is not None and self.l1 < 0:
            raise ConfigurationError(f"l1 sensitivity must be nonnegative, got {self.l1}")


@dataclass(frozen=True)
class ExPostReceipt:
    step: int
    time: float
    expost_eps: float
    delta: float
    basis: str  # boundary kind or "deterministic"

    def to_dict(self) -> dict:
        return {
            "n": self.step,
            "time": self.time,
            "eps": self.expost_eps,
            "delta": self.delta,
            "basis": self.basis,
        }


@dataclass(frozen=True)
class StopRecord:
    stopped_index: int | None  # first index where the stop rule held, 1-based
    reason: str  # "target-met" | "schedule-exhausted" | "budget-floor"

    def to_dict(self) -> dict:
        return {"N": self.stopped_index, "reason": self.reason}


@dataclass(frozen=True)
class StepRecord:
    index: int
    time: float
    iterate: np.ndarray
    receipt: ExPostReceipt | None


@dataclass
class MechanismSession:
    kind: str  # "brownian" | "laplace" | "skellam"
    center: np.ndarray
    budget: SensitivityBudget
    path: BrownianPath | LaplacePath | SkellamPath
    boundary: bnd.PrivacyBoundary | None = None
    eta: float | None = None
    min_time: float | None = None  # optional budget floor (maximum eps)
    history: list[StepRecord] = field(default_factory=list)
    halted: bool = False
    stop_record: StopRecord | None = None

    @property
    def dim(self) -> int:
        return len(self.center)

    @property
    def last_time(self) -> float:
        return self.history[-1].time if self.history else math.inf

    def transcript(self) -> dict:
        """Public JSON view of the session: iterates, receipts, stop record."""
        steps = []
        for rec in self.history:
            entry = {"n": rec.index, "time": rec.time, "iterate": rec.iterate.tolist()}
            if rec.receipt is not None:
                entry["eps"] = rec.receipt.expost_eps
                entry["delta"] = rec.receipt.delta
            else:
                entry["eps"] = None
                entry["delta"] = None
            steps.append(entry)
        return {
            "kind": self.kind,
            "dim": self.dim,
            "steps": steps,
            "stop": self.stop_record.to_dict() if self.stop_record else None,
        }


def open_session(
    kind: str,
    center: np.ndarray,
    budget: SensitivityBudget,
    rng: np.random.Generator,
    boundary: bnd.PrivacyBoundary | None = None,
    eta: float | None = None,
    rates: tuple[float, float] | None = None,
    min_time: float | None = None,
) -> MechanismSession:
    """Open an interactive session around a secret center vector."""
    center = np.asarray(center, dtype=float)
    if center.ndim != 1 or not np.all(np.isfinite(center)):
        raise ConfigurationError("center must be a finite 1-d vector")
    dim = len(center)
    if kind == "brownian":
        if budget.l2 is None:
            raise ConfigurationError("Brownian sessions require an l2 sensitivity")
        if boundary is None:
            raise ConfigurationError("Brownian sessions require a privacy boundary")
        path = BrownianPath(dim, rng)
    elif kind == "laplace":
        if budget.l1 is None:
            raise ConfigurationError("Laplace sessions require an l1 sensitivity")
        if eta is None or eta <= 0:
            raise ConfigurationError("Laplace sessions require eta > 0")
        path = LaplacePath(dim, eta, eta, rng)
    elif kind == "skellam":
        if rates is None:
            raise ConfigurationError("Skellam sessions require (rate_plus, rate_minus)")
        path = SkellamPath(dim, rates[0], rates[1], 0.0, rng)
    else:
        raise ConfigurationError(f"unknown mechanism kind {kind!r}")
    return MechanismSession(
        kind=kind,
        center=center,
        budget=budget,
        path=path,
        boundary=boundary,
        eta=eta,
        min_time=min_time,
    )


def _receipt_for(session: MechanismSession, index: int, t: float) -> ExPostReceipt | None:
    if session.kind == "brownian":
        return ExPostReceipt(
            step=index,
            time=t,
            expost_eps=bnd.eval_boundary(session.boundary, t),
            delta=session.boundary.delta,
            basis=session.boundary.kind,
        )
    if session.kind == "laplace":
        return ExPostReceipt(
            step=index,
            time=t,
            expost_eps=session.budget.l1 / t,
            delta=0.0,
            basis="deterministic",
        )
    return None


def resolve_time(session: MechanismSession, time: float | None, target_eps: float | None) -> float:
    """Map a step request (explicit time or target epsilon) to a noise time."""
    if (time is None) == (target_eps is None):
        raise ConfigurationError("specify exactly one of time or target_eps")
    if time is not None:
        return float(time)
    if session.kind == "brownian":
        return bnd.invert_boundary(session.boundary, target_eps)
    if session.kind == "laplace":
        return session.budget.l1 / target_eps
    raise ConfigurationError("Skellam sessions accept only explicit times")


def step(
    session: MechanismSession,
    time: float | None = None,
    target_eps: float | None = None,
) -> tuple[np.ndarray, ExPostReceipt | None]:
    """Reveal the iterate at the requested time and append it to the history.

    A request at (numerically) the same time as the previous step is free:
    it returns the cached iterate and receipt without growing the history.
    """
    if session.halted:
        raise HaltedSessionError("session has halted; no further steps accepted")
    t = resolve_time(session, time, target_eps)
    if t <= 0:
        raise ValueError(f"step time must be positive, got {t}")
    prev = session.last_time
    if session.history and abs(t - prev) <= _EQUAL_TIME_RTOL * prev:
        last = session.history[-1]
        return last.iterate.copy(), last.receipt
    if t > prev:
        raise MonotonicityError(f"step time {t} exceeds previous time {prev}")
    if session.min_time is not None and t < session.min_time:
        session.halted = True
        session.stop_record = StopRecord(stopped_index=None, reason="budget-floor")
        raise BudgetFloorError(
            f"requested time {t} is below the session floor {session.min_time}"
        )
    if session.kind == "laplace":
        if t < session.eta - 1e-12:
            raise BudgetFloorError(f"time {t} is below the Laplace floor eta={session.eta}")
        if t > session.path.t_hi:
            session.path.extend(t)
        noise = session.path.value(t)
    elif session.kind == "skellam":
        if t > session.path.t_hi:
            session.path.extend(t)
        noise = session.path.value(t)
    else:
        noise = session.path.reveal(t)
    index = len(session.history) + 1
    iterate = session.center + noise
    receipt = _receipt_for(session, index, t)
    session.history.append(StepRecord(index=index, time=t, iterate=iterate, receipt=receipt))
    return iterate.copy(), receipt


def run_until(
    session: MechanismSession,
    stop,
    schedule: list[float],
    schedule_kind: str = "eps",
) -> tuple[list[StepRecord], StopRecord]:
    """Step through a schedule, evaluating `stop` on the revealed prefix only.

    `stop` receives the list of StepRecords revealed so far and returns a
    bool.  The session halts at the first index where it holds.
    """
    if schedule_kind not in ("eps", "time"):
        raise ConfigurationError(f"unknown schedule kind {schedule_kind!r}")
    for value in schedule:
        try:
            if schedule_kind == "eps":
                step(session, target_eps=value)
            else:
                step(session, time=value)
        except BudgetFloorError:
            return session.history, session.stop_record
        if stop(session.history):
            session.halted = True
            session.stop_record = StopRecord(
                stopped_index=len(session.history), reason="target-met"
            )
            return session.history, session.stop_record
    session.stop_record = StopRecord(stopped_index=None, reason="schedule-exhausted")
    return session.history, session.stop_record


def realized_privacy_loss(session: MechanismSession, h: np.ndarray) -> list[float]:
    """Validation oracle: per-step privacy loss against neighbor difference h.

    For a Brownian session, step n has loss
    ||h||^2 / (2 T_n) + <noise_n, h> / T_n with noise_n = iterate_n - center.
    """
    if session.kind != "brownian":
        raise StateError("realized privacy loss is defined for Brownian sessions only")
    h = np.asarray(h, dtype=float)
    if not np.all(np.isfinite(h)):
        raise ValueError("h must be finite")
    losses = []
    h_sq = float(h @ h)
    for rec in session.history:
        noise = rec.iterate - session.center
        losses.append(h_sq / (2 * rec.time) + float(noise @ h) / rec.time)
    return losses


def joint_privacy_loss(session: MechanismSession, h: np.ndarray) -> float:
    """Validation oracle: log density ratio of the full revealed tuple.

    Computes log p_{f(x)}(iterates) - log p_{f(x)-h}(iterates) by telescoping
    the conditional Gaussian densities of the path increments in increasing
    time order.  For a noise-reduction mechanism this equals the last entry
    of `realized_privacy_loss`.
    """
    if session.kind != "brownian":
        raise StateError("joint privacy loss is defined for Brownian sessions only")
    if not session.history:
        raise StateError("session has no revealed steps")
    h = np.asarray(h, dtype=float)
    # Deduplicate times, then order ascending (history is recorded descending).
    seen: dict[float, np.ndarray] = {}
    for rec in session.history:
        seen.setdefault(rec.time, rec.iterate)
    times = sorted(seen)
    values = [seen[t] for t in times]

    def log_joint(center: np.ndarray) -> float:
        total = _log_gaussian(values[0], center, times[0])
        for i in range(1, len(times)):
            dt = times[i] - times[i - 1]
            total += _log_gaussian(values[i], values[i - 1], dt)
        return total

    return log_joint(session.center) - log_joint(session.center - h)


def _log_gaussian(x: np.ndarray, mean: np.ndarray, var: float) -> float:
    diff = x - mean
    d = len(x)
    return -0.5 * float(diff @ diff) / var - 0.5 * d * math.log(2 * math.pi * var)
