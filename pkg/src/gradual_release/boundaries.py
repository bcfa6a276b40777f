"""Time-uniform privacy boundaries: evaluation, inversion, and tuning.

A boundary psi maps a noise time t > 0 to the privacy level that holds
simultaneously over all query times with probability 1 - delta.  Two
families are supported:

* mixture:  psi(t) = D^2/(2t) + (D/t) * sqrt(2(t+rho) * log((1/delta) * sqrt((t+rho)/rho)))
* linear:   psi(t) = (D/t) * (D/2 + b) + D*a,   with 2ab = log(1/delta)

where D is the l2 sensitivity.  Both are strictly decreasing in t on the
working range; this is verified numerically at construction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import BoundaryShapeError, MonotonicityError, UnattainablePrivacyError

# Working range over which monotonicity is grid-checked at construction.
_T_LO = 1e-6
_T_HI = 1e6
_GRID_POINTS = 120
_LINEAR_CONSTRAINT_RTOL = 1e-12


@dataclass(frozen=True)
class PrivacyBoundary:
    """Immutable boundary record; construct via `mixture_boundary` / `linear_boundary`."""

    kind: str  # "mixture" | "linear"
    delta: float
    sensitivity: float
    rho: float | None = None
    a: float | None = None
    b: float | None = None

    def __post_init__(self):
        if self.kind not in ("mixture", "linear"):
            raise ValueError(f"unknown boundary kind {self.kind!r}")
        if not 0 < self.delta < 1:
            raise ValueError(f"delta must lie in (0, 1), got {self.delta}")
        if self.sensitivity <= 0:
            raise ValueError(f"sensitivity must be positive, got {self.sensitivity}")
        if self.kind == "mixture":
            if self.rho is None or self.rho <= 0:
                raise ValueError(f"mixture boundary requires rho > 0, got {self.rho}")
        else:
            if self.a is None or self.b is None or self.a <= 0 or self.b <= 0:
                raise ValueError("linear boundary requires a > 0 and b > 0")
            target = math.log(1.0 / self.delta)
            if abs(2 * self.a * self.b - target) > _LINEAR_CONSTRAINT_RTOL * target:
                raise ValueError(
                    f"linear boundary requires 2ab = log(1/delta); "
                    f"got 2ab={2 * self.a * self.b}, log(1/delta)={target}"
                )
        _check_decreasing(self)

    @property
    def floor(self) -> float:
        """Infimum of psi over t > 0 (the asymptotic privacy floor)."""
        return self.sensitivity * self.a if self.kind == "linear" else 0.0

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "delta": self.delta,
            "sensitivity": self.sensitivity,
            "rho": self.rho,
            "a": self.a,
            "b": self.b,
        }


def eval_boundary(boundary: PrivacyBoundary, t: float) -> float:
    """Evaluate psi(t) for t > 0."""
    if t <= 0:
        raise ValueError(f"boundary is defined for t > 0, got t={t}")
    d = boundary.sensitivity
    if boundary.kind == "mixture":
        rho = boundary.rho
        inner = (1.0 / boundary.delta) * math.sqrt((t + rho) / rho)
        return d * d / (2 * t) + (d / t) * math.sqrt(2 * (t + rho) * math.log(inner))
    return (d / t) * (d / 2 + boundary.b) + d * boundary.a


def _check_decreasing(boundary: PrivacyBoundary) -> None:
    grid = np.logspace(math.log10(_T_LO), math.log10(_T_HI), _GRID_POINTS)
    vals = [eval_boundary(boundary, t) for t in grid]
    diffs = np.diff(vals)
    if not np.all(diffs < 0):
        raise BoundaryShapeError(
            f"{boundary.kind} boundary is not strictly decreasing on "
            f"[{_T_LO}, {_T_HI}] for parameters {boundary.to_dict()}"
        )
    if not all(math.isfinite(v) and v > 0 for v in vals):
        raise BoundaryShapeError("boundary evaluation is not finite and positive")


def invert_boundary(
    boundary: PrivacyBoundary, target_eps: float, rtol: float = 1e-10
) -> float:
    """Return the unique t with psi(t) = target_eps.

    This is the least noise time whose boundary value does not exceed the
    target; psi is strictly decreasing, so the root is found by bracketed
    bisection.
    """
    if target_eps <= boundary.floor:
        raise UnattainablePrivacyError(
            f"target eps={target_eps} is at or below the boundary floor "
            f"{boundary.floor}"
        )
    lo, hi = _T_LO, _T_HI
    while eval_boundary(boundary, lo) < target_eps:
        lo /= 16.0
        if lo < 1e-300:
            raise BoundaryShapeError("failed to bracket the root from below")
    while eval_boundary(boundary, hi) > target_eps:
        hi *= 16.0
        if hi > 1e300:
            raise UnattainablePrivacyError(
                f"target eps={target_eps} unattainable within numeric range"
            )
    if eval_boundary(boundary, lo) < eval_boundary(boundary, hi):
        raise BoundaryShapeError("non-monotone bracket detected")
    while hi - lo > rtol * hi:
        mid = 0.5 * (lo + hi)
        if eval_boundary(boundary, mid) > target_eps:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _golden_minimize(fun, lo: float, hi: float, rtol: float = 1e-8) -> float:
    """Golden-section minimum of a unimodal function on [lo, hi]."""
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = fun(c), fun(d)
    while b - a > rtol * max(abs(a), abs(b)):
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = fun(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = fun(d)
    return 0.5 * (a + b)


def tune_boundary(
    kind: str, sensitivity: float, delta: float, target_eps: float
) -> PrivacyBoundary:
    """Return the boundary of `kind` minimizing the time needed to claim `target_eps`.

    Linear boundaries are optimized over a in (0, target_eps/sensitivity)
    with b pinned by 2ab = log(1/delta); mixture boundaries over log-rho in
    [1e-6, 1e6].
    """
    if target_eps <= 0:
        raise UnattainablePrivacyError(f"target eps must be positive, got {target_eps}")
    if kind == "linear":
        ln1d = math.log(1.0 / delta)
        a_max = target_eps / sensitivity

        def required_time(a: float) -> float:
            b = ln1d / (2 * a)
            return sensitivity * (sensitivity / 2 + b) / (target_eps - sensitivity * a)

        eps_pad = 1e-9 * a_max
        a_star = _golden_minimize(required_time, eps_pad, a_max - eps_pad)
        return PrivacyBoundary(
            kind="linear",
            delta=delta,
            sensitivity=sensitivity,
            a=a_star,
            b=ln1d / (2 * a_star),
        )
    if kind == "mixture":

        def required_time_log_rho(log_rho: float) -> float:
            bnd = PrivacyBoundary(
                kind="mixture", delta=delta, sensitivity=sensitivity, rho=math.exp(log_rho)
            )
            return invert_boundary(bnd, target_eps)

        log_rho_star = _golden_minimize(
            required_time_log_rho, math.log(1e-6), math.log(1e6)
        )
        return PrivacyBoundary(
            kind="mixture",
            delta=delta,
            sensitivity=sensitivity,
            rho=math.exp(log_rho_star),
        )
    raise ValueError(f"unknown boundary kind {kind!r}")


def epsilon_schedule_to_times(
    boundary: PrivacyBoundary, eps_list: list[float]
) -> list[float]:
    """Element-wise boundary inversion for a nondecreasing epsilon schedule."""
    eps = list(eps_list)
    for prev, cur in zip(eps, eps[1:]):
        if cur < prev:
            raise MonotonicityError("epsilon schedule must be nondecreasing")
    return [invert_boundary(boundary, e) for e in eps]
