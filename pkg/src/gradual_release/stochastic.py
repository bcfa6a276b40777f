"""Noise processes supporting adaptive reverse-time (decreasing-noise) queries.

Three path types are provided:

* `BrownianPath` -- a d-dimensional standard Brownian motion revealed at
  adaptively chosen, strictly decreasing times.  Reverse-time queries are
  answered exactly via Brownian-bridge conditioning between the origin and
  the last revealed point, so no forward grid is ever stored.
* `LaplacePath` -- a pure-jump process whose value at time t is a sum of
  coordinate-wise Laplace draws at the jump times of an inhomogeneous
  Poisson process with intensity 2/t; its marginal at time t is Laplace
  with scale t.
* `SkellamPath` -- the coordinate-wise difference of two independent
  homogeneous Poisson counting processes; integer valued.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import MonotonicityError, TimeRangeError

_TIME_ATOL = 1e-12


class BrownianPath:
    """Standard d-dimensional Brownian motion queried at decreasing times.

    Reveals must occur at times no greater than the minimum previously
    revealed time.  A re-query at an already revealed time returns the
    stored value; a query at t = 0 returns the zero vector.
    """

    def __init__(self, dim: int, rng: np.random.Generator):
        if dim < 1:
            raise ValueError(f"dim must be a positive integer, got {dim}")
        self.dim = dim
        self._rng = rng
        self._revealed: dict[float, np.ndarray] = {}
        self._min_time = math.inf

    @property
    def revealed_times(self) -> list[float]:
        """Revealed times in reveal order (strictly decreasing)."""
        return list(self._revealed)

    def reveal(self, t: float) -> np.ndarray:
        """Return B_t, drawing it if this time has not been revealed yet."""
        t = float(t)
        if t < 0:
            raise ValueError(f"query time must be nonnegative, got {t}")
        if t == 0.0:
            return np.zeros(self.dim)
        if t in self._revealed:
            return self._revealed[t].copy()
        # Reject before any RNG consumption.
        if t > self._min_time:
            raise MonotonicityError(
                f"query at t={t} exceeds minimum revealed time {self._min_time}"
            )
        if math.isinf(self._min_time):
            value = self._rng.normal(0.0, math.sqrt(t), self.dim)
        else:
            # Bridge between B_0 = 0 and the minimum revealed point (t_m, v).
            t_m = self._min_time
            v = self._revealed[t_m]
            mean = (t / t_m) * v
            var = t * (t_m - t) / t_m
            value = mean + self._rng.normal(0.0, math.sqrt(var), self.dim)
        self._revealed[t] = value
        self._min_time = t
        return value.copy()


class LaplacePath:
    """Pure-jump process with Laplace(t) marginals on [eta, t_hi].

    The value at time t is the sum of all jump contributions with jump time
    <= t.  Jump 0 sits at eta and contributes a coordinate-wise Laplace(eta)
    vector; subsequent jump times follow the time-rescaling recursion
    T_{n+1} = T_n * exp(E/2) with E standard exponential, equivalent to an
    inhomogeneous Poisson process with intensity 2/t.  Jump n contributes a
    coordinate-wise Laplace vector with scale T_n.
    """

    def __init__(self, dim: int, eta: float, t_hi: float, rng: np.random.Generator):
        if dim < 1:
            raise ValueError(f"dim must be a positive integer, got {dim}")
        if eta <= 0:
            raise ValueError(f"eta must be positive, got {eta}")
        if t_hi < eta:
            raise ValueError(f"t_hi={t_hi} must be >= eta={eta}")
        self.dim = dim
        self.eta = float(eta)
        self.t_hi = float(eta)
        self._rng = rng
        self._jump_times = [self.eta]
        self._values = [rng.laplace(0.0, self.eta, dim)]
        self._cumsum = [self._values[0].copy()]
        # First candidate jump time beyond the simulated range; retained so
        # extension never alters the realization below the old t_hi.
        self._next_time = self.eta * math.exp(rng.standard_exponential() / 2.0)
        self.extend(t_hi)

    @property
    def jump_times(self) -> list[float]:
        return list(self._jump_times)

    def extend(self, new_t_hi: float) -> None:
        """Grow the simulated range; values at times <= old t_hi are unchanged."""
        if new_t_hi <= self.t_hi:
            return
        while self._next_time <= new_t_hi:
            t_n = self._next_time
            value = self._rng.laplace(0.0, t_n, self.dim)
            self._jump_times.append(t_n)
            self._values.append(value)
            self._cumsum.append(self._cumsum[-1] + value)
            self._next_time = t_n * math.exp(self._rng.standard_exponential() / 2.0)
        self.t_hi = float(new_t_hi)

    def value(self, t: float) -> np.ndarray:
        """Return Z_t, the sum of jump contributions with jump time <= t."""
        t = float(t)
        if t < self.eta - _TIME_ATOL or t > self.t_hi + _TIME_ATOL:
            raise TimeRangeError(
                f"t={t} outside simulated range [{self.eta}, {self.t_hi}]"
            )
        idx = np.searchsorted(self._jump_times, t, side="right") - 1
        return self._cumsum[max(idx, 0)].copy()


class SkellamPath:
    """Difference of two independent Poisson counting processes per coordinate."""

    def __init__(
        self,
        dim: int,
        rate_plus: float,
        rate_minus: float,
        t_hi: float,
        rng: np.random.Generator,
    ):
        if dim < 1:
            raise ValueError(f"dim must be a positive integer, got {dim}")
        if rate_plus < 0 or rate_minus < 0:
            raise ValueError("rates must be nonnegative")
        if t_hi < 0:
            raise ValueError(f"t_hi must be nonnegative, got {t_hi}")
        self.dim = dim
        self.rate_plus = float(rate_plus)
        self.rate_minus = float(rate_minus)
        self.t_hi = 0.0
        self._rng = rng
        # Arrival times per (coordinate, sign); each list always ends with one
        # arrival strictly beyond t_hi (or inf for rate 0) so extension is
        # consistent with the already simulated prefix.
        self._arrivals_plus = [[self._gap(self.rate_plus)] for _ in range(dim)]
        self._arrivals_minus = [[self._gap(self.rate_minus)] for _ in range(dim)]
        self.extend(t_hi)

    def _gap(self, rate: float) -> float:
        if rate == 0.0:
            return math.inf
        return self._rng.standard_exponential() / rate

    def extend(self, new_t_hi: float) -> None:
        if new_t_hi <= self.t_hi:
            return
        for arrivals, rate in (
            (self._arrivals_plus, self.rate_plus),
            (self._arrivals_minus, self.rate_minus),
        ):
            for times in arrivals:
                while times[-1] <= new_t_hi:
                    times.append(times[-1] + self._gap(rate))
        self.t_hi = float(new_t_hi)

    def value(self, t: float) -> np.ndarray:
        """Return X_t = P1(t) - P2(t) coordinate-wise, as integers."""
        t = float(t)
        if t < 0 or t > self.t_hi + _TIME_ATOL:
            raise TimeRangeError(f"t={t} outside simulated range [0, {self.t_hi}]")
        out = np.empty(self.dim, dtype=np.int64)
        for j in range(self.dim):
            n_plus = np.searchsorted(self._arrivals_plus[j], t, side="right")
            n_minus = np.searchsorted(self._arrivals_minus[j], t, side="right")
            out[j] = int(n_plus) - int(n_minus)
        return out
