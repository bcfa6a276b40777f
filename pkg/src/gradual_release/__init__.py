"""Noise-reduction mechanisms with ex-post differential-privacy accounting.

The package gradually releases a private vector under decreasing noise:
Brownian, Laplace, and Skellam noise-reduction paths (``stochastic``),
time-uniform privacy boundaries (``boundaries``), interactive release
sessions with ex-post receipts (``mechanisms``), a noise-reduced threshold
check (``threshold``), regularized ERM targets (``erm``), statistical
self-checks (``validate``), a batch experiment harness (``cli``), and a
local HTTP service for live steering (``service``).
"""

from .boundaries import (
    PrivacyBoundary,
    epsilon_schedule_to_times,
    eval_boundary,
    invert_boundary,
    tune_boundary,
)
from .errors import (
    BoundaryShapeError,
    BudgetError,
    BudgetFloorError,
    ConfigurationError,
    GradualReleaseError,
    HaltedSessionError,
    MonotonicityError,
    OptimizationError,
    StateError,
    TimeRangeError,
    UnattainablePrivacyError,
)
from .mechanisms import (
    ExPostReceipt,
    MechanismSession,
    SensitivityBudget,
    StopRecord,
    joint_privacy_loss,
    open_session,
    realized_privacy_loss,
    run_until,
    step,
)
from .stochastic import BrownianPath, LaplacePath, SkellamPath
from .threshold import (
    RatRound,
    RatSession,
    rat_expost_bound,
    rat_open,
    rat_step,
    rat_utility_margin,
)

__version__ = "0.1.0"

__all__ = [
    "BoundaryShapeError",
    "BrownianPath",
    "BudgetError",
    "BudgetFloorError",
    "ConfigurationError",
    "ExPostReceipt",
    "GradualReleaseError",
    "HaltedSessionError",
    "LaplacePath",
    "MechanismSession",
    "MonotonicityError",
    "OptimizationError",
    "PrivacyBoundary",
    "RatRound",
    "RatSession",
    "SensitivityBudget",
    "SkellamPath",
    "StateError",
    "StopRecord",
    "TimeRangeError",
    "UnattainablePrivacyError",
    "epsilon_schedule_to_times",
    "eval_boundary",
    "invert_boundary",
    "joint_privacy_loss",
    "open_session",
    "rat_expost_bound",
    "rat_open",
    "rat_step",
    "rat_utility_margin",
    "realized_privacy_loss",
    "run_until",
    "step",
    "tune_boundary",
]
