"""Shared exception types for the gradual-release toolkit."""


class GradualReleaseError(Exception):
    """Base class for all toolkit errors."""


class MonotonicityError(GradualReleaseError, ValueError):
    """A query or request violates the required time/epsilon ordering."""


class TimeRangeError(GradualReleaseError, ValueError):
    """A query time falls outside the simulated range of a path."""


class UnattainablePrivacyError(GradualReleaseError, ValueError):
    """A target epsilon lies at or below the boundary's asymptotic floor."""


class BoundaryShapeError(GradualReleaseError, RuntimeError):
    """A boundary failed its numeric monotonicity check."""


class ConfigurationError(GradualReleaseError, ValueError):
    """A session or experiment was configured inconsistently."""


class BudgetError(GradualReleaseError, ValueError):
    """A request exceeds an epsilon budget cap."""


class BudgetFloorError(GradualReleaseError, ValueError):
    """A request falls below the session's minimum allowed time."""


class HaltedSessionError(GradualReleaseError, RuntimeError):
    """The session already halted; no further steps are accepted."""


class StateError(GradualReleaseError, RuntimeError):
    """An operation was invoked in an invalid session state."""


class OptimizationError(GradualReleaseError, RuntimeError):
    """An iterative solver failed to converge within its iteration cap."""
