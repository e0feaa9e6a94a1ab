"""Exception hierarchy and warning categories."""


class KzcalError(Exception):
    """Base class for all errors raised by this package."""


class InvalidParamsError(KzcalError):
    """Model parameters violate a hard invariant (hbar = 0, bad kind, ...)."""


class SingularConfigurationError(InvalidParamsError):
    """Coordinates closer than epsilon_x; pair kernels would blow up."""


class InvalidWeightError(KzcalError):
    """Occupation numbers inconsistent with the number of sites."""


class InvalidIndexError(KzcalError):
    """A multi-index entry falls outside 1..N."""


class InvalidSitesError(KzcalError):
    """Two-site operator called with i = j or an out-of-range site."""


class DimensionCapError(KzcalError):
    """Weight subspace dimension exceeds the configured cap."""


class UnsupportedOrderError(KzcalError):
    """Derivative or covariant-power order outside the implemented range."""


class UnsupportedRelationError(KzcalError):
    """Eigen-relation not defined for the requested (kind, k) combination."""


class SingularPathError(KzcalError):
    """Integration path touches or crosses a collision hyperplane x_i = x_j."""


class IntegrationFailureError(KzcalError):
    """Adaptive stepper failed (step underflow or non-convergence)."""


class DegenerateSpectrumError(KzcalError):
    """Joint diagonalization kept failing residual checks after retries."""


class ConfigError(KzcalError):
    """Run configuration failed to parse or validate."""


class ModelAssumptionWarning(UserWarning):
    """A soft model assumption (distinct twists, n >= N) is violated."""


class DegenerateProjectionWarning(UserWarning):
    """The all-ones projection of a state is numerically zero."""
