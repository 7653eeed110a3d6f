"""Exception types shared across the package.

The CLI maps these onto process exit codes: invalid input is a usage
problem (exit 1), a degenerate sampling domain is exit 2, and the
numerical failures are exit 3.
"""


class KoopcertError(Exception):
    """Base class for all package-specific errors."""


class InvalidInputError(KoopcertError, ValueError):
    """Malformed argument: wrong shape, non-finite values, bad config key."""


class DegenerateDomainError(KoopcertError):
    """Sampling domain rejected too many points (weight floor too high)."""


class NotPositiveDefiniteError(KoopcertError):
    """Matrix handed to a Cholesky factorization is not positive definite."""


class SolverFailureError(KoopcertError):
    """An iterative LAPACK eigensolver failed to converge."""


class SpectralAnomalyError(KoopcertError):
    """A retained eigenvalue has a non-negligible imaginary part."""


class IntegrationBlowupError(KoopcertError):
    """Trajectory escaped the guard radius or produced non-finite state."""


class DivergenceError(KoopcertError):
    """Brute-force series evaluation did not contract within the step cap."""


class ContractionViolatedError(KoopcertError):
    """Fitted operator norm is >= 1, so the Lyapunov series diverges."""


class EtaMismatchError(KoopcertError):
    """Stored state-cost samples disagree with the declared cost function."""
