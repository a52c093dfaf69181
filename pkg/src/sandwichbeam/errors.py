"""Exception types shared across the package.

The CLI maps ValidationError to exit code 1 and NumericalError (and its
subclasses) to exit code 2.
"""


class SandwichBeamError(Exception):
    """Base class for all package-specific errors."""


class ValidationError(SandwichBeamError, ValueError):
    """Invalid user input: bad material data, grid size, config values."""


class NumericalError(SandwichBeamError, RuntimeError):
    """Numerical failure: non-convergence, singularity, stale workspace."""


class NonConvergenceError(NumericalError):
    """An eigenvalue computation failed to converge."""


class SingularOperatorError(NumericalError):
    """A matrix that must be invertible was found (numerically) singular."""
