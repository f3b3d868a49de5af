"""Exception hierarchy shared by all modules.

The CLI maps these onto process exit codes: configuration problems exit
with 2, numerical failures with 3 and dynamical instability with 4.
"""

from __future__ import annotations


class GeoniumError(Exception):
    """Base class for every error raised by the package."""


class ConfigError(GeoniumError, ValueError):
    """Invalid or inconsistent configuration.

    Parameters
    ----------
    message : str
        Human readable description.
    key : str, optional
        Dotted configuration key that triggered the failure.
    """

    def __init__(self, message: str, key: str | None = None):
        self.key = key
        if key is not None and key not in message:
            message = f"{key}: {message}"
        super().__init__(message)


class HierarchyError(ConfigError):
    """Mode frequencies violate omega_z <= omega_c."""


class UnsupportedLimitError(ConfigError):
    """A parameter sits on a limit that the closed forms cannot represent."""


class NumericalError(GeoniumError, ArithmeticError):
    """Base class for numerical failures."""


class SteadyStateError(NumericalError):
    """No admissible real root of the steady-state equation."""


class IntegrationError(NumericalError):
    """Quadrature did not reach the requested tolerance.

    Attributes
    ----------
    estimate : complex
        Best available value of the integral.
    error : float
        Error estimate accompanying ``estimate``.
    """

    def __init__(self, message: str, estimate: complex = float("nan"), error: float = float("inf")):
        self.estimate = estimate
        self.error = error
        super().__init__(message)


class SingularMatrixError(NumericalError):
    """Gaussian elimination met a vanishing pivot."""

    def __init__(self, message: str, pivot: float = 0.0):
        self.pivot = pivot
        super().__init__(message)


class TruncationError(NumericalError):
    """A Fock-space or polynomial truncation is too small."""


class DegeneracyError(NumericalError):
    """A quadratic form or outcome probability is degenerate."""


class DomainError(NumericalError):
    """A phase-space grid does not contain the function it samples."""


class InstabilityError(GeoniumError):
    """The linearised dynamics has an eigenvalue with Re >= 0."""

    def __init__(self, message: str, eigenvalues=None):
        self.eigenvalues = eigenvalues
        super().__init__(message)
