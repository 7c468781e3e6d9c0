"""Exception hierarchy shared by the package."""


class SpectralRenyiError(Exception):
    """Base class for all package errors."""


class InvalidArgumentError(SpectralRenyiError, ValueError):
    """An argument is outside the operation's contract (bad size, off-grid, ...)."""


class DomainError(SpectralRenyiError, ValueError):
    """A value lies outside the mathematical domain (nonpositive spectrum, |rho| >= 1, ...)."""


class SingularFrequencyError(DomainError):
    """A log-spectrum or its gradient was requested where the model vanishes."""


class CapabilityError(SpectralRenyiError, RuntimeError):
    """The requested computation exceeds what the implementation supports."""


class LinearAlgebraError(SpectralRenyiError, ArithmeticError):
    """A matrix that must be positive definite could not be factorized."""


class ConfigError(SpectralRenyiError, ValueError):
    """An experiment or CLI configuration is malformed."""
