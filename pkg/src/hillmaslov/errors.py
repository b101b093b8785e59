"""Exception hierarchy shared by the package."""


class HillMaslovError(Exception):
    """Base class for all package errors."""


class NumericalError(HillMaslovError):
    """A numerical routine failed to deliver a trustworthy answer."""


class ConvergenceError(NumericalError):
    """An iterative eigen-solver hit its iteration cap."""


class ResolutionError(NumericalError):
    """Integrator or rank decision is not resolved at the current settings."""


class NearSingularError(NumericalError):
    """A matrix that must be invertible has an eigenvalue at (numerical) zero."""


class ConfigError(HillMaslovError):
    """Invalid run configuration."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
