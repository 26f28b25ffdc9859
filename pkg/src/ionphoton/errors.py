"""Exception hierarchy shared by all ionphoton modules."""


class IonPhotonError(Exception):
    """Base class for all package errors."""


class ConfigError(IonPhotonError):
    """Invalid or incomplete configuration (CLI exit code 2)."""


class SolverError(IonPhotonError):
    """Iterative solver failed to converge; carries the last residual."""

    def __init__(self, message: str, residual: float):
        super().__init__(f"{message} (last residual {residual:.3e} N)")
        self.residual = residual


class InstabilityError(IonPhotonError):
    """Ions approached collision during the equilibrium iteration."""


class UnstableConfigurationError(IonPhotonError):
    """Hessian has a non-positive eigenvalue: no stable crystal."""


class UncompilableError(IonPhotonError):
    """Requested pulse sequence cannot be compiled (e.g. zero coupling)."""


class DomainError(IonPhotonError, ValueError):
    """A physical parameter is outside the operation's domain."""
