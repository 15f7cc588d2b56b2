"""Exception types raised across the package."""


class CritflowError(Exception):
    pass


class ConfigurationError(CritflowError, ValueError):
    """Invalid mesh, problem or scenario parameters."""


class MeshMismatchError(CritflowError, ValueError):
    pass


class SolverError(CritflowError, RuntimeError):
    """A linear or eigen solve failed to reach its tolerance."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class InvariantViolation(CritflowError, RuntimeError):
    pass


class DomainError(CritflowError, ValueError):
    """Quotient evaluated where the weighted critical integral is not positive."""


class AdmissibilityError(CritflowError, ValueError):
    pass


class StagnationError(CritflowError, RuntimeError):
    def __init__(self, message, step=None):
        super().__init__(message)
        self.step = step


class ConsistencyError(CritflowError, RuntimeError):
    """Rescaling identities failed; points at a gradient bug."""


class ResolutionError(CritflowError, ValueError):
    pass


class UnsupportedDimensionError(CritflowError, ValueError):
    pass
