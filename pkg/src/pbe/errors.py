"""Exception hierarchy for the solver package."""


class PBEError(Exception):
    """Base class for all errors raised by this package."""


class MeshError(PBEError, ValueError):
    """Invalid mesh parameters or a violated mesh condition."""


class OutOfDomainError(PBEError, ValueError):
    """A volume or interface difference falls outside the truncated domain."""


class KernelError(PBEError, ValueError):
    """Kernel parameters outside their admissible range."""


class DiscretizationError(PBEError):
    """Cell averaging of a kernel produced a non-finite value."""


class NegativeDensityError(PBEError):
    """An explicit update produced a negative density under a compliant step."""


class FluxConsistencyError(PBEError):
    """Recurrence fluxes disagree with the directly summed fluxes."""


class StepLimitExceeded(PBEError):
    """A run needed more time steps than the configured ceiling."""


class ConfigError(PBEError, ValueError):
    """Malformed or out-of-range configuration."""
