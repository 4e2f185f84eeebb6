"""Exception types shared across the package."""


class PassiveQKDError(Exception):
    """Base class for all package errors."""


class DomainError(PassiveQKDError, ValueError):
    """An argument lies outside the domain of a formula."""


class EmptyRegionError(PassiveQKDError):
    """A post-selection region has zero probability once clipped to I < I*_theta."""


class ToleranceNotMetError(PassiveQKDError):
    """Adaptive quadrature hit its refinement limit before converging."""


class DegenerateStateError(PassiveQKDError):
    """The normalisation of an n-photon post-selected state underflowed."""


class InfeasibleLPError(PassiveQKDError):
    """A decoy-state linear program has no feasible point."""

    def __init__(self, message, instance=None):
        super().__init__(message)
        self.instance = instance


class LPNumericalError(PassiveQKDError):
    """The LP solver failed or returned a point that does not verify."""

    def __init__(self, message, instance=None):
        super().__init__(message)
        self.instance = instance


class ConfigError(PassiveQKDError):
    """A sweep configuration could not be parsed or is inconsistent."""
