"""Exception hierarchy shared by all psifrac modules."""


class PsifracError(Exception):
    """Base class for every error raised by this package."""


class DomainError(PsifracError, ValueError):
    """An argument lies outside the domain where a quantity is defined."""


class ConfigError(PsifracError, ValueError):
    """A problem definition or configuration document is invalid."""


class ValidationError(PsifracError, ValueError):
    """A sampled property check (monotonicity, bounds, grid size) failed."""


class ContractionError(ConfigError):
    """The Bielecki contraction condition ``Lf / tau < 1`` does not hold."""


class ConvergenceError(PsifracError, RuntimeError):
    """An iteration did not reach its tolerance."""
