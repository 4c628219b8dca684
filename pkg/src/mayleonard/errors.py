"""Exception types shared across the package."""


class MayLeonardError(Exception):
    """Base class for every error raised by this package."""


class OverflowSignal(MayLeonardError, OverflowError):
    """An operation produced a non-finite value."""


class SingularMatrixError(MayLeonardError):
    """The coupling matrix is numerically singular."""


class ZeroEtaError(MayLeonardError):
    """The growth rate is too close to zero to rescale time by it."""


class PoleError(MayLeonardError):
    """Evaluation requested at, or too close to, a denominator zero."""


class IllConditionedError(MayLeonardError):
    """A rank or degree decision in the constraint solver is ambiguous."""


class ExhaustedRetriesError(MayLeonardError):
    """Random instance generation gave up after the retry budget."""


class RoundoffFloorError(MayLeonardError):
    """Convergence-study errors sit at the round-off floor."""


class ConfigError(MayLeonardError):
    """A run configuration was rejected before any work started."""
