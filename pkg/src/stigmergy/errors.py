"""Exception hierarchy shared by the simulator modules."""


class StigmergyError(Exception):
    """Base class for all simulator errors."""


class ConfigError(StigmergyError, ValueError):
    """Invalid parameters or configuration document."""


class NumericalInstabilityError(StigmergyError, ArithmeticError):
    """A solver produced non-finite values."""


class KernelConstructionError(StigmergyError):
    """The kernel pipeline produced a degenerate response."""


class ExhaustionError(StigmergyError):
    """Not enough eligible agents remain to form a batch."""


class EpisodeFailure(StigmergyError):
    """An episode ran out of agents before reaching its requirement.

    The partial turn log is kept on ``log``.
    """

    def __init__(self, message, log=None):
        super().__init__(message)
        self.log = list(log or [])
