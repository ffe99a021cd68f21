"""Exception types raised by torsionstab."""


class TorsionStabError(Exception):
    """Base class for all package errors."""


class ConvergenceError(TorsionStabError):
    def __init__(self, message, iterations=None):
        super().__init__(message)
        self.iterations = iterations


class DegenerateInitialConditionError(TorsionStabError, ValueError):
    """r0 = 0: the trajectory is the equilibrium point, not a curve."""


class EquilibriumError(TorsionStabError):
    """The velocity vanished numerically, so curvatures are undefined."""


class UnsupportedSizeError(TorsionStabError, ValueError):
    pass


class IllConditionedSpectrumError(TorsionStabError):
    pass


class PreconditionError(TorsionStabError, ValueError):
    pass


class InsufficientTraceError(TorsionStabError):
    pass
