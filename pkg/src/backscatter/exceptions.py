"""Exception types raised across the package."""


class BackscatterError(Exception):
    """Base class for all errors raised by this package."""


class NearDegenerateRadii(BackscatterError, ValueError):
    """Squared radii too close for the partial-fraction closed form."""


class DegenerateRadii(BackscatterError, ValueError):
    pass


class QuadratureBudgetExceeded(BackscatterError, RuntimeError):
    pass


class DerivativeOrderTooHigh(BackscatterError, ValueError):
    pass


class TableRangeExceeded(BackscatterError, ValueError):
    pass


class UnstableTimestep(BackscatterError, ValueError):
    pass


class LatticeTooCoarse(BackscatterError, ValueError):
    """The frequency lattice cannot resolve the potential or would alias the kernel."""


class InsufficientSamples(BackscatterError, RuntimeError):
    pass


class FitFailed(BackscatterError, RuntimeError):
    pass


class CounterexampleFound(BackscatterError, AssertionError):
    pass


class BoundViolated(BackscatterError, AssertionError):
    pass
