"""Exception types shared across the package."""


class BwmError(Exception):
    """Base class for domain errors raised by this package."""


class IllegalParameter(BwmError, ValueError):
    pass


class DegenerateDistribution(BwmError, ValueError):
    pass


class UnsupportedOrder(BwmError, ValueError):
    pass


class NoClosedFormOracle(BwmError, NotImplementedError):
    pass


class UnsupportedFamily(BwmError, NotImplementedError):
    pass


class IndexOutOfRange(BwmError, IndexError):
    pass


class EmptySupport(BwmError, ValueError):
    pass


class GridMismatch(BwmError, ValueError):
    pass


class EmptySample(BwmError, ValueError):
    pass


class ConfigError(BwmError, ValueError):
    pass
