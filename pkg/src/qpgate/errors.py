"""Exception hierarchy shared by every module of the simulator."""


class SimulationError(Exception):
    """Base class for all errors raised by qpgate."""


class OccupationAboveCap(SimulationError, ValueError):
    pass


class UnknownMode(SimulationError, KeyError):
    pass


class ModeMismatch(SimulationError, ValueError):
    pass


class DuplicateMode(SimulationError, ValueError):
    pass


class ZeroNormState(SimulationError, ArithmeticError):
    """The state has (numerically) zero norm, e.g. an impossible herald."""


class LossModeNotVacuum(SimulationError, ValueError):
    pass


class CapTooSmall(SimulationError, ValueError):
    """A truncation cap cannot hold the requested state to tolerance."""


class NoSolution(SimulationError, ValueError):
    pass


class InvalidPattern(SimulationError, ValueError):
    pass


class ConfigError(SimulationError, ValueError):
    pass
