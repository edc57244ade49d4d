"""Exception types raised across the package."""


class SeaError(Exception):
    """Base class for all errors raised by seasparse."""


class NumericalError(SeaError):
    """A numerical routine could not produce a usable answer."""


class ZeroColumn(SeaError):
    def __init__(self, index):
        super().__init__(f"column {index} has (numerically) zero norm")
        self.index = index


class NoConvergence(NumericalError):
    pass


class DimensionMismatch(SeaError, ValueError):
    pass


class EmptySupport(SeaError, ValueError):
    pass


class MissingGroundTruth(SeaError):
    pass


class ZeroObservation(SeaError, ValueError):
    pass


class ZeroMass(SeaError, ValueError):
    pass


class TooLarge(SeaError):
    """Exhaustive enumeration would exceed the configured cap."""


class DegenerateRIP(NumericalError):
    pass


class ConfigError(SeaError, ValueError):
    pass
