"""Exception types shared across the toolkit."""


class SteerkitError(Exception):
    pass


class UnsupportedDimensionError(SteerkitError, ValueError):
    """Raised for dimensions outside the supported (prime) set."""


class NumericFailure(SteerkitError, RuntimeError):
    """A numerical routine failed to converge or stalled."""


class AmbiguousThresholdError(SteerkitError):
    """A threshold predicate was found to be non-monotone on a scan grid.

    ``samples`` holds the offending ``(p, value)`` pairs in scan order.
    """

    def __init__(self, message, samples=()):
        super().__init__(message)
        self.samples = list(samples)
