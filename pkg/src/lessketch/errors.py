"""Exception hierarchy shared across the package."""


class SketchError(Exception):
    """Base class for every error raised by lessketch."""


class RankDeficient(SketchError, ValueError):
    pass


class SingularUpdate(SketchError, ValueError):
    pass


class NotPowerOfTwo(SketchError, ValueError):
    pass


class ZeroMatrix(SketchError, ValueError):
    pass


class InvalidDistribution(SketchError, ValueError):
    pass


class SketchTooLarge(SketchError, ValueError):
    pass


class SketchTooSmall(SketchError, ValueError):
    pass


class RankDeficientSketch(RankDeficient):
    """The sketched matrix lost column rank on every allowed redraw."""


class LeverageAtOne(SketchError, ValueError):
    pass


class NoConvergence(SketchError, RuntimeError):
    pass


class DimensionTooLarge(SketchError, ValueError):
    pass


class OutOfRange(SketchError, ValueError):
    pass


class DimensionMismatch(SketchError, ValueError):
    pass


class TooFewSamples(SketchError, ValueError):
    pass


class ZeroVector(SketchError, ValueError):
    pass


class ParseError(SketchError, ValueError):
    """Malformed libsvm input. ``lineno`` is 1-based."""

    def __init__(self, message, lineno=None):
        if lineno is not None:
            message = f"line {lineno}: {message}"
        super().__init__(message)
        self.lineno = lineno


class LibsvmIndexError(ParseError, IndexError):
    """Nonpositive, nonincreasing or out-of-range feature index."""


class ConfigError(SketchError, ValueError):
    pass


class DegenerateDataset(SketchError, ValueError):
    """The full-data optimum has zero loss, so normalized errors are undefined."""


class EmptyResults(SketchError, ValueError):
    pass
