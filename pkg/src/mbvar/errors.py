"""Exception hierarchy for mbvar."""


class MbvarError(Exception):
    """Base class for all errors raised by this package."""


class InvalidTick(MbvarError, ValueError):
    pass


class DegenerateTape(MbvarError, ValueError):
    """A tape whose totals or means make a ratio undefined."""


class UndefinedCorrelation(MbvarError, ValueError):
    """Raised when psi or chi is zero, so a = phi / (psi * chi) has no value."""


class MissingSecurity(MbvarError, KeyError):
    def __str__(self) -> str:
        return str(self.args[0]) if self.args else ""


class WeightMismatch(MbvarError, ValueError):
    pass


class ZeroShare(MbvarError, ValueError):
    """A share weight x_j(t0) of zero makes x_j(t) / x_j(t0) undefined."""


class InvalidConfig(MbvarError, ValueError):
    pass


class SpanMismatch(MbvarError, ValueError):
    pass


class ParseError(MbvarError, ValueError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class GridError(MbvarError, ValueError):
    """Tape rows do not form a complete, aligned tick grid."""


class ZeroVolume(MbvarError, ValueError):
    pass


class ConsistencyError(MbvarError, ArithmeticError):
    """Two routes to the same quantity disagree beyond tolerance."""
