"""Exception hierarchy shared by every hofa module."""


class HofaError(Exception):
    """Base class; the CLI maps every subclass to exit code 2."""


class CapacityExceeded(HofaError):
    pass


class DimensionError(HofaError, ValueError):
    pass


class RangeError(HofaError, ValueError):
    pass


class InvalidOrder(HofaError, ValueError):
    pass


class NotInjective(HofaError, ValueError):
    pass


class NotMeasurable(HofaError, ValueError):
    pass


class NotARefinement(HofaError, ValueError):
    pass


class SignatureMismatch(HofaError, ValueError):
    pass


class ParseError(HofaError, ValueError):
    def __init__(self, message, line=None, source=None):
        self.line = line
        self.source = source
        where = ""
        if source is not None:
            where += f"{source}:"
        if line is not None:
            where += f"{line}:"
        super().__init__(f"{where} {message}" if where else message)


class NonConvergence(HofaError):
    """Raised only on request; decompose() normally returns a flagged result."""
