"""Exception hierarchy shared by all modules."""


class QadpaError(Exception):
    """Base class for errors raised by this package."""


class ParameterError(QadpaError, ValueError):
    """An input violates a documented precondition."""


class SingularityError(QadpaError, ArithmeticError):
    """A formula hit a pole (tan singularity, z = -zref, singular stamp)."""


class FrequencyMismatchError(QadpaError, ValueError):
    """Two-ports evaluated at different frequencies were combined."""


class DegenerateSignalError(QadpaError, ArithmeticError):
    """A waveform has no fundamental component to reference against."""


class ParseError(QadpaError, ValueError):
    """Malformed text input; carries the 1-based line number when known."""

    def __init__(self, message, line=None, source=None):
        self.line = line
        self.source = source
        where = ""
        if source is not None:
            where += f"{source}:"
        if line is not None:
            where += f"{line}:"
        super().__init__(f"{where} {message}" if where else message)
