"""Exception types raised across the pipeline."""


class SpinCImmersionError(Exception):
    """Base class for all errors raised by this package."""


class SignatureMismatch(SpinCImmersionError, ValueError):
    pass


class NotARealVector(SpinCImmersionError, ValueError):
    """A value expected to be a real grade-1 vector is not one."""

    def __init__(self, message: str, magnitude: float = float("nan")):
        super().__init__(message)
        self.magnitude = magnitude


class NotARotation(SpinCImmersionError, ValueError):
    pass


class NotSpinC(SpinCImmersionError, ValueError):
    """A multivector (or field) fails the Spin^C unit-element checks."""


class RankDeficient(SpinCImmersionError, ValueError):
    def __init__(self, message: str, node=None):
        super().__init__(message)
        self.node = node


class LiftDiscontinuity(SpinCImmersionError, RuntimeError):
    def __init__(self, message: str, node=None):
        super().__init__(message)
        self.node = node


class GridMismatch(SpinCImmersionError, ValueError):
    pass


class DomainExceeded(SpinCImmersionError, ValueError):
    pass


class NotClosedEnough(SpinCImmersionError, ValueError):
    def __init__(self, message: str, residual: float = float("nan")):
        super().__init__(message)
        self.residual = residual


class DegenerateConfiguration(SpinCImmersionError, ValueError):
    pass


class InputError(SpinCImmersionError, ValueError):
    """A file or configuration value could not be parsed; ``line``/``column`` locate it when known."""

    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        where = f" (line {line}, column {column})" if line is not None else ""
        super().__init__(message + where)
        self.line = line
        self.column = column
