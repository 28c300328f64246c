"""Exception hierarchy shared by every module."""


class PadganError(Exception):
    """Base class for all errors raised by mopadgan."""


class NotPositiveDefinite(PadganError):
    pass


class NoConvergence(PadganError):
    pass


class ShapeMismatch(PadganError, ValueError):
    pass


class QualityOutOfRange(PadganError, ValueError):
    pass


class DegenerateBatch(PadganError):
    """The similarity kernel stayed singular through the whole jitter ladder."""

    def __init__(self, message: str, step: int | None = None):
        self.step = step
        if step is not None:
            message = f"step {step}: {message}"
        super().__init__(message)


class NonFiniteLoss(PadganError):
    pass


class EmptyDataset(PadganError, ValueError):
    pass


class PoolTooSmall(PadganError, ValueError):
    pass


class MalformedRow(PadganError, ValueError):
    def __init__(self, line: int, message: str):
        self.line = line
        super().__init__(f"line {line}: {message}")


class IoError(PadganError, OSError):
    pass


class ConfigError(PadganError, ValueError):
    pass
