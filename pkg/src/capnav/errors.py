"""Exception types shared across the package."""


class CapnavError(Exception):
    """Base class for every error raised by this package."""


class InvalidParameterError(CapnavError, ValueError):
    """A constructor or operation received a physically meaningless value."""


class OutOfDomainError(CapnavError, ValueError):
    """A query point lies outside the domain an object is defined on."""


class FileFormatError(CapnavError, ValueError):
    """A structured text file violates its format.

    Carries the offending path and 1-based line number when known so a
    user can jump straight to the broken line.
    """

    def __init__(self, message: str, path: str | None = None, line: int | None = None):
        detail = message
        if path is not None:
            detail = f"{path}: {detail}"
        if line is not None:
            detail = f"{detail} (line {line})"
        super().__init__(detail)
        self.path = path
        self.line = line


class NumericalFailureError(CapnavError, RuntimeError):
    """Integration produced a non-finite state.

    ``last_state`` holds the most recent finite capsule state so a caller
    can inspect where the run went wrong.
    """

    def __init__(self, message: str, last_state=None):
        super().__init__(message)
        self.last_state = last_state


class ConfigError(CapnavError, ValueError):
    """A run configuration is malformed; names the offending key or file."""
