"""Exception types shared across the package."""


class ApfGuardError(Exception):
    """Base class for all errors raised by this package."""


class InvalidArgumentError(ApfGuardError):
    """An argument violates a documented precondition (non-finite, wrong range, ...)."""


class DegenerateGeometryError(ApfGuardError):
    """A geometric quantity collapsed (zero separation, zero-length direction, ...)."""


class InvalidConfigurationError(ApfGuardError):
    """A parameter set is self-inconsistent (empty shaping window, bad radii ordering, ...)."""


class NotParallelError(ApfGuardError):
    """Obstacles handed to the combiner do not share a common velocity."""


class ScenarioFormatError(ApfGuardError):
    """A scenario file could not be parsed; carries the offending location."""

    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        loc = ""
        if line is not None:
            loc = f" (line {line}" + (f", column {column}" if column is not None else "") + ")"
        super().__init__(message + loc)
        self.line = line
        self.column = column


class SerializationError(ApfGuardError):
    """A configuration cannot be written out faithfully (e.g. NaN fields)."""
