class WireExtractionError(Exception):
    """Base class for wire extraction errors."""


class PointFormatError(WireExtractionError):
    """A point record could not be parsed."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f'line {line}: {message}'
        super().__init__(message)


class UnknownFormatError(WireExtractionError, ValueError):
    pass


class ConfigurationError(WireExtractionError, ValueError):
    pass


class SceneSpecError(WireExtractionError, ValueError):
    pass


class InvariantViolation(WireExtractionError):
    """Internal bookkeeping went wrong, e.g. points were lost between stages."""
