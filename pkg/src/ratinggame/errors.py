"""Exception types raised across the package."""


class ParameterError(ValueError):
    """A model or grid parameter is outside its valid range.

    ``field`` names the offending parameter when known.
    """

    def __init__(self, message, field=None):
        super().__init__(message)
        self.field = field


class EmptyConditionError(ValueError):
    """A conditional average was requested over an empty event."""

    def __init__(self, message, survivors=0):
        super().__init__(message)
        self.survivors = survivors


class ResourceError(RuntimeError):
    """A request exceeds a configured resource cap."""
