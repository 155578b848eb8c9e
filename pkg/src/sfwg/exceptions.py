"""Exception hierarchy shared by the sfwg modules."""


class SfwgError(Exception):
    """Base class for all library errors."""


class InvalidArgumentError(SfwgError, ValueError):
    pass


class GeometryError(SfwgError):
    pass


class MeshParseError(SfwgError):
    """Raised by :func:`sfwg.mesh.read_mesh`; carries the offending line number."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class MeshValidationError(SfwgError):
    pass


class ConditioningError(SfwgError):
    pass


class NotSPDError(SfwgError):
    pass


class IterativeFailureError(SfwgError):
    def __init__(self, message, residual):
        self.residual = residual
        super().__init__(f"{message} (final relative residual {residual:.3e})")


class ConfigurationError(SfwgError):
    pass
