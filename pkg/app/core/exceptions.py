# Base class for every error raised by this package
class EnsembleError(Exception):
    pass


# An argument lies outside the domain of the operation
class DomainError(EnsembleError, ValueError):

    def __init__(self, message: str, field: str | None = None):
        super().__init__(message)
        self.field = field


# The requested point sits on or beyond a divergence of an equivalence curve
class SingularityError(DomainError):

    def __init__(self, message: str, field: str | None = None, direction: str = "+inf"):
        super().__init__(message, field=field)
        self.direction = direction


class DimensionMismatchError(DomainError):
    pass


class DimensionCapError(DomainError):
    pass


class NonPhysicalStateError(DomainError):
    pass


class GridMismatchError(DomainError):
    pass


# Grid file cannot be read or written
class GridFileError(EnsembleError, OSError):
    pass
