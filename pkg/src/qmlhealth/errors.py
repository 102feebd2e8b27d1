"""Exception hierarchy shared by all modules."""


class QmlHealthError(Exception):
    """Base class for every error raised by this package."""


class ValidationError(QmlHealthError, ValueError):
    """An argument violates a documented precondition."""


class CapacityError(ValidationError):
    """Requested qubit count exceeds what the simulator supports."""


class RangeError(ValidationError):
    """A numeric input lies outside its admissible interval."""


class DataError(QmlHealthError):
    """Problems with user-supplied data files."""


class SchemaError(DataError, ValidationError):
    """CSV header/column layout does not match what was asked for."""


class CsvParseError(DataError, ValidationError):
    """A CSV cell could not be parsed as a number."""

    def __init__(self, message, row=None, column=None):
        super().__init__(message)
        self.row = row
        self.column = column


class LayoutError(DataError, ValidationError):
    """Image directory tree is missing a split or class folder."""


class ImageDecodeError(DataError):
    """A file inside the image tree could not be decoded."""

    def __init__(self, path, reason):
        super().__init__(f"cannot decode image {path}: {reason}")
        self.path = path


class ConfigError(QmlHealthError, ValueError):
    """Experiment configuration is malformed; carries the offending field path."""

    def __init__(self, message, field=None):
        super().__init__(message)
        self.field = field


class NumericalError(QmlHealthError, ArithmeticError):
    """A numerical invariant broke at runtime (e.g. dual objective decreased)."""
