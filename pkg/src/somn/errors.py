"""Exception hierarchy shared across the package."""


class SomnError(Exception):
    """Base class for all errors raised by this package."""


class EdfParseError(SomnError):
    """Malformed EDF input. Carries the byte offset where parsing failed."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (byte offset {offset})")
        self.offset = offset


class EdfRangeError(SomnError):
    """Physical sample value outside the declared physical range."""


class MontageError(SomnError):
    """Required electrode channel missing or montage ill-formed."""


class ShapeError(SomnError):
    """Input array has the wrong shape or length."""


class DataError(SomnError):
    """Input values are invalid (non-finite, unknown symbols, bad labels)."""


class ParameterError(SomnError):
    """Invalid parameter to an operation."""


class TrainingError(SomnError):
    """Training diverged. Carries the offending step index."""

    def __init__(self, message: str, step: int):
        super().__init__(f"{message} (step {step})")
        self.step = step


class ChecksumError(SomnError):
    """Stored checksum does not match the file contents."""


class FormatVersionError(SomnError):
    """Unknown or unsupported container format version."""
