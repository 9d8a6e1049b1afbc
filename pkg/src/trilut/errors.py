"""Exception hierarchy and process exit codes shared across the package."""

EXIT_OK = 0
EXIT_PARSE = 2
EXIT_VALIDATION = 3
EXIT_IO = 4


class TriLutError(Exception):
    """Base class for every error raised by this package."""

    exit_code = EXIT_VALIDATION


class ParseError(TriLutError):
    """Malformed input text or binary (cube files, frames).

    ``line`` carries the 1-based line number for text formats so callers
    can produce line-accurate diagnostics.
    """

    exit_code = EXIT_PARSE

    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class ValidationError(TriLutError):
    """Arguments or data violate a documented contract."""

    exit_code = EXIT_VALIDATION


class CorruptionError(TriLutError):
    """Internal data structure found in an impossible state."""

    exit_code = EXIT_VALIDATION


class BundleError(TriLutError):
    """Bundle container violation with a stable machine-readable code.

    Codes: ``bad-magic``, ``bad-version``, ``bad-header``, ``length-mismatch``,
    ``non-finite-payload``, ``missing-tensor``, ``shape-mismatch``.
    """

    exit_code = EXIT_PARSE

    def __init__(self, code: str, message: str):
        super().__init__(f"{code}: {message}")
        self.code = code
