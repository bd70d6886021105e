"""Exception hierarchy shared by the library and the CLI.

Each class carries the process exit code the CLI maps it to.
"""


class GctError(Exception):
    exit_code = 1


class ValidationError(GctError, ValueError):
    exit_code = 2


class ParseError(ValidationError):
    """Malformed feature table; ``line`` is 1-based when known."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class AlignmentError(ValidationError):
    def __init__(self, message, offending_ids=()):
        super().__init__(message)
        self.offending_ids = list(offending_ids)


class SingularMatrixError(ValidationError):
    def __init__(self, pivot_index, pivot_value):
        super().__init__(
            f"matrix is numerically singular: pivot {pivot_index} = {pivot_value:.3e}"
        )
        self.pivot_index = pivot_index
        self.pivot_value = pivot_value


class CapacityError(GctError):
    exit_code = 3

    def __init__(self, message, label=None, episode_index=None):
        super().__init__(message)
        self.label = label
        self.episode_index = episode_index


class ReportIOError(GctError, OSError):
    exit_code = 4
