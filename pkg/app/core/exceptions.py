"""This file contains the exception hierarchy for the analyzer.

Exceptions are split by the exit code the command line maps them to:
``InputError`` subclasses describe bad inputs (exit code 2) and
``InvariantViolation`` subclasses describe internal consistency failures (exit code 3).
"""

from typing import Optional


class AnalysisError(Exception):
    """Base class for every error raised by the analyzer."""

    exit_code = 3


class InputError(AnalysisError):
    """An input artifact is missing, malformed, or violates its documented format."""

    exit_code = 2


class InvariantViolation(AnalysisError):
    """An internal invariant does not hold."""

    exit_code = 3


class OptionLimitExceeded(InvariantViolation):
    """A presence condition references more options than satisfiability may enumerate."""

    def __init__(self, count: int, limit: int):
        """Initialize with the offending option count and the active limit."""
        super().__init__(f"presence condition references {count} options, enumeration limit is {limit}")
        self.count = count
        self.limit = limit


class PCSyntaxError(InputError):
    """Presence-condition text is not in grammar."""

    def __init__(self, message: str, offset: int):
        """Initialize with a message and the byte offset of the error."""
        super().__init__(f"{message} at byte offset {offset}")
        self.offset = offset


class SourceError(InputError):
    """Base class for errors located in a C source file."""

    def __init__(self, message: str, path: str, line: int):
        """Initialize with a message and a file:line location."""
        super().__init__(f"{path}:{line}: {message}")
        self.path = path
        self.line = line


class LexError(SourceError):
    """Unterminated comment or literal."""


class StructuralError(SourceError):
    """Unbalanced directives or braces."""


class CorpusError(InputError):
    """The corpus as a whole is inconsistent (duplicate paths or node ids)."""


class GraphValidationError(InputError):
    """Graph JSON violates the schema or a graph invariant."""

    def __init__(self, message: str, element: Optional[str] = None):
        """Initialize with a message and the offending element."""
        super().__init__(f"{element}: {message}" if element else message)
        self.element = element


class ManifestError(InputError):
    """A JSON manifest violates its schema."""

    def __init__(self, message: str, location: Optional[str] = None):
        """Initialize with a message and the dotted path of the offending element."""
        super().__init__(f"{location}: {message}" if location else message)
        self.location = location


class DiffParseError(InputError):
    """A unified diff hunk body disagrees with its header."""

    def __init__(self, message: str, hunk_index: int):
        """Initialize with a message and the zero-based hunk index."""
        super().__init__(f"hunk {hunk_index}: {message}")
        self.hunk_index = hunk_index


class CommitLogError(InputError):
    """A commit-log export has a malformed record separator."""

    def __init__(self, message: str, offset: int):
        """Initialize with a message and the byte offset of the separator."""
        super().__init__(f"{message} at byte offset {offset}")
        self.offset = offset


class AssignmentFileError(InputError):
    """A configuration assignment file is malformed."""

    def __init__(self, message: str, path: str, line: int):
        """Initialize with a message and a file:line location."""
        super().__init__(f"{path}:{line}: {message}")
        self.path = path
        self.line = line


class StatsError(InputError):
    """Statistical preconditions do not hold."""


class DegenerateSamples(StatsError):
    """Samples carry no variance to test against."""
