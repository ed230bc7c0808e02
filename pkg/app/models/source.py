"""This file contains the source and scan records for the analyzer."""

from dataclasses import (
    dataclass,
    field,
)
from enum import Enum
from typing import (
    FrozenSet,
    List,
    Tuple,
)

from app.core.pcalg import (
    TRUE,
    PresenceCondition,
)


@dataclass(frozen=True)
class SourceFile:
    """A C source file of the corpus.

    Attributes:
        path: Corpus-relative path, unique within a corpus.
        content: Decoded file text.
        file_pc: Presence condition of the whole file, from the corpus manifest.
    """

    path: str
    content: str
    file_pc: PresenceCondition = TRUE


class TokenKind(str, Enum):
    """Kinds of lexical tokens."""

    IDENT = "ident"
    NUMBER = "number"
    PUNCT = "punct"
    DIRECTIVE = "directive"


@dataclass(frozen=True, slots=True)
class Token:
    """A lexical token; directive tokens carry the text after ``#`` with continuations joined."""

    kind: TokenKind
    text: str
    line: int


class DirectiveKind(str, Enum):
    """Kinds of conditional-compilation directive events."""

    IF = "If"
    ELIF = "Elif"
    ELSE = "Else"
    ENDIF = "Endif"


@dataclass(frozen=True, slots=True)
class DirectiveEvent:
    """One conditional directive.

    Attributes:
        kind: If, Elif, Else or Endif.
        branch_pc: Condition of the branch the directive opens (``TRUE`` for Endif).
        line: Line of the directive.
        group: Index of the directive group within the file, in order of opening.
    """

    kind: DirectiveKind
    branch_pc: PresenceCondition
    line: int
    group: int


@dataclass(frozen=True, slots=True)
class CallSite:
    """A call inside a function body, conditioned by the directives opened inside the body."""

    callee_name: str
    line: int
    local_pc: PresenceCondition = TRUE


@dataclass(frozen=True)
class FunctionRecord:
    """A function definition found in unpreprocessed source.

    Attributes:
        id: ``file::name``, or ``file::name@L<begin_line>`` when the file defines the name more than once.
        name: Function name.
        file: Corpus-relative path of the defining file.
        begin_line: Line of the function name; a return type on an earlier line is outside the span.
        end_line: Line of the closing brace.
        def_pc: Conjunction of the enclosing branch conditions at the opening brace, without the file condition.
        internal_ifdef_count: Directive groups opening inside the span.
        internal_options: Options referenced by those groups.
        call_sites: Calls in the body, in source order.
        body: Token indices of the opening and closing brace.
    """

    id: str
    name: str
    file: str
    begin_line: int
    end_line: int
    def_pc: PresenceCondition = TRUE
    internal_ifdef_count: int = 0
    internal_options: FrozenSet[str] = frozenset()
    call_sites: Tuple[CallSite, ...] = ()
    body: Tuple[int, int] = field(default=(0, 0), compare=False)

    @property
    def size_loc(self) -> int:
        """Raw line span including every conditional branch."""
        return self.end_line - self.begin_line + 1


@dataclass(frozen=True)
class ScannedFile:
    """Scan result of one corpus file."""

    path: str
    file_pc: PresenceCondition
    functions: List[FunctionRecord]
    events: List[DirectiveEvent] = field(default_factory=list)
