"""Variability-aware scanning of unpreprocessed C source.

The scanner never preprocesses. It lexes the raw text, tracks the conditional-compilation
context of every token, finds function definitions by counting braces across all branches,
and records call sites with the presence condition of the directives opened inside the body.
"""

import re
from collections import Counter
from dataclasses import replace
from typing import (
    FrozenSet,
    Iterable,
    List,
    Optional,
    Set,
    Tuple,
)

from app.core.config import settings
from app.core.exceptions import (
    LexError,
    PCSyntaxError,
    StructuralError,
)
from app.core.logging import logger
from app.core.pcalg import (
    TRUE,
    Atom,
    PresenceCondition,
    Not,
    options_of,
    parse_pc,
    pc_and,
    pc_and_all,
    pc_not,
    pc_or_all,
)
from app.models.source import (
    CallSite,
    DirectiveEvent,
    DirectiveKind,
    FunctionRecord,
    ScannedFile,
    SourceFile,
    Token,
    TokenKind,
)

C_KEYWORDS = frozenset(
    (
        "auto", "break", "case", "char", "const", "continue", "default", "do",
        "double", "else", "enum", "extern", "float", "for", "goto", "if", "inline", "int",
        "long", "register", "restrict", "return", "short", "signed", "sizeof", "static",
        "struct", "switch", "typedef", "union", "unsigned", "void", "volatile", "while",
        "_Alignas", "_Alignof", "_Atomic", "_Bool", "_Complex", "_Generic", "_Imaginary",
        "_Noreturn", "_Static_assert", "_Thread_local",
        # GNU extensions
        "asm", "__asm", "__asm__", "typeof", "__typeof", "__typeof__", "__attribute", "__attribute__",
        "__inline", "__inline__", "__volatile__", "__restrict", "__restrict__", "__extension__",
        "__builtin_offsetof", "__alignof__", "__label__",
    )
)  # fmt: skip

DEFAULT_STOPLIST = C_KEYWORDS | {"sizeof", "defined"}

_ATTRIBUTE_WORDS = frozenset(("__attribute__", "__attribute", "__declspec"))

_OPENING = ("if", "ifdef", "ifndef")
CONDITIONAL_DIRECTIVES = frozenset(_OPENING + ("elif", "else", "endif"))

_TOKEN_RE = re.compile(
    r"""
      (?P<newline>\r?\n)
    | (?P<space>[ \t\f\v\r]+)
    | (?P<splice>\\\r?\n)
    | (?P<line_comment>//[^\n]*)
    | (?P<block_comment>/\*.*?\*/)
    | (?P<open_comment>/\*)
    | (?P<string>(?:u8|[LuU])?"(?:\\.|[^"\\\n])*")
    | (?P<char>[LuU]?'(?:\\.|[^'\\\n])*')
    | (?P<open_literal>(?:u8|[LuU])?["'])
    | (?P<ident>[A-Za-z_$][A-Za-z0-9_$]*)
    | (?P<number>\.?[0-9](?:[eEpP][+-]|[A-Za-z0-9_.])*)
    | (?P<punct>\.\.\.|->|\+\+|--|<<=|>>=|<<|>>|&&|\|\||[-+*/%&|^~!=<>]=?|.)
    """,
    re.VERBOSE | re.DOTALL,
)

_DIRECTIVE_RE = re.compile(r"\s*([A-Za-z_]\w*)?\s*(.*)$", re.DOTALL)

_EXPR_TOKEN_RE = re.compile(
    r"""\s*(?:
        (?P<ident>[A-Za-z_]\w*)
      | (?P<number>(?:0[xX][0-9A-Fa-f]+|[0-9]+)[uUlL]*|'(?:\\.|[^'\\])')
      | (?P<op>&&|\|\||<<|>>|<=|>=|==|!=|[-+*/%&|^~!<>?:(),])
    )""",
    re.VERBOSE,
)


def lex(file: SourceFile) -> List[Token]:
    """Split a source file into tokens.

    Comments, string literals and character literals are consumed without producing tokens.
    A ``#`` that starts a line (after optional whitespace or comments) begins a directive that
    runs to the end of the logical line; it is emitted as one DIRECTIVE token holding the text
    after ``#`` with continuations joined and comments blanked.

    Raises:
        LexError: On an unterminated comment, string or character literal.
    """
    content = file.content
    tokens: List[Token] = []
    pos, line, at_line_start = 0, 1, True
    length = len(content)
    while pos < length:
        if at_line_start and content[pos] == "#":
            text, pos, consumed = _read_directive(content, pos, file.path, line)
            tokens.append(Token(TokenKind.DIRECTIVE, text, line))
            line += consumed
            at_line_start = False
            continue
        match = _TOKEN_RE.match(content, pos)
        kind = match.lastgroup
        value = match.group()
        if kind == "open_comment":
            raise LexError("unterminated comment", file.path, line)
        if kind == "open_literal":
            raise LexError("unterminated string or character literal", file.path, line)
        if kind == "newline":
            at_line_start = True
        elif kind == "ident":
            tokens.append(Token(TokenKind.IDENT, value, line))
            at_line_start = False
        elif kind == "number":
            tokens.append(Token(TokenKind.NUMBER, value, line))
            at_line_start = False
        elif kind == "punct":
            tokens.append(Token(TokenKind.PUNCT, value, line))
            at_line_start = False
        elif kind in ("string", "char"):
            at_line_start = False
        line += value.count("\n")
        pos = match.end()
    return tokens


def _read_directive(content: str, pos: int, path: str, line: int) -> Tuple[str, int, int]:
    """Read one logical directive line starting at ``#``; returns text, end position and newlines consumed."""
    chars: List[str] = []
    consumed = 0
    i = pos + 1
    length = len(content)
    while i < length:
        c = content[i]
        if c == "\\" and content.startswith("\n", i + 1):
            chars.append(" ")
            consumed += 1
            i += 2
            continue
        if c == "\\" and content.startswith("\r\n", i + 1):
            chars.append(" ")
            consumed += 1
            i += 3
            continue
        if c == "\n":
            break
        if content.startswith("/*", i):
            end = content.find("*/", i + 2)
            if end < 0:
                raise LexError("unterminated comment", path, line + consumed)
            consumed += content.count("\n", i, end)
            chars.append(" ")
            i = end + 2
            continue
        if content.startswith("//", i):
            end = content.find("\n", i)
            i = length if end < 0 else end
            continue
        if c in "\"'":
            # quoted text in #include/#error lines is kept verbatim
            end = i + 1
            while end < length and content[end] not in (c, "\n"):
                end += 2 if content[end] == "\\" else 1
            end = min(end + 1, length) if end < length and content[end] == c else end
            chars.append(content[i:end])
            i = end
            continue
        chars.append(c)
        i += 1
    return "".join(chars).strip().replace("\r", ""), i, consumed


def split_directive(text: str) -> Tuple[str, str]:
    """Split directive text into its keyword and the remainder."""
    match = _DIRECTIVE_RE.match(text)
    return (match.group(1) or "", match.group(2).strip())


def _expression_identifiers(expr: str) -> Optional[List[str]]:
    """Return the option identifiers of a cpp arithmetic expression, or None if it is not one."""
    tokens: List[Tuple[str, str]] = []
    pos = 0
    while pos < len(expr):
        if not expr[pos:].strip():
            break
        match = _EXPR_TOKEN_RE.match(expr, pos)
        if match is None:
            return None
        tokens.append((match.lastgroup, match.group(match.lastgroup)))
        pos = match.end()
    if not tokens:
        return None
    balance = 0
    for kind, text in tokens:
        if kind == "op" and text == "(":
            balance += 1
        elif kind == "op" and text == ")":
            balance -= 1
            if balance < 0:
                return None
    if balance:
        return None

    names: List[str] = []
    i = 0
    while i < len(tokens):
        kind, text = tokens[i]
        if kind == "ident" and text == "defined":
            j = i + 1
            if j < len(tokens) and tokens[j] == ("op", "("):
                j += 1
            if j >= len(tokens) or tokens[j][0] != "ident":
                return None
            if tokens[j][1] not in names:
                names.append(tokens[j][1])
            i = j + 1
            continue
        is_macro_call = i + 1 < len(tokens) and tokens[i + 1] == ("op", "(")
        if kind == "ident" and not is_macro_call and text not in names:
            names.append(text)
        i += 1
    return names


def condition_from_expression(expr: str, path: str = "<memory>", line: int = 1) -> PresenceCondition:
    """Turn an ``#if``/``#elif`` expression into a presence condition.

    Expressions in the boolean grammar are parsed exactly. Arithmetic expressions become the
    conjunction of an atom per referenced option; function-like macro names are not options.

    Raises:
        StructuralError: If the expression is neither boolean nor a cpp arithmetic expression.
    """
    try:
        return parse_pc(expr)
    except PCSyntaxError as e:
        names = _expression_identifiers(expr)
        if names is None:
            raise StructuralError(f"unparseable #if expression {expr!r} ({e})", path, line)
        logger.debug("arithmetic_condition_approximated", path=path, line=line, expression=expr, options=names)
        return pc_and_all(Atom(name) for name in names)


class _OpenGroup:
    """Bookkeeping for a directive group that has not seen its #endif."""

    __slots__ = ("group", "line", "conditions", "has_else")

    def __init__(self, group: int, line: int, condition: PresenceCondition):
        self.group = group
        self.line = line
        self.conditions = [condition]
        self.has_else = False


def scan_directives(tokens: Iterable[Token], path: str = "<memory>") -> List[DirectiveEvent]:
    """Turn conditional directive tokens into events carrying branch conditions.

    ``#elif e`` gets ``!(p1 || ... || pk) && e`` and ``#else`` gets ``!(p1 || ... || pk)`` over the
    conditions of the earlier branches of the same group.

    Raises:
        StructuralError: On unmatched ``#elif``/``#else``/``#endif``, a second ``#else``, an
            unterminated group, or an unparseable condition.
    """
    events: List[DirectiveEvent] = []
    stack: List[_OpenGroup] = []
    next_group = 0
    for token in tokens:
        if token.kind is not TokenKind.DIRECTIVE:
            continue
        keyword, rest = split_directive(token.text)
        if keyword not in CONDITIONAL_DIRECTIVES:
            continue
        if keyword in _OPENING:
            if keyword == "if":
                condition = condition_from_expression(rest, path, token.line)
            else:
                name = re.match(r"[A-Za-z_]\w*", rest)
                if name is None:
                    raise StructuralError(f"#{keyword} without an option name", path, token.line)
                condition = Atom(name.group()) if keyword == "ifdef" else Not(Atom(name.group()))
            stack.append(_OpenGroup(next_group, token.line, condition))
            events.append(DirectiveEvent(DirectiveKind.IF, condition, token.line, next_group))
            next_group += 1
            continue
        if not stack:
            raise StructuralError(f"#{keyword} without matching #if", path, token.line)
        group = stack[-1]
        if keyword == "endif":
            stack.pop()
            events.append(DirectiveEvent(DirectiveKind.ENDIF, TRUE, token.line, group.group))
            continue
        if group.has_else:
            raise StructuralError(f"#{keyword} after #else", path, token.line)
        prior = pc_not(pc_or_all(group.conditions))
        if keyword == "elif":
            condition = condition_from_expression(rest, path, token.line)
            group.conditions.append(condition)
            events.append(DirectiveEvent(DirectiveKind.ELIF, pc_and(prior, condition), token.line, group.group))
        else:
            group.has_else = True
            events.append(DirectiveEvent(DirectiveKind.ELSE, prior, token.line, group.group))
    if stack:
        raise StructuralError("#if without matching #endif", path, stack[-1].line)
    return events


# A frame entry is (group, branch number, branch condition); a token's frame lists its open groups.
Frame = Tuple[Tuple[int, int, PresenceCondition], ...]


def context_frames(tokens: List[Token], events: List[DirectiveEvent]) -> List[Frame]:
    """Return the conditional context of every token (directive tokens get the context they open)."""
    frames: List[Frame] = []
    stack: List[Tuple[int, int, PresenceCondition]] = []
    current: Frame = ()
    pending = iter(events)
    for token in tokens:
        if token.kind is TokenKind.DIRECTIVE and split_directive(token.text)[0] in CONDITIONAL_DIRECTIVES:
            event = next(pending)
            if event.kind is DirectiveKind.IF:
                stack.append((event.group, 0, event.branch_pc))
            elif event.kind is DirectiveKind.ENDIF:
                stack.pop()
            else:
                group, branch, _ = stack[-1]
                stack[-1] = (group, branch + 1, event.branch_pc)
            current = tuple(stack)
        frames.append(current)
    return frames


def _frame_condition(frame: Frame, start: int = 0) -> PresenceCondition:
    return pc_and_all(condition for _, _, condition in frame[start:])


def _is_punct(token: Token, text: str) -> bool:
    return token.kind is TokenKind.PUNCT and token.text == text


def _definition_name(tokens: List[Token], window: List[int]) -> Optional[int]:
    """Find the function-name token of a top-level declaration ending right before ``{``."""
    j = len(window) - 1
    while j >= 0:
        if not _is_punct(tokens[window[j]], ")"):
            return None
        depth, k = 0, j
        while k >= 0:
            token = tokens[window[k]]
            if _is_punct(token, ")"):
                depth += 1
            elif _is_punct(token, "("):
                depth -= 1
                if depth == 0:
                    break
            k -= 1
        if k < 1:
            return None
        previous = tokens[window[k - 1]]
        if previous.kind is not TokenKind.IDENT:
            return None
        if previous.text in _ATTRIBUTE_WORDS:
            j = k - 2
            continue
        if previous.text in C_KEYWORDS:
            return None
        return window[k - 1]
    return None


def _calls_in_body(
    tokens: List[Token],
    frames: List[Frame],
    body: Tuple[int, int],
    stoplist: FrozenSet[str],
) -> List[CallSite]:
    opening, closing = body
    base = len(frames[opening])
    calls: List[CallSite] = []
    for index in range(opening + 1, closing):
        token = tokens[index]
        if token.kind is not TokenKind.IDENT or token.text in stoplist:
            continue
        if not _is_punct(tokens[index + 1], "("):
            continue
        calls.append(CallSite(token.text, token.line, _frame_condition(frames[index], base)))
    return calls


def build_stoplist(extra: Optional[Iterable[str]] = None) -> FrozenSet[str]:
    """Combine the default stop list, configured stop words and ``extra``."""
    return DEFAULT_STOPLIST | frozenset(settings.CALL_STOPLIST) | frozenset(extra or ())


def extract_calls(fn: FunctionRecord, tokens: List[Token], stoplist: Optional[Iterable[str]] = None) -> List[CallSite]:
    """Return the call sites in the body of ``fn``.

    A call site is an identifier directly followed by ``(`` inside the body, unless the identifier
    is a C keyword or stop word. Its ``local_pc`` conjoins only the branches opened inside the body.
    """
    frames = context_frames(tokens, scan_directives(tokens, fn.file))
    return _calls_in_body(tokens, frames, fn.body, build_stoplist(stoplist))


def _internal_groups(fn: FunctionRecord, events: List[DirectiveEvent]) -> Set[int]:
    return {
        event.group
        for event in events
        if event.kind is DirectiveKind.IF and fn.begin_line < event.line < fn.end_line
    }


def count_internal_ifdefs(fn: FunctionRecord, events: List[DirectiveEvent]) -> int:
    """Count directive groups (#if/#ifdef/#ifndef) opening strictly inside the function's lines."""
    return len(_internal_groups(fn, events))


def internal_option_set(fn: FunctionRecord, events: List[DirectiveEvent]) -> FrozenSet[str]:
    """Union of the options of every branch of the directive groups opening inside the function."""
    groups = _internal_groups(fn, events)
    return frozenset().union(
        *(options_of(event.branch_pc) for event in events if event.group in groups and event.kind is not DirectiveKind.ENDIF)
    )


def _function_spans(path: str, tokens: List[Token], frames: List[Frame]) -> List[Tuple[int, int, int]]:
    """Locate (name, opening brace, closing brace) token indices of every function definition.

    A span starts at the function-name token, not at the return type. When the return type sits
    on a line of its own above the name, that line lies outside the span, so a diff touching
    only the return type is not attributed to the function.
    """
    spans: List[Tuple[int, int, int]] = []
    window: List[int] = []
    depth = 0
    open_function: Optional[Tuple[int, int]] = None
    for index, token in enumerate(tokens):
        if token.kind is TokenKind.DIRECTIVE:
            continue
        if _is_punct(token, "{"):
            if depth == 0:
                name = _definition_name(tokens, window)
                open_function = (name, index) if name is not None else None
            depth += 1
            continue
        if _is_punct(token, "}"):
            depth -= 1
            if depth < 0:
                raise StructuralError("unbalanced '}'", path, token.line)
            if depth == 0:
                if open_function is not None:
                    name, opening = open_function
                    if [f[:2] for f in frames[opening]] != [f[:2] for f in frames[index]]:
                        raise StructuralError(
                            f"braces of function {tokens[name].text} balance only under some configurations",
                            path,
                            token.line,
                        )
                    spans.append((name, opening, index))
                    open_function = None
                window.clear()
            continue
        if depth == 0:
            if _is_punct(token, ";"):
                window.clear()
            else:
                window.append(index)
    if depth != 0:
        if open_function is not None:
            name = tokens[open_function[0]]
            raise StructuralError(f"unbalanced braces at end of file, function {name.text} is still open", path, name.line)
        raise StructuralError("unbalanced braces at end of file", path, tokens[-1].line if tokens else 1)
    return spans


def scan_file(file: SourceFile, stoplist: Optional[Iterable[str]] = None) -> ScannedFile:
    """Lex one file, scan its directives and extract its function records.

    Args:
        file: The source file.
        stoplist: Extra identifiers that are never calls.

    Returns:
        ScannedFile: Records in source order plus the directive events of the file.
    """
    tokens = lex(file)
    events = scan_directives(tokens, file.path)
    frames = context_frames(tokens, events)
    stop = build_stoplist(stoplist)

    spans = _function_spans(file.path, tokens, frames)
    name_counts = Counter(tokens[name].text for name, _, _ in spans)
    functions: List[FunctionRecord] = []
    for name_index, opening, closing in spans:
        name = tokens[name_index].text
        fid = f"{file.path}::{name}" if name_counts[name] == 1 else f"{file.path}::{name}@L{tokens[name_index].line}"
        record = FunctionRecord(
            id=fid,
            name=name,
            file=file.path,
            begin_line=tokens[name_index].line,
            end_line=tokens[closing].line,
            def_pc=_frame_condition(frames[opening]),
            body=(opening, closing),
        )
        functions.append(
            replace(
                record,
                internal_ifdef_count=count_internal_ifdefs(record, events),
                internal_options=internal_option_set(record, events),
                call_sites=tuple(_calls_in_body(tokens, frames, record.body, stop)),
            )
        )
    logger.debug("file_scanned", path=file.path, functions=len(functions), directives=len(events))
    return ScannedFile(file.path, file.file_pc, functions, events)


def extract_functions(file: SourceFile, stoplist: Optional[Iterable[str]] = None) -> List[FunctionRecord]:
    """Return the function definitions of a file in source order."""
    return scan_file(file, stoplist).functions
