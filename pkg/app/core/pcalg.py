"""Presence-condition algebra.

Presence conditions are immutable boolean formula trees over configuration options.
Every tree that leaves this module is built by the smart constructors ``pc_and``,
``pc_or`` and ``pc_not``, which fold constants, flatten nested conjunctions and
disjunctions, and drop adjacent duplicate children. Option counting is syntactic.
"""

import itertools
import re
from dataclasses import (
    dataclass,
    field,
)
from functools import lru_cache
from typing import (
    Dict,
    FrozenSet,
    Iterable,
    Iterator,
    List,
    Mapping,
    Optional,
    Tuple,
    Union,
)

from app.core.config import settings
from app.core.exceptions import (
    InputError,
    OptionLimitExceeded,
    PCSyntaxError,
)

OPTION_NAME_RE = re.compile(r"^[A-Za-z_][A-Za-z0-9_]*$")


def is_option_name(name: str) -> bool:
    """Check whether a string is a valid configuration option name."""
    return bool(OPTION_NAME_RE.match(name))


@dataclass(frozen=True, slots=True)
class TrueConst:
    """The condition that holds in every configuration."""


@dataclass(frozen=True, slots=True)
class FalseConst:
    """The condition that holds in no configuration."""


@dataclass(frozen=True, slots=True)
class Atom:
    """A single configuration option, ``defined(name)``."""

    name: str


@dataclass(frozen=True, slots=True)
class Not:
    """Negation."""

    child: "PresenceCondition"


@dataclass(frozen=True, slots=True)
class And:
    """Conjunction of at least two children."""

    children: Tuple["PresenceCondition", ...]


@dataclass(frozen=True, slots=True)
class Or:
    """Disjunction of at least two children."""

    children: Tuple["PresenceCondition", ...]


PresenceCondition = Union[TrueConst, FalseConst, Atom, Not, And, Or]

TRUE = TrueConst()
FALSE = FalseConst()


@dataclass(frozen=True)
class ConfigAssignment:
    """A (possibly partial) configuration.

    Attributes:
        bindings: Explicit option values.
        default_for_unbound: Value of every option not in ``bindings``.
    """

    bindings: Mapping[str, bool] = field(default_factory=dict)
    default_for_unbound: bool = False

    def __post_init__(self):
        """Validate option names."""
        for name in self.bindings:
            if not is_option_name(name):
                raise InputError(f"invalid option name {name!r}")

    def value(self, name: str) -> bool:
        """Return the value of an option under this assignment."""
        return self.bindings.get(name, self.default_for_unbound)

    @classmethod
    def all_true(cls) -> "ConfigAssignment":
        """The allyes analogue: every option enabled."""
        return cls({}, True)

    @classmethod
    def all_false(cls) -> "ConfigAssignment":
        """Every option disabled."""
        return cls({}, False)


def _nary(kind: type, items: Iterable[PresenceCondition]) -> PresenceCondition:
    # kind is And or Or; absorbing/neutral constants follow from it
    absorbing, neutral = (FALSE, TRUE) if kind is And else (TRUE, FALSE)
    flat: List[PresenceCondition] = []
    for item in items:
        if item == absorbing:
            return absorbing
        if item == neutral:
            continue
        children = item.children if isinstance(item, kind) else (item,)
        for child in children:
            if flat and flat[-1] == child:
                continue
            flat.append(child)
    if not flat:
        return neutral
    if len(flat) == 1:
        return flat[0]
    return kind(tuple(flat))


def pc_and(a: PresenceCondition, b: PresenceCondition) -> PresenceCondition:
    """Folded conjunction of two conditions."""
    return _nary(And, (a, b))


def pc_or(a: PresenceCondition, b: PresenceCondition) -> PresenceCondition:
    """Folded disjunction of two conditions."""
    return _nary(Or, (a, b))


def pc_and_all(items: Iterable[PresenceCondition]) -> PresenceCondition:
    """Folded conjunction of any number of conditions (``TRUE`` when empty)."""
    return _nary(And, items)


def pc_or_all(items: Iterable[PresenceCondition]) -> PresenceCondition:
    """Folded disjunction of any number of conditions (``FALSE`` when empty)."""
    return _nary(Or, items)


def pc_not(a: PresenceCondition) -> PresenceCondition:
    """Folded negation; double negation cancels structurally."""
    if a == TRUE:
        return FALSE
    if a == FALSE:
        return TRUE
    if isinstance(a, Not):
        return a.child
    return Not(a)


def atom(name: str) -> Atom:
    """Build an atom after validating the option name."""
    if not is_option_name(name):
        raise InputError(f"invalid option name {name!r}")
    return Atom(name)


@lru_cache(maxsize=None)
def options_of(pc: PresenceCondition) -> FrozenSet[str]:
    """Return the distinct option names appearing syntactically in ``pc``."""
    match pc:
        case Atom(name=name):
            return frozenset((name,))
        case Not(child=child):
            return options_of(child)
        case And(children=children) | Or(children=children):
            return frozenset().union(*(options_of(c) for c in children))
        case _:
            return frozenset()


def option_count(pc: PresenceCondition) -> int:
    """Return ``|options_of(pc)|``."""
    return len(options_of(pc))


def evaluate(pc: PresenceCondition, cfg: ConfigAssignment) -> bool:
    """Evaluate a condition under an assignment."""
    match pc:
        case TrueConst():
            return True
        case FalseConst():
            return False
        case Atom(name=name):
            return cfg.value(name)
        case Not(child=child):
            return not evaluate(child, cfg)
        case And(children=children):
            return all(evaluate(c, cfg) for c in children)
        case Or(children=children):
            return any(evaluate(c, cfg) for c in children)
    raise TypeError(f"not a presence condition: {pc!r}")


def restrict(pc: PresenceCondition, name: str, value: bool) -> PresenceCondition:
    """Substitute a constant for one option and refold."""
    match pc:
        case Atom(name=n) if n == name:
            return TRUE if value else FALSE
        case Not(child=child):
            return pc_not(restrict(child, name, value))
        case And(children=children):
            return pc_and_all(restrict(c, name, value) for c in children)
        case Or(children=children):
            return pc_or_all(restrict(c, name, value) for c in children)
        case _:
            return pc


@lru_cache(maxsize=65536)
def _satisfiable(pc: PresenceCondition) -> bool:
    if pc == TRUE:
        return True
    if pc == FALSE:
        return False
    name = min(options_of(pc))
    return _satisfiable(restrict(pc, name, True)) or _satisfiable(restrict(pc, name, False))


def is_satisfiable(pc: PresenceCondition, limit: Optional[int] = None) -> bool:
    """Decide satisfiability by case-splitting over every referenced option.

    Args:
        pc: The condition to decide.
        limit: Maximum number of distinct options; defaults to ``settings.PC_OPTION_LIMIT``.

    Returns:
        bool: True iff some assignment over ``options_of(pc)`` makes ``pc`` true.

    Raises:
        OptionLimitExceeded: If ``pc`` references more options than ``limit``.
    """
    limit = settings.PC_OPTION_LIMIT if limit is None else limit
    count = option_count(pc)
    if count > limit:
        raise OptionLimitExceeded(count, limit)
    return _satisfiable(pc)


def assignments(options: Iterable[str]) -> Iterator[ConfigAssignment]:
    """Enumerate every full assignment over the given options, in binary order."""
    names = sorted(set(options))
    for values in itertools.product((False, True), repeat=len(names)):
        yield ConfigAssignment(dict(zip(names, values)), False)


def render(pc: PresenceCondition) -> str:
    """Render the canonical text of a condition."""
    match pc:
        case TrueConst():
            return "1"
        case FalseConst():
            return "0"
        case Atom(name=name):
            return f"defined({name})"
        case Not(child=child):
            return "!" + _render_operand(child)
        case And(children=children):
            return " && ".join(_render_operand(c) for c in children)
        case Or(children=children):
            return " || ".join(_render_operand(c) for c in children)
    raise TypeError(f"not a presence condition: {pc!r}")


def _render_operand(pc: PresenceCondition) -> str:
    text = render(pc)
    return f"({text})" if isinstance(pc, (And, Or)) else text


_PC_TOKEN_RE = re.compile(r"\s*(?:(?P<op>&&|\|\||!|\(|\))|(?P<ident>[A-Za-z_][A-Za-z0-9_]*)|(?P<number>[0-9]+))")


class _PCParser:
    """Recursive-descent parser over the presence-condition grammar."""

    def __init__(self, text: str):
        self.text = text
        self.tokens: List[Tuple[str, str, int]] = []
        pos = 0
        while pos < len(text):
            match = _PC_TOKEN_RE.match(text, pos)
            if match is None:
                rest = text[pos:]
                if not rest.strip():
                    break
                bad = pos + len(rest) - len(rest.lstrip())
                raise PCSyntaxError(f"unexpected character {text[bad]!r}", self._offset(bad))
            kind = match.lastgroup
            self.tokens.append((kind, match.group(kind), match.start(kind)))
            pos = match.end()
        self.index = 0

    def _offset(self, pos: int) -> int:
        return len(self.text[:pos].encode("utf-8"))

    def _peek(self) -> Optional[Tuple[str, str, int]]:
        return self.tokens[self.index] if self.index < len(self.tokens) else None

    def _error(self, message: str) -> PCSyntaxError:
        token = self._peek()
        pos = token[2] if token else len(self.text)
        return PCSyntaxError(message, self._offset(pos))

    def _accept(self, text: str) -> bool:
        token = self._peek()
        if token and token[0] == "op" and token[1] == text:
            self.index += 1
            return True
        return False

    def _expect(self, text: str) -> None:
        if not self._accept(text):
            raise self._error(f"expected {text!r}")

    def parse(self) -> PresenceCondition:
        if not self.tokens:
            raise PCSyntaxError("empty presence condition", 0)
        result = self._or()
        if self._peek() is not None:
            raise self._error("unexpected trailing input")
        return result

    def _or(self) -> PresenceCondition:
        result = self._and()
        while self._accept("||"):
            result = pc_or(result, self._and())
        return result

    def _and(self) -> PresenceCondition:
        result = self._unary()
        while self._accept("&&"):
            result = pc_and(result, self._unary())
        return result

    def _unary(self) -> PresenceCondition:
        if self._accept("!"):
            return pc_not(self._unary())
        return self._primary()

    def _primary(self) -> PresenceCondition:
        if self._accept("("):
            result = self._or()
            self._expect(")")
            return result
        token = self._peek()
        if token is None:
            raise self._error("unexpected end of input")
        kind, text, _ = token
        if kind == "number":
            if text not in ("0", "1"):
                raise self._error(f"numeric literal {text} outside the boolean grammar")
            self.index += 1
            return TRUE if text == "1" else FALSE
        if kind == "ident":
            self.index += 1
            if text != "defined":
                return Atom(text)
            parenthesized = self._accept("(")
            name = self._peek()
            if name is None or name[0] != "ident":
                raise self._error("expected option name after 'defined'")
            self.index += 1
            if parenthesized:
                self._expect(")")
            return Atom(name[1])
        raise self._error(f"unexpected token {text!r}")


def parse_pc(text: str) -> PresenceCondition:
    """Parse presence-condition text into a folded tree.

    Accepts ``defined(ID)``, ``defined ID``, bare ``ID``, ``1``, ``0``, ``!``, ``&&``, ``||`` and
    parentheses. A bare identifier means ``defined(ID)``.

    Raises:
        PCSyntaxError: With the byte offset of the first offending token.
    """
    return _PCParser(text).parse()


def truth_table(pc: PresenceCondition, options: Optional[Iterable[str]] = None) -> Dict[Tuple[bool, ...], bool]:
    """Map every assignment over ``options`` (default: the options of ``pc``) to the value of ``pc``."""
    names = sorted(set(options) if options is not None else options_of(pc))
    return {tuple(cfg.value(n) for n in names): evaluate(pc, cfg) for cfg in assignments(names)}
