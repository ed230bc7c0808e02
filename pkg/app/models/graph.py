"""This file contains the call graph records for the analyzer."""

from dataclasses import (
    dataclass,
    field,
)
from typing import (
    Dict,
    FrozenSet,
    List,
    Tuple,
)

from app.core.pcalg import (
    ConfigAssignment,
    PresenceCondition,
)


@dataclass(frozen=True)
class VCGNode:
    """A function of the variational call graph.

    Attributes:
        id: Unique node id (``file::name`` form).
        name: Function name.
        file: Defining file.
        pc: File condition conjoined with the definition condition; always satisfiable.
        size_loc: Raw line span.
        internal_ifdef_count: Directive groups inside the function.
        internal_option_count: Distinct options referenced inside the function.
        begin_line: First line of the function.
        end_line: Last line of the function.
    """

    id: str
    name: str
    file: str
    pc: PresenceCondition
    size_loc: int
    internal_ifdef_count: int
    internal_option_count: int
    begin_line: int = 1
    end_line: int = 1


@dataclass(frozen=True)
class VCGEdge:
    """A merged call edge; ``weight`` is one plus the number of options in ``pc``."""

    source: str
    target: str
    pc: PresenceCondition
    weight: int


@dataclass(frozen=True, slots=True)
class UnresolvedCall:
    """A call whose callee has no defining node."""

    caller: str
    callee: str
    line: int


@dataclass
class VariationalCallGraph:
    """Every function and call of every configuration, each labeled by its presence condition."""

    nodes: Dict[str, VCGNode] = field(default_factory=dict)
    edges: List[VCGEdge] = field(default_factory=list)
    unresolved_calls: List[UnresolvedCall] = field(default_factory=list)


@dataclass(frozen=True)
class ProjectedGraph:
    """The plain call graph of one configuration."""

    nodes: FrozenSet[str]
    edges: FrozenSet[Tuple[str, str]]
    config: ConfigAssignment
