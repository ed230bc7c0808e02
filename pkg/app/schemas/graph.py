"""This file contains the graph JSON schema for the analyzer."""

from typing import (
    Annotated,
    List,
)

from pydantic import (
    AfterValidator,
    BaseModel,
    ConfigDict,
    Field,
)

from app.core.exceptions import PCSyntaxError
from app.core.pcalg import parse_pc


def _check_pc_text(value: str) -> str:
    try:
        parse_pc(value)
    except PCSyntaxError as e:
        raise ValueError(f"invalid presence condition: {e}")
    return value


PCText = Annotated[str, AfterValidator(_check_pc_text)]


class GraphNodeSchema(BaseModel):
    """A function node as stored in graph JSON.

    Attributes:
        id: Unique node id.
        name: Function name.
        file: Defining file.
        pc: Canonical presence-condition text.
        size_loc: Raw line span.
        internal_ifdefs: Directive groups inside the function.
        internal_options: Distinct options inside the function.
        begin_line: First line.
        end_line: Last line.
    """

    model_config = ConfigDict(extra="forbid")

    id: str = Field(..., min_length=1, description="Unique node id")
    name: str = Field(..., min_length=1, description="Function name")
    file: str = Field(..., description="Defining file")
    pc: PCText = Field(..., description="Canonical presence condition")
    size_loc: int = Field(..., ge=1, description="Raw line span")
    internal_ifdefs: int = Field(..., ge=0, description="Directive groups inside the function")
    internal_options: int = Field(..., ge=0, description="Distinct options inside the function")
    begin_line: int = Field(1, ge=1, description="First line of the function")
    end_line: int = Field(1, ge=1, description="Last line of the function")


class GraphEdgeSchema(BaseModel):
    """A merged call edge as stored in graph JSON."""

    model_config = ConfigDict(extra="forbid", populate_by_name=True)

    source: str = Field(..., alias="from", description="Caller node id")
    target: str = Field(..., alias="to", description="Callee node id")
    pc: PCText = Field(..., description="Canonical presence condition")
    weight: int = Field(..., ge=1, description="One plus the number of options of pc")


class UnresolvedCallSchema(BaseModel):
    """A call whose callee has no defining node."""

    model_config = ConfigDict(extra="forbid", populate_by_name=True)

    caller: str = Field(..., alias="from", description="Caller node id")
    callee: str = Field(..., description="Called name")
    line: int = Field(..., ge=1, description="Line of the call")


class GraphDocument(BaseModel):
    """The graph JSON document."""

    model_config = ConfigDict(extra="forbid")

    nodes: List[GraphNodeSchema] = Field(default_factory=list, description="Nodes sorted by id")
    edges: List[GraphEdgeSchema] = Field(default_factory=list, description="Edges sorted by (from, to)")
    unresolved: List[UnresolvedCallSchema] = Field(default_factory=list, description="Unresolved calls")
