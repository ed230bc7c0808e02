"""This file contains the function table schema for the analyzer."""

from typing import List

from pydantic import (
    BaseModel,
    ConfigDict,
    Field,
)

from app.schemas.graph import PCText


class CallSiteSchema(BaseModel):
    """A call inside a function body."""

    model_config = ConfigDict(extra="forbid")

    callee: str = Field(..., min_length=1, description="Called name")
    line: int = Field(..., ge=1, description="Line of the call")
    pc: PCText = Field("1", description="Condition of the directives around the call inside the body")


class FunctionEntrySchema(BaseModel):
    """A function record of the function table.

    Attributes:
        id: Function id.
        name: Function name.
        file: Defining file.
        begin_line: Line of the function name.
        end_line: Line of the closing brace.
        def_pc: Condition of the directives around the definition.
        size_loc: Raw line span.
        internal_ifdefs: Directive groups opening inside the function.
        internal_options: Options referenced by those groups, sorted.
        calls: Call sites in source order.
    """

    model_config = ConfigDict(extra="forbid")

    id: str = Field(..., min_length=1, description="Function id")
    name: str = Field(..., min_length=1, description="Function name")
    file: str = Field(..., description="Defining file")
    begin_line: int = Field(..., ge=1, description="Line of the function name")
    end_line: int = Field(..., ge=1, description="Line of the closing brace")
    def_pc: PCText = Field("1", description="Definition condition")
    size_loc: int = Field(..., ge=1, description="Raw line span")
    internal_ifdefs: int = Field(0, ge=0, description="Internal directive groups")
    internal_options: List[str] = Field(default_factory=list, description="Internal options, sorted")
    calls: List[CallSiteSchema] = Field(default_factory=list, description="Call sites")


class ScannedFileSchema(BaseModel):
    """The scan result of one corpus file."""

    model_config = ConfigDict(extra="forbid")

    path: str = Field(..., min_length=1, description="Corpus-relative path")
    file_pc: PCText = Field("1", description="Presence condition of the whole file")
    functions: List[FunctionEntrySchema] = Field(default_factory=list, description="Functions in source order")


class FunctionTableDocument(BaseModel):
    """The function table JSON document."""

    model_config = ConfigDict(extra="forbid")

    files: List[ScannedFileSchema] = Field(default_factory=list, description="Scanned files in manifest order")
