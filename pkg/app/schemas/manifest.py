"""This file contains the corpus manifest schema for the analyzer."""

from typing import (
    Any,
    List,
)

from pydantic import (
    BaseModel,
    ConfigDict,
    Field,
    field_validator,
    model_validator,
)

from app.schemas.graph import PCText


class CorpusFileSchema(BaseModel):
    """A source file of the corpus.

    Attributes:
        path: Path of the C file, relative to the manifest directory.
        file_pc: Canonical presence condition of the whole file.
    """

    model_config = ConfigDict(extra="forbid")

    path: str = Field(..., min_length=1, description="Path relative to the manifest")
    file_pc: PCText = Field("1", description="Presence condition of the whole file")

    @field_validator("path")
    @classmethod
    def validate_path(cls, v: str) -> str:
        """Reject absolute paths and null bytes.

        Args:
            v: The path to validate

        Returns:
            str: The validated path

        Raises:
            ValueError: If the path is absolute or contains a null byte
        """
        if "\0" in v:
            raise ValueError("path contains a null byte")
        if v.startswith("/"):
            raise ValueError("path must be relative to the manifest")
        return v


class CorpusManifestSchema(BaseModel):
    """The corpus manifest.

    Either a bare list of file entries or an object with ``files`` and an optional ``stoplist``.
    """

    model_config = ConfigDict(extra="forbid")

    files: List[CorpusFileSchema] = Field(default_factory=list, description="Corpus files")
    stoplist: List[str] = Field(default_factory=list, description="Identifiers that are never calls")

    @model_validator(mode="before")
    @classmethod
    def accept_file_list(cls, data: Any) -> Any:
        """Wrap a bare list of file entries."""
        if isinstance(data, list):
            return {"files": data}
        return data

    @model_validator(mode="after")
    def validate_unique_paths(self) -> "CorpusManifestSchema":
        """Reject manifests that list a path twice."""
        seen = set()
        for entry in self.files:
            if entry.path in seen:
                raise ValueError(f"duplicate path {entry.path}")
            seen.add(entry.path)
        return self
