"""This file contains the CVE manifest schema for the analyzer."""

import re
from typing import List

from pydantic import (
    BaseModel,
    ConfigDict,
    Field,
    RootModel,
    field_validator,
    model_validator,
)

CVE_ID_RE = re.compile(r"CVE-[0-9]{4}-[0-9]{4,}")


class CveFileSchema(BaseModel):
    """A file diff of a fixing commit.

    Attributes:
        path: Corpus-relative path of the changed file.
        diff: Unified diff text of the change.
    """

    model_config = ConfigDict(extra="forbid")

    path: str = Field(..., min_length=1, description="Corpus-relative path")
    diff: str = Field("", description="Unified diff text")


class CveCommitSchema(BaseModel):
    """A fixing commit.

    Attributes:
        commit_id: Commit identifier.
        message: Commit message.
        files: Changed files with their diffs.
    """

    model_config = ConfigDict(extra="forbid")

    commit_id: str = Field(..., min_length=1, description="Commit identifier")
    message: str = Field("", description="Commit message")
    files: List[CveFileSchema] = Field(default_factory=list, description="Changed files")


class CveEntrySchema(BaseModel):
    """A CVE and its fixing commits."""

    model_config = ConfigDict(extra="forbid")

    cve_id: str = Field(..., description="CVE identifier")
    commits: List[CveCommitSchema] = Field(default_factory=list, description="Fixing commits")

    @field_validator("cve_id")
    @classmethod
    def validate_cve_id(cls, v: str) -> str:
        """Validate the CVE identifier.

        Args:
            v: The CVE id to validate

        Returns:
            str: The validated CVE id

        Raises:
            ValueError: If the id does not follow the CVE-YYYY-NNNN convention
        """
        if not CVE_ID_RE.fullmatch(v):
            raise ValueError(f"malformed CVE id {v!r}")
        return v


class CveManifestSchema(RootModel[List[CveEntrySchema]]):
    """The CVE manifest: a list of CVE entries with unique ids."""

    @model_validator(mode="after")
    def validate_unique_ids(self) -> "CveManifestSchema":
        """Reject manifests that list a CVE id twice."""
        seen = set()
        for entry in self.root:
            if entry.cve_id in seen:
                raise ValueError(f"duplicate cve_id {entry.cve_id}")
            seen.add(entry.cve_id)
        return self
