"""This file contains the vulnerability history records for the analyzer."""

from dataclasses import (
    dataclass,
    field,
)
from enum import Enum
from typing import (
    List,
    Tuple,
)


class LineTag(str, Enum):
    """Kinds of hunk body lines."""

    CONTEXT = "context"
    ADD = "add"
    DEL = "del"


@dataclass(frozen=True)
class Hunk:
    """One unified-diff hunk; body line counts agree with the header."""

    old_start: int
    old_len: int
    new_start: int
    new_len: int
    lines: Tuple[Tuple[LineTag, str], ...] = ()

    @property
    def new_range(self) -> Tuple[int, int]:
        """Effective new-file line range; a pure deletion collapses to its insertion point."""
        return self.new_start, self.new_start + max(self.new_len, 1) - 1

    def changed_lines(self) -> List[int]:
        """New-file lines of added lines plus the insertion point of every deleted run."""
        changed: List[int] = []
        last = self.new_range[1]
        line = self.new_start
        previous = None
        for tag, _ in self.lines:
            if tag is LineTag.ADD:
                changed.append(line)
                line += 1
            elif tag is LineTag.DEL:
                if previous is not LineTag.DEL:
                    changed.append(min(line, last))
            else:
                line += 1
            previous = tag
        return changed


@dataclass(frozen=True)
class UnifiedDiff:
    """Hunks of one file diff, ordered by ``new_start``."""

    hunks: Tuple[Hunk, ...] = ()


@dataclass(frozen=True)
class FileDiff:
    """A diff of one corpus-relative path."""

    path: str
    diff: UnifiedDiff


@dataclass(frozen=True)
class CommitRecord:
    """A fixing commit and the CVE ids its message names."""

    commit_id: str
    message: str
    file_diffs: Tuple[FileDiff, ...] = ()
    cve_ids: Tuple[str, ...] = ()


@dataclass(frozen=True)
class CveRecord:
    """A CVE and the commits that fixed it."""

    cve_id: str
    commits: Tuple[CommitRecord, ...] = ()


@dataclass(frozen=True)
class VulnerabilityLabel:
    """Vulnerability label of one function; vulnerable iff there is evidence."""

    function_id: str
    evidence: Tuple[Tuple[str, str], ...] = field(default=())

    @property
    def vulnerable(self) -> bool:
        """Whether any fixing commit touched the function."""
        return bool(self.evidence)

    @property
    def cve_ids(self) -> List[str]:
        """Distinct CVE ids of the evidence, sorted."""
        return sorted({cve_id for cve_id, _ in self.evidence})
