"""This file contains the pipeline configuration schema for the analyzer."""

from pathlib import Path
from typing import (
    List,
    Optional,
    Tuple,
)

from pydantic import (
    BaseModel,
    ConfigDict,
    Field,
    field_validator,
)

from app.core.pcalg import is_option_name
from app.utils.graph import DISTANCE_MODES

ALLYES = "allyes"
ALLNO = "allno"


class BaselineSpec(BaseModel):
    """A baseline configuration: a label and an assignment file path or a built-in name."""

    model_config = ConfigDict(frozen=True)

    label: str = Field(..., description="Column prefix of the baseline")
    source: str = Field(..., description="Assignment file path, 'allyes' or 'allno'")

    @field_validator("label")
    @classmethod
    def validate_label(cls, v: str) -> str:
        """Baseline labels become CSV column prefixes and must be identifiers.

        Raises:
            ValueError: If the label is not an identifier or collides with a weighted column prefix
        """
        if not is_option_name(v) or v == "w":
            raise ValueError(f"baseline label {v!r} must be an identifier other than 'w'")
        return v

    @property
    def builtin(self) -> bool:
        """Whether the source names a built-in configuration."""
        return self.source in (ALLYES, ALLNO)


class PipelineConfig(BaseModel):
    """Inputs and options of one pipeline invocation.

    Attributes:
        corpus_manifest: Corpus manifest JSON.
        cve_manifest: CVE manifest JSON.
        commit_log: Commit-log export.
        baselines: Baseline configurations, in column order.
        betweenness_mode: Distance mode of the weighted betweenness.
        attribution_mode: How diffs are attributed to functions.
        bootstrap_b: Bootstrap iterations per metric and transform; 0 disables the bootstrap.
        seed: Seed of every random draw.
        out: Output directory.
        dot: Also export the graph as DOT.
    """

    model_config = ConfigDict(extra="forbid")

    corpus_manifest: Optional[Path] = Field(None, description="Corpus manifest JSON")
    cve_manifest: Optional[Path] = Field(None, description="CVE manifest JSON")
    commit_log: Optional[Path] = Field(None, description="Commit-log export")
    baselines: List[BaselineSpec] = Field(default_factory=list, description="Baseline configurations")
    betweenness_mode: str = Field("inverse", description="inverse or direct")
    attribution_mode: str = Field("hunk", description="hunk or lines")
    bootstrap_b: int = Field(1000, ge=0, description="Bootstrap iterations")
    seed: int = Field(0, description="Random seed")
    out: Path = Field(Path("out"), description="Output directory")
    dot: bool = Field(False, description="Also write graph.dot")

    @field_validator("betweenness_mode")
    @classmethod
    def validate_betweenness_mode(cls, v: str) -> str:
        """Validate the distance mode."""
        if v not in DISTANCE_MODES:
            raise ValueError(f"betweenness mode must be one of {', '.join(DISTANCE_MODES)}")
        return v

    @field_validator("attribution_mode")
    @classmethod
    def validate_attribution_mode(cls, v: str) -> str:
        """Validate the attribution mode."""
        if v not in ("hunk", "lines"):
            raise ValueError("attribution mode must be hunk or lines")
        return v

    @field_validator("bootstrap_b")
    @classmethod
    def validate_bootstrap_b(cls, v: int) -> int:
        """Zero disables the bootstrap; otherwise at least 100 iterations are needed."""
        if 0 < v < 100:
            raise ValueError("bootstrap needs at least 100 iterations (0 disables it)")
        return v

    @field_validator("baselines")
    @classmethod
    def validate_unique_labels(cls, v: List[BaselineSpec]) -> List[BaselineSpec]:
        """Reject repeated baseline labels."""
        labels = [spec.label for spec in v]
        duplicates = sorted({label for label in labels if labels.count(label) > 1})
        if duplicates:
            raise ValueError(f"duplicate baseline labels: {', '.join(duplicates)}")
        return v

    @property
    def baseline_labels(self) -> List[str]:
        """Baseline labels in column order."""
        return [spec.label for spec in self.baselines]

    def missing_inputs(self) -> List[Tuple[str, Path]]:
        """Declared input paths that do not exist."""
        declared = [
            ("manifest", self.corpus_manifest),
            ("cve manifest", self.cve_manifest),
            ("commit log", self.commit_log),
        ]
        declared.extend((f"baseline {spec.label}", Path(spec.source)) for spec in self.baselines if not spec.builtin)
        return [(name, path) for name, path in declared if path is not None and not path.exists()]
