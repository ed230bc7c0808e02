"""This file contains the metric records for the analyzer."""

from dataclasses import (
    dataclass,
    field,
)
from typing import (
    Dict,
    List,
    Optional,
    Union,
)

from app.core.pcalg import ConfigAssignment

Number = Union[int, float]

SIMPLE_COLUMNS = ["size_loc", "internal_ifdefs", "internal_options", "external_options"]
WEIGHTED_COLUMNS = ["w_in_deg", "w_out_deg", "w_eigen", "w_between"]
BASELINE_SUFFIXES = ["in_deg", "out_deg", "eigen", "between"]


@dataclass(frozen=True)
class CentralityScores:
    """Per-node scores of one centrality.

    Attributes:
        values: Score per node id.
        mode: ``weighted`` or ``baseline``.
        config: The configuration a baseline was projected under.
        degenerate: True when the graph has no edges (all scores zero).
        converged: False when an iterative method hit its iteration cap.
        iterations: Iterations performed by an iterative method.
    """

    values: Dict[str, float]
    mode: str = "weighted"
    config: Optional[ConfigAssignment] = None
    degenerate: bool = False
    converged: bool = True
    iterations: int = 0

    def get(self, node_id: str) -> float:
        """Score of a node, zero for nodes the scores do not cover."""
        return self.values.get(node_id, 0)


@dataclass(frozen=True)
class BaselineScores:
    """Unweighted centralities of a function on one projected configuration."""

    in_degree: int = 0
    out_degree: int = 0
    eigen: float = 0.0
    between: float = 0.0


@dataclass(frozen=True)
class MetricRow:
    """Per-function metric vector."""

    id: str
    file: str
    name: str
    size_loc: int
    internal_ifdefs: int
    internal_options: int
    external_options: int
    w_in_degree: int
    w_out_degree: int
    w_eigen: float
    w_between: float
    baselines: Dict[str, BaselineScores] = field(default_factory=dict)
    vulnerable: Optional[bool] = None

    def columns(self) -> Dict[str, Union[Number, str, Optional[bool]]]:
        """Return the row as an ordered mapping of CSV column name to value."""
        result: Dict[str, Union[Number, str, Optional[bool]]] = {
            "id": self.id,
            "file": self.file,
            "name": self.name,
            "size_loc": self.size_loc,
            "internal_ifdefs": self.internal_ifdefs,
            "internal_options": self.internal_options,
            "external_options": self.external_options,
            "w_in_deg": self.w_in_degree,
            "w_out_deg": self.w_out_degree,
            "w_eigen": self.w_eigen,
            "w_between": self.w_between,
        }
        for label, scores in self.baselines.items():
            result[f"{label}_in_deg"] = scores.in_degree
            result[f"{label}_out_deg"] = scores.out_degree
            result[f"{label}_eigen"] = scores.eigen
            result[f"{label}_between"] = scores.between
        result["vulnerable"] = self.vulnerable
        return result

    def value(self, column: str) -> Number:
        """Return a numeric column by its CSV name.

        Raises:
            KeyError: If the row has no such numeric column.
        """
        value = self.columns()[column]
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise KeyError(f"{column} is not a numeric column")
        return value


def metric_header(baseline_labels: List[str]) -> List[str]:
    """The metric table header for the given baseline labels."""
    header = ["id", "file", "name", *SIMPLE_COLUMNS, *WEIGHTED_COLUMNS]
    for label in baseline_labels:
        header.extend(f"{label}_{suffix}" for suffix in BASELINE_SUFFIXES)
    header.append("vulnerable")
    return header
