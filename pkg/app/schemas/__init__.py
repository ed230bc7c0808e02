"""This file contains the schemas for the analyzer."""

from app.schemas.cve import CveManifestSchema
from app.schemas.functions import FunctionTableDocument
from app.schemas.graph import GraphDocument
from app.schemas.manifest import CorpusManifestSchema
from app.schemas.pipeline import (
    BaselineSpec,
    PipelineConfig,
)
from app.schemas.report import StatsReportDocument

__all__ = [
    "BaselineSpec",
    "CorpusManifestSchema",
    "CveManifestSchema",
    "FunctionTableDocument",
    "GraphDocument",
    "PipelineConfig",
    "StatsReportDocument",
]
