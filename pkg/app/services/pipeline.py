"""This file contains the pipeline service for the analyzer.

Stages exchange files in the output directory: scan writes the function table, graph the graph
JSON (and DOT), labels the label CSV, metrics the metric table, stats the report JSON/CSV and
report the text summary with density data. Every stage reads only artifacts of earlier stages.
"""

import json
import math
from pathlib import Path
from typing import (
    Any,
    Dict,
    List,
    Optional,
    Sequence,
    Tuple,
    Type,
    TypeVar,
)

from pydantic import (
    BaseModel,
    ValidationError,
)
from tqdm import tqdm

from app.core.config import settings
from app.core.cparse import scan_file
from app.core.exceptions import (
    AssignmentFileError,
    InputError,
    ManifestError,
    StatsError,
)
from app.core.logging import logger
from app.core.metrics import (
    metric_table,
    read_metric_table,
    write_metric_table,
)
from app.core.pcalg import (
    ConfigAssignment,
    is_option_name,
    option_count,
    options_of,
    parse_pc,
    pc_and,
    render,
)
from app.core.stats import (
    compared_metrics,
    confound_analysis,
    confound_pairings,
    group_compare,
)
from app.core.vargraph import (
    build,
    export,
    import_json,
)
from app.models.graph import VariationalCallGraph
from app.models.metrics import MetricRow
from app.models.source import (
    CallSite,
    FunctionRecord,
    ScannedFile,
    SourceFile,
)
from app.models.stats import GroupComparison
from app.models.vulnerability import VulnerabilityLabel
from app.schemas.functions import (
    CallSiteSchema,
    FunctionEntrySchema,
    FunctionTableDocument,
    ScannedFileSchema,
)
from app.schemas.manifest import CorpusManifestSchema
from app.schemas.pipeline import (
    ALLNO,
    ALLYES,
    BaselineSpec,
    PipelineConfig,
)
from app.schemas.report import (
    BootstrapSchema,
    ComparisonSchema,
    ConfoundSchema,
    GroupMeansSchema,
    StatsReportDocument,
)
from app.services.report import (
    density_table,
    render_text_report,
)
from app.services.vulnmine import (
    label_functions,
    merge_commit_log,
    parse_cve_manifest,
    read_labels,
    scan_commit_log,
    write_labels,
)
from app.utils.sanitization import (
    decode_source,
    normalize_path,
)
from app.utils.tables import render_csv

SchemaT = TypeVar("SchemaT", bound=BaseModel)

FUNCTIONS_JSON = "functions.json"
FUNCTIONS_CSV = "functions.csv"
GRAPH_JSON = "graph.json"
GRAPH_DOT = "graph.dot"
METRICS_CSV = "metrics.csv"
LABELS_CSV = "labels.csv"
LABEL_WARNINGS = "labels.warnings.txt"
STATS_JSON = "stats.json"
STATS_CSV = "stats.csv"
REPORT_TXT = "report.txt"
DENSITY_CSV = "density.csv"

FUNCTIONS_HEADER = [
    "id",
    "file",
    "name",
    "begin_line",
    "end_line",
    "size_loc",
    "pc",
    "internal_ifdefs",
    "internal_options",
    "external_options",
    "calls",
]
STATS_HEADER = [
    "metric",
    "n_vulnerable",
    "n_non_vulnerable",
    "mean_vulnerable",
    "mean_non_vulnerable",
    "ratio_of_means",
    "mean_diff",
    "ci95_low",
    "ci95_high",
    "t",
    "df",
    "p",
    "bootstrap_identity_percentile",
    "bootstrap_log1p_percentile",
    "error",
]


def _finite(value: Optional[float]) -> Optional[float]:
    return value if value is not None and math.isfinite(value) else None


def _validate(schema: Type[SchemaT], text: str, artifact: str) -> SchemaT:
    try:
        return schema.model_validate_json(text)
    except ValidationError as e:
        error = e.errors()[0]
        location = ".".join(str(part) for part in error["loc"])
        logger.error("artifact_invalid", artifact=artifact, location=location, error=error["msg"])
        raise ManifestError(error["msg"], f"{artifact}:{location}" if location else artifact)


def parse_assignment_file(text: str, path: str = "<memory>") -> ConfigAssignment:
    """Parse an assignment file: one ``OPTION=y|n`` per line, ``#`` starts a comment.

    Unlisted options are disabled.

    Raises:
        AssignmentFileError: If a line is malformed or assigns an option twice.
    """
    bindings: Dict[str, bool] = {}
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        name, sep, value = (part.strip() for part in line.partition("="))
        if not sep or not is_option_name(name):
            raise AssignmentFileError(f"expected OPTION=y|n, got {raw.strip()!r}", path, number)
        if value.lower() not in ("y", "n"):
            raise AssignmentFileError(f"value of {name} must be y or n, got {value!r}", path, number)
        if name in bindings:
            raise AssignmentFileError(f"{name} is assigned twice", path, number)
        bindings[name] = value.lower() == "y"
    return ConfigAssignment(bindings, False)


def graph_options(g: VariationalCallGraph) -> set:
    """Options referenced by any node or edge condition."""
    names = set()
    for node in g.nodes.values():
        names |= options_of(node.pc)
    for edge in g.edges:
        names |= options_of(edge.pc)
    return names


def functions_document(corpus: Sequence[ScannedFile]) -> FunctionTableDocument:
    """Convert scan results to the function table document."""
    return FunctionTableDocument(
        files=[
            ScannedFileSchema(
                path=scanned.path,
                file_pc=render(scanned.file_pc),
                functions=[
                    FunctionEntrySchema(
                        id=fn.id,
                        name=fn.name,
                        file=fn.file,
                        begin_line=fn.begin_line,
                        end_line=fn.end_line,
                        def_pc=render(fn.def_pc),
                        size_loc=fn.size_loc,
                        internal_ifdefs=fn.internal_ifdef_count,
                        internal_options=sorted(fn.internal_options),
                        calls=[
                            CallSiteSchema(callee=call.callee_name, line=call.line, pc=render(call.local_pc))
                            for call in fn.call_sites
                        ],
                    )
                    for fn in scanned.functions
                ],
            )
            for scanned in corpus
        ]
    )


def corpus_from_document(document: FunctionTableDocument) -> List[ScannedFile]:
    """Convert a function table document back to scan results (directive events are not stored)."""
    return [
        ScannedFile(
            path=item.path,
            file_pc=parse_pc(item.file_pc),
            functions=[
                FunctionRecord(
                    id=fn.id,
                    name=fn.name,
                    file=fn.file,
                    begin_line=fn.begin_line,
                    end_line=fn.end_line,
                    def_pc=parse_pc(fn.def_pc),
                    internal_ifdef_count=fn.internal_ifdefs,
                    internal_options=frozenset(fn.internal_options),
                    call_sites=tuple(CallSite(call.callee, call.line, parse_pc(call.pc)) for call in fn.calls),
                )
                for fn in item.functions
            ],
        )
        for item in document.files
    ]


def functions_csv(corpus: Sequence[ScannedFile]) -> str:
    """Render the flat function table."""
    rows = []
    for scanned in corpus:
        for fn in scanned.functions:
            pc = pc_and(scanned.file_pc, fn.def_pc)
            rows.append(
                [
                    fn.id,
                    fn.file,
                    fn.name,
                    fn.begin_line,
                    fn.end_line,
                    fn.size_loc,
                    render(pc),
                    fn.internal_ifdef_count,
                    len(fn.internal_options),
                    option_count(pc),
                    len(fn.call_sites),
                ]
            )
    return render_csv(FUNCTIONS_HEADER, rows)


def comparison_entry(metric: str, result: GroupComparison) -> ComparisonSchema:
    """Convert a group comparison to its report entry."""
    test = result.t_test
    return ComparisonSchema(
        metric=metric,
        n_vulnerable=result.vulnerable.n,
        n_non_vulnerable=result.non_vulnerable.n,
        group_means=GroupMeansSchema(vulnerable=result.vulnerable.mean, non_vulnerable=result.non_vulnerable.mean),
        group_sds=GroupMeansSchema(vulnerable=result.vulnerable.sd, non_vulnerable=result.non_vulnerable.sd),
        ratio_of_means=_finite(test.ratio_of_means),
        mean_diff=test.mean_diff,
        ci95=[test.ci95_low, test.ci95_high],
        t=test.t,
        df=test.df,
        p=test.p_two_sided,
        bootstrap=[
            BootstrapSchema(
                B=boot.B,
                transform=boot.transform,
                seed=boot.seed,
                observed_t=boot.observed_t,
                percentile=boot.percentile_of_observed,
                significant={str(alpha): boot.significant_at(alpha) for alpha in settings.SIGNIFICANCE_LEVELS},
            )
            for boot in result.bootstraps
        ],
    )


def stats_document(
    rows: Sequence[MetricRow], baseline_labels: Sequence[str], bootstrap_b: int = 0, seed: int = 0
) -> StatsReportDocument:
    """Compare every metric and run every confound pairing.

    A metric whose comparison or pairing cannot be computed gets an error entry instead of
    failing the whole report.
    """
    metrics = compared_metrics(baseline_labels)
    comparisons: List[ComparisonSchema] = []
    for metric in tqdm(metrics, desc="metrics", disable=not settings.SHOW_PROGRESS):
        try:
            comparisons.append(comparison_entry(metric, group_compare(rows, metric, bootstrap_b, seed)))
        except StatsError as e:
            logger.warning("comparison_failed", metric=metric, error=str(e))
            comparisons.append(ComparisonSchema(metric=metric, error=str(e)))

    labeled = [row for row in rows if row.vulnerable is not None]
    outcome = [bool(row.vulnerable) for row in labeled]
    confounds: List[ConfoundSchema] = []
    for metric, control in confound_pairings(baseline_labels):
        try:
            report = confound_analysis(
                [row.value(metric) for row in labeled], [row.value(control) for row in labeled], outcome
            )
        except StatsError as e:
            logger.warning("confound_failed", metric=metric, control=control, error=str(e))
            confounds.append(ConfoundSchema(metric=metric, control=control, error=str(e)))
            continue
        confounds.append(
            ConfoundSchema(
                metric=metric,
                control=control,
                beta_uni=_finite(report.beta_uni),
                beta_adj=_finite(report.beta_adj),
                sd_metric=report.sd_metric,
                or_per_sd_uni=_finite(report.or_per_sd_uni),
                or_per_sd_adj=_finite(report.or_per_sd_adj),
                pct_change=_finite(report.pct_change),
                deviance_chi2=report.deviance_chi2,
                chi2_df=report.chi2_df,
                p_deviance=report.p_deviance,
                correlation=report.correlation,
                rank_deficient=report.rank_deficient,
                converged=report.converged,
            )
        )

    return StatsReportDocument(
        rows=len(rows),
        unlabeled=len(rows) - len(labeled),
        baselines=list(baseline_labels),
        significance_levels=list(settings.SIGNIFICANCE_LEVELS),
        comparisons=comparisons,
        confounds=confounds,
    )


def stats_csv(document: StatsReportDocument) -> str:
    """Render the flat per-metric summary of a stats report."""
    rows = []
    for entry in document.comparisons:
        percentiles = {boot.transform: boot.percentile for boot in entry.bootstrap}
        means = entry.group_means
        ci = entry.ci95 or [None, None]
        rows.append(
            [
                entry.metric,
                entry.n_vulnerable,
                entry.n_non_vulnerable,
                means.vulnerable if means else None,
                means.non_vulnerable if means else None,
                entry.ratio_of_means,
                entry.mean_diff,
                ci[0],
                ci[1],
                entry.t,
                entry.df,
                entry.p,
                percentiles.get("identity"),
                percentiles.get("log1p"),
                entry.error,
            ]
        )
    return render_csv(STATS_HEADER, rows)


def _dump(document: BaseModel) -> str:
    return json.dumps(document.model_dump(by_alias=True), indent=2) + "\n"


class PipelineService:
    """Service class running the analysis stages over file artifacts.

    Each stage method reads its inputs from the configuration or from the output directory,
    writes its artifacts, and returns its in-memory result.
    """

    def __init__(self, config: PipelineConfig):
        """Initialize the service.

        Args:
            config: The pipeline configuration

        Raises:
            InputError: If a declared input path does not exist
        """
        missing = config.missing_inputs()
        if missing:
            name, path = missing[0]
            logger.error("input_missing", input=name, path=str(path))
            raise InputError(f"{name} not found: {path}")
        self.config = config
        self.out = config.out
        self.warnings: List[str] = []

    def _path(self, name: str) -> Path:
        return self.out / name

    def _read(self, name: str, stage: str) -> str:
        path = self._path(name)
        if not path.is_file():
            logger.error("artifact_missing", artifact=name, stage=stage)
            raise InputError(f"{stage} needs {path}; run the earlier stages first")
        return path.read_text(encoding="utf-8")

    def _write(self, name: str, text: str) -> Path:
        self.out.mkdir(parents=True, exist_ok=True)
        path = self._path(name)
        with open(path, "w", encoding="utf-8", newline="") as f:
            f.write(text)
        logger.info("artifact_written", path=str(path), bytes=len(text.encode("utf-8")))
        return path

    def scan(self) -> List[ScannedFile]:
        """Scan every manifest file and write the function table.

        Raises:
            InputError: If the manifest or a source file is missing or malformed
        """
        if self.config.corpus_manifest is None:
            raise InputError("scan needs --manifest")
        manifest = _validate(
            CorpusManifestSchema, self.config.corpus_manifest.read_text(encoding="utf-8"), "manifest"
        )
        root = self.config.corpus_manifest.parent
        stoplist = [*manifest.stoplist, *settings.CALL_STOPLIST]

        corpus: List[ScannedFile] = []
        for entry in tqdm(manifest.files, desc="scanning", disable=not settings.SHOW_PROGRESS):
            path = root / entry.path
            if not path.is_file():
                logger.error("source_missing", path=str(path))
                raise InputError(f"source file not found: {path}")
            source = SourceFile(
                path=normalize_path(entry.path),
                content=decode_source(path.read_bytes()),
                file_pc=parse_pc(entry.file_pc),
            )
            corpus.append(scan_file(source, stoplist))

        self._write(FUNCTIONS_JSON, _dump(functions_document(corpus)))
        self._write(FUNCTIONS_CSV, functions_csv(corpus))
        logger.info("scan_finished", files=len(corpus), functions=sum(len(s.functions) for s in corpus))
        return corpus

    def load_corpus(self, stage: str) -> List[ScannedFile]:
        """Read the function table artifact."""
        return corpus_from_document(_validate(FunctionTableDocument, self._read(FUNCTIONS_JSON, stage), FUNCTIONS_JSON))

    def graph(self) -> VariationalCallGraph:
        """Build the variational call graph from the function table and export it."""
        g = build(self.load_corpus("graph"))
        self._write(GRAPH_JSON, export(g, "json"))
        if self.config.dot:
            self._write(GRAPH_DOT, export(g, "dot"))
        return g

    def labels(self) -> Tuple[List[VulnerabilityLabel], List[str]]:
        """Label every function from the CVE manifest and commit log."""
        functions = [fn for scanned in self.load_corpus("labels") for fn in scanned.functions]
        cves = []
        warnings: List[str] = []
        if self.config.cve_manifest is not None:
            cves = parse_cve_manifest(self.config.cve_manifest.read_text(encoding="utf-8"))
        if self.config.commit_log is not None:
            commits = scan_commit_log(self.config.commit_log.read_text(encoding="utf-8"))
            cves, warnings = merge_commit_log(cves, commits)
        if self.config.cve_manifest is None and self.config.commit_log is None:
            logger.info("no_vulnerability_inputs")

        labels, path_warnings = label_functions(functions, cves, self.config.attribution_mode)
        warnings.extend(path_warnings)
        self._write(LABELS_CSV, write_labels(labels))
        self._write(LABEL_WARNINGS, "".join(f"{warning}\n" for warning in warnings))
        self.warnings.extend(warnings)
        return labels, warnings

    def baseline_configs(self, g: VariationalCallGraph) -> List[Tuple[str, ConfigAssignment]]:
        """Resolve baseline specs to configurations, warning about options the graph never uses."""
        known = graph_options(g)
        configs: List[Tuple[str, ConfigAssignment]] = []
        for spec in self.config.baselines:
            configs.append((spec.label, self._baseline_config(spec, known)))
        return configs

    def _baseline_config(self, spec: BaselineSpec, known: set) -> ConfigAssignment:
        if spec.source == ALLYES:
            return ConfigAssignment.all_true()
        if spec.source == ALLNO:
            return ConfigAssignment.all_false()
        cfg = parse_assignment_file(Path(spec.source).read_text(encoding="utf-8"), spec.source)
        for name in sorted(set(cfg.bindings) - known):
            warning = f"baseline {spec.label}: option {name} does not occur in the graph"
            logger.warning("unknown_baseline_option", label=spec.label, option=name)
            self.warnings.append(warning)
        return cfg

    def metrics(self) -> List[MetricRow]:
        """Compute the metric table, joining labels when the label artifact exists."""
        g = import_json(self._read(GRAPH_JSON, "metrics"))
        labels = read_labels(self._read(LABELS_CSV, "metrics")) if self._path(LABELS_CSV).is_file() else None
        rows, warnings = metric_table(g, self.baseline_configs(g), labels, self.config.betweenness_mode)
        self.warnings.extend(warnings)
        self._write(METRICS_CSV, write_metric_table(rows, self.config.baseline_labels))
        return rows

    def stats(self) -> StatsReportDocument:
        """Run the statistical comparisons on the metric table."""
        rows, baseline_labels = read_metric_table(self._read(METRICS_CSV, "stats"))
        document = stats_document(rows, baseline_labels, self.config.bootstrap_b, self.config.seed)
        self._write(STATS_JSON, _dump(document))
        self._write(STATS_CSV, stats_csv(document))
        return document

    def report(self) -> str:
        """Write the text summary and the density data for external plotting."""
        document = _validate(StatsReportDocument, self._read(STATS_JSON, "report"), STATS_JSON)
        rows: List[MetricRow] = []
        if self._path(METRICS_CSV).is_file():
            rows, _ = read_metric_table(self._read(METRICS_CSV, "report"))
        text = render_text_report(document)
        self._write(REPORT_TXT, text)
        self._write(DENSITY_CSV, density_table(rows, compared_metrics(document.baselines)))
        return text

    def run(self) -> Dict[str, Any]:
        """Run every stage in order and return a summary of the results."""
        corpus = self.scan()
        g = self.graph()
        labels, _ = self.labels()
        rows = self.metrics()
        document = self.stats()
        self.report()
        return {
            "files": len(corpus),
            "functions": sum(len(s.functions) for s in corpus),
            "nodes": len(g.nodes),
            "edges": len(g.edges),
            "unresolved": len(g.unresolved_calls),
            "vulnerable": sum(label.vulnerable for label in labels),
            "rows": len(rows),
            "comparisons": len(document.comparisons),
            "failed": sum(entry.error is not None for entry in document.comparisons),
        }
