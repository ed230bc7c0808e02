"""This file contains the report helpers for the analyzer."""

import math
from typing import (
    Dict,
    List,
    Optional,
    Sequence,
)

import numpy as np

from app.core.config import settings
from app.models.metrics import MetricRow
from app.schemas.report import StatsReportDocument
from app.utils.tables import (
    format_value,
    render_csv,
)

DENSITY_HEADER = ["metric", "group", "bin_low", "bin_high", "count", "density"]


def _group(row: MetricRow) -> str:
    if row.vulnerable is None:
        return "unlabeled"
    return "vulnerable" if row.vulnerable else "non_vulnerable"


def log_bins(values: Sequence[float], width: Optional[float] = None) -> np.ndarray:
    """Bin index of every value on the ``log10(1 + x)`` scale; negative values fall in bin 0."""
    width = settings.REPORT_BIN_WIDTH if width is None else width
    scaled = np.log10(1 + np.clip(np.asarray(values, dtype=float), 0, None))
    return np.floor(scaled / width + 1e-12).astype(int)


def density_table(rows: Sequence[MetricRow], metrics: Sequence[str], width: Optional[float] = None) -> str:
    """Histogram data per metric and group on ``log10(1 + x)`` bins of equal width.

    Every group of a metric lists the same contiguous bins, from 0 to the highest occupied bin;
    counts of a group sum to its row count, and ``density`` is ``count / (n * width)``.

    Args:
        rows: Metric rows.
        metrics: Metric columns to bin.
        width: Bin width on the log scale (default ``settings.REPORT_BIN_WIDTH``).

    Returns:
        str: The density CSV.
    """
    width = settings.REPORT_BIN_WIDTH if width is None else width
    output = []
    for metric in metrics:
        groups: Dict[str, List[float]] = {}
        for row in rows:
            groups.setdefault(_group(row), []).append(float(row.value(metric)))
        if not groups:
            continue
        binned = {name: log_bins(values, width) for name, values in groups.items()}
        top = max(int(b.max()) for b in binned.values())
        for name in sorted(binned):
            counts = np.bincount(binned[name], minlength=top + 1)
            n = len(binned[name])
            for index, count in enumerate(counts):
                output.append(
                    [metric, name, round(index * width, 12), round((index + 1) * width, 12), int(count), count / (n * width)]
                )
    return render_csv(DENSITY_HEADER, output)


def _cell(value: Optional[float]) -> str:
    if value is None or (isinstance(value, float) and not math.isfinite(value)):
        return "n/a"
    return format_value(float(value), 4)


def render_text_report(document: StatsReportDocument) -> str:
    """Human-readable summary of a stats report."""
    lines = [
        f"rows: {document.rows} (unlabeled {document.unlabeled})",
        f"baselines: {', '.join(document.baselines) or 'none'}",
        "",
    ]
    if document.comparisons:
        lines.append("metric comparisons (vulnerable vs. non-vulnerable)")
    for entry in document.comparisons:
        if entry.error:
            lines.append(f"  {entry.metric}: not computed ({entry.error})")
            continue
        low, high = entry.ci95 or (None, None)
        line = (
            f"  {entry.metric}: means {_cell(entry.group_means.vulnerable)} vs {_cell(entry.group_means.non_vulnerable)}"
            f", ratio {_cell(entry.ratio_of_means)}, diff {_cell(entry.mean_diff)}"
            f" [{_cell(low)}, {_cell(high)}], t {_cell(entry.t)}, df {_cell(entry.df)}, p {_cell(entry.p)}"
        )
        lines.append(line)
        for boot in entry.bootstrap:
            verdicts = ", ".join(f"{alpha}: {'yes' if flag else 'no'}" for alpha, flag in boot.significant.items())
            lines.append(
                f"    bootstrap {boot.transform} (B={boot.B}, seed={boot.seed}):"
                f" percentile {_cell(boot.percentile)}; significant {verdicts}"
            )

    if document.confounds:
        lines.extend(["", "confounding analysis (odds ratio per standard deviation)"])
    for entry in document.confounds:
        if entry.error:
            lines.append(f"  {entry.metric} | {entry.control}: not computed ({entry.error})")
            continue
        flags = [name for name, on in (("rank deficient", entry.rank_deficient), ("not converged", not entry.converged)) if on]
        lines.append(
            f"  {entry.metric} | {entry.control}: OR {_cell(entry.or_per_sd_uni)} -> {_cell(entry.or_per_sd_adj)}"
            f" ({_cell(entry.pct_change)}%), chi2 {_cell(entry.deviance_chi2)}, p {_cell(entry.p_deviance)}"
            f", r {_cell(entry.correlation)}" + (f" [{', '.join(flags)}]" if flags else "")
        )
    return "\n".join(lines) + "\n"
