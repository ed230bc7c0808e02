#!/usr/bin/env python3
"""Command-line interface for the configuration complexity analyzer."""

import argparse
import sys
from pathlib import Path
from typing import (
    Callable,
    Dict,
    List,
    Optional,
)

import colorama
from colorama import (
    Fore,
    Style,
)
from pydantic import ValidationError

from app.core.config import settings
from app.core.exceptions import (
    AnalysisError,
    InputError,
)
from app.core.logging import logger
from app.schemas.pipeline import (
    BaselineSpec,
    PipelineConfig,
)
from app.services.pipeline import PipelineService
from app.utils.graph import DISTANCE_MODES

STAGES = ("scan", "graph", "labels", "metrics", "stats", "report", "run")


def print_title(title: str) -> None:
    """Print a formatted title with colors.

    Args:
        title: The title text to print
    """
    print("\n" + "=" * 60)
    print(f"{Fore.CYAN}{Style.BRIGHT}{title.center(60)}{Style.RESET_ALL}")
    print("=" * 60 + "\n")


def print_info(message: str) -> None:
    """Print an info message with colors."""
    print(f"{Fore.GREEN}• {message}{Style.RESET_ALL}")


def print_warning(message: str) -> None:
    """Print a warning message with colors."""
    print(f"{Fore.YELLOW}⚠ {message}{Style.RESET_ALL}")


def print_error(message: str) -> None:
    """Print an error message with colors to stderr."""
    print(f"{Fore.RED}✗ {message}{Style.RESET_ALL}", file=sys.stderr)


def print_success(message: str) -> None:
    """Print a success message with colors."""
    print(f"{Fore.GREEN}✓ {message}{Style.RESET_ALL}")


def parse_baseline(text: str) -> BaselineSpec:
    """Parse a ``label=path|allyes|allno`` baseline flag.

    Raises:
        InputError: If the flag is malformed
    """
    label, sep, source = text.partition("=")
    if not sep or not source:
        raise InputError(f"--baseline expects label=path|allyes, got {text!r}")
    try:
        return BaselineSpec(label=label.strip(), source=source.strip())
    except ValidationError as e:
        raise InputError(e.errors()[0]["msg"])


def build_config(args: argparse.Namespace) -> PipelineConfig:
    """Build the pipeline configuration from parsed flags.

    Raises:
        InputError: If a flag value is invalid
    """
    try:
        return PipelineConfig(
            corpus_manifest=args.manifest,
            cve_manifest=args.cve_manifest,
            commit_log=args.commit_log,
            baselines=[parse_baseline(text) for text in args.baseline],
            betweenness_mode=args.betweenness_mode,
            attribution_mode=args.attribution_mode,
            bootstrap_b=args.bootstrap_b,
            seed=args.seed,
            out=args.out,
            dot=args.dot,
        )
    except ValidationError as e:
        error = e.errors()[0]
        location = ".".join(str(part) for part in error["loc"])
        raise InputError(f"{location}: {error['msg']}")


def create_parser() -> argparse.ArgumentParser:
    """Create the argument parser with one subcommand per stage."""
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--manifest", type=Path, help="Corpus manifest JSON")
    common.add_argument("--cve-manifest", type=Path, help="CVE manifest JSON")
    common.add_argument("--commit-log", type=Path, help="Commit-log export")
    common.add_argument(
        "--baseline",
        action="append",
        default=[],
        metavar="LABEL=PATH|allyes",
        help="Baseline configuration for unweighted centralities (repeatable)",
    )
    common.add_argument(
        "--betweenness-mode",
        choices=DISTANCE_MODES,
        default=settings.BETWEENNESS_MODE,
        help="Edge distance of the weighted betweenness",
    )
    common.add_argument(
        "--attribution-mode",
        choices=("hunk", "lines"),
        default="hunk",
        help="Attribute whole hunk ranges or only changed lines",
    )
    common.add_argument(
        "--bootstrap-b", type=int, default=settings.BOOTSTRAP_REPLICATES, help="Bootstrap iterations (0 disables)"
    )
    common.add_argument("--seed", type=int, default=settings.RANDOM_SEED, help="Seed of every random draw")
    common.add_argument("--out", type=Path, default=Path("out"), help="Output directory")
    common.add_argument("--dot", action="store_true", help="Also write graph.dot")
    common.add_argument("--quiet", action="store_true", help="Only print errors")

    parser = argparse.ArgumentParser(
        prog="confcomplex",
        description="Measure configuration complexity of C functions and relate it to past vulnerabilities",
    )
    subparsers = parser.add_subparsers(dest="command", required=True)
    helps = {
        "scan": "Scan the corpus into the function table",
        "graph": "Build the variational call graph",
        "labels": "Label functions from CVE fixes",
        "metrics": "Compute the metric table",
        "stats": "Compare vulnerable and non-vulnerable functions",
        "report": "Write the text summary and density data",
        "run": "Run every stage in order",
    }
    for stage in STAGES:
        subparsers.add_parser(stage, parents=[common], help=helps[stage])
    return parser


def summarize_scan(service: PipelineService, quiet: bool) -> None:
    """Run the scan stage and print its summary."""
    corpus = service.scan()
    if not quiet:
        print_success(f"scanned {len(corpus)} files, {sum(len(s.functions) for s in corpus)} functions")


def summarize_graph(service: PipelineService, quiet: bool) -> None:
    """Run the graph stage and print its summary."""
    g = service.graph()
    if not quiet:
        print_success(f"nodes {len(g.nodes)}, edges {len(g.edges)}, unresolved {len(g.unresolved_calls)}")


def summarize_labels(service: PipelineService, quiet: bool) -> None:
    """Run the labels stage and print its summary."""
    labels, _ = service.labels()
    if not quiet:
        if service.config.cve_manifest is None and service.config.commit_log is None:
            print_info("no CVE manifest or commit log given; every function is labeled non-vulnerable")
        print_success(f"vulnerable {sum(label.vulnerable for label in labels)} / {len(labels)}")


def summarize_metrics(service: PipelineService, quiet: bool) -> None:
    """Run the metrics stage and print its summary."""
    rows = service.metrics()
    if not quiet:
        print_success(f"metric rows {len(rows)}, baselines {', '.join(service.config.baseline_labels) or 'none'}")


def summarize_stats(service: PipelineService, quiet: bool) -> None:
    """Run the stats stage and print its summary."""
    document = service.stats()
    if quiet:
        return
    for entry in document.comparisons:
        if entry.error:
            print_warning(f"{entry.metric}: {entry.error}")
        else:
            color = Fore.GREEN if entry.p < min(settings.SIGNIFICANCE_LEVELS, default=0.01) else Fore.WHITE
            print(f"{Fore.CYAN}{entry.metric}:{Style.RESET_ALL} {color}p = {entry.p:.3g}{Style.RESET_ALL}")
    print_success(f"compared {len(document.comparisons)} metrics, {len(document.confounds)} confound pairings")


def summarize_report(service: PipelineService, quiet: bool) -> None:
    """Run the report stage and print the report."""
    text = service.report()
    if not quiet:
        print(text, end="")


def summarize_run(service: PipelineService, quiet: bool) -> None:
    """Run every stage and print the overall summary."""
    summary = service.run()
    if quiet:
        return
    print_title("Analysis Summary")
    for key, value in summary.items():
        print(f"{Fore.CYAN}{key}:{Style.RESET_ALL} {value}")
    print_success(f"artifacts written to {service.out}")


COMMANDS: Dict[str, Callable[[PipelineService, bool], None]] = {
    "scan": summarize_scan,
    "graph": summarize_graph,
    "labels": summarize_labels,
    "metrics": summarize_metrics,
    "stats": summarize_stats,
    "report": summarize_report,
    "run": summarize_run,
}


def main(argv: Optional[List[str]] = None) -> int:
    """Run the command line.

    Args:
        argv: Arguments without the program name (default ``sys.argv[1:]``)

    Returns:
        int: Exit code: 0 on success (warnings included), 2 on input errors, 3 otherwise
    """
    colorama.just_fix_windows_console()
    args = create_parser().parse_args(argv)
    try:
        service = PipelineService(build_config(args))
        COMMANDS[args.command](service, args.quiet)
    except AnalysisError as e:
        logger.error("command_failed", command=args.command, error=str(e), exit_code=e.exit_code)
        print_error(str(e))
        return e.exit_code
    except Exception as e:
        logger.exception("command_crashed", command=args.command, error=str(e))
        print_error(f"internal error: {e}")
        return 3

    if not args.quiet:
        for warning in service.warnings:
            print_warning(warning)
    return 0


if __name__ == "__main__":
    sys.exit(main())
