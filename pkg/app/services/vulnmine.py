"""This file contains the vulnerability mining service for the analyzer.

Vulnerability labels come from offline inputs only: a CVE manifest listing fixing commits with
their unified diffs, and optionally a commit-log export whose messages are searched for CVE ids.
A function is vulnerable when a fixing change falls within its line span in the post-fix file.
"""

import re
from collections import defaultdict
from typing import (
    Dict,
    Iterable,
    List,
    Optional,
    Sequence,
    Set,
    Tuple,
)

from pydantic import ValidationError

from app.core.exceptions import (
    CommitLogError,
    DiffParseError,
    InputError,
    ManifestError,
)
from app.core.logging import logger
from app.models.source import FunctionRecord
from app.models.vulnerability import (
    CommitRecord,
    CveRecord,
    FileDiff,
    Hunk,
    LineTag,
    UnifiedDiff,
    VulnerabilityLabel,
)
from app.schemas.cve import (
    CVE_ID_RE,
    CveManifestSchema,
)
from app.utils.sanitization import (
    normalize_path,
    resolve_diff_path,
)
from app.utils.tables import (
    parse_bool,
    read_csv,
    render_csv,
)

HUNK_HEADER_RE = re.compile(r"^@@ -(\d+)(?:,(\d+))? \+(\d+)(?:,(\d+))? @@")
SEPARATOR_RE = re.compile(r"^\x00(COMMIT|DIFF) ([^\x00\s]+)\x00$")
ATTRIBUTION_MODES = ("hunk", "lines")
LABEL_HEADER = ["id", "vulnerable", "evidence_count", "cve_ids"]

_BODY_TAGS = {" ": LineTag.CONTEXT, "+": LineTag.ADD, "-": LineTag.DEL}


def find_cve_ids(message: str) -> List[str]:
    """Distinct CVE ids of a commit message in order of appearance."""
    return list(dict.fromkeys(CVE_ID_RE.findall(message)))


def _location(error: dict) -> str:
    return ".".join(str(part) for part in error.get("loc", ())) or "$"


def parse_unified_diff(text: str) -> UnifiedDiff:
    """Parse the hunks of a unified diff.

    File headers (``diff``, ``index``, ``---``, ``+++`` and other git extended headers) and
    ``\\ No newline at end of file`` markers are skipped. An empty body line counts as context.

    Args:
        text: Unified diff text of one file, or an empty string

    Returns:
        UnifiedDiff: The hunks ordered by ``new_start``

    Raises:
        DiffParseError: If a hunk body does not match its header counts
    """
    hunks: List[Hunk] = []
    index = -1
    header: Optional[Tuple[int, int, int, int]] = None
    body: List[Tuple[LineTag, str]] = []
    old_left = new_left = 0

    def close() -> None:
        if header is None:
            return
        if old_left or new_left:
            raise DiffParseError(
                f"body is short by {old_left} old-side and {new_left} new-side lines", index
            )
        hunks.append(Hunk(*header, lines=tuple(body)))

    for line in text.splitlines():
        in_body = header is not None and (old_left > 0 or new_left > 0)
        if in_body:
            if line.startswith("\\"):
                continue
            tag = _BODY_TAGS.get(line[:1], LineTag.CONTEXT if line == "" else None)
            if tag is None:
                raise DiffParseError(f"unexpected body line {line[:40]!r}", index)
            if tag is not LineTag.ADD:
                old_left -= 1
            if tag is not LineTag.DEL:
                new_left -= 1
            if old_left < 0 or new_left < 0:
                raise DiffParseError("body is longer than the header counts", index)
            body.append((tag, line[1:]))
            continue

        match = HUNK_HEADER_RE.match(line)
        if match:
            close()
            index += 1
            old_start, old_len, new_start, new_len = match.groups()
            header = (
                int(old_start),
                1 if old_len is None else int(old_len),
                int(new_start),
                1 if new_len is None else int(new_len),
            )
            old_left, new_left = header[1], header[3]
            body = []
            continue

        if header is not None and line[:1] in ("+", "-") and not line.startswith(("+++ ", "--- ")):
            raise DiffParseError("body is longer than the header counts", index)
        # file headers, extended headers, blank separators

    close()
    return UnifiedDiff(hunks=tuple(sorted(hunks, key=lambda h: (h.new_start, h.old_start))))


def parse_cve_manifest(text: str) -> List[CveRecord]:
    """Parse and validate a CVE manifest.

    Args:
        text: CVE manifest JSON

    Returns:
        List[CveRecord]: Records in manifest order, with parsed diffs

    Raises:
        ManifestError: If the JSON is malformed, violates the schema, or repeats a CVE id
        DiffParseError: If an embedded diff is malformed
    """
    try:
        manifest = CveManifestSchema.model_validate_json(text)
    except ValidationError as e:
        first = e.errors()[0]
        logger.error("cve_manifest_invalid", location=_location(first), error=first["msg"])
        raise ManifestError(first["msg"], _location(first))

    records: List[CveRecord] = []
    for i, entry in enumerate(manifest.root):
        commits = []
        for j, commit in enumerate(entry.commits):
            file_diffs = []
            for k, file in enumerate(commit.files):
                try:
                    diff = parse_unified_diff(file.diff)
                except DiffParseError as e:
                    logger.error("cve_manifest_diff_invalid", location=f"{i}.commits.{j}.files.{k}.diff", error=str(e))
                    raise
                file_diffs.append(FileDiff(path=normalize_path(file.path), diff=diff))
            commits.append(
                CommitRecord(
                    commit_id=commit.commit_id,
                    message=commit.message,
                    file_diffs=tuple(file_diffs),
                    cve_ids=(entry.cve_id,),
                )
            )
        records.append(CveRecord(cve_id=entry.cve_id, commits=tuple(commits)))
    logger.info("cve_manifest_parsed", cves=len(records), commits=sum(len(r.commits) for r in records))
    return records


def scan_commit_log(export: str) -> List[CommitRecord]:
    """Find CVE-fixing commits in a commit-log export.

    Each record starts with a line ``\\x00COMMIT <id>\\x00`` followed by message lines. A line
    ``\\x00DIFF <path>\\x00`` inside a record starts a unified diff of that path which runs to the
    next separator line.

    Args:
        export: The commit-log export text

    Returns:
        List[CommitRecord]: Commits whose message names at least one CVE id, in log order

    Raises:
        CommitLogError: If a separator line is malformed or text precedes the first record
        DiffParseError: If an inline diff is malformed
    """
    records: List[Tuple[str, List[str], List[Tuple[str, List[str]]]]] = []
    offset = 0
    for line in export.splitlines(keepends=True):
        stripped = line.rstrip("\r\n")
        if stripped.startswith("\x00"):
            match = SEPARATOR_RE.match(stripped)
            if not match:
                raise CommitLogError("malformed record separator", offset)
            kind, value = match.groups()
            if kind == "COMMIT":
                records.append((value, [], []))
            elif not records:
                raise CommitLogError("diff section outside a commit record", offset)
            else:
                records[-1][2].append((value, []))
        elif not records:
            if stripped.strip():
                raise CommitLogError("text before the first commit record", offset)
        elif records[-1][2]:
            records[-1][2][-1][1].append(stripped)
        else:
            records[-1][1].append(stripped)
        offset += len(line.encode("utf-8"))

    commits: List[CommitRecord] = []
    for commit_id, message_lines, diffs in records:
        message = "\n".join(message_lines).strip("\n")
        cve_ids = find_cve_ids(message)
        if not cve_ids:
            continue
        file_diffs = tuple(
            FileDiff(path=normalize_path(path), diff=parse_unified_diff("\n".join(lines)))
            for path, lines in diffs
        )
        commits.append(CommitRecord(commit_id=commit_id, message=message, file_diffs=file_diffs, cve_ids=tuple(cve_ids)))
    logger.info("commit_log_scanned", records=len(records), cve_commits=len(commits))
    return commits


def merge_commit_log(
    cves: Sequence[CveRecord], commits: Iterable[CommitRecord]
) -> Tuple[List[CveRecord], List[str]]:
    """Merge commits found in a commit log into CVE records.

    A log commit joins every CVE its message names. When the manifest already lists the commit
    for that CVE, the manifest diffs win and log diffs only fill a commit without any. A log
    commit that carries no diff and is not in the manifest produces a warning and no record change.

    Args:
        cves: Records from the CVE manifest
        commits: Commits from :func:`scan_commit_log`

    Returns:
        Tuple[List[CveRecord], List[str]]: Merged records (manifest order, then new CVEs sorted) and warnings
    """
    merged: Dict[str, List[CommitRecord]] = {record.cve_id: list(record.commits) for record in cves}
    warnings: List[str] = []
    for commit in commits:
        for cve_id in commit.cve_ids:
            known = merged.get(cve_id, [])
            position = next((i for i, c in enumerate(known) if c.commit_id == commit.commit_id), None)
            if position is not None:
                if not known[position].file_diffs and commit.file_diffs:
                    known[position] = CommitRecord(
                        commit_id=commit.commit_id,
                        message=known[position].message or commit.message,
                        file_diffs=commit.file_diffs,
                        cve_ids=known[position].cve_ids,
                    )
                elif not known[position].file_diffs:
                    warnings.append(f"commit {commit.commit_id} names {cve_id} but no diff is available")
                continue
            if not commit.file_diffs:
                warnings.append(f"commit {commit.commit_id} names {cve_id} but no diff is available")
                continue
            merged.setdefault(cve_id, []).append(
                CommitRecord(
                    commit_id=commit.commit_id,
                    message=commit.message,
                    file_diffs=commit.file_diffs,
                    cve_ids=(cve_id,),
                )
            )

    for warning in warnings:
        logger.warning("commit_without_diff", detail=warning)
    ordered = [record.cve_id for record in cves] + sorted(set(merged) - {record.cve_id for record in cves})
    return [CveRecord(cve_id=cve_id, commits=tuple(merged[cve_id])) for cve_id in ordered], warnings


def attribute(diff: UnifiedDiff, functions: Iterable[FunctionRecord], mode: str = "hunk") -> Set[str]:
    """Ids of the functions a diff touches.

    Args:
        diff: Diff of one file
        functions: Functions parsed from the post-change version of the same file
        mode: ``hunk`` intersects the effective new-file range of every hunk with the function span;
            ``lines`` only counts added lines and deletion insertion points

    Returns:
        Set[str]: Touched function ids; a hunk spanning several functions touches each of them

    Raises:
        InputError: If the mode is unknown
    """
    if mode not in ATTRIBUTION_MODES:
        raise InputError(f"unknown attribution mode {mode!r}; expected one of {', '.join(ATTRIBUTION_MODES)}")
    touched: Set[str] = set()
    functions = list(functions)
    for hunk in diff.hunks:
        if mode == "hunk":
            low, high = hunk.new_range
            touched.update(fn.id for fn in functions if low <= fn.end_line and fn.begin_line <= high)
        else:
            for line in hunk.changed_lines():
                touched.update(fn.id for fn in functions if fn.begin_line <= line <= fn.end_line)
    return touched


def label_functions(
    functions: Iterable[FunctionRecord], cves: Iterable[CveRecord], mode: str = "hunk"
) -> Tuple[List[VulnerabilityLabel], List[str]]:
    """Label every corpus function as vulnerable or not.

    Args:
        functions: All corpus functions
        cves: CVE records with fixing commits
        mode: Attribution mode, see :func:`attribute`

    Returns:
        Tuple[List[VulnerabilityLabel], List[str]]: One label per function sorted by id, and
        warnings for diff paths that are not in the corpus
    """
    functions = list(functions)
    by_file: Dict[str, List[FunctionRecord]] = defaultdict(list)
    for fn in functions:
        by_file[normalize_path(fn.file)].append(fn)

    evidence: Dict[str, Set[Tuple[str, str]]] = defaultdict(set)
    warnings: List[str] = []
    for cve in cves:
        for commit in cve.commits:
            for file_diff in commit.file_diffs:
                path = resolve_diff_path(file_diff.path, by_file)
                if path not in by_file:
                    warning = f"{cve.cve_id} commit {commit.commit_id}: path {path} is not in the corpus"
                    if warning not in warnings:
                        warnings.append(warning)
                        logger.warning("diff_path_skipped", cve_id=cve.cve_id, commit_id=commit.commit_id, path=path)
                    continue
                for fid in attribute(file_diff.diff, by_file[path], mode):
                    evidence[fid].add((cve.cve_id, commit.commit_id))

    labels = [
        VulnerabilityLabel(function_id=fn.id, evidence=tuple(sorted(evidence.get(fn.id, ()))))
        for fn in sorted(functions, key=lambda f: f.id)
    ]
    logger.info("functions_labeled", functions=len(labels), vulnerable=sum(label.vulnerable for label in labels))
    return labels, warnings


def write_labels(labels: Iterable[VulnerabilityLabel]) -> str:
    """Render the label CSV."""
    return render_csv(
        LABEL_HEADER,
        ([label.function_id, label.vulnerable, len(label.evidence), ";".join(label.cve_ids)] for label in labels),
    )


def read_labels(text: str) -> Dict[str, bool]:
    """Read a label CSV into a vulnerable flag per function id.

    Raises:
        InputError: If the header or a cell is malformed
    """
    header = text.splitlines()[0].split(",") if text.strip() else LABEL_HEADER
    if header != LABEL_HEADER:
        raise InputError(f"label table header must be {','.join(LABEL_HEADER)}")
    labels: Dict[str, bool] = {}
    for number, record in enumerate(read_csv(text), start=2):
        try:
            value = parse_bool(record["vulnerable"])
        except ValueError as e:
            raise InputError(f"label table line {number}: {e}")
        if value is not None:
            labels[record["id"]] = value
    return labels
