"""This file contains the CSV and number formatting utilities for the analyzer."""

import csv
import io
from typing import (
    Any,
    Dict,
    Iterable,
    List,
    Optional,
    Sequence,
)

from app.core.config import settings


def format_value(value: Any, digits: Optional[int] = None) -> str:
    """Render a value for a CSV cell.

    Args:
        value: The value; booleans render as ``true``/``false`` and None as an empty cell.
        digits: Significant digits for floats (default ``settings.FLOAT_SIGNIFICANT_DIGITS``).

    Returns:
        str: The rendered cell.
    """
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        digits = settings.FLOAT_SIGNIFICANT_DIGITS if digits is None else digits
        if value == 0:
            return "0"
        return f"{value:.{digits}g}"
    return str(value)


def parse_bool(text: str) -> Optional[bool]:
    """Parse a ``true``/``false``/empty cell.

    Raises:
        ValueError: If the cell is anything else.
    """
    lowered = text.strip().lower()
    if lowered == "":
        return None
    if lowered in ("true", "1", "yes"):
        return True
    if lowered in ("false", "0", "no"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def render_csv(header: Sequence[str], rows: Iterable[Sequence[Any]]) -> str:
    """Render rows as CSV text with ``\\n`` line endings.

    Args:
        header: Column names.
        rows: Cell values, formatted with :func:`format_value`.

    Returns:
        str: The CSV document.
    """
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([format_value(cell) for cell in row])
    return buffer.getvalue()


def read_csv(text: str) -> List[Dict[str, str]]:
    """Read CSV text into dictionaries keyed by header."""
    return list(csv.DictReader(io.StringIO(text)))
