"""This file contains the utilities for the analyzer."""

from .graph import (
    add_distances,
    projection_to_digraph,
    to_digraph,
)
from .sanitization import (
    decode_source,
    normalize_path,
    resolve_diff_path,
)
from .tables import (
    format_value,
    render_csv,
)

__all__ = [
    "add_distances",
    "decode_source",
    "format_value",
    "normalize_path",
    "projection_to_digraph",
    "render_csv",
    "resolve_diff_path",
    "to_digraph",
]
