"""This file contains the input hygiene utilities for the analyzer."""

import re
from typing import Container

_DIFF_PREFIX_RE = re.compile(r"^(?:[ab]/)")


def decode_source(raw: bytes) -> str:
    """Decode C source bytes.

    Args:
        raw: File content as read from disk

    Returns:
        str: UTF-8 text, or Latin-1 text when the bytes are not valid UTF-8
    """
    try:
        return raw.decode("utf-8")
    except UnicodeDecodeError:
        return raw.decode("latin-1")


def normalize_path(path: str, diff_side: bool = False) -> str:
    """Normalize a corpus or diff path for matching.

    Strips null bytes, surrounding whitespace and leading ``./`` segments, and turns backslashes
    into slashes.

    Args:
        path: The path to normalize
        diff_side: Also strip one ``a/`` or ``b/`` prefix as written by git diff

    Returns:
        str: The normalized path
    """
    path = path.replace("\0", "").strip().replace("\\", "/")
    if diff_side:
        path = _DIFF_PREFIX_RE.sub("", path, count=1)
    while path.startswith("./"):
        path = path[2:]
    return path


def resolve_diff_path(path: str, known: Container[str]) -> str:
    """Match a diff path against the corpus paths.

    The path is looked up as written first. Only when that misses is one git ``a/`` or ``b/``
    prefix stripped, so a corpus directory named ``a`` or ``b`` still matches.

    Args:
        path: The path as written in the diff
        known: Normalized corpus paths

    Returns:
        str: The matching corpus path, or the normalized diff path when nothing matches
    """
    path = normalize_path(path)
    if path in known:
        return path
    stripped = normalize_path(path, diff_side=True)
    return stripped if stripped in known else path
