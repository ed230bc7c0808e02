"""Shared fixtures for the analyzer tests."""

import os
import tempfile

os.environ.setdefault("APP_ENV", "test")
os.environ.setdefault("LOG_DIR", tempfile.mkdtemp(prefix="confcomplex-logs-"))
os.environ.setdefault("SHOW_PROGRESS", "false")

import json  # noqa: E402
from pathlib import Path  # noqa: E402

import pytest  # noqa: E402

from app.core.cparse import scan_file  # noqa: E402
from app.models.source import SourceFile  # noqa: E402

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture
def listing_text() -> str:
    """The worked listing: ``foo`` under ``#ifdef A`` with two internal directive groups."""
    return (FIXTURES / "listing.c").read_text(encoding="utf-8")


@pytest.fixture
def listing_file(listing_text):
    """The worked listing scanned as ``listing.c``."""
    return scan_file(SourceFile("listing.c", listing_text))


@pytest.fixture
def write_corpus(tmp_path):
    """Write C files and a corpus manifest under ``tmp_path/corpus``; returns the manifest path."""

    def write(files, file_pcs=None, stoplist=None):
        root = tmp_path / "corpus"
        root.mkdir(exist_ok=True)
        entries = []
        for path, content in files.items():
            target = root / path
            target.parent.mkdir(parents=True, exist_ok=True)
            target.write_text(content, encoding="utf-8")
            entry = {"path": path}
            if file_pcs and path in file_pcs:
                entry["file_pc"] = file_pcs[path]
            entries.append(entry)
        manifest = root / "manifest.json"
        manifest.write_text(json.dumps({"files": entries, "stoplist": stoplist or []}), encoding="utf-8")
        return manifest

    return write
