from __future__ import annotations

import sys
from pathlib import Path

import pytest

TESTS_DIR = Path(__file__).parent
sys.path.insert(0, str(TESTS_DIR))

from nvgen.cli import CORPUS_DIR  # noqa: E402

CORPUS_FILES = sorted(str(p) for p in Path(CORPUS_DIR).glob("*.mini"))


@pytest.fixture
def write_mini(tmp_path):
    """Write MiniLang source to a temporary file and return its path."""

    def write(source: str, name: str = "subject.mini") -> str:
        path = tmp_path / name
        path.write_text(source, encoding="utf-8")
        return str(path)

    return write
