import json
from pathlib import Path

import pytest

CORPUS_ROOT = Path(__file__).resolve().parents[2] / "corpus"


@pytest.fixture(scope="session")
def corpus_root() -> Path:
    return CORPUS_ROOT


@pytest.fixture(scope="session")
def entries(corpus_root):
    return json.loads((corpus_root / "manifest.json").read_text())["instances"]
