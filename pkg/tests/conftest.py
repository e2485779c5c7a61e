import sys
from pathlib import Path

import pytest

REPO = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(REPO / "tests"))

from optagent.corpus import load_corpus, load_instance  # noqa: E402

CORPUS_ROOT = REPO / "corpus"
TRANSCRIPTS_ROOT = REPO / "transcripts"
GOLDEN_ROOT = REPO / "tests" / "golden"


@pytest.fixture(scope="session")
def corpus_root() -> Path:
    return CORPUS_ROOT


@pytest.fixture(scope="session")
def transcripts_root() -> Path:
    return TRANSCRIPTS_ROOT


@pytest.fixture(scope="session")
def manifest():
    return load_corpus(CORPUS_ROOT)


@pytest.fixture(scope="session")
def instances(manifest):
    return {instance_id: load_instance(manifest, instance_id) for instance_id in manifest.ids()}
