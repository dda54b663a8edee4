import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from korean_ud import parse_document  # noqa: E402

EXAMPLES = Path(__file__).resolve().parents[1] / "src" / "korean_ud" / "data" / "examples"
FRAMES = EXAMPLES.parent / "frames.txt"
DATA = Path(__file__).parent / "data"


def load(name, **kw):
    return parse_document((EXAMPLES / name).read_text(encoding="utf-8"), **kw)


@pytest.fixture(scope="session")
def current():
    return load("current.conllu")


@pytest.fixture(scope="session")
def revised():
    return load("revised.conllu")


@pytest.fixture(scope="session")
def frame_sentences():
    return load("frames_sentences.conllu")
