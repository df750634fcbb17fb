from __future__ import annotations

from pathlib import Path

import pytest

from clipsift.freesound import MetadataCache
from clipsift.ontology import parse_ontology
from clipsift.text import LemmaLexicon, bundled_stop_words

FIXTURES = Path(__file__).parent / "fixtures"

CORPUS_LABELS = (
    "/fx/acoustic_guitar",
    "/fx/cello",
    "/fx/clapping",
    "/fx/dog",
    "/fx/double_bass",
    "/fx/electric_guitar",
    "/fx/flute",
    "/fx/piano",
    "/fx/rain",
    "/fx/trumpet",
)


@pytest.fixture(scope="session")
def fixtures_dir() -> Path:
    return FIXTURES


@pytest.fixture(scope="session")
def ontology():
    return parse_ontology(FIXTURES / "ontology.json")


@pytest.fixture(scope="session")
def lexicon():
    return LemmaLexicon.bundled()


@pytest.fixture(scope="session")
def stop_words():
    return bundled_stop_words()


@pytest.fixture(scope="session")
def corpus_cache():
    return MetadataCache(FIXTURES / "clips_200.jsonl")
