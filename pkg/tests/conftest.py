import os

import pytest

from services.corpus_store import ingest_files
from tests.helpers import build_corpus

DEMO_DIR = os.path.join(os.path.dirname(os.path.dirname(os.path.abspath(__file__))), 'data', 'demo')


@pytest.fixture
def demo_dir():
    return DEMO_DIR


@pytest.fixture(scope='session')
def demo_corpus():
    return ingest_files([os.path.join(DEMO_DIR, 'corpus.jsonl')], os.path.join(DEMO_DIR, 'entities.jsonl'),
                        strict_entities=True)


@pytest.fixture
def chain_corpus():
    """dA-p0 -e1- dA-p1 -e2- dB-p0, head entity h in the first passage, tail t in the last"""
    return build_corpus({
        "dA": [["h", "e1"], ["e1", "e2"]],
        "dB": [["e2", "t"]],
    })
