"""
Text normalization for sparse retrieval
"""

import hashlib
import logging
from functools import lru_cache
from typing import FrozenSet, List

from nltk.stem import PorterStemmer
from nltk.tokenize import RegexpTokenizer

from config import STOPWORDS_FILE, STOPWORDS_SHA256
from models.errors import EvidenceEngineError

logger = logging.getLogger(__name__)

_tokenizer = RegexpTokenizer(r"[A-Za-z0-9]+")
_stemmer = PorterStemmer()


@lru_cache(maxsize=1)
def load_stopwords() -> FrozenSet[str]:
    """Load the vendored stopword list, refusing a file whose checksum drifted"""
    with open(STOPWORDS_FILE, 'rb') as handle:
        raw = handle.read()

    digest = hashlib.sha256(raw).hexdigest()
    if digest != STOPWORDS_SHA256:
        raise EvidenceEngineError(
            f"stopword list checksum mismatch: expected {STOPWORDS_SHA256}, got {digest}"
        )

    words = frozenset(line.strip() for line in raw.decode('utf-8').splitlines() if line.strip())
    logger.debug(f"Loaded {len(words)} stopwords")
    return words


@lru_cache(maxsize=65536)
def _stem(word: str) -> str:
    return _stemmer.stem(word)


def normalize_text(raw: str) -> List[str]:
    """Lowercased alphanumeric words, stopwords removed, Porter-stemmed"""
    stopwords = load_stopwords()
    words = (token.lower() for token in _tokenizer.tokenize(raw))
    return [_stem(word) for word in words if word not in stopwords]


def text_hash(text: str) -> str:
    """SHA-256 hex digest of the UTF-8 text"""
    return hashlib.sha256(text.encode('utf-8')).hexdigest()
