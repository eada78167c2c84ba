"""
Okapi BM25 over normalized passage text
"""

import logging
import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Tuple

from models.errors import UnknownPassageError
from utils.text_utils import normalize_text

logger = logging.getLogger(__name__)


@dataclass
class Bm25Index:
    """Per-passage term frequencies and corpus statistics for Okapi BM25"""
    term_freqs: Dict[str, Counter] = field(default_factory=dict)
    doc_freqs: Counter = field(default_factory=Counter)
    passage_lengths: Dict[str, int] = field(default_factory=dict)
    avg_length: float = 0.0
    k1: float = 1.5
    b: float = 0.75

    @property
    def size(self) -> int:
        return len(self.term_freqs)

    def idf(self, term: str) -> float:
        """ln((N - df + 0.5) / (df + 0.5) + 1), always positive"""
        df = self.doc_freqs.get(term, 0)
        return math.log((self.size - df + 0.5) / (df + 0.5) + 1.0)


def build_bm25_index(passages: Iterable[Tuple[str, str]], k1: float = 1.5, b: float = 0.75) -> Bm25Index:
    """Index (passage id, raw text) pairs"""
    index = Bm25Index(k1=k1, b=b)
    for passage_id, text in passages:
        terms = normalize_text(text)
        index.term_freqs[passage_id] = Counter(terms)
        index.passage_lengths[passage_id] = len(terms)
        index.doc_freqs.update(set(terms))

    if index.size:
        index.avg_length = sum(index.passage_lengths.values()) / index.size
    logger.info(f"BM25 index over {index.size} passages, {len(index.doc_freqs)} terms, "
                f"avg length {index.avg_length:.1f} (k1={k1}, b={b})")
    return index


def bm25_score(index: Bm25Index, query_terms: List[str], passage_id: str) -> float:
    """Okapi BM25 of one passage; every occurrence of a query term contributes"""
    try:
        freqs = index.term_freqs[passage_id]
    except KeyError:
        raise UnknownPassageError(f"passage '{passage_id}' is not in the BM25 index")

    length = index.passage_lengths[passage_id]
    norm = 1.0 - index.b + index.b * (length / index.avg_length if index.avg_length else 0.0)
    score = 0.0
    for term in query_terms:
        tf = freqs.get(term, 0)
        if tf == 0:
            continue
        score += index.idf(term) * tf * (index.k1 + 1.0) / (tf + index.k1 * norm)
    return score
