"""
Path scoring and ranking: query template, BM25, pair and sequential dense scoring
"""

import logging
import math
import random
from typing import Iterable, List, Sequence

import numpy as np

from config import QUERY_TEMPLATE
from models.corpus import Entity, Passage
from models.errors import (DimensionMismatchError, EvidenceEngineError, MissingEmbeddingError,
                           QueryTemplateError)
from models.evidence import EvidencePath, Query, ScoredPath
from services.bm25 import Bm25Index, bm25_score
from services.corpus_store import CorpusHandle
from services.embeddings import EmbeddingTable
from utils.text_utils import normalize_text

logger = logging.getLogger(__name__)

DEFAULT_TOP_K = 16


def render_query(head: Entity, tail: Entity) -> Query:
    """Fill the relation query template; names are substituted verbatim"""
    for role, entity in (("head", head), ("tail", tail)):
        if not entity.canonical_name:
            raise QueryTemplateError(f"{role} entity '{entity.id}' has an empty canonical name")
    return Query(head=head, tail=tail,
                 text=QUERY_TEMPLATE.format(head=head.canonical_name, tail=tail.canonical_name))


def augmented_query_text(query_text: str, passage: Passage) -> str:
    """q ⊕ p: query text, one space, passage text"""
    return f"{query_text} {passage.text}"


def sim(query_vec: Sequence[float], passage_vec: Sequence[float]) -> float:
    """Inner product, accumulated in float64"""
    q = np.asarray(query_vec, dtype=np.float64)
    p = np.asarray(passage_vec, dtype=np.float64)
    if q.shape != p.shape:
        raise DimensionMismatchError(f"query dimension {q.shape} does not match passage dimension {p.shape}")
    return float(np.dot(q, p))


def _passage_vector(emb: EmbeddingTable, passage_id: str) -> np.ndarray:
    try:
        return emb.passage_vector(passage_id)
    except MissingEmbeddingError:
        raise MissingEmbeddingError(f"passage '{passage_id}' has no embedding")


def score_path_pair(query: Query, path: EvidencePath, emb: EmbeddingTable) -> ScoredPath:
    """Average similarity between the plain query and every passage of the path"""
    q = emb.query_vector(query.text)
    total = math.fsum(sim(q, _passage_vector(emb, p)) for p in path.passages)
    return ScoredPath(path=path, score=total / len(path.passages), scorer_id="dense_pair")


def score_path_sequential(query: Query, path: EvidencePath, emb: EmbeddingTable,
                          corpus: CorpusHandle) -> ScoredPath:
    """First hop against the plain query, every later hop against query ⊕ previous passage"""
    sims = [sim(emb.query_vector(query.text), _passage_vector(emb, path.passages[0]))]
    for prev_id, passage_id in zip(path.passages, path.passages[1:]):
        key = augmented_query_text(query.text, corpus.passage(prev_id))
        try:
            q_aug = emb.query_vector(key)
        except MissingEmbeddingError:
            raise MissingEmbeddingError(
                f"no augmented query vector for query {query.text!r} with prefix passage '{prev_id}'"
            )
        sims.append(sim(q_aug, _passage_vector(emb, passage_id)))
    return ScoredPath(path=path, score=math.fsum(sims) / len(path.passages), scorer_id="dense_sequential")


class PathScorer:
    """Scores one path for one query"""
    scorer_id = "base"

    def score(self, query: Query, path: EvidencePath) -> ScoredPath:
        raise NotImplementedError


class Bm25PathScorer(PathScorer):
    """Average BM25 between the normalized query and each passage of the path"""
    scorer_id = "bm25"

    def __init__(self, index: Bm25Index):
        self.index = index

    def score(self, query: Query, path: EvidencePath) -> ScoredPath:
        terms = normalize_text(query.text)
        total = math.fsum(bm25_score(self.index, terms, p) for p in path.passages)
        return ScoredPath(path=path, score=total / len(path.passages), scorer_id=self.scorer_id)


class DensePairScorer(PathScorer):
    """Mean query-passage similarity over the path"""
    scorer_id = "dense_pair"

    def __init__(self, emb: EmbeddingTable):
        self.emb = emb

    def score(self, query: Query, path: EvidencePath) -> ScoredPath:
        return score_path_pair(query, path, self.emb)


class DenseSequentialScorer(PathScorer):
    """Each passage scored against the query extended with the previous passage"""
    scorer_id = "dense_sequential"

    def __init__(self, emb: EmbeddingTable, corpus: CorpusHandle):
        self.emb = emb
        self.corpus = corpus

    def score(self, query: Query, path: EvidencePath) -> ScoredPath:
        return score_path_sequential(query, path, self.emb, self.corpus)


class RandomScorer(PathScorer):
    """Uniform random scores; the generator is seeded per (seed, head, tail)"""
    scorer_id = "random"

    def __init__(self, seed: int, head: str, tail: str):
        self.rng = random.Random(f"{seed}:{head}:{tail}")

    def score(self, query: Query, path: EvidencePath) -> ScoredPath:
        return ScoredPath(path=path, score=self.rng.random(), scorer_id=self.scorer_id)


def _rank_key(scored: ScoredPath):
    return (-scored.score, scored.path.hop_count, tuple(scored.path.passages))


def rank_paths(paths: Iterable[EvidencePath], scorer: PathScorer, query: Query,
               top_k: int = DEFAULT_TOP_K) -> List[ScoredPath]:
    """Score every path and keep the top_k.

    Order: descending score, then fewer passages, then passage-id sequence.
    """
    if top_k < 1:
        raise ValueError(f"top_k must be >= 1, got {top_k}")

    scored = []
    for path in paths:
        result = scorer.score(query, path)
        if not math.isfinite(result.score):
            raise EvidenceEngineError(f"scorer {result.scorer_id} produced a non-finite score "
                                      f"for path {path.passages}")
        scored.append(result)

    scored.sort(key=_rank_key)
    return scored[:top_k]
