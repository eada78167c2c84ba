"""
Embedding tables: loaded from a file or fetched from an embedding service
"""

import json
import logging
import threading
from dataclasses import dataclass, field
from typing import Dict, List, Optional

import numpy as np
import requests
from requests.adapters import HTTPAdapter
from urllib3.util.retry import Retry

from config import EMBEDDING_SERVICE_CONFIG
from models.errors import EmbeddingFormatError, EmbeddingServiceError, MissingEmbeddingError
from utils.text_utils import text_hash

logger = logging.getLogger(__name__)

PROVENANCE_FILE = "file"
PROVENANCE_SERVICE = "service"


@dataclass
class EmbeddingTable:
    """Query vectors keyed by query text (plain or augmented) and passage vectors keyed by passage id"""
    dim: int
    query_vectors: Dict[str, np.ndarray] = field(default_factory=dict)
    passage_vectors: Dict[str, np.ndarray] = field(default_factory=dict)
    provenance: str = PROVENANCE_FILE

    def query_vector(self, key: str) -> np.ndarray:
        try:
            return self.query_vectors[key]
        except KeyError:
            raise MissingEmbeddingError(f"no query vector for {key!r}")

    def passage_vector(self, passage_id: str) -> np.ndarray:
        try:
            return self.passage_vectors[passage_id]
        except KeyError:
            raise MissingEmbeddingError(f"no passage vector for passage '{passage_id}'")


def _decode(raw: bytes, record_index: Optional[int]) -> str:
    try:
        return raw.decode('utf-8')
    except UnicodeDecodeError as e:
        raise EmbeddingFormatError(record_index, f"invalid UTF-8 at byte {e.start}: {e.reason}")


def load_embeddings(path: str) -> EmbeddingTable:
    """Read `dim=<int>` followed by JSONL records {"key", "kind", "vec"}"""
    with open(path, 'rb') as handle:
        header = _decode(handle.readline(), None).strip()
        if not header.startswith('dim='):
            raise EmbeddingFormatError(None, f"{path}: first line must be 'dim=<int>' (got {header!r})")
        try:
            dim = int(header[4:])
        except ValueError:
            raise EmbeddingFormatError(None, f"{path}: invalid dimension in header {header!r}")
        if dim < 1:
            raise EmbeddingFormatError(None, f"{path}: dimension must be positive (got {dim})")

        table = EmbeddingTable(dim=dim, provenance=PROVENANCE_FILE)
        record_index = 0
        for raw in handle:
            if not raw.strip():
                continue
            record_index += 1
            line = _decode(raw, record_index)
            try:
                record = json.loads(line)
                key, kind, vec = record['key'], record['kind'], record['vec']
            except (json.JSONDecodeError, KeyError, TypeError) as e:
                raise EmbeddingFormatError(record_index, f"malformed record: {e}")
            if kind not in ('query', 'passage'):
                raise EmbeddingFormatError(record_index, f"kind must be 'query' or 'passage' (got {kind!r})")
            if not isinstance(vec, list) or len(vec) != dim:
                size = len(vec) if isinstance(vec, list) else None
                raise EmbeddingFormatError(record_index, f"vector of dimension {size} in a dim={dim} file")
            if not all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in vec):
                raise EmbeddingFormatError(record_index, "vector entries must be numbers")
            target = table.query_vectors if kind == 'query' else table.passage_vectors
            target[key] = np.asarray(vec, dtype=np.float32)

    logger.info(f"Loaded {len(table.query_vectors)} query and {len(table.passage_vectors)} passage vectors "
                f"(dim={dim}) from {path}")
    return table


class EmbeddingService:
    """Client for an embedding service: POST {"texts": [...]} -> {"vectors": [[...], ...]}.

    Responses are cached per endpoint by text hash. Cache writes are
    serialized; cached lookups are plain dict reads.
    """

    def __init__(self, endpoint: str, passage_endpoint: Optional[str] = None,
                 timeout: float = 30.0, batch_size: int = 32, max_retries: int = 3,
                 backoff: float = 0.5, session: Optional[requests.Session] = None):
        self.endpoint = endpoint
        self.passage_endpoint = passage_endpoint or endpoint
        self.timeout = timeout
        self.batch_size = batch_size
        self.headers = EMBEDDING_SERVICE_CONFIG['headers'].copy()
        self.dim: Optional[int] = None
        self.calls = 0
        self._cache: Dict[str, Dict[str, np.ndarray]] = {}
        self._lock = threading.Lock()

        self.session = session or requests.Session()
        retry = Retry(
            total=max_retries,
            connect=max_retries,
            read=max_retries,
            status=max_retries,
            backoff_factor=backoff,
            status_forcelist=EMBEDDING_SERVICE_CONFIG['retry_status_codes'],
            allowed_methods=frozenset(['POST']),
            raise_on_status=False
        )
        adapter = HTTPAdapter(max_retries=retry)
        self.session.mount('http://', adapter)
        self.session.mount('https://', adapter)

    def _post_batch(self, url: str, texts: List[str]) -> List[List[float]]:
        """Send one batch; retries happen inside the mounted adapter"""
        logger.info(f"Embedding request: {url} with {len(texts)} texts")
        try:
            with self._lock:
                self.calls += 1
            response = self.session.post(url, json={'texts': texts}, headers=self.headers,
                                         timeout=self.timeout)
        except requests.exceptions.Timeout:
            raise EmbeddingServiceError(f"embedding service timeout after {self.timeout}s for {url}")
        except requests.exceptions.RequestException as e:
            raise EmbeddingServiceError(f"embedding service request error for {url}: {e}")

        if not 200 <= response.status_code < 300:
            raise EmbeddingServiceError(f"embedding service returned {response.status_code} for {url}: "
                                        f"{response.text[:200]}")
        try:
            vectors = response.json()['vectors']
        except (ValueError, KeyError, TypeError) as e:
            raise EmbeddingServiceError(f"malformed embedding response from {url}: {e}")
        if not isinstance(vectors, list) or len(vectors) != len(texts):
            raise EmbeddingServiceError(f"expected {len(texts)} vectors from {url}, "
                                        f"got {len(vectors) if isinstance(vectors, list) else 'none'}")
        return vectors

    def embed(self, texts: List[str], passages: bool = False) -> List[np.ndarray]:
        """Vectors for texts, fetching only uncached ones, in input order"""
        url = self.passage_endpoint if passages else self.endpoint
        cache = self._cache.setdefault(url, {})

        pending: List[str] = []
        pending_keys = set()
        for text in texts:
            key = text_hash(text)
            if key not in cache and key not in pending_keys:
                pending.append(text)
                pending_keys.add(key)

        for offset in range(0, len(pending), self.batch_size):
            batch = pending[offset:offset + self.batch_size]
            vectors = self._post_batch(url, batch)
            with self._lock:
                for text, vec in zip(batch, vectors):
                    array = np.asarray(vec, dtype=np.float32)
                    if self.dim is None:
                        self.dim = len(array)
                    if array.ndim != 1 or len(array) != self.dim:
                        raise EmbeddingServiceError(f"service returned dimension {len(array)}, "
                                                    f"expected {self.dim}")
                    cache[text_hash(text)] = array

        return [cache[text_hash(text)] for text in texts]

    def build_table(self, query_texts: List[str], passages: Dict[str, str]) -> EmbeddingTable:
        """Materialize a table for the given query texts and (passage id -> text) map"""
        passage_ids = sorted(passages)
        query_vectors = dict(zip(query_texts, self.embed(list(query_texts))))
        passage_vectors = dict(zip(passage_ids, self.embed([passages[p] for p in passage_ids], passages=True)))
        return EmbeddingTable(dim=self.dim or 0, query_vectors=query_vectors,
                              passage_vectors=passage_vectors, provenance=PROVENANCE_SERVICE)
