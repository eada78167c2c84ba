"""
Pipeline configuration model
"""

import json
import logging
import os
from dataclasses import asdict, dataclass, field, fields
from typing import Any, Dict, List, Optional

from config import (BUCKET_SEMANTICS, DENSE_SCORERS, EMBEDDING_SERVICE_CONFIG,
                    PIPELINE_DEFAULTS, SCORERS)
from models.errors import ConfigError

logger = logging.getLogger(__name__)


@dataclass
class PipelineConfig:
    """All settings of one pipeline run; see config.PIPELINE_DEFAULTS"""
    store_dir: str = PIPELINE_DEFAULTS['store_dir']
    output_dir: str = PIPELINE_DEFAULTS['output_dir']
    max_hops: int = PIPELINE_DEFAULTS['max_hops']
    top_k: int = PIPELINE_DEFAULTS['top_k']
    max_input_length: int = PIPELINE_DEFAULTS['max_input_length']
    doc_cap: int = PIPELINE_DEFAULTS['doc_cap']
    scorer: str = PIPELINE_DEFAULTS['scorer']
    bm25_k1: float = PIPELINE_DEFAULTS['bm25_k1']
    bm25_b: float = PIPELINE_DEFAULTS['bm25_b']
    embedding_file: Optional[str] = PIPELINE_DEFAULTS['embedding_file']
    embedding_endpoint: Optional[str] = PIPELINE_DEFAULTS['embedding_endpoint']
    embedding_passage_endpoint: Optional[str] = PIPELINE_DEFAULTS['embedding_passage_endpoint']
    embedding_timeout: float = PIPELINE_DEFAULTS['embedding_timeout']
    embedding_retries: int = PIPELINE_DEFAULTS['embedding_retries']
    embedding_backoff: float = PIPELINE_DEFAULTS['embedding_backoff']
    embedding_batch_size: int = PIPELINE_DEFAULTS['embedding_batch_size']
    bucket_boundary: int = PIPELINE_DEFAULTS['bucket_boundary']
    bucket_semantics: str = PIPELINE_DEFAULTS['bucket_semantics']
    seed: int = PIPELINE_DEFAULTS['seed']
    workers: int = PIPELINE_DEFAULTS['workers']
    strict_entities: bool = PIPELINE_DEFAULTS['strict_entities']
    hop_values: List[int] = field(default_factory=lambda: list(PIPELINE_DEFAULTS['hop_values']))

    @property
    def uses_embeddings(self) -> bool:
        return self.scorer in DENSE_SCORERS

    def validate(self) -> List[str]:
        """Check every field and return all problems found"""
        errors = []

        for name in ('max_hops', 'top_k', 'max_input_length', 'doc_cap', 'workers',
                     'embedding_batch_size', 'bucket_boundary'):
            value = getattr(self, name)
            if not _is_int(value) or value < 1:
                errors.append(f"{name} must be an integer >= 1 (got {value!r})")

        if not _is_int(self.seed):
            errors.append(f"seed must be an integer (got {self.seed!r})")
        if not _is_int(self.embedding_retries) or self.embedding_retries < 0:
            errors.append(f"embedding_retries must be an integer >= 0 (got {self.embedding_retries!r})")

        if self.scorer not in SCORERS:
            errors.append(f"scorer must be one of {', '.join(SCORERS)} (got {self.scorer!r})")
        if not _is_number(self.bm25_k1) or self.bm25_k1 < 0:
            errors.append(f"bm25_k1 must be a number >= 0 (got {self.bm25_k1!r})")
        if not _is_number(self.bm25_b) or not 0 <= self.bm25_b <= 1:
            errors.append(f"bm25_b must be a number in [0, 1] (got {self.bm25_b!r})")
        if not _is_number(self.embedding_timeout) or self.embedding_timeout <= 0:
            errors.append(f"embedding_timeout must be a number > 0 (got {self.embedding_timeout!r})")
        if not _is_number(self.embedding_backoff) or self.embedding_backoff < 0:
            errors.append(f"embedding_backoff must be a number >= 0 (got {self.embedding_backoff!r})")

        if self.uses_embeddings:
            if not self.embedding_file and not self.embedding_endpoint:
                errors.append(f"scorer {self.scorer} needs embedding_file or embedding_endpoint")
            if self.embedding_file and self.embedding_endpoint:
                errors.append("embedding_file and embedding_endpoint are mutually exclusive")

        if self.bucket_semantics not in BUCKET_SEMANTICS:
            errors.append(f"bucket_semantics must be one of {', '.join(BUCKET_SEMANTICS)} "
                          f"(got {self.bucket_semantics!r})")
        if not self.store_dir:
            errors.append("store_dir is required")
        if not isinstance(self.hop_values, list) or not self.hop_values or \
                not all(_is_int(h) and h >= 1 for h in self.hop_values):
            errors.append(f"hop_values must be a non-empty list of integers >= 1 (got {self.hop_values!r})")

        return errors

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_sources(cls, config_file: Optional[str] = None,
                     overrides: Optional[Dict[str, Any]] = None,
                     environ: Optional[Dict[str, str]] = None) -> "PipelineConfig":
        """Layer defaults < JSON file < environment < flag overrides, then validate.

        The endpoint environment variable is ignored when an embedding file is
        configured by the file or the flags.
        """
        values: Dict[str, Any] = {}
        known = {f.name for f in fields(cls)}
        errors = []

        if config_file:
            try:
                with open(config_file, encoding='utf-8') as handle:
                    file_values = json.load(handle)
            except (OSError, json.JSONDecodeError, UnicodeDecodeError) as e:
                raise ConfigError([f"cannot read config file {config_file}: {e}"])
            if not isinstance(file_values, dict):
                raise ConfigError([f"config file {config_file} must hold a JSON object"])
            for key, value in file_values.items():
                if key not in known:
                    errors.append(f"unknown config field {key!r}")
                else:
                    values[key] = value

        environ = os.environ if environ is None else environ
        endpoint = environ.get(EMBEDDING_SERVICE_CONFIG['endpoint_env'])
        if endpoint and not values.get('embedding_file') and not (overrides or {}).get('embedding_file'):
            logger.info(f"Embedding endpoint taken from {EMBEDDING_SERVICE_CONFIG['endpoint_env']}")
            values['embedding_endpoint'] = endpoint

        for key, value in (overrides or {}).items():
            if value is not None:
                values[key] = value

        config = cls(**values)
        errors.extend(config.validate())
        if errors:
            raise ConfigError(errors)
        return config


def _is_int(value: Any) -> bool:
    return isinstance(value, int) and not isinstance(value, bool)


def _is_number(value: Any) -> bool:
    return isinstance(value, (int, float)) and not isinstance(value, bool)
