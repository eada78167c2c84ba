"""
Configuration for the multi-hop evidence retrieval engine
"""

import os

# Pipeline defaults (overridden by a JSON config file, the environment and flags)
PIPELINE_DEFAULTS = {
    'store_dir': 'store',
    'output_dir': 'output',
    'max_hops': 4,
    'top_k': 16,
    'max_input_length': 512,
    'doc_cap': 50,
    'scorer': 'bm25',
    'bm25_k1': 1.5,
    'bm25_b': 0.75,
    'embedding_file': None,
    'embedding_endpoint': None,
    'embedding_passage_endpoint': None,
    'embedding_timeout': 30.0,
    'embedding_retries': 3,
    'embedding_backoff': 0.5,
    'embedding_batch_size': 32,
    'bucket_boundary': 3,
    'bucket_semantics': 'lt',  # 'lt': short < boundary <= long, 'le': short <= boundary < long
    'seed': 13,
    'workers': 1,
    'strict_entities': False,
    'hop_values': [2, 3, 4, 5],
}

SCORERS = ('bm25', 'dense_pair', 'dense_sequential', 'random')
DENSE_SCORERS = ('dense_pair', 'dense_sequential')
BUCKET_SEMANTICS = ('lt', 'le')

# Embedding service configuration
EMBEDDING_SERVICE_CONFIG = {
    'endpoint_env': 'EVIDENCE_EMBEDDING_ENDPOINT',
    'retry_status_codes': (429, 500, 502, 503, 504),
    'headers': {
        'Accept': 'application/json',
        'Content-Type': 'application/json'
    }
}

# On-disk corpus store layout
STORE_CONFIG = {
    'format_version': 1,
    'manifest_file': 'manifest.json',
    'entities_file': 'entities.jsonl',
    'documents_file': 'documents.jsonl',
    'index_file': 'entity_index.json',
}

# Query template for entity pairs
QUERY_TEMPLATE = "What is the relation between {head} and {tail}?"

# Vendored stopword list, pinned by checksum
STOPWORDS_FILE = os.path.join(os.path.dirname(os.path.abspath(__file__)), 'utils', 'stopwords_en.txt')
STOPWORDS_SHA256 = '50a20d779a4c23a0d7caf621a6b42d47679a36d1418efb80346c543a287a840a'

# Logging configuration
LOG_LEVEL = os.environ.get('EVIDENCE_LOG_LEVEL', 'INFO')
LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"
