"""
Commands for building the store and running retrieval: ingest, retrieve, dump-graph, analyze-mining
"""

import logging
import os
from concurrent.futures import ThreadPoolExecutor
from typing import Any, Dict, List, Optional, Tuple

from config import STORE_CONFIG
from models.errors import EvidenceEngineError, RecordSchemaError
from models.evidence import REDEMPTION_NONE, EvidencePath, Query
from models.pipeline_config import PipelineConfig
from services.bm25 import Bm25Index, build_bm25_index
from services.corpus_store import CorpusHandle, ingest_files, load_corpus, save_corpus
from services.embeddings import EmbeddingService, EmbeddingTable, load_embeddings
from services.evaluation import load_gold_evidence
from services.input_prep import bridge_coverage, prepare_input, validate_context
from services.mining_analysis import analyze_mining, format_analysis_table
from services.passage_graph import build_graph, dump_graph
from services.path_miner import check_evidence_path, mine_with_redemption
from services.scoring import (Bm25PathScorer, DensePairScorer, DenseSequentialScorer, PathScorer,
                              RandomScorer, augmented_query_text, rank_paths, render_query)
from utils.jsonl_utils import atomic_write_json, atomic_write_jsonl, atomic_write_text, iter_jsonl

logger = logging.getLogger(__name__)

RANKED_DIR = "ranked"
CONTEXTS_DIR = "contexts"
SUMMARY_FILE = "summary.json"

STATUS_OK = "ok"
STATUS_FAILED = "failed"


def cmd_ingest(config: PipelineConfig, corpus_paths: List[str], entity_path: Optional[str] = None,
               force: bool = False) -> int:
    """Ingest corpus files into the store at config.store_dir"""
    try:
        if not force and os.path.exists(os.path.join(config.store_dir, STORE_CONFIG['manifest_file'])):
            logger.error(f"Store already exists at {config.store_dir}; use --force to overwrite")
            return 1
        handle = ingest_files(corpus_paths, entity_path, config.strict_entities)
        save_corpus(handle, config.store_dir, force=force)
    except (EvidenceEngineError, OSError) as e:
        logger.error(f"Ingest failed: {e}")
        return 1

    documents, passages, mentions = handle.counts()
    print(f"documents: {documents}")
    print(f"passages: {passages}")
    print(f"mentions: {mentions}")
    print(f"entities: {len(handle.entities)}")
    return 0


def load_pairs(path: str) -> List[Tuple[str, str]]:
    """Read the (head, tail) query pairs, in file order"""
    pairs = []
    for line_no, record in iter_jsonl(path):
        if not isinstance(record, dict) or not isinstance(record.get('head'), str) \
                or not isinstance(record.get('tail'), str):
            raise RecordSchemaError(path, line_no, "expected {\"head\": str, \"tail\": str}")
        pairs.append((record['head'], record['tail']))
    return pairs


class RetrievalRun:
    """Shared read-only state of one retrieve invocation"""

    def __init__(self, config: PipelineConfig, corpus: CorpusHandle):
        self.config = config
        self.corpus = corpus
        self.bm25: Optional[Bm25Index] = None
        self.embeddings: Optional[EmbeddingTable] = None
        self.service: Optional[EmbeddingService] = None

        if config.scorer == 'bm25':
            self.bm25 = build_bm25_index(((p.id, p.text) for p in corpus.passages.values()),
                                         k1=config.bm25_k1, b=config.bm25_b)
        elif config.embedding_file:
            self.embeddings = load_embeddings(config.embedding_file)
        elif config.embedding_endpoint:
            self.service = EmbeddingService(
                endpoint=config.embedding_endpoint,
                passage_endpoint=config.embedding_passage_endpoint,
                timeout=config.embedding_timeout,
                batch_size=config.embedding_batch_size,
                max_retries=config.embedding_retries,
                backoff=config.embedding_backoff
            )

    def _service_table(self, query: Query, paths: List[EvidencePath]) -> EmbeddingTable:
        """Embed exactly the query texts and passages this pair's paths need"""
        query_texts = [query.text]
        passages: Dict[str, str] = {}
        for path in paths:
            for passage_id in path.passages:
                passages[passage_id] = self.corpus.passage(passage_id).text
            if self.config.scorer == 'dense_sequential':
                query_texts.extend(augmented_query_text(query.text, self.corpus.passage(p))
                                   for p in path.passages[:-1])
        return self.service.build_table(list(dict.fromkeys(query_texts)), passages)

    def scorer_for(self, query: Query, paths: List[EvidencePath]) -> PathScorer:
        head, tail = query.head.id, query.tail.id
        if self.config.scorer == 'bm25':
            return Bm25PathScorer(self.bm25)
        if self.config.scorer == 'random':
            return RandomScorer(self.config.seed, head, tail)

        table = self.embeddings if self.service is None else self._service_table(query, paths)
        if self.config.scorer == 'dense_pair':
            return DensePairScorer(table)
        return DenseSequentialScorer(table, self.corpus)

    def retrieve_pair(self, position: int, head: str, tail: str) -> Dict[str, Any]:
        """Run one pair end to end; failures are captured in the returned summary entry"""
        entry: Dict[str, Any] = {
            'index': position,
            'head': head,
            'tail': tail,
            'status': STATUS_OK,
            'error': None,
            'paths_mined': 0,
            'entity_paths': 0,
            'redemption': REDEMPTION_NONE,
            'ranked_file': None,
            'context_file': None
        }
        try:
            graph = build_graph(self.corpus, head, tail, self.config.doc_cap)
            report = mine_with_redemption(graph, self.corpus, self.config.max_hops, self.config.doc_cap)
            entry['paths_mined'] = report.stats.paths_emitted
            entry['entity_paths'] = report.stats.entity_paths
            entry['redemption'] = report.redemption_used

            if logger.isEnabledFor(logging.DEBUG):
                for path in report.paths:
                    violations = check_evidence_path(self.corpus, path, head, tail, self.config.max_hops)
                    if violations:
                        logger.debug(f"Path {path.passages} for ({head}, {tail}): {violations}")

            query = render_query(self.corpus.entity(head), self.corpus.entity(tail))
            scorer = self.scorer_for(query, report.paths)
            ranked = rank_paths(report.paths, scorer, query, self.config.top_k)

            contexts = []
            for rank, scored in enumerate(ranked, start=1):
                ctx = prepare_input(scored.path, self.corpus, self.config.max_input_length, head, tail)
                record = ctx.to_dict()
                record['rank'] = rank
                record['valid'] = validate_context(ctx, head, tail)
                record['bridges_covered'] = bridge_coverage(ctx, scored.path.bridges)
                contexts.append(record)

            name = f"pair-{position:05d}.jsonl"
            atomic_write_jsonl(os.path.join(self.config.output_dir, RANKED_DIR, name),
                               (scored.to_dict(rank) for rank, scored in enumerate(ranked, start=1)))
            atomic_write_jsonl(os.path.join(self.config.output_dir, CONTEXTS_DIR, name), contexts)
            entry['ranked_file'] = f"{RANKED_DIR}/{name}"
            entry['context_file'] = f"{CONTEXTS_DIR}/{name}"
            logger.info(f"Pair {position} ({head}, {tail}): {len(ranked)} ranked paths written")
        except (EvidenceEngineError, OSError) as e:
            logger.error(f"Pair {position} ({head}, {tail}) failed: {e}")
            entry['status'] = STATUS_FAILED
            entry['error'] = str(e)
        return entry


def cmd_retrieve(config: PipelineConfig, pairs_path: str) -> int:
    """Mine, rank and prepare evidence for every pair; nonzero exit if any pair failed"""
    try:
        corpus = load_corpus(config.store_dir)
        pairs = load_pairs(pairs_path)
        run = RetrievalRun(config, corpus)
    except (EvidenceEngineError, OSError) as e:
        logger.error(f"Retrieve failed: {e}")
        return 1

    logger.info(f"Retrieving evidence for {len(pairs)} pairs with scorer {config.scorer} "
                f"(H={config.max_hops}, K={config.top_k}, L={config.max_input_length}, workers={config.workers})")
    with ThreadPoolExecutor(max_workers=config.workers) as executor:
        entries = list(executor.map(lambda item: run.retrieve_pair(item[0], *item[1]), enumerate(pairs)))

    failed = sum(1 for entry in entries if entry['status'] == STATUS_FAILED)
    summary = {
        'scorer': config.scorer,
        'max_hops': config.max_hops,
        'top_k': config.top_k,
        'max_input_length': config.max_input_length,
        'doc_cap': config.doc_cap,
        'seed': config.seed,
        'pairs': entries,
        'failed': failed
    }
    try:
        atomic_write_json(os.path.join(config.output_dir, SUMMARY_FILE), summary)
    except OSError as e:
        logger.error(f"Cannot write run summary: {e}")
        return 1

    print(f"pairs: {len(entries)}")
    print(f"failed: {failed}")
    print(f"output: {config.output_dir}")
    return 1 if failed else 0


def cmd_dump_graph(config: PipelineConfig, head: str, tail: str, output: Optional[str] = None) -> int:
    """Write the passage graph of one pair as a sorted edge list"""
    try:
        corpus = load_corpus(config.store_dir)
        lines = dump_graph(build_graph(corpus, head, tail, config.doc_cap))
        content = "".join(line + "\n" for line in lines)
        if output:
            atomic_write_text(output, content)
            logger.info(f"Wrote {len(lines)} edges to {output}")
        else:
            print(content, end="")
    except (EvidenceEngineError, OSError) as e:
        logger.error(f"Graph dump failed: {e}")
        return 1
    return 0


def cmd_analyze_mining(config: PipelineConfig, gold_path: str) -> int:
    """Print mining recall, failure rate and path counts for each hop limit"""
    try:
        corpus = load_corpus(config.store_dir)
        golds = load_gold_evidence(gold_path)
        table = analyze_mining(corpus, golds, config.hop_values, config.doc_cap)
    except (EvidenceEngineError, OSError) as e:
        logger.error(f"Mining analysis failed: {e}")
        return 1
    print(format_analysis_table(table))
    return 0
