"""
Commands that consume retrieval output or gold evidence: evaluate, export-training
"""

import json
import logging
import os
from typing import Dict, List, Optional, Tuple

from commands.retrieval import STATUS_OK, SUMMARY_FILE
from models.errors import EvidenceEngineError, RecordSchemaError
from models.evidence import EvidencePath
from models.pipeline_config import PipelineConfig
from services.corpus_store import load_corpus
from services.evaluation import bucketed_report, format_report_table, load_gold_evidence
from services.train_export import (augment_training_set, export_training_jsonl, passage_texts_for,
                                   samples_from_gold)
from utils.jsonl_utils import atomic_write_json, iter_jsonl

logger = logging.getLogger(__name__)

REPORT_FILE = "report.json"


def load_ranked_paths(path: str) -> List[EvidencePath]:
    """Read one ranked-paths file written by retrieve"""
    paths = []
    for line_no, record in iter_jsonl(path):
        passages = record.get('passages') if isinstance(record, dict) else None
        if not isinstance(passages, list) or not all(isinstance(p, str) for p in passages):
            raise RecordSchemaError(path, line_no, "'passages' must be a list of passage ids")
        paths.append(EvidencePath(passages=passages, bridges=list(record.get('bridges', [])),
                                  redemption=bool(record.get('redemption', False))))
    return paths


def load_retrieved(retrieved_dir: str) -> Dict[Tuple[str, str], List[EvidencePath]]:
    """Ranked paths per (head, tail) from a retrieve output directory"""
    summary_path = os.path.join(retrieved_dir, SUMMARY_FILE)
    try:
        with open(summary_path, encoding='utf-8') as handle:
            summary = json.load(handle)
    except (json.JSONDecodeError, UnicodeDecodeError) as e:
        raise RecordSchemaError(summary_path, None, f"invalid JSON: {e}")
    if not isinstance(summary, dict) or not isinstance(summary.get('pairs'), list):
        raise RecordSchemaError(summary_path, None, "expected an object with a 'pairs' list")

    retrieved: Dict[Tuple[str, str], List[EvidencePath]] = {}
    for entry in summary['pairs']:
        try:
            pair = (entry['head'], entry['tail'])
            status, ranked_file = entry['status'], entry.get('ranked_file')
        except (KeyError, TypeError):
            raise RecordSchemaError(summary_path, None, f"malformed pair entry {entry!r}")
        paths = retrieved.setdefault(pair, [])
        if status == STATUS_OK and ranked_file:
            paths.extend(load_ranked_paths(os.path.join(retrieved_dir, ranked_file)))
    return retrieved


def cmd_evaluate(config: PipelineConfig, retrieved_dir: str, gold_path: str,
                 report_path: Optional[str] = None) -> int:
    """Score retrieve output against gold evidence; writes the report as JSON and prints a table"""
    if not os.path.isdir(retrieved_dir):
        logger.error(f"Retrieved directory {retrieved_dir} does not exist")
        return 1
    try:
        retrieved = load_retrieved(retrieved_dir)
        golds = load_gold_evidence(gold_path)
        report = bucketed_report(((retrieved.get(gold.pair, []), gold) for gold in golds),
                                 boundary=config.bucket_boundary, semantics=config.bucket_semantics)
        report_path = report_path or os.path.join(retrieved_dir, REPORT_FILE)
        atomic_write_json(report_path, report.to_dict())
    except (EvidenceEngineError, OSError) as e:
        logger.error(f"Evaluation failed: {e}")
        return 1

    print(format_report_table(report))
    logger.info(f"Report written to {report_path}")
    return 0


def cmd_export_training(config: PipelineConfig, gold_path: str, output_path: str) -> int:
    """Build samples from gold evidence, add the query-augmented copies and write them as JSONL"""
    try:
        corpus = load_corpus(config.store_dir)
        samples = samples_from_gold(load_gold_evidence(gold_path), corpus)
        for sample in samples:
            errors = sample.validate()
            if errors:
                raise RecordSchemaError(gold_path, None, f"sample {sample.query_text!r}: {'; '.join(errors)}")
        augmented = augment_training_set(samples, passage_texts_for(samples, corpus))
        count = export_training_jsonl(augmented, output_path)
    except (EvidenceEngineError, OSError) as e:
        logger.error(f"Training export failed: {e}")
        return 1

    print(f"samples: {len(samples)}")
    print(f"exported: {count}")
    return 0
