"""
Retrieval metrics: path-level and passage-level recall with hop buckets
"""

import logging
from typing import Iterable, List, Optional, Sequence, Set, Tuple

import pandas as pd

from models.errors import RecordSchemaError
from models.evidence import BucketCounts, EvidencePath, GoldEvidence, RecallReport
from utils.jsonl_utils import iter_jsonl

logger = logging.getLogger(__name__)

DEFAULT_BUCKET_BOUNDARY = 3

PairResult = Tuple[Sequence[EvidencePath], GoldEvidence]


def _retrieved_sequences(retrieved: Iterable[EvidencePath]) -> Set[Tuple[str, ...]]:
    return {tuple(path.passages) for path in retrieved}


def _retrieved_passages(retrieved: Iterable[EvidencePath]) -> Set[str]:
    return {passage_id for path in retrieved for passage_id in path.passages}


def path_recall(retrieved: Sequence[EvidencePath], gold: GoldEvidence) -> Optional[float]:
    """Share of gold paths matched exactly, in order, by some retrieved path; None without gold paths"""
    if not gold.gold_paths:
        return None
    sequences = _retrieved_sequences(retrieved)
    hits = sum(1 for path in gold.gold_paths if tuple(path) in sequences)
    return hits / len(gold.gold_paths)


def passage_recall(retrieved: Sequence[EvidencePath], gold: GoldEvidence) -> Optional[float]:
    """Share of gold passages that appear on any retrieved path; None without gold passages"""
    if not gold.gold_passages:
        return None
    covered = _retrieved_passages(retrieved)
    return len(gold.gold_passages & covered) / len(gold.gold_passages)


def is_short(hops: int, boundary: int, semantics: str) -> bool:
    """'lt': short below the boundary; 'le': short up to and including it"""
    if semantics == "le":
        return hops <= boundary
    return hops < boundary


def _mean(values: List[float]) -> Optional[float]:
    return sum(values) / len(values) if values else None


def bucketed_report(per_pair: Iterable[PairResult], boundary: int = DEFAULT_BUCKET_BOUNDARY,
                    semantics: str = "lt") -> RecallReport:
    """Micro-averaged recalls over all pairs plus short/long hop buckets.

    Bucket passage counts are per gold path; the overall passage counts are
    over each pair's gold passage set.
    """
    if semantics not in ("lt", "le"):
        raise ValueError(f"semantics must be 'lt' or 'le', got {semantics!r}")

    report = RecallReport(boundary=boundary, semantics=semantics, overall=BucketCounts(),
                          path_passages=BucketCounts(), short=BucketCounts(), long=BucketCounts())
    macro_paths, macro_passages = [], []

    for retrieved, gold in per_pair:
        if not gold.gold_paths and not gold.gold_passages:
            report.pairs_excluded += 1
            continue
        report.pairs_evaluated += 1

        sequences = _retrieved_sequences(retrieved)
        covered = _retrieved_passages(retrieved)

        pair = BucketCounts(passage_hits=len(gold.gold_passages & covered),
                            passage_total=len(gold.gold_passages))
        for gold_path in gold.gold_paths:
            members = set(gold_path)
            counts = BucketCounts(
                path_hits=int(tuple(gold_path) in sequences),
                path_total=1,
                passage_hits=len(members & covered),
                passage_total=len(members)
            )
            pair.path_hits += counts.path_hits
            pair.path_total += 1
            bucket = report.short if is_short(len(gold_path), boundary, semantics) else report.long
            bucket.add(counts)
            report.path_passages.add(BucketCounts(passage_hits=counts.passage_hits,
                                                  passage_total=counts.passage_total))
        report.overall.add(pair)

        if pair.path_recall is not None:
            macro_paths.append(pair.path_recall)
        if pair.passage_recall is not None:
            macro_passages.append(pair.passage_recall)

    report.macro_path_recall = _mean(macro_paths)
    report.macro_passage_recall = _mean(macro_passages)
    logger.info(f"Evaluated {report.pairs_evaluated} pairs ({report.pairs_excluded} without gold): "
                f"path recall {report.path_recall}, passage recall {report.passage_recall}")
    return report


def load_gold_evidence(path: str) -> List[GoldEvidence]:
    """Read and validate gold evidence records"""
    golds = []
    for line_no, record in iter_jsonl(path):
        if not isinstance(record, dict):
            raise RecordSchemaError(path, line_no, "record must be a JSON object")
        for key in ("head", "tail"):
            if not isinstance(record.get(key), str):
                raise RecordSchemaError(path, line_no, f"'{key}' must be a string")
        for key in ("evidence_passages", "evidence_paths", "negatives"):
            if key in record and not isinstance(record[key], list):
                raise RecordSchemaError(path, line_no, f"'{key}' must be a list")
        if not all(isinstance(p, list) for p in record.get("evidence_paths", [])):
            raise RecordSchemaError(path, line_no, "'evidence_paths' must be a list of passage-id lists")
        golds.append(GoldEvidence.from_record(record))
    logger.info(f"Loaded {len(golds)} gold evidence records from {path}")
    return golds


def _fmt(value: Optional[float]) -> str:
    return "undefined" if value is None else f"{value:.4f}"


def format_report_table(report: RecallReport) -> str:
    """Aligned plain-text table: one row for all pairs and one per hop bucket"""
    short_label, long_label = report.bucket_labels
    rows = [("all", report.overall), (short_label, report.short), (long_label, report.long)]
    table = pd.DataFrame(
        [{
            "bucket": label,
            "path_recall": _fmt(counts.path_recall),
            "paths": f"{counts.path_hits}/{counts.path_total}",
            "passage_recall": _fmt(counts.passage_recall),
            "passages": f"{counts.passage_hits}/{counts.passage_total}",
        } for label, counts in rows]
    )
    summary = (f"pairs evaluated: {report.pairs_evaluated}, excluded: {report.pairs_excluded}, "
               f"macro path recall: {_fmt(report.macro_path_recall)}, "
               f"macro passage recall: {_fmt(report.macro_passage_recall)}")
    return table.to_string(index=False) + "\n" + summary
