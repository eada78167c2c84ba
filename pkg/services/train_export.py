"""
Training-side math and export: multi-positive contrastive loss and the augmented training corpus
"""

import logging
import os
from typing import Dict, List, Mapping

import numpy as np

from models.errors import (ExportError, MissingPassageTextError, MissingSimilarityError,
                           UnknownEntityError)
from models.evidence import GoldEvidence, TrainingSample
from services.corpus_store import CorpusHandle
from services.scoring import render_query
from utils.jsonl_utils import atomic_write_jsonl, iter_jsonl

logger = logging.getLogger(__name__)


def contrastive_loss(sample: TrainingSample, sims: Mapping[str, float]) -> float:
    """Sum over positives of -log softmax of the positive against all negatives (natural log)"""
    missing = [p for p in list(sample.positives) + list(sample.negatives) if p not in sims]
    if missing:
        raise MissingSimilarityError(f"no similarity for passages {missing}")

    if not sample.negatives:
        return 0.0

    # -log(e^s / (e^s + sum e^n)) == softplus(logsumexp(n) - s)
    negatives = np.logaddexp.reduce(np.asarray([sims[p] for p in sample.negatives], dtype=np.float64))
    loss = 0.0
    for positive_id in sample.positives:
        loss += float(np.logaddexp(0.0, negatives - float(sims[positive_id])))
    return loss


def augment_training_set(samples: List[TrainingSample],
                         passage_texts: Mapping[str, str]) -> List[TrainingSample]:
    """Each sample followed by one augmented copy per positive.

    The copy's query is the query text, one space, and that positive's text;
    its positives are the remaining ones and negatives are unchanged. Copies
    left without positives are dropped.
    """
    augmented = []
    for sample in samples:
        augmented.append(sample)
        for promoted in sample.positives:
            if promoted not in passage_texts:
                raise MissingPassageTextError(f"no text for positive passage '{promoted}'")
            remaining = [p for p in sample.positives if p != promoted]
            if not remaining:
                continue
            augmented.append(TrainingSample(
                query_text=f"{sample.query_text} {passage_texts[promoted]}",
                positives=remaining,
                negatives=list(sample.negatives)
            ))

    logger.info(f"Augmented {len(samples)} samples to {len(augmented)}")
    return augmented


def samples_from_gold(golds: List[GoldEvidence], corpus: CorpusHandle) -> List[TrainingSample]:
    """One sample per evidence record: templated query, evidence passages as positives"""
    samples = []
    for gold in golds:
        try:
            query = render_query(corpus.entity(gold.head), corpus.entity(gold.tail))
        except UnknownEntityError as e:
            logger.warning(f"Skipping gold record ({gold.head}, {gold.tail}): {e}")
            continue

        positives = list(dict.fromkeys(gold.evidence_passages))
        if not positives:
            positives = list(dict.fromkeys(p for path in gold.gold_paths for p in path))
        if not positives:
            logger.warning(f"Skipping gold record ({gold.head}, {gold.tail}): no evidence passages")
            continue

        negatives = [p for p in dict.fromkeys(gold.negatives) if p not in positives]
        samples.append(TrainingSample(query_text=query.text, positives=positives, negatives=negatives))
    return samples


def passage_texts_for(samples: List[TrainingSample], corpus: CorpusHandle) -> Dict[str, str]:
    """Texts of the positives found in the corpus, keyed by passage id"""
    texts = {}
    for sample in samples:
        for passage_id in sample.positives:
            if passage_id in corpus.passages:
                texts[passage_id] = corpus.passage(passage_id).text
    return texts


def export_training_jsonl(samples: List[TrainingSample], destination: str) -> int:
    """Write one record per sample; a failed write leaves no partial file behind"""
    try:
        count = atomic_write_jsonl(destination, (sample.to_dict() for sample in samples))
    except OSError as e:
        raise ExportError(f"cannot write training data to {destination}: {e}")
    logger.info(f"Exported {count} training samples to {os.path.abspath(destination)}")
    return count


def load_training_jsonl(path: str) -> List[TrainingSample]:
    """Read an exported training file back into validated samples"""
    samples = []
    for line_no, record in iter_jsonl(path):
        try:
            sample = TrainingSample(query_text=record['query'], positives=list(record['positives']),
                                    negatives=list(record.get('negatives', [])))
        except (KeyError, TypeError) as e:
            raise ExportError(f"{path} line {line_no}: malformed training record: {e}")
        errors = sample.validate()
        if errors:
            raise ExportError(f"{path} line {line_no}: {'; '.join(errors)}")
        samples.append(sample)
    return samples
