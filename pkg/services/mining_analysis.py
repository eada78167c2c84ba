"""
Path-mining analysis across hop limits
"""

import logging
import time
from typing import List, Optional

import pandas as pd

from models.errors import InvalidQueryError
from models.evidence import GoldEvidence
from services.corpus_store import CorpusHandle
from services.passage_graph import build_graph
from services.path_miner import mine_paths

logger = logging.getLogger(__name__)

ANALYSIS_COLUMNS = ["H", "recall", "fail_rate", "passage_paths", "entity_paths", "pairs_per_second"]


def analyze_mining(corpus: CorpusHandle, golds: List[GoldEvidence], hop_values: List[int],
                   doc_cap: int = 50) -> pd.DataFrame:
    """One row per hop limit.

    recall is the path recall of the full mined set (no ranking cut-off),
    fail_rate the share of pairs with no mined path; passage_paths and
    entity_paths are per-pair means. Pairs that cannot form a graph are skipped.
    """
    graphs = []
    for gold in golds:
        try:
            graphs.append((gold, build_graph(corpus, gold.head, gold.tail, doc_cap)))
        except InvalidQueryError as e:
            logger.warning(f"Skipping ({gold.head}, {gold.tail}) in mining analysis: {e}")

    rows = []
    for max_hops in sorted(set(hop_values)):
        hits = total = failures = passage_paths = entity_paths = 0
        started = time.perf_counter()
        for gold, graph in graphs:
            report = mine_paths(graph, max_hops)
            mined = {tuple(path.passages) for path in report.paths}
            hits += sum(1 for path in gold.gold_paths if tuple(path) in mined)
            total += len(gold.gold_paths)
            failures += int(report.failed)
            passage_paths += report.stats.paths_emitted
            entity_paths += report.stats.entity_paths
        elapsed = time.perf_counter() - started

        pairs = len(graphs)
        rows.append({
            "H": max_hops,
            "recall": hits / total if total else None,
            "fail_rate": failures / pairs if pairs else None,
            "passage_paths": passage_paths / pairs if pairs else None,
            "entity_paths": entity_paths / pairs if pairs else None,
            "pairs_per_second": pairs / elapsed if elapsed > 0 else None,
        })
        logger.info(f"H={max_hops}: {passage_paths} paths over {pairs} pairs, {failures} failures")

    table = pd.DataFrame(rows, columns=ANALYSIS_COLUMNS)
    return table.astype({column: float for column in ANALYSIS_COLUMNS[1:]})


def format_analysis_table(table: pd.DataFrame, precision: Optional[int] = 3) -> str:
    """Plain-text table with undefined cells shown as "undefined\""""
    return table.to_string(index=False, float_format=lambda v: f"{v:.{precision}f}", na_rep="undefined")
