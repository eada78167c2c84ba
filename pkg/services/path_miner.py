"""
Evidence path mining: constrained depth-first search over the passage graph
"""

import logging
import time
from itertools import product
from typing import Iterator, List, Optional, Set, Tuple

from models.errors import UnknownPassageError
from models.evidence import (REDEMPTION_HEAD_TAIL, REDEMPTION_NONE, EvidencePath,
                             MiningReport, MiningStats)
from services.corpus_store import CorpusHandle
from services.passage_graph import PassageGraph, neighbors

logger = logging.getLogger(__name__)


def mine_paths(graph: PassageGraph, max_hops: int) -> MiningReport:
    """Enumerate every evidence path from a head passage to a tail passage.

    A path holds at most max_hops passages, never repeats a passage or a
    bridge entity and never bridges through the head or tail entity. Tail
    passages end a path: the search does not extend past them. A head
    passage that also contains the tail yields a one-passage path. Emission
    order is depth-first under the sorted neighbor order; passage sequences
    are emitted once, with the first bridge labeling found, while
    entity_paths in the stats counts every distinct bridge sequence.
    """
    if max_hops < 1:
        raise ValueError(f"max_hops must be >= 1, got {max_hops}")

    started = time.perf_counter()
    head, tail = graph.query_pair
    forbidden = {head, tail}
    stats = MiningStats()
    paths: List[EvidencePath] = []
    seen: Set[Tuple[str, ...]] = set()
    entity_sequences: Set[Tuple[str, ...]] = set()

    for start in sorted(graph.head_set):
        for passages, bridges in _search(graph, start, max_hops, forbidden, stats):
            entity_sequences.add(tuple(bridges))
            key = tuple(passages)
            if key in seen:
                continue
            seen.add(key)
            paths.append(EvidencePath(
                passages=list(passages),
                bridges=list(bridges),
                doc_span={graph.doc_of(p) for p in passages}
            ))

    stats.paths_emitted = len(paths)
    stats.entity_paths = len(entity_sequences)
    stats.wall_time = time.perf_counter() - started

    failed = not paths
    if failed:
        logger.warning(f"No evidence path within {max_hops} hops for ({head}, {tail})")
    else:
        logger.info(f"Mined {len(paths)} paths ({stats.entity_paths} entity paths) for ({head}, {tail}) "
                    f"with H={max_hops} in {stats.wall_time:.3f}s")
    return MiningReport(paths=paths, failed=failed, redemption_used=REDEMPTION_NONE, stats=stats)


def _search(graph: PassageGraph, start: str, max_hops: int, forbidden: Set[str],
            stats: MiningStats) -> Iterator[Tuple[List[str], List[str]]]:
    """Backtracking search from one start passage, yielding (passages, bridges)"""
    tail_set = graph.tail_set
    stats.nodes_visited += 1

    if start in tail_set:
        yield [start], []
        return
    if max_hops < 2:
        return

    stack = [iter(neighbors(graph, start))]
    passages = [start]
    bridges: List[str] = []
    on_path = {start}
    used_bridges: Set[str] = set()

    while stack:
        child = next(stack[-1], None)
        if child is None:
            stack.pop()
            on_path.discard(passages.pop())
            if bridges:
                used_bridges.discard(bridges.pop())
            continue

        passage, entity = child
        if passage in on_path or entity in forbidden or entity in used_bridges:
            continue

        stats.nodes_visited += 1
        if passage in tail_set:
            yield passages + [passage], bridges + [entity]
            continue
        if len(passages) + 1 >= max_hops:
            continue

        passages.append(passage)
        bridges.append(entity)
        on_path.add(passage)
        used_bridges.add(entity)
        stack.append(iter(neighbors(graph, passage)))


def redeem(corpus: CorpusHandle, head: str, tail: str,
           doc_cap: Optional[int] = None) -> List[EvidencePath]:
    """Fallback paths when mining fails.

    Each passage holding both entities becomes a one-passage path; every
    (head passage, tail passage) pair becomes a two-passage path with no
    bridges. With doc_cap set, only passages of the capped documents count.
    """
    head_passages = corpus.passages_with_entity(head)
    tail_passages = corpus.passages_with_entity(tail)
    if doc_cap is not None:
        allowed = set(corpus.documents_with_entity(head, doc_cap)) | set(corpus.documents_with_entity(tail, doc_cap))
        head_passages = {p for p in head_passages if corpus.passage(p).doc_id in allowed}
        tail_passages = {p for p in tail_passages if corpus.passage(p).doc_id in allowed}

    if not head_passages or not tail_passages:
        logger.warning(f"Redemption impossible for ({head}, {tail}): "
                       f"{len(head_passages)} head / {len(tail_passages)} tail passages")
        return []

    paths = [
        EvidencePath(passages=[p], bridges=[], doc_span={corpus.passage(p).doc_id}, redemption=True)
        for p in sorted(head_passages & tail_passages)
    ]
    for p, q in product(sorted(head_passages), sorted(tail_passages)):
        if p == q:
            continue
        paths.append(EvidencePath(
            passages=[p, q],
            bridges=[],
            doc_span={corpus.passage(p).doc_id, corpus.passage(q).doc_id},
            redemption=True
        ))

    logger.info(f"Redemption built {len(paths)} head/tail passage paths for ({head}, {tail})")
    return paths


def mine_with_redemption(graph: PassageGraph, corpus: CorpusHandle, max_hops: int,
                         doc_cap: Optional[int] = None) -> MiningReport:
    """mine_paths, falling back to head/tail passage pairs when nothing is found"""
    report = mine_paths(graph, max_hops)
    if report.failed:
        head, tail = graph.query_pair
        report.paths = redeem(corpus, head, tail, doc_cap)
        if report.paths:
            report.redemption_used = REDEMPTION_HEAD_TAIL
    return report


def check_evidence_path(corpus: CorpusHandle, path: EvidencePath, head: str, tail: str,
                        max_hops: Optional[int] = None) -> List[str]:
    """Return every evidence-path invariant the path violates, judged from the corpus alone"""
    errors = []
    try:
        passages = [corpus.passage(p) for p in path.passages]
    except UnknownPassageError as e:
        return [str(e)]

    if not passages:
        return ["path has no passages"]
    if path.redemption:
        if head not in passages[0].entity_ids() or tail not in passages[-1].entity_ids():
            errors.append("redemption path must run from a head passage to a tail passage")
        return errors
    if len(path.bridges) != len(passages) - 1:
        errors.append(f"{len(path.bridges)} bridges for {len(passages)} passages")
    if head not in passages[0].entity_ids():
        errors.append(f"first passage {passages[0].id} has no head mention")
    if tail not in passages[-1].entity_ids():
        errors.append(f"last passage {passages[-1].id} has no tail mention")
    for passage in passages[:-1]:
        if tail in passage.entity_ids():
            errors.append(f"tail passage {passage.id} is not the last passage")
    if len(set(path.passages)) != len(path.passages):
        errors.append("repeated passage")
    if len(set(path.bridges)) != len(path.bridges):
        errors.append("repeated bridge entity")
    for i, bridge in enumerate(path.bridges):
        if bridge in (head, tail):
            errors.append(f"bridge {i} is the {'head' if bridge == head else 'tail'} entity")
        if i + 1 < len(passages):
            left, right = passages[i], passages[i + 1]
            if bridge not in left.entity_ids() or bridge not in right.entity_ids():
                errors.append(f"bridge {bridge} not shared by {left.id} and {right.id}")
    if max_hops is not None and len(passages) > max_hops:
        errors.append(f"{len(passages)} passages exceed max hops {max_hops}")
    return errors
