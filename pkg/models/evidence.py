"""
Evidence models: queries, evidence paths, ranking results and prepared contexts
"""

from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Set, Tuple

from models.corpus import Entity

REDEMPTION_NONE = "none"
REDEMPTION_HEAD_TAIL = "head_tail_passages"


@dataclass
class Query:
    head: Entity
    tail: Entity
    text: str


@dataclass
class EvidencePath:
    """Ordered passages p_1..p_h linked by bridging entities e_1..e_{h-1}"""
    passages: List[str]
    bridges: List[str]
    doc_span: Set[str] = field(default_factory=set)
    redemption: bool = False

    @property
    def hop_count(self) -> int:
        return len(self.passages)

    @property
    def spans_extra_documents(self) -> bool:
        """True when the path touches more than the two documents of a text path"""
        return len(self.doc_span) > 2

    def key(self) -> Tuple[str, ...]:
        return tuple(self.passages)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "passages": list(self.passages),
            "bridges": list(self.bridges),
            "redemption": self.redemption
        }


@dataclass
class MiningStats:
    """Search counters; entity_paths counts distinct bridge sequences over every labeling"""
    nodes_visited: int = 0
    paths_emitted: int = 0
    entity_paths: int = 0
    wall_time: float = 0.0

    def to_dict(self) -> Dict[str, Any]:
        return {
            "nodes_visited": self.nodes_visited,
            "paths_emitted": self.paths_emitted,
            "entity_paths": self.entity_paths
        }


@dataclass
class MiningReport:
    """Mined paths for one pair, with the redemption mode that produced them"""
    paths: List[EvidencePath]
    failed: bool
    redemption_used: str = REDEMPTION_NONE
    stats: MiningStats = field(default_factory=MiningStats)


@dataclass
class ScoredPath:
    path: EvidencePath
    score: float
    scorer_id: str

    def to_dict(self, rank: int) -> Dict[str, Any]:
        return {
            "rank": rank,
            "score": self.score,
            "passages": list(self.path.passages),
            "bridges": list(self.path.bridges),
            "scorer": self.scorer_id,
            "redemption": self.path.redemption,
            "doc_count": len(self.path.doc_span)
        }


@dataclass
class ContextMention:
    """Entity mention located by token offsets in a prepared context"""
    entity_id: str
    start: int
    end: int


@dataclass
class PreparedContext:
    path: List[str]
    budget: int
    tokens: List[str] = field(default_factory=list)
    source_map: List[Tuple[str, int]] = field(default_factory=list)
    mentions: List[ContextMention] = field(default_factory=list)
    dropped_sentences: List[Tuple[str, int]] = field(default_factory=list)
    augmented_spans: List[Tuple[str, int, int]] = field(default_factory=list)
    truncated: bool = False

    @property
    def length(self) -> int:
        return len(self.tokens)

    def entity_ids(self) -> Set[str]:
        return {mention.entity_id for mention in self.mentions}

    def to_dict(self) -> Dict[str, Any]:
        return {
            "tokens": list(self.tokens),
            "path": list(self.path),
            "dropped": [[passage_id, sentence_idx] for passage_id, sentence_idx in self.dropped_sentences],
            "truncated": self.truncated
        }


@dataclass
class TrainingSample:
    """One query with its positive and negative passage ids"""
    query_text: str
    positives: List[str]
    negatives: List[str] = field(default_factory=list)

    def validate(self) -> List[str]:
        errors = []
        if not self.positives:
            errors.append("sample needs at least one positive passage")
        overlap = set(self.positives) & set(self.negatives)
        if overlap:
            errors.append(f"passages both positive and negative: {sorted(overlap)}")
        return errors

    def to_dict(self) -> Dict[str, Any]:
        return {
            "query": self.query_text,
            "positives": list(self.positives),
            "negatives": list(self.negatives)
        }


@dataclass
class GoldEvidence:
    """Annotated evidence for one pair: gold paths, gold passages, optional negatives"""
    head: str
    tail: str
    gold_paths: List[List[str]] = field(default_factory=list)
    gold_passages: Set[str] = field(default_factory=set)
    negatives: List[str] = field(default_factory=list)
    evidence_passages: List[str] = field(default_factory=list)

    @property
    def pair(self) -> Tuple[str, str]:
        return (self.head, self.tail)

    @property
    def gold_hops(self) -> List[int]:
        return [len(path) for path in self.gold_paths]

    @classmethod
    def from_record(cls, record: Dict[str, Any]) -> "GoldEvidence":
        """Build from an evidence-annotation record; gold_passages covers every path member"""
        paths = [list(path) for path in record.get("evidence_paths", [])]
        evidence_passages = list(record.get("evidence_passages", []))
        passages = set(evidence_passages)
        for path in paths:
            passages.update(path)
        return cls(
            head=record["head"],
            tail=record["tail"],
            gold_paths=paths,
            gold_passages=passages,
            negatives=list(record.get("negatives", [])),
            evidence_passages=evidence_passages
        )


@dataclass
class BucketCounts:
    path_hits: int = 0
    path_total: int = 0
    passage_hits: int = 0
    passage_total: int = 0

    @property
    def path_recall(self) -> Optional[float]:
        return self.path_hits / self.path_total if self.path_total else None

    @property
    def passage_recall(self) -> Optional[float]:
        return self.passage_hits / self.passage_total if self.passage_total else None

    def add(self, other: "BucketCounts") -> None:
        self.path_hits += other.path_hits
        self.path_total += other.path_total
        self.passage_hits += other.passage_hits
        self.passage_total += other.passage_total

    def to_dict(self) -> Dict[str, Any]:
        return {
            "path_recall": self.path_recall,
            "passage_recall": self.passage_recall,
            "path_hits": self.path_hits,
            "path_total": self.path_total,
            "passage_hits": self.passage_hits,
            "passage_total": self.passage_total
        }


@dataclass
class RecallReport:
    """Micro-averaged recalls with short/long hop buckets.

    Bucket passage counts are taken per gold path (a passage shared by two gold
    paths counts once for each); ``path_passages`` holds the same counts summed
    over both buckets so conservation can be checked.
    """
    boundary: int
    semantics: str
    overall: BucketCounts
    path_passages: BucketCounts
    short: BucketCounts
    long: BucketCounts
    macro_path_recall: Optional[float] = None
    macro_passage_recall: Optional[float] = None
    pairs_evaluated: int = 0
    pairs_excluded: int = 0

    @property
    def path_recall(self) -> Optional[float]:
        return self.overall.path_recall

    @property
    def passage_recall(self) -> Optional[float]:
        return self.overall.passage_recall

    @property
    def bucket_labels(self) -> Tuple[str, str]:
        if self.semantics == "le":
            return (f"H_T<={self.boundary}", f"H_T>{self.boundary}")
        return (f"H_T<{self.boundary}", f"H_T>={self.boundary}")

    def to_dict(self) -> Dict[str, Any]:
        short_label, long_label = self.bucket_labels
        return {
            "bucket_boundary": self.boundary,
            "bucket_semantics": self.semantics,
            "path_recall": self.path_recall,
            "passage_recall": self.passage_recall,
            "macro_path_recall": self.macro_path_recall,
            "macro_passage_recall": self.macro_passage_recall,
            "pairs_evaluated": self.pairs_evaluated,
            "pairs_excluded": self.pairs_excluded,
            "overall": self.overall.to_dict(),
            "path_passages": self.path_passages.to_dict(),
            "buckets": {
                "short": dict(self.short.to_dict(), label=short_label),
                "long": dict(self.long.to_dict(), label=long_label)
            }
        }
