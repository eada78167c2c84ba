"""
Corpus models: entities, documents, passages and mentions
"""

from dataclasses import dataclass, field
from typing import Any, Dict, List, Set, Tuple


@dataclass
class Entity:
    """An annotated entity; canonical_name is the surface form used in queries"""
    id: str
    canonical_name: str

    def to_dict(self) -> Dict[str, Any]:
        return {"id": self.id, "name": self.canonical_name}


@dataclass
class Mention:
    """Entity mention; token_span is half-open over the tokens of one sentence"""
    entity_id: str
    sentence_idx: int
    start: int
    end: int

    @property
    def token_span(self) -> Tuple[int, int]:
        return (self.start, self.end)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "entity": self.entity_id,
            "sentence": self.sentence_idx,
            "start": self.start,
            "end": self.end
        }


@dataclass
class Passage:
    """A run of tokenized sentences with its entity mentions"""
    id: str
    doc_id: str
    index_in_doc: int
    sentences: List[List[str]]
    mentions: List[Mention] = field(default_factory=list)

    @property
    def token_count(self) -> int:
        return sum(len(sentence) for sentence in self.sentences)

    @property
    def text(self) -> str:
        """Sentences joined by single spaces, tokens joined by single spaces"""
        return " ".join(" ".join(sentence) for sentence in self.sentences)

    def entity_ids(self) -> Set[str]:
        return {mention.entity_id for mention in self.mentions}

    def mentions_in_sentence(self, sentence_idx: int) -> List[Mention]:
        return [m for m in self.mentions if m.sentence_idx == sentence_idx]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "id": self.id,
            "sentences": [list(sentence) for sentence in self.sentences],
            "mentions": [mention.to_dict() for mention in self.mentions]
        }


@dataclass
class Document:
    """Titled document; passages keep their corpus order"""
    id: str
    title: str
    passages: List[Passage] = field(default_factory=list)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "id": self.id,
            "title": self.title,
            "passages": [passage.to_dict() for passage in self.passages]
        }


@dataclass
class EntityIndex:
    """Inverted index from entity id to passage postings and per-document mention counts"""
    postings: Dict[str, Set[Tuple[str, str]]] = field(default_factory=dict)
    doc_mention_counts: Dict[str, Dict[str, int]] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "postings": {
                entity_id: [list(posting) for posting in sorted(postings)]
                for entity_id, postings in sorted(self.postings.items())
            },
            "doc_mention_counts": {
                entity_id: dict(sorted(counts.items()))
                for entity_id, counts in sorted(self.doc_mention_counts.items())
            }
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "EntityIndex":
        return cls(
            postings={
                entity_id: {(doc_id, passage_id) for doc_id, passage_id in postings}
                for entity_id, postings in data.get("postings", {}).items()
            },
            doc_mention_counts={
                entity_id: {doc_id: int(count) for doc_id, count in counts.items()}
                for entity_id, counts in data.get("doc_mention_counts", {}).items()
            }
        )
