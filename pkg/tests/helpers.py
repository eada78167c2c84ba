"""
Corpus builders shared by the test modules
"""

import json
from typing import Dict, Iterable, List, Optional, Sequence

from models.corpus import Entity
from services.corpus_store import CorpusHandle, ingest_corpus


def passage_record(passage_id: str, sentences: List[List[str]], mentions: List[dict]) -> dict:
    return {"id": passage_id, "sentences": sentences, "mentions": mentions}


def mention(entity: str, sentence: int, start: int, end: int) -> dict:
    return {"entity": entity, "sentence": sentence, "start": start, "end": end}


def entity_passage(passage_id: str, entities: Sequence[str]) -> dict:
    """One sentence whose tokens are the entity ids, each token a mention"""
    tokens = list(entities) or ["filler"]
    mentions = [mention(entity, 0, i, i + 1) for i, entity in enumerate(entities)]
    return passage_record(passage_id, [tokens], mentions)


def document_record(doc_id: str, passages: List[dict], title: Optional[str] = None) -> dict:
    return {"id": doc_id, "title": title if title is not None else doc_id, "passages": passages}


def to_lines(records: Iterable[dict]) -> List[str]:
    return [json.dumps(record) + "\n" for record in records]


def vocabulary(entity_ids: Iterable[str]) -> Dict[str, Entity]:
    return {entity_id: Entity(id=entity_id, canonical_name=entity_id) for entity_id in entity_ids}


def build_corpus(docs: Dict[str, List[Sequence[str]]]) -> CorpusHandle:
    """Corpus from {doc_id: [entities of passage 0, entities of passage 1, ...]}.

    Passage ids are "<doc_id>-p<index>".
    """
    records = []
    entity_ids = set()
    for doc_id, passages in docs.items():
        records.append(document_record(doc_id, [
            entity_passage(f"{doc_id}-p{i}", entities) for i, entities in enumerate(passages)
        ]))
        for entities in passages:
            entity_ids.update(entities)
    return ingest_corpus(to_lines(records), vocabulary(sorted(entity_ids)))
