"""
Corpus store: ingest, validate, index and persist the entity-annotated corpus
"""

import json
import logging
import os
from typing import Any, Dict, Iterable, List, Optional, Set, Tuple, Union

from config import STORE_CONFIG
from models.corpus import Document, Entity, EntityIndex, Mention, Passage
from models.errors import (CorpusRecordError, CorruptStoreError, DuplicateDocumentError,
                           StoreError, StoreExistsError, UnknownEntityError,
                           UnknownPassageError)
from utils.jsonl_utils import atomic_write_json, atomic_write_jsonl

logger = logging.getLogger(__name__)


class CorpusHandle:
    """Read-only view of an ingested corpus; safe to share between threads"""

    def __init__(self, entities: Dict[str, Entity], documents: Dict[str, Document],
                 index: EntityIndex):
        self._entities = entities
        self._documents = documents
        self._passages: Dict[str, Passage] = {
            passage.id: passage for document in documents.values() for passage in document.passages
        }
        self._index = index

    @property
    def entities(self) -> Dict[str, Entity]:
        return self._entities

    @property
    def documents(self) -> Dict[str, Document]:
        return self._documents

    @property
    def passages(self) -> Dict[str, Passage]:
        return self._passages

    @property
    def index(self) -> EntityIndex:
        return self._index

    def counts(self) -> Tuple[int, int, int]:
        """(documents, passages, mentions)"""
        mentions = sum(len(passage.mentions) for passage in self._passages.values())
        return (len(self._documents), len(self._passages), mentions)

    def has_entity(self, entity_id: str) -> bool:
        return entity_id in self._entities

    def entity(self, entity_id: str) -> Entity:
        try:
            return self._entities[entity_id]
        except KeyError:
            raise UnknownEntityError(f"unknown entity '{entity_id}'")

    def document(self, doc_id: str) -> Document:
        return self._documents[doc_id]

    def passage(self, passage_id: str) -> Passage:
        try:
            return self._passages[passage_id]
        except KeyError:
            raise UnknownPassageError(f"unknown passage '{passage_id}'")

    def passages_with_entity(self, entity_id: str) -> Set[str]:
        """Passages holding at least one mention of entity_id; unknown entity gives an empty set"""
        return {passage_id for _, passage_id in self._index.postings.get(entity_id, ())}

    def documents_with_entity(self, entity_id: str, cap: int) -> List[str]:
        """Documents mentioning entity_id, capped to the cap with the most mentions.

        Ordered by descending mention count, ties by ascending document id.
        """
        if cap < 1:
            raise ValueError(f"cap must be >= 1, got {cap}")
        counts = self._index.doc_mention_counts.get(entity_id, {})
        ranked = sorted(counts.items(), key=lambda item: (-item[1], item[0]))
        if len(ranked) > cap:
            logger.info(f"Entity {entity_id} appears in {len(ranked)} documents, keeping top {cap}")
        return [doc_id for doc_id, _ in ranked[:cap]]

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, CorpusHandle):
            return NotImplemented
        return (self._entities == other._entities
                and list(self._documents.items()) == list(other._documents.items())
                and self._index == other._index)


def build_entity_index(documents: Iterable[Document]) -> EntityIndex:
    """Postings and per-document mention counts for every mentioned entity"""
    index = EntityIndex()
    for document in documents:
        for passage in document.passages:
            for mention in passage.mentions:
                index.postings.setdefault(mention.entity_id, set()).add((document.id, passage.id))
                doc_counts = index.doc_mention_counts.setdefault(mention.entity_id, {})
                doc_counts[document.id] = doc_counts.get(document.id, 0) + 1
    return index


def parse_entity_vocabulary(lines: Iterable[Union[str, bytes]]) -> Dict[str, Entity]:
    """Parse the entity vocabulary JSONL: {"id": str, "name": str}"""
    entities: Dict[str, Entity] = {}
    for line_no, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        record = _load_line(line, line_no)
        entity_id = _require_str(record, 'id', 'id', line_no)
        name = _require_str(record, 'name', 'name', line_no, allow_empty=True)
        if entity_id in entities:
            raise CorpusRecordError(line_no, 'id', f"duplicate entity id '{entity_id}'")
        entities[entity_id] = Entity(id=entity_id, canonical_name=name)
    return entities


def ingest_corpus(source: Iterable[Union[str, bytes]], entities: Optional[Dict[str, Entity]] = None,
                  strict_entities: bool = False) -> CorpusHandle:
    """Parse and validate corpus JSONL lines into a CorpusHandle.

    Mentions of entities outside the vocabulary are auto-registered (canonical
    name = id) unless strict_entities is set, in which case they are rejected.
    """
    entity_table: Dict[str, Entity] = dict(entities or {})
    documents: Dict[str, Document] = {}
    first_seen: Dict[str, int] = {}
    passage_lines: Dict[str, int] = {}
    registered = 0

    for line_no, line in enumerate(source, start=1):
        if not line.strip():
            continue
        record = _load_line(line, line_no)
        document = _parse_document(record, line_no)

        if document.id in documents:
            raise DuplicateDocumentError(document.id, line_no, first_seen[document.id])

        for p_idx, passage in enumerate(document.passages):
            if passage.id in passage_lines:
                raise CorpusRecordError(
                    line_no, f"passages[{p_idx}].id",
                    f"duplicate passage id '{passage.id}' (first seen on line {passage_lines[passage.id]})"
                )
            passage_lines[passage.id] = line_no
            for m_idx, mention in enumerate(passage.mentions):
                if mention.entity_id in entity_table:
                    continue
                if strict_entities:
                    raise CorpusRecordError(
                        line_no, f"passages[{p_idx}].mentions[{m_idx}].entity",
                        f"unknown entity '{mention.entity_id}'"
                    )
                logger.warning(f"Line {line_no}: auto-registering unknown entity '{mention.entity_id}'")
                entity_table[mention.entity_id] = Entity(id=mention.entity_id,
                                                         canonical_name=mention.entity_id)
                registered += 1

        documents[document.id] = document
        first_seen[document.id] = line_no

    handle = CorpusHandle(entity_table, documents, build_entity_index(documents.values()))
    doc_count, passage_count, mention_count = handle.counts()
    logger.info(f"Ingested {doc_count} documents, {passage_count} passages, {mention_count} mentions "
                f"({len(entity_table)} entities, {registered} auto-registered)")
    return handle


def ingest_files(corpus_paths: List[str], entity_path: Optional[str] = None,
                 strict_entities: bool = False) -> CorpusHandle:
    """Ingest corpus files (and an optional entity vocabulary) read as raw UTF-8 lines.

    Line numbers run on across the corpus files.
    """
    entities = None
    if entity_path:
        with open(entity_path, 'rb') as handle:
            entities = parse_entity_vocabulary(handle)
        logger.info(f"Loaded {len(entities)} entities from {entity_path}")

    def lines():
        for path in corpus_paths:
            with open(path, 'rb') as handle:
                yield from handle

    return ingest_corpus(lines(), entities, strict_entities)


def save_corpus(handle: CorpusHandle, directory: str, force: bool = False) -> None:
    """Persist the corpus as manifest + entities + per-document records + index"""
    manifest_path = os.path.join(directory, STORE_CONFIG['manifest_file'])
    if os.path.exists(manifest_path) and not force:
        raise StoreExistsError(f"store already exists at {directory} (use --force to overwrite)")
    os.makedirs(directory, exist_ok=True)

    atomic_write_jsonl(os.path.join(directory, STORE_CONFIG['entities_file']),
                       (entity.to_dict() for entity in handle.entities.values()))
    atomic_write_jsonl(os.path.join(directory, STORE_CONFIG['documents_file']),
                       (document.to_dict() for document in handle.documents.values()))
    atomic_write_json(os.path.join(directory, STORE_CONFIG['index_file']), handle.index.to_dict())

    doc_count, passage_count, mention_count = handle.counts()
    atomic_write_json(manifest_path, {
        'format_version': STORE_CONFIG['format_version'],
        'documents': doc_count,
        'passages': passage_count,
        'mentions': mention_count,
        'entities': len(handle.entities),
        'files': {
            'entities': STORE_CONFIG['entities_file'],
            'documents': STORE_CONFIG['documents_file'],
            'index': STORE_CONFIG['index_file']
        }
    })
    logger.info(f"Corpus store written to {directory}")


def load_corpus(directory: str) -> CorpusHandle:
    """Reload a persisted store and verify the serialized index against a rebuild"""
    manifest_path = os.path.join(directory, STORE_CONFIG['manifest_file'])
    if not os.path.exists(manifest_path):
        raise StoreError(f"no corpus store at {directory}")

    with open(manifest_path, encoding='utf-8') as handle:
        manifest = json.load(handle)
    version = manifest.get('format_version')
    if version != STORE_CONFIG['format_version']:
        raise CorruptStoreError(f"unsupported store format version {version!r}")

    files = manifest.get('files', {})
    with open(os.path.join(directory, files.get('entities', STORE_CONFIG['entities_file'])),
              encoding='utf-8') as handle:
        entities = parse_entity_vocabulary(handle)
    with open(os.path.join(directory, files.get('documents', STORE_CONFIG['documents_file'])),
              encoding='utf-8') as handle:
        corpus = ingest_corpus(handle, entities, strict_entities=True)
    with open(os.path.join(directory, files.get('index', STORE_CONFIG['index_file'])),
              encoding='utf-8') as handle:
        stored_index = EntityIndex.from_dict(json.load(handle))

    if stored_index != corpus.index:
        raise CorruptStoreError(f"entity index in {directory} does not match its documents")
    if corpus.counts() != (manifest.get('documents'), manifest.get('passages'), manifest.get('mentions')):
        raise CorruptStoreError(f"manifest counts in {directory} do not match its documents")
    return corpus


# Record parsing

def _load_line(line: Union[str, bytes], line_no: int) -> Dict[str, Any]:
    if isinstance(line, bytes):
        try:
            line = line.decode('utf-8')
        except UnicodeDecodeError as e:
            raise CorpusRecordError(line_no, '<record>', f"invalid UTF-8 at byte {e.start}: {e.reason}")
    try:
        record = json.loads(line)
    except json.JSONDecodeError as e:
        raise CorpusRecordError(line_no, '<record>', f"invalid JSON: {e.msg}")
    if not isinstance(record, dict):
        raise CorpusRecordError(line_no, '<record>', "record must be a JSON object")
    return record


def _require_str(record: Dict[str, Any], key: str, path: str, line_no: int,
                 allow_empty: bool = False) -> str:
    value = record.get(key)
    if not isinstance(value, str):
        raise CorpusRecordError(line_no, path, "missing or not a string")
    if not value and not allow_empty:
        raise CorpusRecordError(line_no, path, "must not be empty")
    return value


def _require_int(record: Dict[str, Any], key: str, path: str, line_no: int) -> int:
    value = record.get(key)
    if not isinstance(value, int) or isinstance(value, bool):
        raise CorpusRecordError(line_no, path, "missing or not an integer")
    if value < 0:
        raise CorpusRecordError(line_no, path, f"must be non-negative (got {value})")
    return value


def _require_list(record: Dict[str, Any], key: str, path: str, line_no: int) -> list:
    value = record.get(key)
    if not isinstance(value, list):
        raise CorpusRecordError(line_no, path, "missing or not a list")
    return value


def _parse_document(record: Dict[str, Any], line_no: int) -> Document:
    doc_id = _require_str(record, 'id', 'id', line_no)
    title = _require_str(record, 'title', 'title', line_no, allow_empty=True)
    raw_passages = _require_list(record, 'passages', 'passages', line_no)

    passages = []
    for p_idx, raw in enumerate(raw_passages):
        p_path = f"passages[{p_idx}]"
        if not isinstance(raw, dict):
            raise CorpusRecordError(line_no, p_path, "passage must be an object")
        passage_id = _require_str(raw, 'id', f"{p_path}.id", line_no)

        sentences = []
        for s_idx, sentence in enumerate(_require_list(raw, 'sentences', f"{p_path}.sentences", line_no)):
            if not isinstance(sentence, list) or not all(isinstance(token, str) for token in sentence):
                raise CorpusRecordError(line_no, f"{p_path}.sentences[{s_idx}]",
                                        "sentence must be a list of string tokens")
            sentences.append(list(sentence))

        mentions = []
        for m_idx, raw_mention in enumerate(_require_list(raw, 'mentions', f"{p_path}.mentions", line_no)):
            m_path = f"{p_path}.mentions[{m_idx}]"
            if not isinstance(raw_mention, dict):
                raise CorpusRecordError(line_no, m_path, "mention must be an object")
            mention = Mention(
                entity_id=_require_str(raw_mention, 'entity', f"{m_path}.entity", line_no),
                sentence_idx=_require_int(raw_mention, 'sentence', f"{m_path}.sentence", line_no),
                start=_require_int(raw_mention, 'start', f"{m_path}.start", line_no),
                end=_require_int(raw_mention, 'end', f"{m_path}.end", line_no)
            )
            if mention.start >= mention.end:
                raise CorpusRecordError(line_no, m_path,
                                        f"span [{mention.start}, {mention.end}) must satisfy start < end")
            if mention.sentence_idx >= len(sentences):
                raise CorpusRecordError(line_no, f"{m_path}.sentence",
                                        f"sentence {mention.sentence_idx} out of range "
                                        f"({len(sentences)} sentences)")
            if mention.end > len(sentences[mention.sentence_idx]):
                raise CorpusRecordError(line_no, m_path,
                                        f"span [{mention.start}, {mention.end}) exceeds sentence length "
                                        f"{len(sentences[mention.sentence_idx])}")
            mentions.append(mention)

        passages.append(Passage(id=passage_id, doc_id=doc_id, index_in_doc=p_idx,
                                sentences=sentences, mentions=mentions))

    return Document(id=doc_id, title=title, passages=passages)
