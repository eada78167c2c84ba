"""
Exceptions raised by the evidence retrieval engine
"""

from typing import List, Optional


class EvidenceEngineError(Exception):
    """Base class for all engine errors"""


class CorpusRecordError(EvidenceEngineError):
    """A corpus or vocabulary record failed validation"""

    def __init__(self, line_no: int, field_path: str, message: str):
        self.line_no = line_no
        self.field_path = field_path
        self.message = message
        super().__init__(f"line {line_no}: {field_path}: {message}")


class DuplicateDocumentError(EvidenceEngineError):
    def __init__(self, doc_id: str, line_no: int, first_line_no: int):
        self.doc_id = doc_id
        self.line_no = line_no
        super().__init__(f"line {line_no}: duplicate document id '{doc_id}' (first seen on line {first_line_no})")


class UnknownEntityError(EvidenceEngineError):
    pass


class StoreError(EvidenceEngineError):
    pass


class StoreExistsError(StoreError):
    pass


class CorruptStoreError(StoreError):
    pass


class InvalidQueryError(EvidenceEngineError):
    pass


class GraphNodeError(EvidenceEngineError):
    pass


class QueryTemplateError(EvidenceEngineError):
    pass


class DimensionMismatchError(EvidenceEngineError):
    pass


class MissingEmbeddingError(EvidenceEngineError):
    pass


class EmbeddingFormatError(EvidenceEngineError):
    """An embedding file record is malformed; record_index is 1-based after the header"""

    def __init__(self, record_index: Optional[int], message: str):
        self.record_index = record_index
        prefix = f"record {record_index}: " if record_index is not None else ""
        super().__init__(f"{prefix}{message}")


class EmbeddingServiceError(EvidenceEngineError):
    pass


class UnknownPassageError(EvidenceEngineError):
    pass


class MissingSimilarityError(EvidenceEngineError):
    pass


class MissingPassageTextError(EvidenceEngineError):
    pass


class ExportError(EvidenceEngineError):
    pass


class RecordSchemaError(EvidenceEngineError):
    """A gold, pairs or retrieval-output record does not match its schema"""

    def __init__(self, source: str, line_no: Optional[int], message: str):
        self.source = source
        self.line_no = line_no
        location = f"{source} line {line_no}" if line_no is not None else source
        super().__init__(f"{location}: {message}")


class ConfigError(EvidenceEngineError):
    """Configuration is invalid; errors holds every problem found in one pass"""

    def __init__(self, errors: List[str]):
        self.errors = list(errors)
        super().__init__("invalid configuration: " + "; ".join(self.errors))
