"""
JSONL reading and atomic file writing
"""

import json
import logging
import os
import tempfile
from typing import Any, Dict, Iterable, Iterator, Tuple

from models.errors import RecordSchemaError

logger = logging.getLogger(__name__)


def iter_jsonl(path: str) -> Iterator[Tuple[int, Any]]:
    """Yield (1-based line number, record) for every non-blank line.

    Undecodable bytes and invalid JSON raise RecordSchemaError with the line number.
    """
    with open(path, 'rb') as handle:
        for line_no, raw in enumerate(handle, start=1):
            if not raw.strip():
                continue
            try:
                record = json.loads(raw.decode('utf-8'))
            except UnicodeDecodeError as e:
                raise RecordSchemaError(path, line_no, f"invalid UTF-8 at byte {e.start}: {e.reason}")
            except json.JSONDecodeError as e:
                raise RecordSchemaError(path, line_no, f"invalid JSON: {e.msg}")
            yield line_no, record


def dumps_record(record: Dict[str, Any]) -> str:
    return json.dumps(record, ensure_ascii=False)


def atomic_write_text(destination: str, content: str) -> None:
    """Write content to a temp file next to destination, then rename over it"""
    directory = os.path.dirname(os.path.abspath(destination))
    os.makedirs(directory, exist_ok=True)
    fd, temp_path = tempfile.mkstemp(dir=directory, prefix='.tmp-', suffix='.part')
    try:
        with os.fdopen(fd, 'w', encoding='utf-8', newline='\n') as handle:
            handle.write(content)
        os.replace(temp_path, destination)
    except BaseException:
        if os.path.exists(temp_path):
            os.remove(temp_path)
        raise


def atomic_write_jsonl(destination: str, records: Iterable[Dict[str, Any]]) -> int:
    """Write one JSON record per line atomically; returns the record count"""
    lines = [dumps_record(record) for record in records]
    atomic_write_text(destination, "".join(line + "\n" for line in lines))
    return len(lines)


def atomic_write_json(destination: str, data: Any) -> None:
    atomic_write_text(destination, json.dumps(data, ensure_ascii=False, indent=2, sort_keys=True) + "\n")
