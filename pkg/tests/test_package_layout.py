import importlib
import importlib.util
import inspect
import os
import re

import pytest

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
SOURCE = ['app.py', 'config.py', 'commands', 'models', 'services', 'utils']
LOCAL = {'app', 'config', 'commands', 'models', 'services', 'utils', 'tests'}
IMPORT_RE = re.compile(r'^(?:from|import)\s+([A-Za-z_]\w*)', re.MULTILINE)


def _source_files():
    for entry in SOURCE:
        path = os.path.join(ROOT, entry)
        if os.path.isfile(path):
            yield path
            continue
        for directory, _, files in os.walk(path):
            yield from (os.path.join(directory, name) for name in files if name.endswith('.py'))


def _declared():
    names = set()
    with open(os.path.join(ROOT, 'requirements.txt'), encoding='utf-8') as handle:
        for line in handle:
            line = line.strip()
            if line and not line.startswith(('#', '-')):
                names.add(re.split(r'[<>=!~\[ ;]', line, maxsplit=1)[0].lower())
    return names


def _installed_package(name):
    spec = importlib.util.find_spec(name)
    origin = (spec.origin or "") if spec else ""
    return "site-packages" in origin or "dist-packages" in origin


def test_every_third_party_import_is_declared():
    imported = set()
    for path in _source_files():
        with open(path, encoding='utf-8') as handle:
            imported.update(IMPORT_RE.findall(handle.read()))
    third_party = {name.lower() for name in imported - LOCAL if _installed_package(name)}

    assert 'urllib3' in third_party
    assert third_party <= _declared()


@pytest.mark.parametrize("module, name", [
    ("commands.retrieval", "load_pairs"),
    ("commands.retrieval", "cmd_dump_graph"),
    ("commands.retrieval", "cmd_analyze_mining"),
    ("services.corpus_store", "build_entity_index"),
    ("services.corpus_store", "ingest_files"),
    ("services.train_export", "load_training_jsonl"),
    ("services.path_miner", "mine_with_redemption"),
])
def test_entry_points_are_documented(module, name):
    assert inspect.getdoc(getattr(importlib.import_module(module), name))
