import random

import pytest

from models.errors import RecordSchemaError
from models.evidence import EvidencePath, GoldEvidence
from services.evaluation import (bucketed_report, format_report_table, is_short, load_gold_evidence,
                                 passage_recall, path_recall)


def _paths(*sequences):
    return [EvidencePath(passages=list(seq), bridges=[]) for seq in sequences]


def _gold(paths=(), passages=(), head="h", tail="t"):
    return GoldEvidence.from_record({"head": head, "tail": tail, "evidence_paths": [list(p) for p in paths],
                                     "evidence_passages": list(passages)})


def test_path_recall_requires_the_whole_path():
    gold = _gold([["a", "b", "c"]])
    assert path_recall(_paths(["x"], ["a", "b", "c"]), gold) == 1.0
    assert path_recall(_paths(["a", "b"]), gold) == 0.0
    assert path_recall(_paths(["c", "b", "a"]), gold) == 0.0


def test_path_recall_counts_matched_gold_paths():
    rng = random.Random(3)
    golds = [[f"p{i}", f"q{i}"][:rng.randint(1, 2)] for i in range(10)]
    retrieved = _paths(*golds[:4], ["noise"])
    assert path_recall(retrieved, _gold(golds)) == 0.4


def test_passage_recall():
    gold = _gold(passages=["a", "b", "c"])
    assert passage_recall(_paths(["a", "x"], ["b"]), gold) == pytest.approx(2 / 3)
    assert passage_recall(_paths(["x", "y"]), gold) == 0.0
    assert passage_recall(_paths(["c", "b", "a", "z"]), gold) == 1.0


def test_empty_gold_is_undefined():
    assert path_recall(_paths(["a"]), _gold()) is None
    assert passage_recall(_paths(["a"]), _gold()) is None


def test_gold_passages_include_path_members():
    gold = _gold([["a", "b"]], passages=["c"])
    assert gold.gold_passages == {"a", "b", "c"}
    assert gold.gold_hops == [2]


def test_is_short_semantics():
    assert is_short(2, 3, "lt") and not is_short(3, 3, "lt")
    assert is_short(3, 3, "le") and not is_short(4, 3, "le")


def test_all_short_golds_leave_long_bucket_undefined():
    report = bucketed_report([(_paths(["a", "b"]), _gold([["a", "b"], ["c"]]))])
    assert report.short.path_recall == 0.5
    assert report.long.path_recall is None
    assert report.long.passage_recall is None


def test_bucket_recalls_match_hand_counts():
    per_pair = [
        (_paths(["a", "b"], ["x", "y", "z", "w"]),
         _gold([["a", "b"], ["c", "d"], ["x", "y", "z", "w"]])),
        (_paths(["m", "n", "o", "p"]),
         _gold([["k"], ["m", "n", "o", "q"]])),
    ]
    report = bucketed_report(per_pair, boundary=3, semantics="lt")

    assert (report.short.path_hits, report.short.path_total) == (1, 3)
    assert (report.long.path_hits, report.long.path_total) == (1, 2)
    assert (report.short.passage_hits, report.short.passage_total) == (2, 5)
    assert (report.long.passage_hits, report.long.passage_total) == (7, 8)
    assert report.path_recall == pytest.approx(2 / 5)
    assert report.passage_recall == pytest.approx(9 / 13)
    assert report.macro_path_recall == pytest.approx((2 / 3 + 0 / 2) / 2)


def test_flipping_semantics_moves_three_hop_paths():
    per_pair = [(_paths(["a", "b", "c"]), _gold([["a", "b", "c"], ["d", "e"], ["f", "g", "h", "i"]]))]
    lt = bucketed_report(per_pair, semantics="lt")
    le = bucketed_report(per_pair, semantics="le")

    assert (lt.short.path_total, lt.long.path_total) == (1, 2)
    assert (le.short.path_total, le.long.path_total) == (2, 1)
    assert lt.short.path_hits == 0 and le.short.path_hits == 1
    for report in (lt, le):
        assert report.short.path_hits + report.long.path_hits == report.overall.path_hits
        assert report.short.path_total + report.long.path_total == report.overall.path_total
    assert lt.to_dict()["buckets"]["short"]["label"] == "H_T<3"
    assert le.to_dict()["buckets"]["long"]["label"] == "H_T>3"


def test_pairs_without_gold_are_excluded():
    report = bucketed_report([(_paths(["a"]), _gold()), (_paths(["a"]), _gold([["a"]]))])
    assert report.pairs_excluded == 1
    assert report.pairs_evaluated == 1
    assert report.macro_path_recall == 1.0


def test_invalid_semantics():
    with pytest.raises(ValueError):
        bucketed_report([], semantics="between")


def _random_fixture(rng):
    universe = [f"p{i}" for i in range(12)]
    per_pair = []
    for _ in range(rng.randint(1, 6)):
        gold_paths = [rng.sample(universe, rng.randint(1, 5)) for _ in range(rng.randint(0, 4))]
        extra = rng.sample(universe, rng.randint(0, 3))
        retrieved = [rng.sample(universe, rng.randint(1, 5)) for _ in range(rng.randint(0, 6))]
        retrieved += [g for g in gold_paths if rng.random() < 0.4]
        per_pair.append((_paths(*retrieved), _gold(gold_paths, extra)))
    return per_pair


def test_random_fixtures_match_set_arithmetic():
    rng = random.Random(101)
    for _ in range(100):
        per_pair = _random_fixture(rng)
        boundary = rng.randint(2, 4)
        for semantics in ("lt", "le"):
            report = bucketed_report(per_pair, boundary=boundary, semantics=semantics)
            short_pred = (lambda h: h < boundary) if semantics == "lt" else (lambda h: h <= boundary)

            path_hits = path_total = passage_hits = passage_total = 0
            buckets = {True: [0, 0, 0, 0], False: [0, 0, 0, 0]}
            for retrieved, gold in per_pair:
                sequences = {tuple(p.passages) for p in retrieved}
                covered = set().union(*(set(p.passages) for p in retrieved)) if retrieved else set()
                gold_set = set(gold.evidence_passages).union(*map(set, gold.gold_paths))
                path_total += len(gold.gold_paths)
                path_hits += sum(tuple(g) in sequences for g in gold.gold_paths)
                passage_total += len(gold_set)
                passage_hits += len(gold_set & covered)
                for g in gold.gold_paths:
                    counts = buckets[short_pred(len(g))]
                    counts[0] += tuple(g) in sequences
                    counts[1] += 1
                    counts[2] += len(set(g) & covered)
                    counts[3] += len(set(g))

            assert (report.overall.path_hits, report.overall.path_total) == (path_hits, path_total)
            assert (report.overall.passage_hits, report.overall.passage_total) == (passage_hits, passage_total)
            assert [report.short.path_hits, report.short.path_total,
                    report.short.passage_hits, report.short.passage_total] == buckets[True]
            assert [report.long.path_hits, report.long.path_total,
                    report.long.passage_hits, report.long.passage_total] == buckets[False]

            assert report.short.path_total + report.long.path_total == report.overall.path_total
            assert report.short.path_hits + report.long.path_hits == report.overall.path_hits
            assert (report.short.passage_total + report.long.passage_total
                    == report.path_passages.passage_total)
            assert report.short.passage_hits + report.long.passage_hits == report.path_passages.passage_hits


def test_more_retrieved_paths_never_lower_recall():
    rng = random.Random(8)
    for _ in range(50):
        per_pair = _random_fixture(rng)
        before = bucketed_report(per_pair)
        widened = [(list(retrieved) + _paths(*[g for g in gold.gold_paths[:1]]), gold)
                   for retrieved, gold in per_pair]
        after = bucketed_report(widened)
        for name in ("path_recall", "passage_recall"):
            if getattr(before, name) is not None:
                assert getattr(after, name) >= getattr(before, name)


def test_format_report_table():
    report = bucketed_report([(_paths(["a", "b"]), _gold([["a", "b"]]))])
    table = format_report_table(report)
    lines = table.splitlines()

    assert lines[0].split() == ["bucket", "path_recall", "paths", "passage_recall", "passages"]
    assert lines[1].split() == ["all", "1.0000", "1/1", "1.0000", "2/2"]
    assert lines[3].split() == ["H_T>=3", "undefined", "0/0", "undefined", "0/0"]
    assert lines[-1].startswith("pairs evaluated: 1, excluded: 0")


def test_load_gold_evidence(tmp_path, demo_dir):
    golds = load_gold_evidence(f"{demo_dir}/gold.jsonl")
    assert len(golds) == 5
    assert golds[3].gold_hops == [1, 3]

    bad = tmp_path / "gold.jsonl"
    bad.write_text('{"head": "a", "tail": "b"}\n{"head": "a", "tail": 3}\n', encoding='utf-8')
    with pytest.raises(RecordSchemaError) as excinfo:
        load_gold_evidence(str(bad))
    assert excinfo.value.line_no == 2

    bad.write_text('{"head": "a", "tail": "b", "evidence_paths": ["a"]}\n', encoding='utf-8')
    with pytest.raises(RecordSchemaError, match="passage-id lists"):
        load_gold_evidence(str(bad))
