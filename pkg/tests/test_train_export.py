import hashlib
import math
import os
import random
from decimal import Decimal, localcontext

import pytest

from models.errors import ExportError, MissingPassageTextError, MissingSimilarityError
from models.evidence import GoldEvidence, TrainingSample
from services.evaluation import load_gold_evidence
from services.train_export import (augment_training_set, contrastive_loss, export_training_jsonl,
                                   load_training_jsonl, passage_texts_for, samples_from_gold)


def decimal_loss(sample, sims):
    """The same loss with 80 significant digits and no stabilization"""
    with localcontext() as ctx:
        ctx.prec = 80
        negatives = sum((Decimal(sims[p]).exp() for p in sample.negatives), Decimal(0))
        total = Decimal(0)
        for positive in sample.positives:
            e = Decimal(sims[positive]).exp()
            total -= (e / (e + negatives)).ln()
        return float(total)


def _sample(m, n, prefix="p"):
    return TrainingSample(query_text="q",
                          positives=[f"{prefix}+{k}" for k in range(m)],
                          negatives=[f"{prefix}-{j}" for j in range(n)])


def test_single_logit_loss_is_zero():
    assert contrastive_loss(_sample(1, 0), {"p+0": 3.7}) == 0.0


def test_tied_logits_closed_form():
    for m in range(1, 6):
        for n in range(0, 11):
            sample = _sample(m, n)
            sims = {p: 0.25 for p in sample.positives + sample.negatives}
            assert abs(contrastive_loss(sample, sims) - m * math.log(1 + n)) < 1e-12


def test_two_positives_three_negatives_tied():
    sample = _sample(2, 3)
    sims = {p: -1.5 for p in sample.positives + sample.negatives}
    assert contrastive_loss(sample, sims) == pytest.approx(2.77258872, rel=1e-8)


def test_matches_high_precision_oracle():
    rng = random.Random(12)
    for _ in range(1000):
        sample = _sample(rng.randint(1, 5), rng.randint(0, 10))
        sims = {p: rng.uniform(-50, 50) for p in sample.positives + sample.negatives}
        loss = contrastive_loss(sample, sims)
        assert math.isfinite(loss)
        assert loss == pytest.approx(decimal_loss(sample, sims), rel=1e-9, abs=0.0)


def test_extreme_margin_keeps_relative_precision():
    sample = _sample(1, 1)
    sims = {"p+0": 50.0, "p-0": -50.0}
    loss = contrastive_loss(sample, sims)
    assert loss > 0.0
    assert loss == pytest.approx(math.exp(-100.0), rel=1e-12, abs=0.0)
    assert loss == pytest.approx(decimal_loss(sample, sims), rel=1e-9, abs=0.0)


def test_dominating_positives_give_negligible_loss():
    sample = _sample(3, 4)
    sims = {p: 45.0 for p in sample.positives}
    sims.update({p: 4.0 for p in sample.negatives})
    loss = contrastive_loss(sample, sims)
    assert 0.0 <= loss < 1e-15


def test_loss_is_monotone_in_each_similarity():
    rng = random.Random(9)
    for _ in range(200):
        sample = _sample(rng.randint(1, 3), rng.randint(1, 4))
        sims = {p: rng.uniform(-5, 5) for p in sample.positives + sample.negatives}
        base = contrastive_loss(sample, sims)
        assert base >= 0.0

        negative = rng.choice(sample.negatives)
        raised = dict(sims, **{negative: sims[negative] + rng.uniform(0, 3)})
        assert contrastive_loss(sample, raised) >= base

        positive = rng.choice(sample.positives)
        raised = dict(sims, **{positive: sims[positive] + rng.uniform(0, 3)})
        assert contrastive_loss(sample, raised) <= base


def test_missing_similarity_is_an_error():
    with pytest.raises(MissingSimilarityError, match="p-0"):
        contrastive_loss(_sample(1, 1), {"p+0": 1.0})


# Augmentation

TEXTS = {"a": "first passage .", "b": "second passage .", "c": "third passage ."}


def test_two_positives_give_two_augmented_samples():
    sample = TrainingSample("q?", ["a", "b"], ["n1", "n2"])
    augmented = augment_training_set([sample], TEXTS)

    assert [s.to_dict() for s in augmented] == [
        {"query": "q?", "positives": ["a", "b"], "negatives": ["n1", "n2"]},
        {"query": "q? first passage .", "positives": ["b"], "negatives": ["n1", "n2"]},
        {"query": "q? second passage .", "positives": ["a"], "negatives": ["n1", "n2"]},
    ]


def test_single_positive_is_not_augmented():
    sample = TrainingSample("q?", ["a"], ["n"])
    assert augment_training_set([sample], TEXTS) == [sample]


def test_three_positives_query_strings():
    sample = TrainingSample("What is the relation between X and Y?", ["a", "b", "c"], [])
    augmented = augment_training_set([sample], TEXTS)

    assert len(augmented) == 4
    assert [s.query_text for s in augmented[1:]] == [sample.query_text + " " + TEXTS[p] for p in "abc"]
    for promoted, copy in zip("abc", augmented[1:]):
        assert promoted not in copy.positives
        assert sorted(copy.positives + [promoted]) == ["a", "b", "c"]


def test_augmented_size_follows_positive_counts():
    rng = random.Random(1)
    samples = [TrainingSample(f"q{i}", list("abc")[:rng.randint(1, 3)], ["n"]) for i in range(30)]
    augmented = augment_training_set(samples, TEXTS)
    expected = len(samples) + sum(len(s.positives) for s in samples if len(s.positives) > 1)
    assert len(augmented) == expected
    assert all(s.negatives == ["n"] for s in augmented)


def test_missing_passage_text_is_an_error():
    with pytest.raises(MissingPassageTextError, match="'z'"):
        augment_training_set([TrainingSample("q", ["a", "z"])], TEXTS)


# Samples from gold annotations

def test_samples_from_demo_gold(demo_corpus, demo_dir):
    golds = load_gold_evidence(os.path.join(demo_dir, 'gold.jsonl'))
    samples = samples_from_gold(golds, demo_corpus)

    assert [len(s.positives) for s in samples] == [2, 2, 3, 4, 1]
    assert samples[0].query_text == \
        "What is the relation between A Saucerful of Secrets and Progressive rock?"
    assert all(s.validate() == [] for s in samples)

    augmented = augment_training_set(samples, passage_texts_for(samples, demo_corpus))
    assert len(augmented) == 16


def test_samples_from_gold_falls_back_to_path_members(demo_corpus):
    gold = GoldEvidence.from_record({"head": "emi", "tail": "pink_floyd",
                                     "evidence_paths": [["d01-p0", "d02-p1"], ["d02-p1"]],
                                     "negatives": ["d02-p1", "d03-p0"]})
    [sample] = samples_from_gold([gold], demo_corpus)
    assert sample.positives == ["d01-p0", "d02-p1"]
    assert sample.negatives == ["d03-p0"]


def test_samples_from_gold_skips_unknown_entities(demo_corpus):
    gold = GoldEvidence.from_record({"head": "nobody", "tail": "emi", "evidence_passages": ["d01-p0"]})
    assert samples_from_gold([gold], demo_corpus) == []


# Export

def _digest(path):
    with open(path, 'rb') as handle:
        return hashlib.sha256(handle.read()).hexdigest()


def test_export_is_deterministic(tmp_path):
    samples = [TrainingSample(f"q{i}", [f"p{i}"], [f"n{i}"]) for i in range(5)]
    first, second = tmp_path / "a.jsonl", tmp_path / "b.jsonl"

    assert export_training_jsonl(samples, str(first)) == 5
    assert export_training_jsonl(samples, str(second)) == 5
    assert len(first.read_text(encoding='utf-8').splitlines()) == 5
    assert _digest(first) == _digest(second)
    assert load_training_jsonl(str(first)) == samples


def test_export_empty_list(tmp_path):
    target = tmp_path / "empty.jsonl"
    assert export_training_jsonl([], str(target)) == 0
    assert target.read_text(encoding='utf-8') == ""


def test_failed_export_leaves_no_partial_file(tmp_path):
    target = tmp_path / "occupied"
    target.mkdir()
    with pytest.raises(ExportError):
        export_training_jsonl([TrainingSample("q", ["p"])], str(target))
    assert [p.name for p in tmp_path.iterdir()] == ["occupied"]


def test_load_rejects_invalid_samples(tmp_path):
    path = tmp_path / "bad.jsonl"
    path.write_text('{"query": "q", "positives": ["a"], "negatives": ["a"]}\n', encoding='utf-8')
    with pytest.raises(ExportError, match="line 1"):
        load_training_jsonl(str(path))
