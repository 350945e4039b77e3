import json

import numpy as np
import pytest

from kw2sent.corpus import TrainingExample
from kw2sent.evalsuite import EvalReport, evaluate, reversal_robustness, similar_templates
from kw2sent.evalsuite.metrics import rouge_l_sentence

from .conftest import tiny_model


@pytest.fixture(scope="module")
def small(toy):
    model = tiny_model(len(toy.vocab), len(toy.tags), init_scale=0.5, dtype=np.float32)
    return model, toy.test[:15]


@pytest.fixture(scope="module")
def small_no_template(toy):
    model = tiny_model(len(toy.vocab), len(toy.tags), init_scale=0.5, dtype=np.float32, no_template=True)
    return model, toy.test[:15]


def run(model, examples, toy, **kw):
    return evaluate(model, examples, toy.vocab, toy.tags, toy.tagger, **kw)


def test_report_shape(small, toy, tmp_path):
    model, examples = small
    rep = run(model, examples, toy)
    assert isinstance(rep, EvalReport)
    assert rep.n_examples == len(rep.records) == 15
    for name in ("bleu", "meteor_lite", "rouge_l", "posmatch"):
        assert 0.0 <= rep.metric(name) <= 100.0
    for r, ex in zip(rep.records, examples):
        assert len(r.prediction) == len(ex.template)
        assert r.reference == list(ex.reference)
    d = json.loads(rep.to_json())
    assert list(d) == ["scenario", "decode_mode", "bleu", "meteor_lite", "rouge_l", "posmatch", "n_examples"]
    rep.write_audit(tmp_path / "audit.jsonl")
    lines = (tmp_path / "audit.jsonl").read_text().splitlines()
    assert len(lines) == 15 and "prediction" in json.loads(lines[0])


def test_report_posmatch_agrees_with_records(small, toy):
    model, examples = small
    rep = run(model, examples, toy)
    assert abs(rep.posmatch - np.mean([r.posmatch for r in rep.records])) < 1e-9


def test_evaluation_is_deterministic(small, toy):
    model, examples = small
    a = run(model, examples, toy, decode_mode="beam", beam_width=3)
    b = run(model, examples, toy, decode_mode="beam", beam_width=3)
    assert a.to_dict() == b.to_dict()
    assert [r.prediction for r in a.records] == [r.prediction for r in b.records]


def test_evaluate_errors(small, toy):
    model, examples = small
    with pytest.raises(ValueError):
        run(model, [], toy)
    with pytest.raises(ValueError):
        run(model, examples, toy, scenario="fuzzy")
    with pytest.raises(ValueError):
        run(model, examples, toy, decode_mode="sample")
    with pytest.raises(ValueError):
        run(model, examples, toy, scenario="similar")


def test_similar_scenario_uses_exemplar_templates(small, toy):
    model, examples = small
    tmpls = similar_templates(examples, toy.train)
    rep = run(model, examples, toy, scenario="similar", exemplar_templates=tmpls)
    assert rep.scenario == "similar"
    for r, t in zip(rep.records, tmpls):
        assert r.template == list(t) and len(r.prediction) == len(t)


def test_similar_templates_pick_best_other_sentence():
    def ex(words, tags):
        return TrainingExample(["dog"], ["NOUN"], tags, words)

    target = ex(["the", "dog", "barked"], ["DT", "NN", "VBD"])
    pool = [
        ex(["the", "dog", "barked"], ["DT", "NN", "VBD"]),  # the reference itself: skipped
        ex(["dogs", "bark"], ["NNS", "VBP"]),
        ex(["the", "cat", "slept", "."], ["DT", "NN", "VBD", "."]),
        ex(["the", "cat", "sleeps", "."], ["DT", "NN", "VBZ", "."]),
    ]
    (t,) = similar_templates([target], pool)
    assert t == ("DT", "NN", "VBD", ".")
    scores = [rouge_l_sentence(p.template, target.template, beta=1.0) for p in pool[1:]]
    assert scores[1] == max(scores)
    with pytest.raises(ValueError):
        similar_templates([target], [])
    with pytest.raises(ValueError):
        similar_templates([target], pool[:1])


def test_similar_templates_differ_from_references(toy):
    tmpls = similar_templates(toy.test, toy.train)
    train_refs = {e.reference for e in toy.train}
    assert len(tmpls) == len(toy.test)
    assert all(e.reference not in train_refs for e in toy.test)


def test_template_model_reversal_deltas_zero(small, toy):
    model, examples = small
    rep = reversal_robustness(model, examples, toy.vocab, toy.tags, toy.tagger)
    assert rep.deltas == {"bleu": 0.0, "meteor_lite": 0.0, "rouge_l": 0.0, "posmatch": 0.0}
    assert [r.prediction for r in rep.original.records] == [r.prediction for r in rep.reversed.records]
    assert rep.reversed.records[0].keywords == list(reversed(examples[0].keywords))


def test_no_template_report_and_single_keyword_reversal(small_no_template, toy):
    model, _ = small_no_template
    one_kw = [TrainingExample(["dog"], ["NOUN"], ["DT", "NN"], ["the", "dog"])] * 3
    rep = reversal_robustness(model, one_kw, toy.vocab, toy.tags, toy.tagger, max_length=6)
    assert rep.original.posmatch is None
    assert rep.deltas == {"bleu": 0.0, "meteor_lite": 0.0, "rouge_l": 0.0, "posmatch": None}


def test_trained_exact_beats_similar(trained, toy):
    exact = run(trained.model, toy.test, toy)
    similar = run(trained.model, toy.test, toy, scenario="similar", exemplar_templates=similar_templates(toy.test, toy.train))
    assert exact.bleu >= similar.bleu
