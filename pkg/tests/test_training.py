import csv
from collections import Counter

import numpy as np
import pytest

import kw2sent.numerics as nx
from kw2sent.model import TemplateGenerator, encode_ids
from kw2sent.training import (
    PRESETS,
    TrainConfig,
    TrainingDiverged,
    load_config_file,
    make_batches,
    train,
    write_history,
)

from .conftest import MICRO, random_instance

SMALL = dict(MICRO, epochs=3, batch_size=4, dropout=0.2)


def dataset(n=12, seed=0):
    rng = np.random.default_rng(seed)
    return [encode_ids(*random_instance(rng)) for _ in range(n)]


def batch_rows(batch):
    """Each row of a batch as a hashable (keywords, template, reference) triple."""
    rows = []
    for i in range(len(batch)):
        n = batch.lengths[i]
        rows.append(
            (
                tuple(batch.keywords[i][batch.keyword_mask[i]]),
                tuple(batch.template[i, :n]),
                tuple(batch.reference[i, :n]),
            )
        )
    return rows


# -- configuration -------------------------------------------------------------------
def test_full_defaults():
    cfg = TrainConfig.preset("full")
    assert (cfg.lr, cfg.batch_size, cfg.epochs, cfg.dropout, cfg.beam_width) == (0.001, 256, 40, 0.5, 5)
    assert (cfg.word_dim, cfg.keyword_dim, cfg.decoder_dim, cfg.template_hidden) == (500, 500, 500, 100)
    assert cfg == TrainConfig()
    toy = TrainConfig.preset("toy")
    assert (toy.epochs, toy.batch_size, toy.word_dim) == (30, 32, 500)
    assert set(PRESETS) >= {"full", "toy"}


@pytest.mark.parametrize("bad", [dict(batch_size=0), dict(dropout=1.0), dict(word_dim=0), dict(budget_unit="hours")])
def test_config_validation(bad):
    with pytest.raises(ValueError):
        TrainConfig(**bad)


def test_config_file(tmp_path):
    (tmp_path / "c.txt").write_text("# toy run\npreset = toy\nlr = 0.01\nno_template = yes\n\nseed=7  # trailing\n")
    cfg = load_config_file(tmp_path / "c.txt")
    assert (cfg.lr, cfg.no_template, cfg.seed, cfg.epochs, cfg.batch_size) == (0.01, True, 7, 30, 32)
    (tmp_path / "bad.txt").write_text("lr 0.1\n")
    with pytest.raises(ValueError, match=":1:"):
        load_config_file(tmp_path / "bad.txt")
    (tmp_path / "bad2.txt").write_text("learning_rate = 0.1\n")
    with pytest.raises(ValueError, match="unknown"):
        load_config_file(tmp_path / "bad2.txt")


# -- batching -------------------------------------------------------------------------------
def test_batch_sizes():
    sizes = sorted(len(b) for b in make_batches(dataset(5), 2, seed=0))
    assert sizes == [1, 2, 2]


def test_batches_cover_dataset_exactly_once():
    data = dataset(23)
    expected = Counter((e.keywords, e.template, e.reference) for e in data)
    for epoch in range(3):
        got = Counter(r for b in make_batches(data, 4, seed=1, epoch=epoch) for r in batch_rows(b))
        assert got == expected


def test_batches_deterministic_and_epoch_dependent():
    data = dataset(23)
    a = [batch_rows(b) for b in make_batches(data, 4, seed=1, epoch=1)]
    b = [batch_rows(b) for b in make_batches(data, 4, seed=1, epoch=1)]
    c = [batch_rows(b) for b in make_batches(data, 4, seed=1, epoch=2)]
    assert a == b and a != c


def test_batches_are_bucketed_by_length():
    data = dataset(40)
    spread = [int(b.lengths.max() - b.lengths.min()) for b in make_batches(data, 8, seed=0)]
    assert max(spread) <= 2


def test_masks_delimit_real_data():
    for b in make_batches(dataset(10), 3, seed=0):
        assert not b.keywords[~b.keyword_mask].any()
        assert not b.template[~b.template_mask].any() and not b.reference[~b.template_mask].any()
        assert (b.template_mask.sum(axis=1) == b.lengths).all()


# -- the training loop ---------------------------------------------------------------------
def test_zero_epochs_returns_initial_parameters():
    cfg = TrainConfig(**dict(SMALL, epochs=0))
    res = train(dataset(), cfg, 20, 10)
    init = TemplateGenerator.initialize(cfg.model_config(), 20, 10, seed=cfg.seed)
    assert res.model.params.equal(init.params)
    assert res.history == [] and res.steps == 0


def test_training_is_deterministic():
    cfg = TrainConfig(**SMALL)
    a = train(dataset(), cfg, 20, 10)
    b = train(dataset(), cfg, 20, 10)
    assert a.model.params.equal(b.model.params)
    assert [r.train_loss for r in a.history] == [r.train_loss for r in b.history]
    c = train(dataset(), TrainConfig(**dict(SMALL, seed=1)), 20, 10)
    assert not a.model.params.equal(c.model.params)


def test_training_reduces_loss():
    cfg = TrainConfig(**dict(SMALL, epochs=80, lr=0.01, dropout=0.0))
    res = train(dataset(8), cfg, 20, 10)
    assert res.history[-1].train_loss < 0.6 * res.history[0].train_loss


def test_pad_embedding_stays_zero():
    res = train(dataset(), TrainConfig(**SMALL), 20, 10)
    assert not res.model.params["word_emb"].data[0].any()


def test_step_budget():
    cfg = TrainConfig(**dict(SMALL, epochs=4, budget_unit="steps"))
    res = train(dataset(12), cfg, 20, 10)
    assert res.steps == 4
    assert len(res.history) == 2  # 3 batches per epoch


def test_dev_eval_and_best_retention():
    scores = iter([10.0, 30.0, 20.0])
    seen = []

    def dev_eval(model):
        return next(scores), 50.0

    def on_checkpoint(tag, model):
        seen.append((tag, model.params.copy()))

    res = train(dataset(), TrainConfig(**SMALL), 20, 10, dev_eval=dev_eval, on_checkpoint=on_checkpoint)
    assert [r.dev_bleu for r in res.history] == [10.0, 30.0, 20.0]
    assert res.best_epoch == 2
    assert not res.best.params.equal(res.model.params)
    tags = [t for t, _ in seen]
    assert tags == ["best", "best", "last"]
    assert seen[1][1].equal(res.best.params) and seen[-1][1].equal(res.model.params)


def test_eval_every():
    calls = []
    train(dataset(), TrainConfig(**dict(SMALL, epochs=4, eval_every=2)), 20, 10, dev_eval=lambda m: calls.append(1) or (0.0, 0.0))
    assert len(calls) == 2


def test_nan_loss_aborts_with_last_good(monkeypatch):
    calls = {"n": 0}
    original = TemplateGenerator.forward_loss

    def poisoned(self, batch, train_mode=False, rng=None):
        calls["n"] += 1
        loss = original(self, batch, train_mode, rng)
        return nx.mul(loss, float("nan")) if calls["n"] == 5 else loss

    monkeypatch.setattr(TemplateGenerator, "forward_loss", poisoned)
    cfg = TrainConfig(**SMALL)  # 3 batches per epoch, so step 5 is in epoch 2
    with pytest.raises(TrainingDiverged) as exc:
        train(dataset(), cfg, 20, 10)
    err = exc.value
    assert len(err.history) == 1
    assert all(np.isfinite(p.data).all() for p in err.last_good.params.values())
    monkeypatch.setattr(TemplateGenerator, "forward_loss", original)
    one_epoch = train(dataset(), TrainConfig(**dict(SMALL, epochs=1)), 20, 10)
    assert err.last_good.params.equal(one_epoch.model.params)


def test_empty_dataset():
    with pytest.raises(ValueError):
        train([], TrainConfig(**SMALL), 20, 10)


def test_history_csv(tmp_path):
    res = train(dataset(), TrainConfig(**SMALL), 20, 10, dev_eval=lambda m: (12.5, 80.0))
    write_history(tmp_path / "h.csv", res.history)
    rows = list(csv.reader(open(tmp_path / "h.csv")))
    assert rows[0] == ["epoch", "train_loss", "dev_bleu", "dev_posmatch"]
    assert [r[0] for r in rows[1:]] == ["1", "2", "3"]
    assert rows[1][2:] == ["12.5000", "80.0000"]


def test_toy_loss_trend(trained):
    """Mean loss over consecutive 5-epoch windows keeps falling."""
    losses = [r.train_loss for r in trained.history]
    assert len(losses) == 30
    windows = [np.mean(losses[i : i + 5]) for i in range(0, 30, 5)]
    assert all(b < a for a, b in zip(windows, windows[1:])), windows
