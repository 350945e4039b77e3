"""Batched teacher-forced training with Adam, clipping and best-dev retention."""
from __future__ import annotations

import csv
import logging
import math
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Callable, Iterator, Sequence

import numpy as np

from . import numerics as nx
from .corpus.vocab import PAD
from .model import (
    Batch,
    EncodedExample,
    ModelConfig,
    ModelParams,
    TemplateGenerator,
    load_checkpoint,
    pad_batch,
    save_checkpoint,
)

log = logging.getLogger(__name__)

__all__ = [
    "TrainConfig",
    "TrainResult",
    "EpochRecord",
    "TrainingDiverged",
    "PRESETS",
    "make_batches",
    "train",
    "load_config_file",
    "write_history",
    "save_checkpoint",
    "load_checkpoint",
]


@dataclass
class TrainConfig:
    """Training hyperparameters; ``preset("full")`` gives the full-size setup."""

    lr: float = 0.001
    batch_size: int = 256
    epochs: int = 40
    # "epochs" or "steps": how to read ``epochs`` (optimizer steps if "steps")
    budget_unit: str = "epochs"
    dropout: float = 0.5
    word_dim: int = 500
    keyword_dim: int = 500
    template_hidden: int = 100
    decoder_dim: int = 500
    attention_dim: int = 100
    seed: int = 0
    eval_every: int = 1
    beam_width: int = 5
    no_template: bool = False
    clip_norm: float = 5.0
    max_length: int = 30

    def __post_init__(self):
        if self.batch_size < 1:
            raise ValueError("batch_size must be at least 1")
        if self.epochs < 0:
            raise ValueError("epochs must be non-negative")
        if self.budget_unit not in ("epochs", "steps"):
            raise ValueError("budget_unit must be 'epochs' or 'steps'")
        if self.eval_every < 0:
            raise ValueError("eval_every must be non-negative")
        self.model_config()  # validates dims and dropout

    def model_config(self) -> ModelConfig:
        return ModelConfig(
            word_dim=self.word_dim,
            keyword_dim=self.keyword_dim,
            template_hidden=self.template_hidden,
            decoder_dim=self.decoder_dim,
            attention_dim=self.attention_dim,
            dropout=self.dropout,
            no_template=self.no_template,
            max_length=self.max_length,
        )

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def preset(cls, name: str, **overrides) -> "TrainConfig":
        try:
            base = PRESETS[name]
        except KeyError:
            raise ValueError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}") from None
        return cls(**{**base, **overrides})

    @classmethod
    def from_mapping(cls, values: dict) -> "TrainConfig":
        """Build from string values (config files, CLI overrides)."""
        types = {f.name: f.type for f in fields(cls)}
        kwargs = {}
        for key, raw in values.items():
            if key == "preset":
                continue
            if key not in types:
                raise ValueError(f"unknown training option {key!r}")
            kwargs[key] = _coerce(raw, types[key])
        preset = values.get("preset")
        return cls.preset(preset, **kwargs) if preset else cls(**kwargs)


PRESETS = {
    "full": {},
    # the desk-scale toy setup: full dims, 30 epochs, batch 32
    "toy": {"epochs": 30, "batch_size": 32},
}


def _coerce(raw, typ: str):
    if not isinstance(raw, str):
        return raw
    if typ == "bool":
        low = raw.strip().lower()
        if low in ("1", "true", "yes", "on"):
            return True
        if low in ("0", "false", "no", "off"):
            return False
        raise ValueError(f"not a boolean: {raw!r}")
    if typ == "int":
        return int(raw)
    if typ == "float":
        return float(raw)
    return raw.strip()


def load_config_file(path: str | Path) -> TrainConfig:
    """Flat ``key = value`` file; ``#`` starts a comment."""
    values = {}
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ValueError(f"{path}:{lineno}: expected key = value")
        values[key.strip()] = value.strip()
    return TrainConfig.from_mapping(values)


def make_batches(
    examples: Sequence[EncodedExample], batch_size: int, seed: int, epoch: int = 0
) -> Iterator[Batch]:
    """Shuffle, bucket by template length, pad per batch, shuffle batch order.

    Every example lands in exactly one batch; the composition depends only
    on (seed, epoch).
    """
    if batch_size < 1:
        raise ValueError("batch_size must be at least 1")
    rng = np.random.default_rng([seed, epoch])
    order = rng.permutation(len(examples))
    lengths = np.array([len(examples[i].template) for i in order])
    order = order[np.argsort(lengths, kind="stable")]
    chunks = [order[i : i + batch_size] for i in range(0, len(order), batch_size)]
    for k in rng.permutation(len(chunks)):
        yield pad_batch([examples[i] for i in chunks[k]])


@dataclass
class EpochRecord:
    epoch: int
    train_loss: float
    dev_bleu: float | None = None
    dev_posmatch: float | None = None


@dataclass
class TrainResult:
    model: TemplateGenerator
    best: TemplateGenerator
    history: list[EpochRecord] = field(default_factory=list)
    best_epoch: int | None = None
    steps: int = 0


class TrainingDiverged(ArithmeticError):
    """Loss or parameters became non-finite.  ``last_good`` holds the
    parameters from the start of the epoch in which that happened."""

    def __init__(self, message: str, last_good: TemplateGenerator, history: list[EpochRecord]):
        super().__init__(message)
        self.last_good = last_good
        self.history = history


DevEval = Callable[[TemplateGenerator], tuple[float, float]]
Checkpointer = Callable[[str, TemplateGenerator], None]


def _clone(model: TemplateGenerator) -> TemplateGenerator:
    return TemplateGenerator(model.params.copy(), model.config, model.vocab_size, model.tag_size)


def train(
    examples: Sequence[EncodedExample],
    config: TrainConfig,
    vocab_size: int,
    tag_size: int,
    dev_eval: DevEval | None = None,
    on_checkpoint: Checkpointer | None = None,
    model: TemplateGenerator | None = None,
    dtype=np.float32,
) -> TrainResult:
    """Train a generator.

    ``dev_eval(model) -> (bleu, posmatch)`` runs every ``eval_every`` epochs;
    the best-BLEU parameters are kept alongside the final ones.
    ``on_checkpoint(tag, model)`` is called with ``"best"`` and ``"last"``.
    """
    if not examples:
        raise ValueError("cannot train on an empty dataset")
    if model is None:
        model = TemplateGenerator.initialize(config.model_config(), vocab_size, tag_size, config.seed, dtype)
    params: ModelParams = model.params
    opt = nx.Adam(params, lr=config.lr)
    rng = np.random.default_rng([config.seed, 1])
    history: list[EpochRecord] = []
    best, best_epoch, best_score = _clone(model), None, -math.inf
    step_budget = config.epochs if config.budget_unit == "steps" else None
    n_epochs = config.epochs if step_budget is None else math.ceil(config.epochs / max(1, math.ceil(len(examples) / config.batch_size)))
    steps = 0

    for epoch in range(1, n_epochs + 1):
        total, count = 0.0, 0
        last_good = _clone(model)
        for batch in make_batches(examples, config.batch_size, config.seed, epoch):
            if step_budget is not None and steps >= step_budget:
                break
            with nx.Tape():
                loss = model.forward_loss(batch, train_mode=True, rng=rng)
                value = loss.item()
                if not math.isfinite(value):
                    raise TrainingDiverged(f"non-finite loss at epoch {epoch}, step {steps + 1}", last_good, history)
                nx.backward(loss)
            # parameters that took no part in this batch still need a gradient entry
            for p in params.values():
                if p.grad is None:
                    p.grad = np.zeros_like(p.data)
            params["word_emb"].grad[PAD] = 0.0
            nx.clip_grad_norm(params, config.clip_norm)
            opt.step()
            if not all(np.isfinite(p.data).all() for p in params.values()):
                raise TrainingDiverged(f"non-finite parameters at epoch {epoch}", last_good, history)
            steps += 1
            total += value * len(batch)
            count += len(batch)
        record = EpochRecord(epoch, total / count if count else float("nan"))
        if dev_eval is not None and config.eval_every and epoch % config.eval_every == 0:
            record.dev_bleu, record.dev_posmatch = dev_eval(model)
            if record.dev_bleu > best_score:
                best_score, best_epoch, best = record.dev_bleu, epoch, _clone(model)
                if on_checkpoint is not None:
                    on_checkpoint("best", best)
        history.append(record)
        log.info("epoch %d loss %.4f dev_bleu %s", epoch, record.train_loss, record.dev_bleu)

    if best_epoch is None:
        best = _clone(model)
    if on_checkpoint is not None:
        if best_epoch is None:
            on_checkpoint("best", best)
        on_checkpoint("last", model)
    return TrainResult(model, best, history, best_epoch, steps)


def write_history(path: str | Path, history: Sequence[EpochRecord]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["epoch", "train_loss", "dev_bleu", "dev_posmatch"])
        for r in history:
            w.writerow([r.epoch, f"{r.train_loss:.6f}", _fmt(r.dev_bleu), _fmt(r.dev_posmatch)])


def _fmt(x: float | None) -> str:
    return "" if x is None else f"{x:.4f}"
