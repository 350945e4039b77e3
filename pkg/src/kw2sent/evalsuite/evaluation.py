"""Exact/Similar evaluation runs and the keyword-reversal protocol."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

from ..corpus.dataset import TrainingExample
from ..corpus.tags import TagVocabulary
from ..corpus.vocab import WordVocabulary
from ..model.generator import TemplateGenerator
from . import metrics

SCENARIOS = ("exact", "similar")
DECODE_MODES = ("greedy", "beam")
METRICS = ("bleu", "meteor_lite", "rouge_l", "posmatch")


@dataclass
class ExampleRecord:
    keywords: list[str]
    keyword_tags: list[str]
    template: list[str]
    reference: list[str]
    prediction: list[str]
    posmatch: float | None

    def to_dict(self) -> dict:
        return dict(self.__dict__)


@dataclass
class EvalReport:
    scenario: str
    decode_mode: str
    bleu: float
    meteor_lite: float
    rouge_l: float
    posmatch: float | None  # None when not applicable (no-template model)
    n_examples: int
    records: list[ExampleRecord] = field(default_factory=list, repr=False)

    def metric(self, name: str) -> float | None:
        return getattr(self, name)

    def to_dict(self) -> dict:
        return {
            "scenario": self.scenario,
            "decode_mode": self.decode_mode,
            "bleu": self.bleu,
            "meteor_lite": self.meteor_lite,
            "rouge_l": self.rouge_l,
            "posmatch": self.posmatch,
            "n_examples": self.n_examples,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    def write_audit(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            for r in self.records:
                fh.write(json.dumps(r.to_dict(), ensure_ascii=False) + "\n")


def similar_templates(
    examples: Sequence[TrainingExample], pool: Sequence[TrainingExample]
) -> list[tuple[str, ...]]:
    """For each example, the template of the most similar *other* pool sentence.

    Similarity is the LCS-based F-measure between tag sequences; ties go to
    the earliest pool entry.  A pool sentence identical to the reference is
    never chosen, so the exemplar is always a different sentence.
    """
    if not pool:
        raise ValueError("exemplar pool is empty")
    out = []
    for ex in examples:
        best, best_score = None, -1.0
        for cand in pool:
            if cand.reference == ex.reference:
                continue
            score = metrics.rouge_l_sentence(cand.template, ex.template, beta=1.0)
            if score > best_score:
                best, best_score = cand.template, score
        if best is None:
            raise ValueError("exemplar pool has no sentence different from the reference")
        out.append(tuple(best))
    return out


def evaluate(
    model: TemplateGenerator,
    examples: Sequence[TrainingExample],
    vocab: WordVocabulary,
    tags: TagVocabulary,
    tagger,
    scenario: str = "exact",
    decode_mode: str = "greedy",
    beam_width: int = 5,
    exemplar_templates: Sequence[Sequence[str]] | None = None,
    max_length: int | None = None,
) -> EvalReport:
    """Generate for every example and score the corpus.

    ``exact`` uses each reference's own tag sequence as the template;
    ``similar`` uses ``exemplar_templates`` (parallel to ``examples``).
    POSMatch compares the re-tagged prediction with the template actually
    used, and is reported as ``None`` for a no-template model.
    """
    if scenario not in SCENARIOS:
        raise ValueError(f"unknown scenario {scenario!r}; choose from {SCENARIOS}")
    if decode_mode not in DECODE_MODES:
        raise ValueError(f"unknown decode mode {decode_mode!r}; choose from {DECODE_MODES}")
    if not examples:
        raise ValueError("cannot evaluate an empty dataset")
    if scenario == "similar":
        if exemplar_templates is None or len(exemplar_templates) != len(examples):
            raise ValueError("the similar scenario needs one exemplar template per example")
        templates = [tuple(t) for t in exemplar_templates]
    else:
        templates = [ex.template for ex in examples]
    width = beam_width if decode_mode == "beam" else 1

    records = []
    for ex, tmpl in zip(examples, templates):
        K = vocab.ids(ex.keywords)
        KT = tags.ids(ex.keyword_tags)
        TT = tags.ids(tmpl)
        ids, _ = model.generate(K, KT, TT, beam=width, max_length=max_length)
        pred = vocab.words(ids)
        records.append(
            ExampleRecord(list(ex.keywords), list(ex.keyword_tags), list(tmpl), list(ex.reference), pred, None)
        )

    preds = [r.prediction for r in records]
    refs = [r.reference for r in records]
    pos = None
    if not model.no_template:
        for r in records:
            retagged = [tags.normalize(t) for t in tagger.tag(r.prediction)]
            r.posmatch = 100.0 * metrics.posmatch_sentence(retagged, r.template)
        pos = metrics.posmatch(preds, [r.template for r in records], tagger, normalize=tags.normalize)
    return EvalReport(
        scenario,
        decode_mode,
        metrics.bleu(preds, refs),
        metrics.meteor_lite(preds, refs),
        metrics.rouge_l(preds, refs),
        pos,
        len(records),
        records,
    )


@dataclass
class ReversalReport:
    original: EvalReport
    reversed: EvalReport

    @property
    def deltas(self) -> dict[str, float | None]:
        out = {}
        for name in METRICS:
            a, b = self.original.metric(name), self.reversed.metric(name)
            out[name] = None if a is None or b is None else b - a
        return out

    def to_dict(self) -> dict:
        return {"original": self.original.to_dict(), "reversed": self.reversed.to_dict(), "deltas": self.deltas}


def reversal_robustness(
    model: TemplateGenerator,
    examples: Sequence[TrainingExample],
    vocab: WordVocabulary,
    tags: TagVocabulary,
    tagger,
    scenario: str = "exact",
    decode_mode: str = "greedy",
    **kwargs,
) -> ReversalReport:
    """Evaluate on the data as given and with every keyword list reversed."""
    original = evaluate(model, examples, vocab, tags, tagger, scenario, decode_mode, **kwargs)
    flipped = [ex.reversed_keywords() for ex in examples]
    return ReversalReport(original, evaluate(model, flipped, vocab, tags, tagger, scenario, decode_mode, **kwargs))
