"""Averaged-perceptron POS tagger (greedy left-to-right decoding)."""
from __future__ import annotations

import json
import random
from collections import Counter, defaultdict
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

START = ("-START-", "-START2-")
END = ("-END-", "-END2-")


class EmptyInputError(ValueError):
    pass


@dataclass(frozen=True)
class TaggedSentence:
    tokens: tuple[str, ...]
    fine_tags: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "tokens", tuple(self.tokens))
        object.__setattr__(self, "fine_tags", tuple(self.fine_tags))
        if len(self.tokens) != len(self.fine_tags):
            raise ValueError(f"{len(self.tokens)} tokens but {len(self.fine_tags)} tags")

    def __len__(self) -> int:
        return len(self.tokens)

    def to_line(self) -> str:
        return " ".join(f"{w}_{t}" for w, t in zip(self.tokens, self.fine_tags))

    @classmethod
    def from_line(cls, line: str) -> "TaggedSentence":
        tokens, tags = [], []
        for item in line.split():
            word, sep, tag = item.rpartition("_")
            if not sep or not word or not tag:
                raise ValueError(f"expected word_TAG, got {item!r}")
            tokens.append(word)
            tags.append(tag)
        return cls(tokens, tags)


def read_tagged_corpus(path: str | Path) -> list[TaggedSentence]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                out.append(TaggedSentence.from_line(line))
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: {exc}") from None
    return out


def write_tagged_corpus(path: str | Path, sentences: Iterable[TaggedSentence]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for s in sentences:
            fh.write(s.to_line() + "\n")


def _normalize(word: str) -> str:
    if word.isdigit() and len(word) == 4:
        return "!YEAR"
    if word[:1].isdigit():
        return "!DIGITS"
    return word.lower()


class PerceptronTagger:
    """Multiclass averaged perceptron over contextual word/tag features.

    Ties between class scores go to the more frequent training tag, so a
    model with all-zero weights predicts the single most frequent tag.
    """

    def __init__(self, weights: dict[str, dict[str, float]] | None = None, classes: Sequence[str] = ()):
        self.weights: dict[str, dict[str, float]] = weights or {}
        self.classes: list[str] = list(classes)

    # -- features ---------------------------------------------------------
    @staticmethod
    def features(i: int, context: Sequence[str], prev: str, prev2: str) -> list[str]:
        """Features for position ``i`` of ``context`` (already padded with START/END)."""
        w = context[i]
        return [
            "bias",
            "i word " + w,
            "i suffix1 " + w[-1:],
            "i suffix2 " + w[-2:],
            "i suffix3 " + w[-3:],
            "i pref1 " + w[:1],
            "i-1 tag " + prev,
            "i-2 tag " + prev2,
            "i-1 tag i-2 tag " + prev + " " + prev2,
            "i-1 tag i word " + prev + " " + w,
            "i-1 word " + context[i - 1],
            "i-1 suffix3 " + context[i - 1][-3:],
            "i-2 word " + context[i - 2],
            "i+1 word " + context[i + 1],
            "i+1 suffix3 " + context[i + 1][-3:],
            "i+2 word " + context[i + 2],
        ]

    def _predict(self, feats: list[str]) -> str:
        scores: dict[str, float] = defaultdict(float)
        for f in feats:
            row = self.weights.get(f)
            if row:
                for c, w in row.items():
                    scores[c] += w
        best = self.classes[0]
        best_score = scores.get(best, 0.0)
        for c in self.classes[1:]:
            s = scores.get(c, 0.0)
            if s > best_score:
                best, best_score = c, s
        return best

    def tag(self, tokens: Sequence[str]) -> list[str]:
        if not tokens:
            raise EmptyInputError("cannot tag an empty token list")
        if not self.classes:
            raise ValueError("tagger has no classes; train it first")
        context = list(START) + [_normalize(w) for w in tokens] + list(END)
        prev, prev2 = START
        tags = []
        for i in range(len(tokens)):
            t = self._predict(self.features(i + 2, context, prev, prev2))
            tags.append(t)
            prev2, prev = prev, t
        return tags

    # -- persistence ------------------------------------------------------
    def to_dict(self) -> dict:
        return {"classes": self.classes, "weights": self.weights}

    @classmethod
    def from_dict(cls, d: dict) -> "PerceptronTagger":
        return cls({f: dict(row) for f, row in d["weights"].items()}, d["classes"])

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), sort_keys=True), encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "PerceptronTagger":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def tag_sentence(tokens: Sequence[str], tagger: PerceptronTagger) -> TaggedSentence:
    tokens = list(tokens)
    return TaggedSentence(tokens, tagger.tag(tokens))


def isolated_word_instances(corpus: Sequence[TaggedSentence]) -> list[TaggedSentence]:
    """One single-token sentence per distinct word, tagged with its most frequent tag."""
    by_word: dict[str, Counter] = defaultdict(Counter)
    for s in corpus:
        for w, t in zip(s.tokens, s.fine_tags):
            by_word[w][t] += 1
    return [
        TaggedSentence([w], [min(c, key=lambda t: (-c[t], t))])
        for w, c in sorted(by_word.items())
    ]


def train_perceptron_tagger(
    corpus: Sequence[TaggedSentence], epochs: int = 10, seed: int = 0, isolated_words: bool = True
) -> PerceptronTagger:
    """Train on ``corpus`` for ``epochs`` passes, shuffling with ``seed`` between passes.

    With ``isolated_words`` every distinct word is also presented as a
    one-token sentence, so tagging a lone keyword relies on the word itself
    rather than on sentence-start context.
    """
    if not corpus:
        raise EmptyInputError("cannot train a tagger on an empty corpus")
    counts = Counter(t for s in corpus for t in s.fine_tags)
    classes = sorted(counts, key=lambda c: (-counts[c], c))
    if isolated_words:
        corpus = list(corpus) + isolated_word_instances(corpus)
    model = PerceptronTagger({}, classes)

    weights: dict[str, dict[str, float]] = defaultdict(dict)
    totals: dict[tuple[str, str], float] = defaultdict(float)
    stamps: dict[tuple[str, str], int] = defaultdict(int)
    model.weights = weights
    instances = 0

    def update(truth: str, guess: str, feats: list[str]) -> None:
        for f in feats:
            row = weights[f]
            for c, delta in ((truth, 1.0), (guess, -1.0)):
                key = (f, c)
                w = row.get(c, 0.0)
                totals[key] += (instances - stamps[key]) * w
                stamps[key] = instances
                row[c] = w + delta

    order = list(range(len(corpus)))
    rng = random.Random(seed)
    for _ in range(epochs):
        for idx in order:
            sent = corpus[idx]
            context = list(START) + [_normalize(w) for w in sent.tokens] + list(END)
            prev, prev2 = START
            for i, truth in enumerate(sent.fine_tags):
                feats = model.features(i + 2, context, prev, prev2)
                guess = model._predict(feats)
                if guess != truth:
                    update(truth, guess, feats)
                instances += 1
                prev2, prev = prev, guess
        rng.shuffle(order)

    averaged: dict[str, dict[str, float]] = {}
    for f, row in weights.items():
        new_row = {}
        for c, w in row.items():
            key = (f, c)
            total = totals[key] + (instances - stamps[key]) * w
            avg = round(total / instances, 3) if instances else 0.0
            if avg:
                new_row[c] = avg
        if new_row:
            averaged[f] = new_row
    return PerceptronTagger(averaged, classes)


def accuracy(tagger: PerceptronTagger, corpus: Sequence[TaggedSentence]) -> float:
    right = total = 0
    for s in corpus:
        for p, t in zip(tagger.tag(s.tokens), s.fine_tags):
            right += p == t
            total += 1
    return right / total if total else 0.0
