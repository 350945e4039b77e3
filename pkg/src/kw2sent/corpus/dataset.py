"""Training examples: extraction from tagged text and the JSON-lines format."""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator, Protocol, Sequence

from .lemmatizer import lemmatize
from .tagger import TaggedSentence
from .tags import CONTENT_UNIVERSAL, TagVocabulary

FIELDS = ("keywords", "keyword_tags", "template", "reference")
DEFAULT_MAX_LENGTH = 30


class Tagger(Protocol):
    def tag(self, tokens: Sequence[str]) -> list[str]: ...


class SkipExample(Exception):
    """Raised when a sentence yields no usable example; callers drop it."""


class DatasetFormatError(ValueError):
    def __init__(self, message: str, lineno: int | None = None, path=None):
        where = f"{path or '<data>'}:{lineno}: " if lineno is not None else ""
        super().__init__(where + message)
        self.lineno = lineno


@dataclass(frozen=True)
class TrainingExample:
    """One (keywords, keyword tags, template, reference) quadruple.

    Keywords are lemmas; ``keyword_tags`` holds unique universal tags;
    ``template`` and ``reference`` are aligned position by position.
    """

    keywords: tuple[str, ...]
    keyword_tags: tuple[str, ...]
    template: tuple[str, ...]
    reference: tuple[str, ...]

    def __post_init__(self):
        for name in FIELDS:
            value = getattr(self, name)
            if isinstance(value, str) or not all(isinstance(v, str) for v in value):
                raise DatasetFormatError(f"{name} must be a list of strings")
            object.__setattr__(self, name, tuple(value))
        self.validate()

    def validate(self) -> None:
        if not self.keywords:
            raise DatasetFormatError("example has no keywords")
        if not self.keyword_tags:
            raise DatasetFormatError("example has no keyword tags")
        if not self.template:
            raise DatasetFormatError("example has an empty template")
        if len(self.reference) != len(self.template):
            raise DatasetFormatError(
                f"reference length {len(self.reference)} differs from template length {len(self.template)}"
            )
        if len(set(self.keyword_tags)) != len(self.keyword_tags):
            raise DatasetFormatError(f"duplicate keyword tags {list(self.keyword_tags)}")

    def to_json(self) -> str:
        return json.dumps({name: list(getattr(self, name)) for name in FIELDS}, ensure_ascii=False)

    @classmethod
    def from_dict(cls, d: dict) -> "TrainingExample":
        missing = [f for f in FIELDS if f not in d]
        if missing:
            raise DatasetFormatError(f"missing field(s) {missing}")
        return cls(*(d[f] for f in FIELDS))

    def reversed_keywords(self) -> "TrainingExample":
        return TrainingExample(self.keywords[::-1], self.keyword_tags[::-1], self.template, self.reference)


def keyword_tag(word: str, tagger: Tagger, tags: TagVocabulary) -> str:
    """Universal tag of ``word`` tagged on its own, as a one-token sentence."""
    return tags.to_universal(tagger.tag([word])[0])


def extract_example(
    sentence: TaggedSentence,
    tagger: Tagger | None,
    tags: TagVocabulary,
    max_length: int | None = DEFAULT_MAX_LENGTH,
) -> TrainingExample:
    """Keywords are the lemmatized content words; their tags come from tagging
    each keyword independently.  Without a tagger, the in-sentence tag is used.
    """
    if max_length is not None and len(sentence) > max_length:
        raise SkipExample(f"sentence longer than {max_length} tokens")
    keywords: list[str] = []
    kw_tags: list[str] = []
    for word, fine in zip(sentence.tokens, sentence.fine_tags):
        universal = tags.to_universal(fine)
        if universal not in CONTENT_UNIVERSAL:
            continue
        lemma = lemmatize(word, universal, fine)
        keywords.append(lemma)
        kw_tags.append(keyword_tag(lemma, tagger, tags) if tagger is not None else universal)
    if not keywords:
        raise SkipExample("sentence has no content words")
    unique_tags = tuple(dict.fromkeys(kw_tags))
    return TrainingExample(
        tuple(keywords), unique_tags, tuple(tags.normalize(t) for t in sentence.fine_tags), tuple(sentence.tokens)
    )


def build_examples(
    sentences: Iterable[TaggedSentence],
    tagger: Tagger | None,
    tags: TagVocabulary,
    max_length: int | None = DEFAULT_MAX_LENGTH,
) -> tuple[list[TrainingExample], int]:
    """Returns the examples and the number of dropped sentences."""
    out, dropped = [], 0
    for s in sentences:
        try:
            out.append(extract_example(s, tagger, tags, max_length))
        except SkipExample:
            dropped += 1
    return out, dropped


def iter_dataset(path: str | Path) -> Iterator[TrainingExample]:
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DatasetFormatError(f"malformed JSON ({exc.msg})", lineno, path) from None
            if not isinstance(record, dict):
                raise DatasetFormatError("expected a JSON object", lineno, path)
            try:
                yield TrainingExample.from_dict(record)
            except DatasetFormatError as exc:
                raise DatasetFormatError(str(exc), lineno, path) from None


def load_dataset(path: str | Path) -> list[TrainingExample]:
    return list(iter_dataset(path))


def save_dataset(path: str | Path, examples: Iterable[TrainingExample]) -> int:
    n = 0
    with open(path, "w", encoding="utf-8") as fh:
        for ex in examples:
            fh.write(ex.to_json() + "\n")
            n += 1
    return n


@dataclass(frozen=True)
class CorpusStats:
    count: int
    avg_keywords: float
    avg_sentence_length: float
    empty: bool = False

    def to_dict(self) -> dict:
        return {
            "count": self.count,
            "avg_keywords": self.avg_keywords,
            "avg_sentence_length": self.avg_sentence_length,
            "empty": self.empty,
        }


def corpus_stats(examples: Iterable[TrainingExample]) -> CorpusStats:
    count = n_kw = n_tok = 0
    for ex in examples:
        count += 1
        n_kw += len(ex.keywords)
        n_tok += len(ex.reference)
    if count == 0:
        return CorpusStats(0, 0.0, 0.0, empty=True)
    return CorpusStats(count, n_kw / count, n_tok / count)
