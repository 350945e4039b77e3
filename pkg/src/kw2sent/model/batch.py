"""Id-level examples and padded batches."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..corpus.dataset import TrainingExample
from ..corpus.tags import TagVocabulary
from ..corpus.vocab import PAD, WordVocabulary


@dataclass(frozen=True)
class EncodedExample:
    """A training example as ids, keywords and keyword tags in canonical order."""

    keywords: tuple[int, ...]
    keyword_tags: tuple[int, ...]
    template: tuple[int, ...]
    reference: tuple[int, ...]

    def __post_init__(self):
        if not self.keywords or not self.keyword_tags or not self.template:
            raise ValueError("keywords, keyword tags and template must be non-empty")
        if PAD in self.keywords:
            raise ValueError("keyword ids must not be PAD")
        if self.reference and len(self.reference) != len(self.template):
            raise ValueError("reference and template lengths differ")


def canonical(ids: Sequence[int]) -> tuple[int, ...]:
    """The fixed keyword order every computation uses: ascending id."""
    return tuple(sorted(int(i) for i in ids))


def encode_ids(
    keywords: Sequence[int], keyword_tags: Sequence[int], template: Sequence[int], reference: Sequence[int] = ()
) -> EncodedExample:
    return EncodedExample(
        canonical(keywords), canonical(dict.fromkeys(keyword_tags)), tuple(template), tuple(reference)
    )


def encode_example(ex: TrainingExample, vocab: WordVocabulary, tags: TagVocabulary) -> EncodedExample:
    return encode_ids(vocab.ids(ex.keywords), tags.ids(ex.keyword_tags), tags.ids(ex.template), vocab.ids(ex.reference))


@dataclass
class Batch:
    keywords: np.ndarray  # [B, N]
    keyword_mask: np.ndarray
    keyword_tags: np.ndarray  # [B, U]
    keyword_tag_mask: np.ndarray
    template: np.ndarray  # [B, M]
    reference: np.ndarray  # [B, M]
    template_mask: np.ndarray
    lengths: np.ndarray  # [B]

    def __len__(self) -> int:
        return self.keywords.shape[0]


def _pad(rows: Sequence[Sequence[int]], width: int | None = None) -> tuple[np.ndarray, np.ndarray]:
    width = max(len(r) for r in rows) if width is None else width
    arr = np.zeros((len(rows), width), dtype=np.int64)
    mask = np.zeros((len(rows), width), dtype=bool)
    for i, r in enumerate(rows):
        arr[i, : len(r)] = r
        mask[i, : len(r)] = True
    return arr, mask


def pad_batch(examples: Sequence[EncodedExample], extra_template: int = 0) -> Batch:
    """Pad to the per-batch maxima; ``extra_template`` widens the template axis."""
    if not examples:
        raise ValueError("cannot build an empty batch")
    K, kmask = _pad([e.keywords for e in examples])
    KT, ktmask = _pad([e.keyword_tags for e in examples])
    M = max(len(e.template) for e in examples) + extra_template
    TT, tmask = _pad([e.template for e in examples], M)
    Y, _ = _pad([e.reference if e.reference else (PAD,) * len(e.template) for e in examples], M)
    lengths = np.array([len(e.template) for e in examples], dtype=np.int64)
    return Batch(K, kmask, KT, ktmask, TT, Y, tmask, lengths)
