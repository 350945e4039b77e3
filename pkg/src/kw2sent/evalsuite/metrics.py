"""Corpus-level text metrics on tokenized sentences.

All scores are percentages in [0, 100].  Each candidate has exactly one
reference.
"""
from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from typing import Sequence

from nltk.stem.porter import PorterStemmer

from ..numerics import kernels

Sentence = Sequence[str]

ROUGE_BETA = 1.2
METEOR_ALPHA = 0.9
METEOR_BETA = 3.0
METEOR_GAMMA = 0.5

_stemmer = PorterStemmer()


class MetricInputError(ValueError):
    pass


def _check(candidates: Sequence[Sentence], references: Sequence[Sentence]) -> None:
    if len(candidates) != len(references):
        raise MetricInputError(f"{len(candidates)} candidates but {len(references)} references")
    if not candidates:
        raise MetricInputError("cannot score an empty corpus")


def _ngrams(tokens: Sentence, n: int) -> Counter:
    return Counter(tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1))


def bleu(candidates: Sequence[Sentence], references: Sequence[Sentence], max_n: int = 4) -> float:
    """Corpus BLEU-4 without smoothing: 0 whenever some n-gram order has no match."""
    _check(candidates, references)
    matches = [0] * max_n
    totals = [0] * max_n
    cand_len = ref_len = 0
    for c, r in zip(candidates, references):
        cand_len += len(c)
        ref_len += len(r)
        for n in range(1, max_n + 1):
            cn, rn = _ngrams(c, n), _ngrams(r, n)
            matches[n - 1] += sum(min(k, rn[g]) for g, k in cn.items())
            totals[n - 1] += max(len(c) - n + 1, 0)
    if min(matches) == 0:
        return 0.0
    log_p = sum(math.log(m / t) for m, t in zip(matches, totals)) / max_n
    bp = 1.0 if cand_len > ref_len else math.exp(1.0 - ref_len / cand_len)
    return 100.0 * bp * math.exp(log_p)


def _ids(a: Sentence, b: Sentence) -> tuple[list[int], list[int]]:
    table: dict[str, int] = {}
    return [table.setdefault(w, len(table)) for w in a], [table.setdefault(w, len(table)) for w in b]


def lcs(a: Sentence, b: Sentence) -> int:
    x, y = _ids(a, b)
    return int(kernels.lcs_length(x, y))


def rouge_l_sentence(candidate: Sentence, reference: Sentence, beta: float = ROUGE_BETA) -> float:
    """F = (1 + β²)·P·R / (R + β²·P) from the LCS; β = 1.2 weights recall."""
    if not candidate or not reference:
        return 0.0
    k = lcs(candidate, reference)
    if k == 0:
        return 0.0
    p = k / len(candidate)
    r = k / len(reference)
    b2 = beta * beta
    return (1.0 + b2) * p * r / (r + b2 * p)


def rouge_l(candidates: Sequence[Sentence], references: Sequence[Sentence], beta: float = ROUGE_BETA) -> float:
    """Mean per-sentence ROUGE-L F-measure."""
    _check(candidates, references)
    return 100.0 * sum(rouge_l_sentence(c, r, beta) for c, r in zip(candidates, references)) / len(candidates)


@dataclass(frozen=True)
class MeteorStats:
    matches: int
    chunks: int
    cand_len: int
    ref_len: int

    def __add__(self, other: "MeteorStats") -> "MeteorStats":
        return MeteorStats(
            self.matches + other.matches,
            self.chunks + other.chunks,
            self.cand_len + other.cand_len,
            self.ref_len + other.ref_len,
        )


def stem(word: str) -> str:
    return _stemmer.stem(word.lower())


def align(candidate: Sentence, reference: Sentence) -> list[tuple[int, int]]:
    """Greedy one-to-one alignment: exact matches first, then Porter stems.

    Each stage scans the candidate left to right and takes the leftmost
    free reference position.  Returns (candidate, reference) index pairs
    sorted by candidate position.
    """
    used_c: set[int] = set()
    used_r: set[int] = set()
    pairs = []
    for key in (lambda w: w.lower(), stem):
        ref_keys = [key(w) for w in reference]
        for i, w in enumerate(candidate):
            if i in used_c:
                continue
            kw = key(w)
            for j, rk in enumerate(ref_keys):
                if j not in used_r and rk == kw:
                    pairs.append((i, j))
                    used_c.add(i)
                    used_r.add(j)
                    break
    return sorted(pairs)


def count_chunks(pairs: Sequence[tuple[int, int]]) -> int:
    """Runs of alignments adjacent in both candidate and reference."""
    chunks = 0
    prev = None
    for i, j in pairs:
        if prev is None or i != prev[0] + 1 or j != prev[1] + 1:
            chunks += 1
        prev = (i, j)
    return chunks


def meteor_stats(candidate: Sentence, reference: Sentence) -> MeteorStats:
    pairs = align(candidate, reference)
    return MeteorStats(len(pairs), count_chunks(pairs), len(candidate), len(reference))


def meteor_from_stats(s: MeteorStats) -> float:
    if s.matches == 0:
        return 0.0
    p = s.matches / s.cand_len
    r = s.matches / s.ref_len
    fmean = p * r / (METEOR_ALPHA * p + (1.0 - METEOR_ALPHA) * r)
    penalty = METEOR_GAMMA * (s.chunks / s.matches) ** METEOR_BETA
    return fmean * (1.0 - penalty)


def meteor_lite(candidates: Sequence[Sentence], references: Sequence[Sentence]) -> float:
    """Exact + stem matching METEOR (no synonyms), statistics summed over the corpus."""
    _check(candidates, references)
    total = MeteorStats(0, 0, 0, 0)
    for c, r in zip(candidates, references):
        total = total + meteor_stats(c, r)
    return 100.0 * meteor_from_stats(total)


def posmatch_sentence(predicted_tags: Sequence[str], template: Sequence[str], binary: bool = False) -> float:
    if len(predicted_tags) != len(template):
        raise MetricInputError(f"prediction has {len(predicted_tags)} tags but the template has {len(template)}")
    if not template:
        raise MetricInputError("empty template")
    hits = sum(p == t for p, t in zip(predicted_tags, template))
    if binary:
        return float(hits == len(template))
    return hits / len(template)


def posmatch(
    predictions: Sequence[Sentence],
    templates: Sequence[Sequence[str]],
    tagger,
    binary: bool = False,
    normalize=None,
) -> float:
    """Re-tag each prediction and compare with its template.

    Default: per-position agreement averaged over examples.  ``binary``
    counts only whole-sequence matches.  ``normalize`` maps tagger output
    onto the template's tag spelling.
    """
    if len(predictions) != len(templates):
        raise MetricInputError(f"{len(predictions)} predictions but {len(templates)} templates")
    if not predictions:
        raise MetricInputError("cannot score an empty corpus")
    total = 0.0
    for pred, tmpl in zip(predictions, templates):
        if len(pred) != len(tmpl):
            raise MetricInputError(f"prediction length {len(pred)} differs from template length {len(tmpl)}")
        tags = tagger.tag(list(pred))
        if normalize is not None:
            tags = [normalize(t) for t in tags]
        total += posmatch_sentence(tags, tmpl, binary)
    return 100.0 * total / len(predictions)
