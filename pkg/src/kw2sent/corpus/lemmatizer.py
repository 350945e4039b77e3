"""Rule-based English lemmatizer: exception lexicon first, then suffix rules.

The rules are applied repeatedly until the word stops changing.  Every rule
shortens the word, so this terminates, and the result is a fixed point,
which makes :func:`lemmatize` idempotent by construction.
"""
from __future__ import annotations

import re
from functools import lru_cache
from importlib import resources

VOWELS = set("aeiou")
_VOWEL_GROUP = re.compile(r"[aeiouy]+")


@lru_cache(maxsize=1)
def exceptions() -> dict[tuple[str, str], str]:
    table: dict[tuple[str, str], str] = {}
    text = resources.files("kw2sent.corpus").joinpath("data/lemma_exceptions.tsv").read_text(encoding="utf-8")
    for line in text.splitlines():
        if not line or line.startswith("#"):
            continue
        word, tag, lemma = line.split("\t")
        key = (word, tag)
        # a word that is itself a lemma keeps mapping to itself ("lay" vs "lie")
        if key in table and table[key] == word:
            continue
        table[key] = lemma
    return table


def _has_vowel(s: str) -> bool:
    return any(c in VOWELS for c in s) or (len(s) > 1 and "y" in s[1:])


def _syllables(s: str) -> int:
    return len(_VOWEL_GROUP.findall(s[1:] if s.startswith("y") else s))


def _is_cvc(s: str) -> bool:
    if len(s) < 3:
        return False
    c1, v, c2 = s[-3], s[-2], s[-1]
    return c1 not in VOWELS and v in VOWELS and c2 not in VOWELS and c2 not in "wxy"


def _restore(stem: str) -> str:
    """Undo consonant doubling or restore a dropped final ``e``."""
    if len(stem) >= 3 and stem[-1] == stem[-2] and stem[-1] not in VOWELS and stem[-1] not in "lsz":
        return stem[:-1]
    if _is_cvc(stem) and _syllables(stem) == 1:
        return stem + "e"
    return stem


def _strip_inflection(stem: str) -> str | None:
    if len(stem) < 2 or not _has_vowel(stem):
        return None
    return _restore(stem)


def _plural(word: str) -> str:
    if word.endswith("ies") and len(word) > 4:
        return word[:-3] + "y"
    if word.endswith(("sses", "xes", "ches", "shes", "zzes")):
        return word[:-2]
    if word.endswith("s") and not word.endswith(("ss", "us", "is")) and len(word) > 3:
        return word[:-1]
    return word


def _verb(word: str) -> str:
    if word.endswith("ied") and len(word) > 4:
        return word[:-3] + "y"
    if word.endswith("eed") and len(word) > 4:
        return word[:-1]
    if word.endswith("ed") and len(word) > 3:
        stem = _strip_inflection(word[:-2])
        return stem if stem is not None else word
    if word.endswith("ing") and len(word) > 4:
        stem = _strip_inflection(word[:-3])
        return stem if stem is not None else word
    return _plural(word)


def _comparative(word: str) -> str:
    for suffix in ("iest", "ier"):
        if word.endswith(suffix) and len(word) > len(suffix) + 2:
            return word[: -len(suffix)] + "y"
    for suffix in ("est", "er"):
        if word.endswith(suffix) and len(word) > len(suffix) + 2:
            stem = word[: -len(suffix)]
            if not _has_vowel(stem):
                return word
            if len(stem) >= 3 and stem[-1] == stem[-2] and stem[-1] not in VOWELS and stem[-1] not in "lsz":
                return stem[:-1]
            return stem
    return word


_RULES = {"NOUN": _plural, "VERB": _verb, "ADJ": _comparative, "ADV": _comparative}
_COMPARATIVE_TAGS = {"JJR", "JJS", "RBR", "RBS"}


def _step(word: str, tag: str, fine_tag: str | None) -> str:
    table = exceptions()
    if (word, tag) in table:
        return table[(word, tag)]
    if tag in ("ADJ", "ADV") and fine_tag is not None and fine_tag not in _COMPARATIVE_TAGS:
        return word
    rule = _RULES.get(tag)
    return rule(word) if rule else word


def lemmatize(word: str, universal_tag: str, fine_tag: str | None = None) -> str:
    """Lowercased lemma of ``word`` read as part of speech ``universal_tag``.

    ``fine_tag``, when known, stops comparative stripping on plain
    adjectives and adverbs (``JJ``/``RB``).  Unknown patterns pass through.
    """
    if not word:
        raise ValueError("lemmatize: empty word")
    current = word.lower()
    seen = {current}
    while True:
        nxt = _step(current, universal_tag, fine_tag)
        if nxt == current or nxt in seen:
            return current
        seen.add(nxt)
        current = nxt
