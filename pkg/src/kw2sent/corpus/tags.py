"""Fine-grained (Penn Treebank) and universal POS tag inventories.

The universal set is the 12-tag coarse inventory, with ``PUNCT`` standing
in for ``.`` so the fine and universal sets stay disjoint.  45 + 12 = 57.
"""
from __future__ import annotations

from typing import Iterable, Sequence

PENN_TAGS: tuple[str, ...] = (
    "CC", "CD", "DT", "EX", "FW", "IN", "JJ", "JJR", "JJS", "LS", "MD",
    "NN", "NNS", "NNP", "NNPS", "PDT", "POS", "PRP", "PRP$", "RB", "RBR",
    "RBS", "RP", "SYM", "TO", "UH", "VB", "VBD", "VBG", "VBN", "VBP", "VBZ",
    "WDT", "WP", "WP$", "WRB",
    "#", "$", "''", "(", ")", ",", ".", ":", "``",
)

UNIVERSAL_TAGS: tuple[str, ...] = (
    "NOUN", "VERB", "ADJ", "ADV", "PRON", "DET", "ADP", "NUM", "CONJ", "PRT", "PUNCT", "X",
)

CONTENT_UNIVERSAL = frozenset({"NOUN", "VERB", "ADJ", "ADV"})

FINE_TO_UNIVERSAL: dict[str, str] = {
    "CC": "CONJ", "CD": "NUM", "DT": "DET", "EX": "DET", "FW": "X", "IN": "ADP",
    "JJ": "ADJ", "JJR": "ADJ", "JJS": "ADJ", "LS": "X", "MD": "VERB",
    "NN": "NOUN", "NNS": "NOUN", "NNP": "NOUN", "NNPS": "NOUN", "PDT": "DET",
    "POS": "PRT", "PRP": "PRON", "PRP$": "PRON", "RB": "ADV", "RBR": "ADV",
    "RBS": "ADV", "RP": "PRT", "SYM": "X", "TO": "PRT", "UH": "X",
    "VB": "VERB", "VBD": "VERB", "VBG": "VERB", "VBN": "VERB", "VBP": "VERB",
    "VBZ": "VERB", "WDT": "DET", "WP": "PRON", "WP$": "PRON", "WRB": "ADV",
    "#": "PUNCT", "$": "PUNCT", "''": "PUNCT", "(": "PUNCT", ")": "PUNCT",
    ",": "PUNCT", ".": "PUNCT", ":": "PUNCT", "``": "PUNCT",
}

# spellings some taggers emit for the same Penn categories
_ALIASES = {"-LRB-": "(", "-RRB-": ")", "!": ".", "?": ".", '"': "''"}


class UnknownTagError(KeyError):
    def __init__(self, tag: str, known: Iterable[str]):
        self.tag = tag
        self.known = list(known)
        super().__init__(f"unknown tag {tag!r}; known tags: {' '.join(self.known)}")

    def __str__(self) -> str:
        return self.args[0]


class TagVocabulary:
    """Id map over the union of fine-grained and universal tags.

    Fine tags take ids ``0..len(fine)-1`` and universal tags follow, so the
    one-hot initialisation of the tag embedding keeps every tag orthogonal.
    """

    def __init__(
        self,
        fine_tags: Sequence[str] = PENN_TAGS,
        universal_tags: Sequence[str] = UNIVERSAL_TAGS,
        mapping: dict[str, str] | None = None,
    ):
        mapping = dict(FINE_TO_UNIVERSAL if mapping is None else mapping)
        self.fine_tags = tuple(dict.fromkeys(fine_tags))
        self.universal_tags = tuple(dict.fromkeys(universal_tags))
        overlap = set(self.fine_tags) & set(self.universal_tags)
        if overlap:
            raise ValueError(f"fine and universal tag sets overlap: {sorted(overlap)}")
        missing = [t for t in self.fine_tags if mapping.get(t) not in self.universal_tags]
        if missing:
            raise ValueError(f"no universal tag for fine tag(s) {missing}")
        self._mapping = {t: mapping[t] for t in self.fine_tags}
        self.tags = self.fine_tags + self.universal_tags
        self._ids = {t: i for i, t in enumerate(self.tags)}

    def __len__(self) -> int:
        return len(self.tags)

    def __contains__(self, tag: str) -> bool:
        return self.normalize(tag) in self._ids

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, TagVocabulary)
            and self.fine_tags == other.fine_tags
            and self.universal_tags == other.universal_tags
            and self._mapping == other._mapping
        )

    def normalize(self, tag: str) -> str:
        return _ALIASES.get(tag, tag)

    def id(self, tag: str) -> int:
        tag = self.normalize(tag)
        try:
            return self._ids[tag]
        except KeyError:
            raise UnknownTagError(tag, self.tags) from None

    def ids(self, tags: Iterable[str]) -> list[int]:
        return [self.id(t) for t in tags]

    def tag(self, idx: int) -> str:
        return self.tags[idx]

    def is_fine(self, tag: str) -> bool:
        return self.normalize(tag) in self._mapping

    def to_universal(self, tag: str) -> str:
        tag = self.normalize(tag)
        if tag in self._mapping:
            return self._mapping[tag]
        if tag in self.universal_tags:
            return tag
        raise UnknownTagError(tag, self.fine_tags)

    def is_content(self, tag: str) -> bool:
        return self.to_universal(tag) in CONTENT_UNIVERSAL

    def to_dict(self) -> dict:
        return {
            "fine_tags": list(self.fine_tags),
            "universal_tags": list(self.universal_tags),
            "mapping": dict(self._mapping),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TagVocabulary":
        return cls(d["fine_tags"], d["universal_tags"], d["mapping"])
