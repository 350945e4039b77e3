from __future__ import annotations

from collections import Counter
from pathlib import Path
from typing import Iterable, Sequence

PAD, UNK, BOS, EOS = 0, 1, 2, 3
RESERVED = ("<pad>", "<unk>", "<s>", "</s>")


class WordVocabulary:
    """Word <-> id map shared by the keyword encoder and the decoder."""

    def __init__(self, words: Iterable[str] = ()):
        self._words: list[str] = list(RESERVED)
        self._ids: dict[str, int] = {w: i for i, w in enumerate(RESERVED)}
        for w in words:
            self.add(w)

    def add(self, word: str) -> int:
        if word not in self._ids:
            self._ids[word] = len(self._words)
            self._words.append(word)
        return self._ids[word]

    def __len__(self) -> int:
        return len(self._words)

    def __contains__(self, word: str) -> bool:
        return word in self._ids

    def __eq__(self, other) -> bool:
        return isinstance(other, WordVocabulary) and self._words == other._words

    def id(self, word: str) -> int:
        return self._ids.get(word, UNK)

    def ids(self, words: Iterable[str]) -> list[int]:
        return [self._ids.get(w, UNK) for w in words]

    def word(self, idx: int) -> str:
        return self._words[idx]

    def words(self, ids: Iterable[int]) -> list[str]:
        return [self._words[i] for i in ids]

    @property
    def tokens(self) -> list[str]:
        """Non-reserved tokens in id order."""
        return self._words[len(RESERVED):]

    @classmethod
    def build(cls, sentences: Iterable[Sequence[str]], min_count: int = 1) -> "WordVocabulary":
        counts = Counter(w for s in sentences for w in s)
        # frequency order, ties alphabetical, for a stable id assignment
        ranked = sorted((w for w, c in counts.items() if c >= min_count), key=lambda w: (-counts[w], w))
        return cls(w for w in ranked if w not in RESERVED)

    def save(self, path: str | Path) -> None:
        Path(path).write_text("".join(w + "\n" for w in self.tokens), encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "WordVocabulary":
        lines = Path(path).read_text(encoding="utf-8").split("\n")
        if lines and lines[-1] == "":
            lines.pop()
        vocab = cls()
        for lineno, w in enumerate(lines, 1):
            if not w or w in vocab:
                raise ValueError(f"{path}:{lineno}: empty or duplicate vocabulary entry {w!r}")
            vocab.add(w)
        return vocab
