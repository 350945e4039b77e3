"""A small probabilistic grammar used for desk-scale training and tests.

Every word carries exactly one Penn tag, so the lexicon doubles as a gold
tagger.  Agents, objects and places are disjoint noun classes with their
own adjectives, and each locative verb fixes its preposition; given the
keyword set and the tag template, the sentence is therefore determined.
"""
from __future__ import annotations

import random
from dataclasses import dataclass, field

from .tagger import TaggedSentence

AGENTS = {
    "dog": "dogs", "cat": "cats", "boy": "boys", "girl": "girls",
    "teacher": "teachers", "child": "children", "man": "men", "woman": "women",
}
OBJECTS = {
    "ball": "balls", "book": "books", "apple": "apples", "box": "boxes",
    "letter": "letters", "cake": "cakes", "story": "stories",
}
PLACES = ("park", "garden", "house", "school", "river", "forest")
AGENT_ADJ = ("big", "small", "old", "young", "happy", "tired")
OBJECT_ADJ = ("red", "blue", "green", "heavy", "new", "strange")
ADVERBS = ("quickly", "slowly", "quietly", "loudly", "happily")

# lemma -> (past, 3rd singular)
INTRANSITIVE = {
    "bark": ("barked", "barks"), "sleep": ("slept", "sleeps"), "run": ("ran", "runs"),
    "smile": ("smiled", "smiles"), "cry": ("cried", "cries"), "laugh": ("laughed", "laughs"),
}
TRANSITIVE = {
    "chase": ("chased", "chases"), "carry": ("carried", "carries"), "find": ("found", "finds"),
    "open": ("opened", "opens"), "drop": ("dropped", "drops"), "take": ("took", "takes"),
    "like": ("liked", "likes"),
}
LOCATIVE = {
    "sit": ("sat", "sits", "in"), "walk": ("walked", "walks", "to"), "play": ("played", "plays", "in"),
    "stay": ("stayed", "stays", "at"), "swim": ("swam", "swims", "in"),
}

RULES = (
    ("intransitive", 0.30),
    ("transitive", 0.35),
    ("locative", 0.20),
    ("coordinated", 0.15),
)


def _lexicon() -> dict[str, str]:
    lex: dict[str, str] = {"the": "DT", "and": "CC", ".": ".", "in": "IN", "to": "IN", "at": "IN"}
    for sg, pl in list(AGENTS.items()) + list(OBJECTS.items()):
        lex[sg] = "NN"
        lex[pl] = "NNS"
    for p in PLACES:
        lex[p] = "NN"
    for a in AGENT_ADJ + OBJECT_ADJ:
        lex[a] = "JJ"
    for a in ADVERBS:
        lex[a] = "RB"
    for table in (INTRANSITIVE, TRANSITIVE, LOCATIVE):
        for lemma, forms in table.items():
            lex[lemma] = "VBP"
            lex[forms[0]] = "VBD"
            lex[forms[1]] = "VBZ"
    return lex


LEXICON = _lexicon()


@dataclass
class ToyGrammar:
    adjective_prob: float = 0.4
    plural_prob: float = 0.4
    adverb_prob: float = 0.4
    past_prob: float = 0.5
    rules: tuple = field(default=RULES)

    def _np(self, rng: random.Random, nouns: dict[str, str], adjectives) -> tuple[list[str], bool]:
        words = ["the"]
        if rng.random() < self.adjective_prob:
            words.append(rng.choice(adjectives))
        sg = rng.choice(sorted(nouns))
        plural = rng.random() < self.plural_prob
        words.append(nouns[sg] if plural else sg)
        return words, plural

    @staticmethod
    def _verb(lemma: str, forms, past: bool, plural: bool) -> str:
        if past:
            return forms[0]
        return lemma if plural else forms[1]

    def _intransitive(self, rng, past, plural) -> list[str]:
        lemma = rng.choice(sorted(INTRANSITIVE))
        words = [self._verb(lemma, INTRANSITIVE[lemma], past, plural)]
        if rng.random() < self.adverb_prob:
            words.append(rng.choice(ADVERBS))
        return words

    def sample(self, rng: random.Random) -> TaggedSentence:
        names = [r for r, _ in self.rules]
        weights = [w for _, w in self.rules]
        rule = rng.choices(names, weights)[0]
        past = rng.random() < self.past_prob
        subject, plural = self._np(rng, AGENTS, AGENT_ADJ)
        words = list(subject)
        if rule == "intransitive":
            words += self._intransitive(rng, past, plural)
        elif rule in ("transitive", "coordinated"):
            lemma = rng.choice(sorted(TRANSITIVE))
            words.append(self._verb(lemma, TRANSITIVE[lemma], past, plural))
            obj, _ = self._np(rng, OBJECTS, OBJECT_ADJ)
            words += obj
            if rule == "coordinated":
                words.append("and")
                words += self._intransitive(rng, past, plural)
        else:
            lemma = rng.choice(sorted(LOCATIVE))
            past_form, sg_form, prep = LOCATIVE[lemma]
            words.append(self._verb(lemma, (past_form, sg_form), past, plural))
            words += [prep, "the", rng.choice(PLACES)]
        words.append(".")
        return TaggedSentence(words, [LEXICON[w] for w in words])

    def generate(self, n: int, seed: int = 0, exclude=(), unique: bool = True) -> list[TaggedSentence]:
        """``n`` sentences; with ``unique`` no sentence repeats or appears in ``exclude``."""
        rng = random.Random(seed)
        seen = {tuple(s.tokens) for s in exclude}
        out: list[TaggedSentence] = []
        attempts = 0
        while len(out) < n:
            attempts += 1
            if attempts > 1000 * max(n, 1):
                raise RuntimeError(f"grammar could not produce {n} distinct sentences")
            s = self.sample(rng)
            if unique:
                if s.tokens in seen:
                    continue
                seen.add(s.tokens)
            out.append(s)
        return out


class LexiconTagger:
    """Gold tagger for toy-grammar text: a direct lexicon lookup."""

    def __init__(self, lexicon: dict[str, str] | None = None, default: str = "NN"):
        self.lexicon = dict(LEXICON if lexicon is None else lexicon)
        self.default = default

    def tag(self, tokens) -> list[str]:
        if not tokens:
            from .tagger import EmptyInputError

            raise EmptyInputError("cannot tag an empty token list")
        return [self.lexicon.get(w.lower(), self.default) for w in tokens]
