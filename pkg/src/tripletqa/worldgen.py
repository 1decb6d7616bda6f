"""Synthetic token world shared by the fixture datasets and the
paraphrase corpus.

Generated words are pairwise at least edit distance 2 apart (and kept
away from the fixed template words), so fuzzy anchor matching never
confuses two distinct entities.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .textops import edit_distance

_CONSONANTS = "bdfgklmnprstvz"
_VOWELS = "aeiou"

TEMPLATE_WORDS = (
    "what", "which", "one", "who", "thing", "tell", "name", "part",
    "where", "is", "located", "in", "county", "city", "st", "johns", "mi",
    "clinton", "a", "of",
)

WORLD_SEED = 7


class WordPool:
    """Deterministic supply of distinct synthetic words."""

    def __init__(self, rng: np.random.Generator, reserved=TEMPLATE_WORDS):
        self.rng = rng
        self.words: list[str] = []
        self._taken = list(reserved)

    def _candidate(self) -> str:
        n = int(self.rng.integers(3, 5))
        return "".join(
            _CONSONANTS[self.rng.integers(len(_CONSONANTS))]
            + _VOWELS[self.rng.integers(len(_VOWELS))]
            for _ in range(n)
        )

    def fresh(self) -> str:
        while True:
            word = self._candidate()
            if all(edit_distance(word, other) >= 2 for other in self._taken):
                self._taken.append(word)
                self.words.append(word)
                return word

    def batch(self, n: int) -> list[str]:
        return [self.fresh() for _ in range(n)]


@dataclass(frozen=True)
class Meaning:
    """One (subject, relation, object) proposition a question can ask about."""

    subject: tuple[str, str]
    relation: tuple[str, ...]
    obj: str
    include_object: bool = True


CANONICAL = 0
VARIANT = 1


class QuestionWorld:
    """Fixed pools of subjects/relations/objects plus question templates."""

    def __init__(self, seed: int = WORLD_SEED, n_subjects: int = 10,
                 n_relations: int = 6, n_objects: int = 14):
        rng = np.random.default_rng(seed)
        pool = WordPool(rng)
        self.subjects = [(pool.fresh(), pool.fresh()) for _ in range(n_subjects)]
        self.relations = [(pool.fresh(),) for _ in range(n_relations)]
        self.objects = pool.batch(n_objects)
        self.pool = pool

    def random_meaning(self, rng: np.random.Generator, include_object: bool = True) -> Meaning:
        return Meaning(
            subject=self.subjects[int(rng.integers(len(self.subjects)))],
            relation=self.relations[int(rng.integers(len(self.relations)))],
            obj=self.objects[int(rng.integers(len(self.objects)))],
            include_object=include_object,
        )

    def render(self, meaning: Meaning, form: int) -> list[str]:
        s1, s2 = meaning.subject
        rel = list(meaning.relation)
        if meaning.include_object:
            if form == CANONICAL:
                return ["what", *rel, s1, s2, meaning.obj]
            return ["which", "one", s1, s2, *rel, meaning.obj]
        if form == CANONICAL:
            return ["who", *rel, s1, s2]
        return ["name", "who", s1, s2, *rel]

    def meaning_key(self, meaning: Meaning) -> tuple:
        return (meaning.subject, meaning.relation,
                meaning.obj if meaning.include_object else None)
