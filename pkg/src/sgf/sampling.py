"""Seeded random subgroups and covers for experiments and tests."""

from __future__ import annotations

import random

from .graph import StallingsGraph, from_generators, from_permutations
from .words import Word, random_word


def random_subgroup(k: int, rng: random.Random, max_gens: int = 3, max_length: int = 5,
                    infinite: bool = True) -> StallingsGraph:
    """Subgroup generated by 1..max_gens random reduced words of length 1..max_length.

    With ``infinite`` set, draws are repeated until the subgroup has infinite index.
    """
    while True:
        gens = [random_word(k, rng.randint(1, max_length), rng) for _ in range(rng.randint(1, max_gens))]
        H = from_generators(gens, k)
        if not infinite or not H.is_cover():
            return H


def random_cover(k: int, index: int, rng: random.Random) -> StallingsGraph:
    """Finite-index subgroup from k random permutations of {0..index-1}, made transitive."""
    while True:
        perms = []
        for _ in range(k):
            p = list(range(index))
            rng.shuffle(p)
            perms.append(tuple(p))
        U = from_permutations(perms)
        if U.n == index:
            return U


def random_words(k: int, count: int, max_length: int, rng: random.Random) -> list[Word]:
    return [random_word(k, rng.randint(0, max_length), rng) for _ in range(count)]


__all__ = ["random_cover", "random_subgroup", "random_words"]
