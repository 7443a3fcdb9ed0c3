"""Reduced words in the free group F_k.

Letters are signed generator indices: ``+i`` is x_i and ``-i`` its inverse,
``1 <= i <= k``.  In text form x_1..x_26 are ``a``..``z`` and uppercase
letters are inverses.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Iterator, Sequence, Union

from .errors import AlphabetError, InvalidInput

ALPHABET = "abcdefghijklmnopqrstuvwxyz"


def letter_char(x: int) -> str:
    c = ALPHABET[abs(x) - 1]
    return c if x > 0 else c.upper()


def char_letter(c: str) -> int:
    i = ALPHABET.find(c.lower())
    if i < 0:
        raise AlphabetError(f"not a generator letter: {c!r}")
    return i + 1 if c.islower() else -(i + 1)


@dataclass(frozen=True)
class FreeGroupContext:
    """The ambient free group F_k.  Its rank gradient is exactly k - 1."""

    rank_k: int

    def __post_init__(self):
        if not 2 <= self.rank_k <= 26:
            raise InvalidInput(f"rank must be in 2..26, got {self.rank_k}")

    @property
    def rank_gradient(self) -> Fraction:
        return Fraction(self.rank_k - 1)

    def letters(self) -> list[int]:
        """All 2k signed letters in the fixed order a, A, b, B, ..."""
        return [s * i for i in range(1, self.rank_k + 1) for s in (1, -1)]


RawWord = Union[str, Sequence[int], Sequence[tuple]]


def _normalize(raw: RawWord) -> list[int]:
    if isinstance(raw, Word):
        return list(raw.letters)
    if isinstance(raw, str):
        return [char_letter(c) for c in raw]
    out = []
    for x in raw:
        if isinstance(x, tuple):
            gen, sgn = x
            if sgn not in (1, -1):
                raise AlphabetError(f"sign must be +1 or -1, got {sgn}")
            out.append(gen * sgn)
        else:
            out.append(int(x))
    return out


def reduce(raw: RawWord, k: int | None = None) -> "Word":
    """Freely reduce ``raw``.  Raises :class:`AlphabetError` for letters outside 1..k."""
    stack: list[int] = []
    for x in _normalize(raw):
        if x == 0 or (k is not None and abs(x) > k) or abs(x) > 26:
            raise AlphabetError(f"letter {x} outside alphabet 1..{k or 26}")
        if stack and stack[-1] == -x:
            stack.pop()
        else:
            stack.append(x)
    return Word(tuple(stack))


@dataclass(frozen=True, order=True)
class Word:
    letters: tuple[int, ...] = ()

    def __post_init__(self):
        for u, v in zip(self.letters, self.letters[1:]):
            if u == -v:
                raise InvalidInput(f"word is not reduced: {self.letters}")

    @classmethod
    def parse(cls, text: str, k: int | None = None) -> "Word":
        return reduce(text.strip(), k)

    def __str__(self) -> str:
        return "".join(letter_char(x) for x in self.letters)

    def __repr__(self) -> str:
        return f"Word({str(self)!r})"

    def __len__(self) -> int:
        return len(self.letters)

    def __iter__(self) -> Iterator[int]:
        return iter(self.letters)

    def __mul__(self, other: "Word") -> "Word":
        return reduce(self.letters + other.letters)

    def inverse(self) -> "Word":
        return Word(tuple(-x for x in reversed(self.letters)))

    def __pow__(self, n: int) -> "Word":
        base = self if n >= 0 else self.inverse()
        return reduce(base.letters * abs(n))

    def max_generator(self) -> int:
        return max((abs(x) for x in self.letters), default=0)

    def check_alphabet(self, k: int) -> None:
        if self.max_generator() > k:
            raise AlphabetError(f"word {self} uses a generator beyond rank {k}")


IDENTITY = Word()


def product(words: Iterable[Word]) -> Word:
    out: tuple[int, ...] = ()
    for w in words:
        out += w.letters
    return reduce(out)


def reduced_words(k: int, max_length: int, min_length: int = 0) -> Iterator[Word]:
    """All reduced words of length in [min_length, max_length], shortlex order."""
    letters = FreeGroupContext(k).letters() if k >= 2 else [1, -1]
    layer: list[tuple[int, ...]] = [()]
    for length in range(max_length + 1):
        if length >= min_length:
            for t in layer:
                yield Word(t)
        if length == max_length:
            break
        layer = [t + (x,) for t in layer for x in letters if not t or t[-1] != -x]


def random_word(k: int, length: int, rng: random.Random) -> Word:
    """Uniform random reduced word of exactly ``length`` letters."""
    out: list[int] = []
    for _ in range(length):
        choices = [s * i for i in range(1, k + 1) for s in (1, -1) if not out or out[-1] != -s * i]
        out.append(rng.choice(choices))
    return Word(tuple(out))


def count_reduced(k: int, length: int) -> int:
    return 1 if length == 0 else 2 * k * (2 * k - 1) ** (length - 1)


__all__ = [
    "ALPHABET",
    "FreeGroupContext",
    "IDENTITY",
    "Word",
    "count_reduced",
    "product",
    "random_word",
    "reduce",
    "reduced_words",
    "letter_char",
    "char_letter",
]
