"""Permutation groups given by generators: order, membership, coset keys.

Permutations are tuples ``p`` with ``p[x]`` the image of ``x`` (0-indexed) and
act on the right, so ``mul(p, q)`` applies ``p`` first.  Group orders are exact:
either a deterministic Schreier-Sims stabilizer chain, or, for large groups
that are transitive on their support, a certificate that the group contains
the alternating group on that support (Jordan: transitive + a p-cycle with
prime m/2 < p <= m-3 forces Alt(m) <= G).  Intransitive groups with one such
giant orbit bigger than the rest of the support reduce to a small group on the
remaining points plus a parity bit.
"""

from __future__ import annotations

import math
import random
from collections import deque
from contextlib import contextmanager
from contextvars import ContextVar
from functools import cached_property
from typing import Iterable, Iterator, Sequence

from .errors import CapExceeded

Perm = tuple[int, ...]

# optional limit on stabilizer-chain work, counted in permutation entries touched
_work: ContextVar[list[int] | None] = ContextVar("sgf_work", default=None)


@contextmanager
def work_budget(units: int):
    """Raise CapExceeded inside the block once chain work exceeds ``units``.

    Work is counted in operations, not time, so outcomes are reproducible.
    """
    token = _work.set([units, units])
    try:
        yield
    finally:
        _work.reset(token)


def _charge(units: int) -> None:
    w = _work.get()
    if w is not None:
        w[0] -= units
        if w[0] < 0:
            raise CapExceeded("group-order work budget", w[1])


def identity(n: int) -> Perm:
    return tuple(range(n))


def mul(p: Perm, q: Perm) -> Perm:
    """p then q."""
    return tuple(map(q.__getitem__, p))


def inv(p: Perm) -> Perm:
    out = [0] * len(p)
    for i, j in enumerate(p):
        out[j] = i
    return tuple(out)


def is_identity(p: Perm) -> bool:
    return all(i == j for i, j in enumerate(p))


def sign(p: Perm) -> int:
    seen = [False] * len(p)
    parity = 0
    for i in range(len(p)):
        if not seen[i]:
            j, length = i, 0
            while not seen[j]:
                seen[j] = True
                j = p[j]
                length += 1
            parity += length - 1
    return -1 if parity % 2 else 1


def cycles(p: Perm) -> list[list[int]]:
    seen = [False] * len(p)
    out = []
    for i in range(len(p)):
        if not seen[i] and p[i] != i:
            cyc = []
            j = i
            while not seen[j]:
                seen[j] = True
                cyc.append(j)
                j = p[j]
            out.append(cyc)
    return out


def order_of(p: Perm) -> int:
    return math.lcm(*(len(c) for c in cycles(p))) if not is_identity(p) else 1


def format_cycles(p: Perm, one_indexed: bool = True) -> str:
    cs = cycles(p)
    if not cs:
        return "()"
    off = 1 if one_indexed else 0
    return "".join("(" + " ".join(str(x + off) for x in c) + ")" for c in cs)


def _parity(seq: Sequence[int]) -> int:
    """Parity of the permutation sorting ``seq`` (distinct entries)."""
    order = sorted(range(len(seq)), key=seq.__getitem__)
    return 0 if sign(tuple(order)) == 1 else 1


def _is_prime(m: int) -> bool:
    return m >= 2 and all(m % d for d in range(2, math.isqrt(m) + 1))


class _Chain:
    """Stabilizer chain built by deterministic Schreier-Sims."""

    def __init__(self, gens: Sequence[Perm], n: int, budget: int = 4_000_000,
                 seeds: Iterable[Perm] | None = None):
        self.n = n
        self.budget = budget
        self._budget0 = budget
        self.base: list[int] = []
        self.gens: list[list[Perm]] = []
        self.trans: list[dict[int, Perm]] = []
        self.trans_inv: list[dict[int, Perm]] = []
        for g in gens:
            if not is_identity(g) and all(g[b] == b for b in self.base):
                self.base.append(next(x for x in range(n) if g[x] != x))
        for i in range(len(self.base)):
            self.gens.append([g for g in gens if not is_identity(g) and all(g[b] == b for b in self.base[:i])])
            self._orbit(i, fresh=True)
        if seeds is not None:
            self._presift(seeds)
        self._schreier_sims()

    def _presift(self, elements: Iterable[Perm], patience: int = 20) -> None:
        """Add residues of random group elements as strong generators.

        The deterministic pass afterwards is unchanged; a near-complete chain
        just makes most Schreier generators sift through on the first try.
        """
        quiet = 0
        for x in elements:
            h, j = self.sift(x)
            if is_identity(h):
                quiet += 1
                if quiet >= patience:
                    return
                continue
            quiet = 0
            if j == len(self.base):
                self.base.append(next(p for p in range(self.n) if h[p] != p))
                self.gens.append([])
                self.trans.append({})
                self.trans_inv.append({})
                self._orbit(j, fresh=True)
            # level 0 is generated by the input already; h lies in G
            for level in range(max(j, 1), 0, -1):
                self.gens[level].append(h)
                self._orbit(level, new_gen=h)

    def _orbit(self, i: int, fresh: bool = False, new_gen: Perm | None = None) -> None:
        """(Re)build or extend the transversal of level ``i``.

        With ``new_gen`` only the images under that generator of the known
        orbit are new starting points, so the scan is incremental.
        """
        b = self.base[i]
        e = identity(self.n)
        if fresh or i >= len(self.trans):
            t = {b: e}
            if i >= len(self.trans):
                self.trans.append(t)
                self.trans_inv.append({b: e})
            else:
                self.trans[i] = t
                self.trans_inv[i] = {b: e}
            new_gen = None
        t = self.trans[i]
        ti = self.trans_inv[i]
        queue: deque[int] = deque()
        if new_gen is None:
            queue.extend(t)
        else:
            for p in list(t):
                q = new_gen[p]
                if q not in t:
                    self._spend()
                    t[q] = mul(t[p], new_gen)
                    ti[q] = inv(t[q])
                    queue.append(q)
        while queue:
            p = queue.popleft()
            u = t[p]
            for s in self.gens[i]:
                q = s[p]
                if q not in t:
                    self._spend()
                    t[q] = mul(u, s)
                    ti[q] = inv(t[q])
                    queue.append(q)

    def _spend(self) -> None:
        # transversal entries are n-tuples; bound total memory and work
        self.budget -= self.n
        _charge(self.n)
        if self.budget < 0:
            raise CapExceeded("stabilizer chain", self._budget0)

    def sift(self, h: Perm, start: int = 0) -> tuple[Perm, int]:
        _charge(self.n * (len(self.base) - start))
        for level in range(start, len(self.base)):
            p = h[self.base[level]]
            if p not in self.trans[level]:
                return h, level
            h = mul(h, self.trans_inv[level][p])
        return h, len(self.base)

    def _schreier_sims(self) -> None:
        i = len(self.base) - 1
        checked: list[set] = [set() for _ in self.base]
        while i >= 0:
            restart = False
            for p, u in list(self.trans[i].items()):
                for si, s in enumerate(self.gens[i]):
                    if (p, si) in checked[i]:
                        continue
                    q = s[p]
                    h = mul(mul(u, s), self.trans_inv[i][q])
                    checked[i].add((p, si))
                    if is_identity(h):
                        continue
                    h, j = self.sift(h, i + 1)
                    if is_identity(h):
                        continue
                    if j == len(self.base):
                        self.base.append(next(x for x in range(self.n) if h[x] != x))
                        self.gens.append([])
                        checked.append(set())
                    for level in range(i + 1, j + 1):
                        self.gens[level].append(h)
                        self._orbit(level, new_gen=h)
                    i = j
                    restart = True
                    break
                if restart:
                    break
            if not restart:
                i -= 1

    @property
    def order(self) -> int:
        return math.prod(len(t) for t in self.trans)

    def contains(self, p: Perm) -> bool:
        h, _ = self.sift(p)
        return is_identity(h)

    def canonical(self, x: Perm) -> Perm:
        """Lexicographically least element (by base images) of the right coset G·x."""
        for level, b in enumerate(self.base):
            t = self.trans[level]
            delta = min(t, key=lambda d: x[d])
            x = mul(t[delta], x)
        return x


class PermGroup:
    """Group generated by permutations of {0..degree-1}."""

    def __init__(self, gens: Iterable[Perm], degree: int, seed: int = 0):
        self.degree = degree
        self.gens = tuple(g for g in (tuple(g) for g in gens) if not is_identity(g))
        self._seed = seed

    @cached_property
    def support(self) -> tuple[int, ...]:
        return tuple(x for x in range(self.degree) if any(g[x] != x for g in self.gens))

    @cached_property
    def orbits(self) -> list[list[int]]:
        seen: set[int] = set()
        out = []
        for x in self.support:
            if x in seen:
                continue
            orb = [x]
            seen.add(x)
            for y in orb:
                for g in self.gens:
                    if g[y] not in seen:
                        seen.add(g[y])
                        orb.append(g[y])
            out.append(sorted(orb))
        return out

    @property
    def order_upper_bound(self) -> int:
        """∏ |orbit|!, free to compute; the group lies in the product of orbit symmetric groups."""
        return math.prod(math.factorial(len(o)) for o in self.orbits)

    def orbit(self, x: int) -> list[int]:
        for orb in self.orbits:
            if x in orb:
                return orb
        return [x]

    def random_elements(self, count: int, seed: int | None = None) -> list[Perm]:
        """Product-replacement pseudo-random elements (deterministic for a seed)."""
        rng = random.Random(self._seed if seed is None else seed)
        if not self.gens:
            return [identity(self.degree)] * count
        state = list(self.gens)
        while len(state) < 10:
            state.extend(self.gens)
        state = state[:max(10, len(self.gens))]
        acc = identity(self.degree)

        def step() -> Perm:
            nonlocal acc
            i, j = rng.sample(range(len(state)), 2)
            other = state[j] if rng.random() < 0.5 else inv(state[j])
            state[i] = mul(state[i], other) if rng.random() < 0.5 else mul(other, state[i])
            acc = mul(acc, state[i])
            return acc

        for _ in range(60):
            step()
        return [step() for _ in range(count)]

    @cached_property
    def giant(self) -> tuple[tuple[int, ...], bool] | None:
        """(support, is_alternating) if certified to be Alt/Sym on its support."""
        orbs = self.orbits
        if len(orbs) != 1:
            return None
        m = len(orbs[0])
        if m < 8:
            return None
        lo = m // 2
        for x in self.random_elements(80):
            lengths = [len(c) for c in cycles(x)]
            if any(lo < L <= m - 3 and 2 * L > m and _is_prime(L) for L in lengths):
                is_alt = all(sign(g) == 1 for g in self.gens)
                return orbs[0], is_alt
        return None

    @cached_property
    def split(self) -> tuple[tuple[int, ...], PermGroup] | None:
        """(O, H) for an intransitive group with a giant orbit O larger than the rest.

        H is the image of the group under ψ: g ↦ (g on the other points, parity
        of g on O), parity realised by swapping two extra points.  The elements
        fixing the rest form a normal subgroup of Alt(O) or Sym(O) of index at
        most |H| < |Alt(O)|, so they contain Alt(O), and then |G| = |H|·|O|!/2.
        """
        orbs = self.orbits
        if len(orbs) < 2:
            return None
        big = max(orbs, key=len)
        m = len(big)
        if m < 8 or 2 * m <= len(self.support):
            return None
        inside = set(big)
        constituent = PermGroup(
            (tuple(g[x] if x in inside else x for x in range(self.degree)) for g in self.gens),
            self.degree, seed=self._seed)
        if constituent.giant is None:
            return None
        H = PermGroup((self._psi(g, big) for g in self.gens), self.degree + 2, seed=self._seed)
        return tuple(big), H

    def _psi(self, x: Perm, big: Sequence[int]) -> Perm:
        """x on the points off ``big``, ``big`` sent in order onto x(big), parity on two extra points."""
        image = [x[p] for p in big]
        target = sorted(image)
        out = list(x) + [self.degree, self.degree + 1]
        for p, y in zip(big, target):
            out[p] = y
        if _parity(image):
            out[self.degree], out[self.degree + 1] = self.degree + 1, self.degree
        return tuple(out)

    @cached_property
    def chain(self) -> _Chain:
        return _Chain(self.gens, self.degree, seeds=self._random_stream())

    def _random_stream(self) -> Iterator[Perm]:
        batch = 0
        while True:
            yield from self.random_elements(50, seed=self._seed + 7919 * batch)
            batch += 1
            if batch > 40:
                return

    @cached_property
    def order(self) -> int:
        if not self.gens:
            return 1
        g = self.giant
        if g is not None:
            m = len(g[0])
            return math.factorial(m) // (2 if g[1] else 1)
        sp = self.split
        if sp is not None:
            return sp[1].order * (math.factorial(len(sp[0])) // 2)
        return self.chain.order

    def contains(self, p: Perm) -> bool:
        g = self.giant
        if g is not None:
            supp = set(g[0])
            if any(p[x] != x for x in range(self.degree) if x not in supp):
                return False
            return not g[1] or sign(p) == 1
        if not self.gens:
            return is_identity(p)
        sp = self.split
        if sp is not None:
            big, H = sp
            return sorted(p[x] for x in big) == list(big) and H.contains(self._psi(p, big))
        return self.chain.contains(p)

    def coset_key(self, x: Perm):
        """Hashable invariant of the right coset G·x; equal iff the cosets are equal."""
        if not self.gens:
            return x
        g = self.giant
        if g is not None:
            supp = set(g[0])
            fixed = tuple(x[p] for p in range(self.degree) if p not in supp)
            return (fixed, sign(x)) if g[1] else fixed
        sp = self.split
        if sp is not None:
            big, H = sp
            return H.coset_key(self._psi(x, big))
        return self.chain.canonical(x)

    def elements(self, cap: int) -> set[Perm]:
        """Explicit element set by breadth-first closure."""
        e = identity(self.degree)
        seen = {e}
        queue = deque([e])
        while queue:
            x = queue.popleft()
            for s in self.gens:
                y = mul(x, s)
                if y not in seen:
                    seen.add(y)
                    if len(seen) > cap:
                        raise CapExceeded("subgroup closure", cap)
                    queue.append(y)
        return seen

    def is_transitive(self) -> bool:
        return len(self.orbits) == 1 and len(self.orbits[0]) == self.degree or self.degree == 1
