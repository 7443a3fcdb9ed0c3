"""Stallings graphs of finitely generated subgroups of F_k.

A graph is stored as one partial injection per generator: ``out[i-1][v]`` is
the endpoint of the x_i-edge leaving ``v`` (``-1`` if absent).  The base vertex
is always ``0`` and every graph built here is folded, core relative to the
base, and numbered canonically, so equal subgroups compare equal.
"""

from __future__ import annotations

import math
import random
from collections import deque
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Sequence

from .errors import AlreadySmaller, AvoidInSubgroup, InvalidInput
from .words import Word, char_letter, letter_char, reduce

INFINITE = math.inf

Edge = tuple[int, int, int]  # (source, generator 1..k, target)


# --------------------------------------------------------------------------
# folding


def _fold(n: int, edges: Iterable[Edge], rng: random.Random | None = None):
    """Fold a labelled graph on vertices 0..n-1.

    Returns ``(find, out)`` where ``out[root]`` maps generator -> root target.
    With ``rng`` set, edge insertion and merge order are shuffled; the folded
    result is the same up to renumbering.
    """
    parent = list(range(n))
    out: list[dict[int, int]] = [{} for _ in range(n)]
    inn: list[dict[int, int]] = [{} for _ in range(n)]
    pending: list[tuple[int, int]] = []

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    def add(u: int, i: int, v: int) -> None:
        u, v = find(u), find(v)
        w = out[u].get(i)
        if w is not None:
            if w != v:
                pending.append((v, w))
            return
        s = inn[v].get(i)
        if s is not None:
            pending.append((u, s))
            return
        out[u][i] = v
        inn[v][i] = u

    def merge(a: int, b: int) -> None:
        x, y = find(a), find(b)
        if x == y:
            return
        if len(out[x]) + len(inn[x]) < len(out[y]) + len(inn[y]):
            x, y = y, x
        y_out = list(out[y].items())
        for i, t in y_out:
            del out[y][i]
            del inn[t][i]
        y_in = list(inn[y].items())
        for i, s in y_in:
            del inn[y][i]
            del out[s][i]
        parent[y] = x
        for i, t in y_out:
            add(x, i, t)
        for i, s in y_in:
            add(s, i, x)

    edges = list(edges)
    if rng is not None:
        rng.shuffle(edges)
    for u, i, v in edges:
        add(u, i, v)
        while pending:
            j = rng.randrange(len(pending)) if rng is not None else len(pending) - 1
            pending[j], pending[-1] = pending[-1], pending[j]
            merge(*pending.pop())
    return find, out


def _canonical(k: int, n: int, edges: Iterable[Edge], base: int = 0,
               rng: random.Random | None = None, core: bool = True) -> "StallingsGraph":
    find, out = _fold(n, edges, rng)
    root = find(base)
    inn: dict[int, dict[int, int]] = {}
    for u in range(n):
        if find(u) == u:
            for i, v in out[u].items():
                inn.setdefault(v, {})[i] = u
    # restrict to the component of the base
    seen = {root}
    queue = deque([root])
    while queue:
        u = queue.popleft()
        for v in list(out[u].values()) + list(inn.get(u, {}).values()):
            if v not in seen:
                seen.add(v)
                queue.append(v)
    outs = {u: dict(out[u]) for u in seen}
    inns = {u: dict(inn.get(u, {})) for u in seen}

    if core:
        def degree(u: int) -> int:
            return len(outs[u]) + len(inns[u])

        stack = [u for u in seen if u != root and degree(u) <= 1]
        while stack:
            u = stack.pop()
            if u not in outs or degree(u) > 1:
                continue
            nbrs = []
            for i, v in outs[u].items():
                del inns[v][i]
                nbrs.append(v)
            for i, s in inns[u].items():
                del outs[s][i]
                nbrs.append(s)
            del outs[u], inns[u]
            for v in nbrs:
                if v != root and v in outs and degree(v) <= 1:
                    stack.append(v)

    # canonical BFS renumbering: gen 1 out, gen 1 in, gen 2 out, ...
    new_id = {root: 0}
    order = [root]
    queue = deque([root])
    while queue:
        u = queue.popleft()
        for i in range(1, k + 1):
            for v in (outs[u].get(i), inns[u].get(i)):
                if v is not None and v not in new_id:
                    new_id[v] = len(order)
                    order.append(v)
                    queue.append(v)
    m = len(order)
    rows = [[-1] * m for _ in range(k)]
    for u in order:
        for i, v in outs[u].items():
            rows[i - 1][new_id[u]] = new_id[v]
    return StallingsGraph(k, m, tuple(tuple(r) for r in rows))


def _word_path(start: int, word: Word, end: int | None, next_vertex: int) -> tuple[list[Edge], int]:
    """Edges of a path reading ``word`` from ``start``; fresh vertices from ``next_vertex``.

    If ``end`` is given the path closes there.  Returns the edges and the next
    free vertex id.
    """
    edges: list[Edge] = []
    cur = start
    letters = word.letters
    for pos, x in enumerate(letters):
        if pos == len(letters) - 1 and end is not None:
            nxt = end
        else:
            nxt = next_vertex
            next_vertex += 1
        edges.append((cur, x, nxt) if x > 0 else (nxt, -x, cur))
        cur = nxt
    return edges, next_vertex


# --------------------------------------------------------------------------
# the graph type


@dataclass(frozen=True)
class StallingsGraph:
    k: int
    n: int
    out: tuple[tuple[int, ...], ...]

    @property
    def base(self) -> int:
        return 0

    @cached_property
    def inn(self) -> tuple[tuple[int, ...], ...]:
        rows = []
        for row in self.out:
            r = [-1] * self.n
            for v, w in enumerate(row):
                if w >= 0:
                    r[w] = v
            rows.append(tuple(r))
        return tuple(rows)

    def step(self, v: int, x: int) -> int:
        """Follow the signed letter ``x`` from ``v``; ``-1`` if the edge is absent."""
        return self.out[x - 1][v] if x > 0 else self.inn[-x - 1][v]

    def trace(self, w: Word, start: int = 0) -> tuple[int, int]:
        """Read ``w`` from ``start``.  Returns (vertex reached, letters consumed)."""
        v = start
        for pos, x in enumerate(w.letters):
            nxt = self.step(v, x)
            if nxt < 0:
                return v, pos
            v = nxt
        return v, len(w)

    def edges(self) -> list[Edge]:
        return sorted((v, i + 1, w) for i, row in enumerate(self.out) for v, w in enumerate(row) if w >= 0)

    @property
    def num_edges(self) -> int:
        return sum(1 for row in self.out for w in row if w >= 0)

    @property
    def rank(self) -> int:
        return self.num_edges - self.n + 1

    @property
    def index(self) -> int | float:
        return self.n if self.is_cover() else INFINITE

    def is_cover(self) -> bool:
        return all(w >= 0 for row in self.out for w in row)

    def deficiency(self) -> tuple[int, str, str] | None:
        """First (vertex, generator letter, direction) missing an edge, or None for covers."""
        for v in range(self.n):
            for i in range(self.k):
                if self.out[i][v] < 0:
                    return (v, letter_char(i + 1), "out")
                if self.inn[i][v] < 0:
                    return (v, letter_char(i + 1), "in")
        return None

    @cached_property
    def tree_words(self) -> tuple[Word, ...]:
        """Word labelling the BFS spanning-tree path from the base to each vertex."""
        words: list[Word | None] = [None] * self.n
        words[0] = Word()
        queue = deque([0])
        while queue:
            u = queue.popleft()
            for i in range(1, self.k + 1):
                for x in (i, -i):
                    v = self.step(u, x)
                    if v >= 0 and words[v] is None:
                        words[v] = reduce(words[u].letters + (x,))
                        queue.append(v)
        return tuple(words)  # type: ignore[arg-type]

    @cached_property
    def basis(self) -> tuple[Word, ...]:
        """Free basis read off the non-tree edges of the BFS spanning tree."""
        tw = self.tree_words
        tree = set()
        for v in range(1, self.n):
            # the tree edge into v is the last letter of its tree word
            x = tw[v].letters[-1]
            u = self.step(v, -x)
            tree.add((u, x, v) if x > 0 else (v, -x, u))
        gens = []
        for u, i, v in self.edges():
            if (u, i, v) not in tree:
                gens.append(reduce(tw[u].letters + (i,) + tw[v].inverse().letters))
        return tuple(gens)

    # ----- serialization

    def to_json(self) -> dict:
        return {
            "base": 0,
            "vertices": self.n,
            "edges": [[u, letter_char(i), v] for u, i, v in self.edges()],
        }

    @classmethod
    def from_json(cls, data: dict, k: int) -> "StallingsGraph":
        try:
            n = int(data["vertices"])
            base = int(data.get("base", 0))
            edges = [(int(u), char_letter(c), int(v)) for u, c, v in data["edges"]]
        except (KeyError, TypeError, ValueError) as exc:
            raise InvalidInput(f"malformed graph JSON: {exc}") from exc
        for u, i, v in edges:
            if i < 1 or i > k or not (0 <= u < n and 0 <= v < n):
                raise InvalidInput(f"edge {(u, i, v)} out of range")
        return _canonical(k, n, edges, base)

    def to_dot(self, name: str = "H") -> str:
        lines = [f"digraph {name} {{"]
        for v in range(self.n):
            shape = "doublecircle" if v == 0 else "circle"
            lines.append(f"  v{v} [shape={shape}];")
        for u, i, v in self.edges():
            lines.append(f'  v{u} -> v{v} [label="{letter_char(i)}"];')
        lines.append("}")
        return "\n".join(lines) + "\n"

    def __repr__(self) -> str:
        return f"StallingsGraph(k={self.k}, n={self.n}, basis={[str(w) for w in self.basis]})"


# --------------------------------------------------------------------------
# constructors and the subgroup calculus


def from_generators(gens: Sequence[Word | str], k: int, rng: random.Random | None = None) -> StallingsGraph:
    """Canonical Stallings graph of the subgroup generated by ``gens``."""
    edges: list[Edge] = []
    nxt = 1
    for g in gens:
        w = reduce(g, k) if not isinstance(g, Word) else g
        w.check_alphabet(k)
        if not w.letters:
            continue
        path, nxt = _word_path(0, w, 0, nxt)
        edges.extend(path)
    return _canonical(k, nxt, edges, 0, rng)


def from_permutations(perms: Sequence[Sequence[int]]) -> StallingsGraph:
    """Cover graph of the point stabilizer of 0 (0-indexed permutations, right action)."""
    k = len(perms)
    n = len(perms[0]) if perms else 1
    edges = [(v, i + 1, p[v]) for i, p in enumerate(perms) for v in range(n)]
    return _canonical(k, n, edges, 0)


def whole_group(k: int) -> StallingsGraph:
    return StallingsGraph(k, 1, tuple((0,) for _ in range(k)))


def trivial_group(k: int) -> StallingsGraph:
    return StallingsGraph(k, 1, tuple((-1,) for _ in range(k)))


def contains(H: StallingsGraph, w: Word) -> bool:
    v, used = H.trace(w)
    return used == len(w) and v == 0


def rank(H: StallingsGraph) -> int:
    return H.rank


def index(H: StallingsGraph) -> int | float:
    return H.index


def intersect(A: StallingsGraph, B: StallingsGraph) -> StallingsGraph:
    """A ∩ B via the fiber product based at (base_A, base_B)."""
    if A.k != B.k:
        raise InvalidInput("subgroups live in free groups of different rank")
    ids = {(0, 0): 0}
    queue = deque([(0, 0)])
    edges: list[Edge] = []
    while queue:
        pair = queue.popleft()
        u = ids[pair]
        for i in range(1, A.k + 1):
            for x in (i, -i):
                a, b = A.step(pair[0], x), B.step(pair[1], x)
                if a < 0 or b < 0:
                    continue
                if (a, b) not in ids:
                    ids[(a, b)] = len(ids)
                    queue.append((a, b))
                if x > 0:
                    edges.append((u, i, ids[(a, b)]))
    return _canonical(A.k, len(ids), edges, 0)


def join(A: StallingsGraph, B: StallingsGraph) -> StallingsGraph:
    """⟨A ∪ B⟩: wedge at the bases, fold, core."""
    if A.k != B.k:
        raise InvalidInput("subgroups live in free groups of different rank")

    def rb(v: int) -> int:
        return 0 if v == 0 else A.n + v - 1

    edges = A.edges() + [(rb(u), i, rb(v)) for u, i, v in B.edges()]
    return _canonical(A.k, A.n + B.n - 1, edges, 0)


def conjugate(H: StallingsGraph, g: Word) -> StallingsGraph:
    """g⁻¹Hg: hang a path reading g⁻¹ from a new base onto the old base."""
    if not g.letters:
        return H
    new_base = H.n
    path, nxt = _word_path(new_base, g.inverse(), 0, H.n + 1)
    return _canonical(H.k, nxt, H.edges() + path, new_base)


def relative_index(L: StallingsGraph, R: StallingsGraph) -> int | float:
    """[L : L ∩ R], finite exactly when the fiber product covers L's graph."""
    ids = {(0, 0)}
    queue = deque([(0, 0)])
    while queue:
        u, v = queue.popleft()
        for i in range(1, L.k + 1):
            for x in (i, -i):
                a = L.step(u, x)
                if a < 0:
                    continue
                b = R.step(v, x)
                if b < 0:
                    return INFINITE
                if (a, b) not in ids:
                    ids.add((a, b))
                    queue.append((a, b))
    return sum(1 for u, _ in ids if u == 0)


def orbit_transversal(cover: StallingsGraph, gens: Sequence[Word], start: int = 0) -> dict[int, tuple[int, ...]]:
    """Orbit of ``start`` in a cover under the subgroup generated by ``gens``.

    Returns point -> tuple of generator indices whose product moves ``start``
    there (shortest, first-found in BFS order).  ``cover`` must be complete.
    """
    if not cover.is_cover():
        raise InvalidInput("orbit computation needs a finite cover")
    paths: dict[int, tuple[int, ...]] = {start: ()}
    queue = deque([start])
    while queue:
        p = queue.popleft()
        for j, w in enumerate(gens):
            q, _ = cover.trace(w, p)
            if q not in paths:
                paths[q] = paths[p] + (j,)
                queue.append(q)
    return paths


def complete(H: StallingsGraph, target_index: int, avoid: Word | None = None, seed: int = 0) -> StallingsGraph:
    """Finite-index U ⊇ H with [F:U] ≥ target_index, excluding ``avoid`` if given.

    Pads the partial permutations of H's graph with fresh vertices and closes
    them to full permutations, drawing every choice from ``seed``.
    """
    if avoid is not None and contains(H, avoid):
        raise AvoidInSubgroup(f"{avoid} lies in the subgroup; no separating cover exists")
    if H.is_cover():
        if H.n < target_index:
            raise AlreadySmaller(f"subgroup has finite index {H.n} < {target_index}")
        return H
    rng = random.Random(seed)
    k = H.k
    rows = [list(r) for r in H.out]
    n = H.n

    def fresh() -> int:
        nonlocal n
        for r in rows:
            r.append(-1)
        n += 1
        return n - 1

    if avoid is not None:
        v, used = H.trace(avoid)
        for x in avoid.letters[used:]:
            f = fresh()
            if x > 0:
                rows[x - 1][v] = f
            else:
                rows[-x - 1][f] = v
            v = f
    connector = next(i for i in range(k) if any(w < 0 for w in rows[i]))
    while n < target_index:
        fresh()

    def chains(row: list[int]) -> list[list[int]]:
        has_in = [False] * n
        for w in row:
            if w >= 0:
                has_in[w] = True
        out = []
        for s in range(n):
            if not has_in[s]:
                ch = [s]
                while row[ch[-1]] >= 0:
                    ch.append(row[ch[-1]])
                out.append(ch)
        return out

    all_chains = [chains(r) for r in rows]

    def connected(perms: list[list[int]]) -> bool:
        seen = {0}
        stack = [0]
        while stack:
            u = stack.pop()
            for p in perms:
                if p[u] not in seen:
                    seen.add(p[u])
                    stack.append(p[u])
        return len(seen) == n

    for _ in range(64):
        perms = []
        for row, chs in zip(rows, all_chains):
            p = list(row)
            ends = [c[-1] for c in chs]
            starts = [c[0] for c in chs]
            rng.shuffle(starts)
            for e, s in zip(ends, starts):
                p[e] = s
            perms.append(p)
        if connected(perms):
            break
    else:
        perms = []
        for i, (row, chs) in enumerate(zip(rows, all_chains)):
            p = list(row)
            chs = list(chs)
            rng.shuffle(chs)
            if i == connector:
                for j, c in enumerate(chs):
                    p[c[-1]] = chs[(j + 1) % len(chs)][0]
            else:
                starts = [c[0] for c in chs]
                rng.shuffle(starts)
                for c, s in zip(chs, starts):
                    p[c[-1]] = s
            perms.append(p)
    return from_permutations(perms)


__all__ = [
    "INFINITE",
    "StallingsGraph",
    "complete",
    "conjugate",
    "contains",
    "from_generators",
    "from_permutations",
    "index",
    "intersect",
    "join",
    "orbit_transversal",
    "rank",
    "relative_index",
    "trivial_group",
    "whole_group",
]
