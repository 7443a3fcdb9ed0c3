"""Finite quotients of F_k as permutation representations, and measure bounds.

A quotient φ: F_k → K is given by one permutation per generator; K is the
group they generate.  The profinite measure of a set S is bounded above by
``|φ(S)| / |K|`` for every such φ, and for a finite-index subgroup U the value
is exactly ``1/[F:U]``.
"""

from __future__ import annotations

import math
import os
import random
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Sequence

from .errors import CapExceeded, InfiniteIndexError, InvalidInput
from .graph import StallingsGraph, complete, from_generators
from .permgroup import Perm, PermGroup, identity, inv, is_identity, mul
from .words import Word, letter_char


@dataclass(frozen=True)
class Caps:
    closure: int = 200_000
    productset: int = 200_000
    degree: int = 5_000

    @classmethod
    def from_env(cls) -> "Caps":
        raw = os.environ.get("SGF_CAPS")
        if not raw:
            return cls()
        try:
            closure, productset, degree = (int(x) for x in raw.split(","))
        except ValueError as exc:
            raise InvalidInput(f"SGF_CAPS must be 'closure,productset,degree', got {raw!r}") from exc
        return cls(closure, productset, degree)


def caps() -> Caps:
    return Caps.from_env()


# --------------------------------------------------------------------------


@dataclass(frozen=True)
class FiniteQuotient:
    """φ: F_k → K ≤ Sym(N); ``perms[i]`` is the image of x_{i+1} (0-indexed points)."""

    perms: tuple[Perm, ...]

    def __post_init__(self):
        n = self.degree
        for p in self.perms:
            if sorted(p) != list(range(n)):
                raise InvalidInput(f"not a permutation of 0..{n - 1}: {p}")

    @property
    def k(self) -> int:
        return len(self.perms)

    @property
    def degree(self) -> int:
        return len(self.perms[0])

    @cached_property
    def _inverses(self) -> tuple[Perm, ...]:
        return tuple(inv(p) for p in self.perms)

    @cached_property
    def group(self) -> PermGroup:
        return PermGroup(self.perms, self.degree)

    @property
    def order_of_image(self) -> int:
        return self.group.order

    def eval(self, w: Word) -> Perm:
        x = identity(self.degree)
        for a in w.letters:
            x = mul(x, self.perms[a - 1] if a > 0 else self._inverses[-a - 1])
        return x

    @cached_property
    def _images(self) -> dict[StallingsGraph, PermGroup]:
        return {}

    def image(self, H: StallingsGraph) -> PermGroup:
        """φ(H), generated by the images of H's basis (cached per subgroup)."""
        G = self._images.get(H)
        if G is None:
            G = self._images[H] = PermGroup((self.eval(w) for w in H.basis), self.degree)
        return G

    def to_json(self) -> dict:
        return {
            "degree": self.degree,
            "perms": {letter_char(i + 1): [x + 1 for x in p] for i, p in enumerate(self.perms)},
        }

    @classmethod
    def from_json(cls, data: dict) -> "FiniteQuotient":
        try:
            perms = data["perms"]
            n = int(data["degree"])
            keys = sorted(perms)
            out = tuple(tuple(int(x) - 1 for x in perms[c]) for c in keys)
        except (KeyError, TypeError, ValueError) as exc:
            raise InvalidInput(f"malformed quotient JSON: {exc}") from exc
        if any(len(p) != n for p in out):
            raise InvalidInput("permutation length does not match degree")
        return cls(out)


def trivial_quotient(k: int) -> FiniteQuotient:
    return FiniteQuotient(tuple((0,) for _ in range(k)))


def coset_action(U: StallingsGraph) -> FiniteQuotient:
    """Action of F on the cosets U\\F; point 0 is the base coset, stabilized exactly by U."""
    if not U.is_cover():
        raise InfiniteIndexError("coset action needs a finite-index subgroup")
    return FiniteQuotient(U.out)


def eval_word(q: FiniteQuotient, w: Word) -> Perm:
    return q.eval(w)


def image_subgroup(q: FiniteQuotient, H: StallingsGraph) -> int:
    """|φ(H)|."""
    return q.image(H).order


class ProductSet:
    """The set S = φ(H1)·φ(H2)···φ(Hn), stored as cosets of an end factor.

    S is closed under left multiplication by φ(H1), so it is a union of right
    cosets φ(H1)·y; each step closes the coset set under right multiplication
    by the generators of the next image.  Since every φ(Hi) is a group,
    S⁻¹ = φ(Hn)···φ(H1), and when φ(Hn) is the larger end group the same
    procedure runs on the reversed list (cosets of φ(Hn)), which needs fewer
    cosets.  ``cap`` bounds the number of cosets enumerated.
    """

    def __init__(self, q: FiniteQuotient, Hs: Sequence[StallingsGraph], cap: int | None = None,
                 anchor: str = "auto"):
        if not Hs:
            raise InvalidInput("empty product")
        if anchor not in ("auto", "first", "last"):
            raise InvalidInput(f"unknown anchor {anchor!r}")
        cap = caps().productset if cap is None else cap
        self.q = q
        first, last = q.image(Hs[0]), q.image(Hs[-1])
        if anchor == "auto":
            self.inverted = len(Hs) > 1 and last.order > first.order
        else:
            self.inverted = anchor == "last" and len(Hs) > 1
        seq = list(reversed(Hs)) if self.inverted else list(Hs)
        self.first = last if self.inverted else first
        e = identity(q.degree)
        self.reps = {self.first.coset_key(e): e}
        for H in seq[1:]:
            gens = [q.eval(w) for w in H.basis]
            queue = list(self.reps.values())
            while queue:
                x = queue.pop()
                for g in gens:
                    y = mul(x, g)
                    key = self.first.coset_key(y)
                    if key not in self.reps:
                        self.reps[key] = y
                        if len(self.reps) > cap:
                            raise CapExceeded("product-set cosets", cap)
                        queue.append(y)

    @property
    def num_cosets(self) -> int:
        return len(self.reps)

    @cached_property
    def size(self) -> int:
        return self.first.order * len(self.reps)

    def __contains__(self, x: Perm) -> bool:
        if self.inverted:
            x = inv(x)
        return self.first.coset_key(x) in self.reps

    def elements(self, cap: int | None = None) -> set[Perm]:
        cap = caps().closure if cap is None else cap
        if self.size > cap:
            raise CapExceeded("product-set elements", cap)
        first = self.first.elements(cap)
        out = {mul(a, y) for y in self.reps.values() for a in first}
        return {inv(x) for x in out} if self.inverted else out


def image_product_size(q: FiniteQuotient, Hs: Sequence[StallingsGraph]) -> int:
    """|φ(H1)···φ(Hn)| as a product set."""
    return ProductSet(q, Hs).size


def normal_core_data(U: StallingsGraph) -> int:
    """[F : U_F] = |K| for the coset action on U\\F."""
    return coset_action(U).order_of_image


def preimage_cover(q: FiniteQuotient, G: PermGroup, cap: int | None = None) -> StallingsGraph:
    """Cover of φ⁻¹(G): the action of F on the right cosets G\\K."""
    cap = caps().degree if cap is None else cap
    e = identity(q.degree)
    ids = {G.coset_key(e): 0}
    reps = [e]
    rows: list[list[int]] = [[] for _ in q.perms]
    pos = 0
    while pos < len(reps):
        x = reps[pos]
        for i, g in enumerate(q.perms):
            y = mul(x, g)
            key = G.coset_key(y)
            j = ids.get(key)
            if j is None:
                j = ids[key] = len(reps)
                reps.append(y)
                if len(reps) > cap:
                    raise CapExceeded("preimage cover degree", cap)
            rows[i].append(j)
        pos += 1
    from .graph import from_permutations

    return from_permutations([tuple(r) for r in rows])


# --------------------------------------------------------------------------


def _frac_json(x: Fraction) -> dict:
    return {"num": x.numerator, "den": x.denominator}


def _frac_parse(d) -> Fraction:
    if isinstance(d, dict):
        return Fraction(int(d["num"]), int(d["den"]))
    return Fraction(d)


def subgroup_spec(H: StallingsGraph, name: str | None = None) -> dict:
    out = {"rank": H.k}
    if name is not None:
        out["name"] = name
    out["generators"] = [str(w) for w in H.basis]
    return out


def parse_subgroup_spec(d: dict, k: int | None = None) -> StallingsGraph:
    try:
        kk = int(d.get("rank", k)) if k is None else k
        gens = [Word.parse(g, kk) for g in d["generators"]]
    except (KeyError, TypeError) as exc:
        raise InvalidInput(f"malformed subgroup spec: {exc}") from exc
    return from_generators(gens, kk)


@dataclass
class MeasureBound:
    """Certified ``μ(H1···Hn) <= bound`` with ``bound = |φ(H1)···φ(Hn)| / |K|``."""

    described_set: list[StallingsGraph]
    bound: Fraction
    witness_quotient: FiniteQuotient
    left_transversal: list[Word] = field(default_factory=list)
    right_transversal: list[Word] = field(default_factory=list)
    image_size: int = 0
    quotient_order: int = 0
    seed: int = 0

    def to_json(self) -> dict:
        return {
            "schema": 1,
            "kind": "measure-bound",
            "rank": self.witness_quotient.k,
            "seed": self.seed,
            "subgroups": [subgroup_spec(H, f"H{i + 1}") for i, H in enumerate(self.described_set)],
            "quotient": self.witness_quotient.to_json(),
            "left_transversal": [str(w) for w in self.left_transversal],
            "right_transversal": [str(w) for w in self.right_transversal],
            "image_product_size": self.image_size,
            "quotient_order": self.quotient_order,
            "bound": _frac_json(self.bound),
        }

    @classmethod
    def from_json(cls, data: dict) -> "MeasureBound":
        try:
            k = int(data["rank"])
            return cls(
                described_set=[parse_subgroup_spec(s, k) for s in data["subgroups"]],
                bound=_frac_parse(data["bound"]),
                witness_quotient=FiniteQuotient.from_json(data["quotient"]),
                left_transversal=[Word.parse(w, k) for w in data.get("left_transversal", [])],
                right_transversal=[Word.parse(w, k) for w in data.get("right_transversal", [])],
                image_size=int(data["image_product_size"]),
                quotient_order=int(data["quotient_order"]),
                seed=int(data.get("seed", 0)),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise InvalidInput(f"malformed measure bound: {exc}") from exc

    def verify(self) -> tuple[bool, list[dict]]:
        q = self.witness_quotient
        size = image_product_size(q, self.described_set)
        order = q.order_of_image
        checks = [
            _check("image product size recomputed", self.image_size, size, "=="),
            _check("quotient order recomputed", self.quotient_order, order, "=="),
            _check("bound = |image product| / |K|", self.bound, Fraction(size, order), "=="),
            _check("bound lies in [0, 1]", self.bound, Fraction(1), "<="),
        ]
        return all(c["ok"] for c in checks), checks


def _check(name: str, lhs, rhs, rel: str) -> dict:
    ok = {"==": lhs == rhs, "<=": lhs <= rhs, "<": lhs < rhs}[rel]
    show = (lambda v: _frac_json(v) if isinstance(v, Fraction) and v.denominator != 1 else
            (int(v) if isinstance(v, Fraction) else v))
    return {"check": name, "lhs": show(lhs), "relation": rel, "rhs": show(rhs), "ok": bool(ok)}


def _bound_for_cover(Hs: Sequence[StallingsGraph], W: StallingsGraph) -> tuple[FiniteQuotient, int, int]:
    q = coset_action(W)
    size = ProductSet(q, Hs).size
    return q, size, q.order_of_image


def measure_subgroup(H: StallingsGraph, target: int = 1, seed: int = 0, attempts: int = 8):
    """Exact ``1/[F:H]`` for finite index, otherwise a :class:`MeasureBound` <= 1/target."""
    if target < 1:
        raise InvalidInput("target must be >= 1")
    if H.is_cover():
        return Fraction(1, H.n)
    last: Exception | None = None
    for attempt in range(attempts):
        s = seed + 7919 * attempt
        W = complete(H, target, seed=s)
        try:
            q, size, order = _bound_for_cover([H], W)
        except CapExceeded as exc:
            last = exc
            continue
        return MeasureBound([H], Fraction(size, order), q, image_size=size, quotient_order=order, seed=s)
    assert last is not None
    raise last


def measure_product_bound(Hs: Sequence[StallingsGraph], epsilon: Fraction, seed: int = 0) -> MeasureBound:
    """A quotient certifying ``μ(H1···Hn) <= epsilon`` for infinite-index H_i.

    Follows the inductive argument: the last two subgroups are merged into an
    infinite-index C containing H_{n-1} and a finite-index part of H_n, whose
    right transversal is carried along.  The final single subgroup D is
    completed to covers W; in the coset action of W the product is contained
    in φ(W)·φ(T), so ``[F:W] >= |T|/epsilon`` suffices.  Smaller covers are
    tried first and accepted whenever the exact ratio already meets epsilon.
    """
    from .constructions import olshanskii, right_transversal

    epsilon = Fraction(epsilon)
    if not 0 < epsilon <= 1:
        raise InvalidInput("epsilon must lie in (0, 1]")
    Hs = list(Hs)
    if not Hs:
        raise InvalidInput("need at least one subgroup")
    for H in Hs:
        if H.is_cover():
            raise InvalidInput("every subgroup must have infinite index")

    current = list(Hs)
    transversals: list[list[Word]] = []
    step_seed = seed
    while len(current) >= 2:
        cert = olshanskii(current[-2], current[-1], seed=step_seed)
        transversals.insert(0, right_transversal(current[-1], cert.NA_cover))
        current = current[:-2] + [cert.C]
        step_seed += 1
    D = current[0]
    T = [Word()]
    for R in transversals:
        T = [t * r for t in T for r in R]
    needed = math.ceil(len(T) / epsilon)
    sizes = sorted({s for s in (8, 12, 16, 24, 32, 48, 64) if s < needed} | {needed})
    sizes = [s for s in sizes if s >= D.n] or [max(needed, D.n)]
    last: Exception | None = None
    for size_target in sizes:
        for attempt in range(3):
            s = seed + 1000 * size_target + attempt
            W = complete(D, size_target, seed=s)
            try:
                q, size, order = _bound_for_cover(Hs, W)
            except CapExceeded as exc:
                last = exc
                continue
            bound = Fraction(size, order)
            if bound <= epsilon:
                return MeasureBound(list(Hs), bound, q, [], T, size, order, s)
    if last is not None:
        raise last
    raise CapExceeded("cover search", needed)


__all__ = [
    "Caps",
    "FiniteQuotient",
    "MeasureBound",
    "ProductSet",
    "caps",
    "coset_action",
    "eval_word",
    "image_product_size",
    "image_subgroup",
    "measure_product_bound",
    "measure_subgroup",
    "normal_core_data",
    "parse_subgroup_spec",
    "preimage_cover",
    "subgroup_spec",
    "trivial_quotient",
]
