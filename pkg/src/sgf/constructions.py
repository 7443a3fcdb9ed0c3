"""Certified constructions on pairs and lists of infinite-index subgroups.

* :func:`lemma_weak_ol` finds finite-index A0 ≤ A, B0 ≤ B generating an
  infinite-index subgroup, by intersecting with completions of the other side.
* :func:`find_small_product_quotient` and :func:`olshanskii` produce a finite
  quotient φ: F → K with ``|φ(A)φ(B)| <= ε|K|`` and from it B0 = B ∩ φ⁻¹(φ(A))
  of finite index in B with ``⟨A, B0⟩`` of infinite index.  The result is a
  certificate that :func:`verify_olshanskii` re-derives from scratch.
* :func:`product_witness` exhibits a word outside H1···Hn.
* :func:`bounded_base` and :func:`kernel_ball_check` build and probe a single
  infinite-index R meeting every input in a finite-index subgroup.
"""

from __future__ import annotations

import itertools
import math
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator, Sequence

from .errors import CapExceeded, InvalidInput, LiftNotFound, SearchFailed
from .graph import (
    INFINITE,
    StallingsGraph,
    complete,
    conjugate,
    contains,
    from_generators,
    intersect,
    join,
    orbit_transversal,
    relative_index,
    whole_group,
)
from .permgroup import PermGroup, mul, work_budget
from .quotient import (
    FiniteQuotient,
    ProductSet,
    _check,
    _frac_json,
    _frac_parse,
    caps,
    coset_action,
    measure_product_bound,
    parse_subgroup_spec,
    preimage_cover,
    subgroup_spec,
    trivial_quotient,
)
from .words import Word, product, random_word, reduced_words


def _require_infinite(*Hs: StallingsGraph) -> None:
    for H in Hs:
        if H.is_cover():
            raise InvalidInput(f"subgroup {[str(w) for w in H.basis]} has finite index {H.n}")


def _same_rank(*Hs: StallingsGraph) -> int:
    ks = {H.k for H in Hs}
    if len(ks) != 1:
        raise InvalidInput("subgroups live in free groups of different rank")
    return ks.pop()


def right_transversal(B: StallingsGraph, cover: StallingsGraph) -> list[Word]:
    """Words r_p ∈ B with B = ⊔ (B ∩ U)·r_p, U the subgroup of ``cover``."""
    basis = B.basis
    paths = orbit_transversal(cover, basis)
    return [product(basis[j] for j in paths[p]) for p in sorted(paths)]


def schreier_generators(B: StallingsGraph, cover: StallingsGraph) -> list[Word]:
    """Generators of B ∩ U from B's action on the cosets U\\F."""
    basis = B.basis
    paths = orbit_transversal(cover, basis)
    reps = {p: product(basis[j] for j in path) for p, path in paths.items()}
    gens = []
    for p in sorted(reps):
        for b in basis:
            q, _ = cover.trace(b, p)
            s = reps[p] * b * reps[q].inverse()
            if s.letters:
                gens.append(s)
    return gens


# --------------------------------------------------------------------------
# the lemma


@dataclass
class LemmaResult:
    A0: StallingsGraph
    B0: StallingsGraph
    C: StallingsGraph
    U: StallingsGraph
    V: StallingsGraph
    t: int
    left_transversal: list[Word]
    right_transversal: list[Word]
    report: list[dict]
    values: dict

    @property
    def ok(self) -> bool:
        return all(c["ok"] for c in self.report)


def lemma_weak_ol(A: StallingsGraph, B: StallingsGraph, seed: int = 0) -> LemmaResult:
    """Finite-index A0 ≤ A and B0 ≤ B with ⟨A0, B0⟩ of infinite index.

    U ⊇ A and V ⊇ B are completions of index t = ceil(2r/(k-1)); then
    A0 = A ∩ V, B0 = B ∩ U and C = ⟨A0, B0⟩ ≤ U ∩ V has rank at most
    (k-1)[F:U∩V], too small to be of finite index in U ∩ V.
    """
    k = _same_rank(A, B)
    _require_infinite(A, B)
    r = max(A.rank, B.rank)
    t = max(1, math.ceil(Fraction(2 * r, k - 1)))
    U = complete(A, t, seed=seed)
    V = complete(B, t, seed=seed + 1)
    A0 = intersect(A, V)
    B0 = intersect(B, U)
    C = join(A0, B0)
    UV = intersect(U, V)
    iA = relative_index(A, V)
    iB = relative_index(B, U)
    values = {
        "t": t,
        "r": r,
        "rank_A": A.rank,
        "rank_B": B.rank,
        "index_U": U.n,
        "index_V": V.n,
        "index_U_cap_V": UV.n,
        "index_A_A0": iA,
        "index_B_B0": iB,
        "rank_A0": A0.rank,
        "rank_B0": B0.rank,
        "rank_C": C.rank,
    }
    report = [
        _check("t <= [F:U]", t, U.n, "<="),
        _check("[A:A0] <= [U:U∩V]", Fraction(iA), Fraction(UV.n, U.n), "<="),
        _check("[B:B0] <= [V:U∩V]", Fraction(iB), Fraction(UV.n, V.n), "<="),
        _check("d(A0) - 1 = [A:A0](d(A) - 1)", A0.rank - 1, iA * (A.rank - 1), "=="),
        _check("d(B0) - 1 = [B:B0](d(B) - 1)", B0.rank - 1, iB * (B.rank - 1), "=="),
        _check("d(C) <= d(A0) + d(B0)", C.rank, A0.rank + B0.rank, "<="),
        _check("d(A0) + d(B0) <= [A:A0]d(A) + [B:B0]d(B)", A0.rank + B0.rank, iA * A.rank + iB * B.rank, "<="),
        _check("[A:A0]d(A) + [B:B0]d(B) <= r([U:U∩V] + [V:U∩V])",
               Fraction(iA * A.rank + iB * B.rank), r * (Fraction(UV.n, U.n) + Fraction(UV.n, V.n)), "<="),
        _check("r([U:U∩V] + [V:U∩V]) <= (k-1)[F:U∩V]",
               r * (Fraction(UV.n, U.n) + Fraction(UV.n, V.n)), Fraction((k - 1) * UV.n), "<="),
        _check("d(C) <= (k-1)[F:U∩V]", C.rank, (k - 1) * UV.n, "<="),
        _check("[F:C] is infinite", 0 if C.is_cover() else 1, 1, "=="),
    ]
    L = [w.inverse() for w in right_transversal(A, V)]
    R = right_transversal(B, U)
    return LemmaResult(A0, B0, C, U, V, t, L, R, report, values)


# --------------------------------------------------------------------------
# quotient search


# chain work allowed per candidate quotient during searches; groups needing
# more are almost always far too large for the coset space K/φ(A)
SEARCH_WORK = 5_000_000


@dataclass
class _Candidate:
    strategy: str
    cover: StallingsGraph | None
    seed: int
    quotient: FiniteQuotient | None = None


def _ceil(x: Fraction) -> int:
    return max(1, math.ceil(x))


def _lemma_candidate(A, B, epsilon, seed) -> _Candidate:
    lem = lemma_weak_ol(A, B, seed=seed)
    N = _ceil(len(lem.left_transversal) * len(lem.right_transversal) / epsilon)
    return _Candidate("lemma", complete(lem.C, N, seed=seed + 2), seed)


def _candidates(A: StallingsGraph, B: StallingsGraph, epsilon: Fraction, seed: int) -> Iterator[_Candidate]:
    """Covers W whose coset action is guaranteed to give |φ(A)φ(B)| <= ε|K|.

    Each W contains A and a finite-index B' ≤ B with right transversal of
    size m, and has index >= m/ε, so φ(A)φ(B) ⊆ φ(W)·φ(transversal).
    Smaller quotients come first.
    """
    k = A.k
    r = max(A.rank, B.rank, 1)
    J = join(A, B)
    if not J.is_cover():
        for a in range(2):
            yield _Candidate("join", complete(J, _ceil(1 / epsilon), seed=seed + a), seed + a)
    t0 = max(1, math.ceil(Fraction(2 * r, k - 1)))
    for t in range(t0, t0 + 3):
        for a in range(4):
            s = seed + 101 * t + a
            U = complete(A, t, seed=s)
            J = join(A, intersect(B, U))
            if J.is_cover():
                continue
            m = relative_index(B, U)
            yield _Candidate("absorb", complete(J, _ceil(m / epsilon), seed=s + 1), s)
    # small-degree covers keep K small enough for the coset space K/φ(A);
    # they carry no guarantee, so their exact ratio decides
    for N in range(2, 8):
        for a in range(6):
            s = seed + 1009 * N + a
            if B.n <= N:
                yield _Candidate("small", complete(B, N, seed=s), s)
            if A.n <= N:
                yield _Candidate("small", complete(A, N, seed=s), s)
    for a in range(3):
        yield _lemma_candidate(A, B, epsilon, seed + 7 * a)
    # extended round: other absorbing indices and more small covers
    for t in range(2, t0 + 6):
        for a in range(4, 12):
            s = seed + 101 * t + a
            U = complete(A, t, seed=s)
            J = join(A, intersect(B, U))
            if J.is_cover():
                continue
            m = relative_index(B, U)
            yield _Candidate("absorb", complete(J, _ceil(m / epsilon), seed=s + 1), s)
    for N in range(2, 10):
        for a in range(6, 30):
            s = seed + 1009 * N + a
            if B.n <= N:
                yield _Candidate("small", complete(B, N, seed=s), s)
            if A.n <= N:
                yield _Candidate("small", complete(A, N, seed=s), s)


def _wide_absorb_candidates(A: StallingsGraph, B: StallingsGraph, epsilon: Fraction,
                            seed: int, max_na_index: int | None = None) -> Iterator[_Candidate]:
    """Absorbing covers over many more indices and seeds.

    ⟨A, B ∩ U⟩ of infinite index is rare for small U, but when it happens
    φ(A) is usually the full point stabilizer and evaluation is cheap.
    """
    k = A.k
    r = max(A.rank, B.rank, 1)
    t0 = max(1, math.ceil(Fraction(2 * r, k - 1)))
    for a in range(12, 40):
        for t in range(2, 4 * t0 + 24):
            s = seed + 101 * t + a
            U = complete(A, t, seed=s)
            J = join(A, intersect(B, U))
            if J.is_cover():
                continue
            m = relative_index(B, U)
            W = complete(J, _ceil(m / epsilon), seed=s + 1)
            if max_na_index is not None and W.n > max_na_index:
                continue  # φ(A) fixes the base coset, so [K:φ(A)] >= [F:W]
            q = coset_action(W)
            # only covers where A moves every other coset: other shapes rarely
            # pay off and each can burn a whole work budget
            if W.n > 1 and [len(o) for o in q.image(A).orbits] != [W.n - 1]:
                continue
            yield _Candidate("absorb", W, s, q)


AFFINE_PRIMES = (5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71, 73, 79, 83,
                 89, 97, 101, 103, 107, 109, 113, 127, 131, 137, 139)


def _nullspace_mod_p(rows: list[list[int]], k: int, p: int) -> list[list[int]]:
    """Basis of the solutions x of rows·x = 0 over GF(p)."""
    m = [list(r) for r in rows]
    pivots: list[int] = []
    r = 0
    for c in range(k):
        piv = next((i for i in range(r, len(m)) if m[i][c] % p), None)
        if piv is None:
            continue
        m[r], m[piv] = m[piv], m[r]
        inv_p = pow(m[r][c], -1, p)
        m[r] = [x * inv_p % p for x in m[r]]
        for i in range(len(m)):
            if i != r and m[i][c] % p:
                f = m[i][c]
                m[i] = [(x - f * y) % p for x, y in zip(m[i], m[r])]
        pivots.append(c)
        r += 1
    basis = []
    for free in (c for c in range(k) if c not in pivots):
        v = [0] * k
        v[free] = 1
        for i, c in enumerate(pivots):
            v[c] = -m[i][free] % p
        basis.append(v)
    return basis


def _affine_image(w: Word, maps: Sequence[tuple[int, int]], p: int) -> tuple[int, int]:
    """φ(w) as (alpha, beta), x -> alpha·x + beta, for generator maps acting left to right."""
    al, be = 1, 0
    for x in w.letters:
        a, b = maps[abs(x) - 1]
        if x < 0:
            a = pow(a, -1, p)
            b = -a * b % p
        al, be = al * a % p, (a * be + b) % p
    return al, be


def _translation_form(w: Word, alphas: Sequence[int], p: int) -> list[int]:
    """Coefficients of the translation part of φ(w), linear in the generator translations."""
    co = [0] * len(alphas)
    for x in w.letters:
        i = abs(x) - 1
        a = alphas[i] if x > 0 else pow(alphas[i], -1, p)
        co = [a * c % p for c in co]
        co[i] = (co[i] + (1 if x > 0 else -a)) % p
    return co


def _mult_order(a: int, p: int) -> int:
    t = 1
    x = a
    while x != 1:
        x = x * a % p
        t += 1
    return t


def _affine_order(maps: Sequence[tuple[int, int]], p: int) -> int:
    """Order of the subgroup of AGL(1, p) generated by ``maps``."""
    d = 1
    for a, _ in maps:
        d = math.lcm(d, _mult_order(a, p))
    fixed = set()
    for a, b in maps:
        if a == 1:
            if b:
                return p * d
            continue
        fixed.add(b * pow(1 - a, -1, p) % p)
    return d if len(fixed) <= 1 else p * d


def _affine_candidates(A: StallingsGraph, B: StallingsGraph, epsilon: Fraction, seed: int,
                       max_na_index: int | None = None, exhaustive: int = 20000,
                       samples: int = 3000) -> Iterator[_Candidate]:
    """Quotients onto subgroups of AGL(1, p) in which B fixes the point 0.

    For fixed multipliers the fixing condition is linear in the translations,
    so each multiplier choice costs one nullspace over GF(p).  A point
    stabilizer of AGL(1, p) is cyclic of order dividing p - 1, so φ(B) stays
    small while |K| <= p(p - 1) keeps the coset space K/φ(A) small.  Orders
    in AGL(1, p) are computed algebraically, and only quotients whose bound
    |φ(A)||φ(B)| <= ε|K| holds are handed to the exact evaluation.
    """
    k = A.k
    rng = random.Random(seed)
    for p in AFFINE_PRIMES:
        if (p - 1) ** k <= exhaustive:
            tuples = list(itertools.product(range(1, p), repeat=k))
            rng.shuffle(tuples)
        else:
            tuples = list(dict.fromkeys(tuple(rng.randrange(1, p) for _ in range(k)) for _ in range(samples)))
        for alphas in tuples:
            basis = _nullspace_mod_p([_translation_form(w, alphas, p) for w in B.basis], k, p)
            if not basis:
                continue
            coeffs = [rng.randrange(p) for _ in basis]
            if not any(coeffs):
                coeffs[0] = 1
            beta = [sum(c * v[i] for c, v in zip(coeffs, basis)) % p for i in range(k)]
            if not any(beta):
                continue
            maps = list(zip(alphas, beta))
            order_K = _affine_order(maps, p)
            order_A = _affine_order([_affine_image(w, maps, p) for w in A.basis], p)
            order_B = _affine_order([_affine_image(w, maps, p) for w in B.basis], p)
            if order_A * order_B > epsilon * order_K:
                continue
            if max_na_index is not None and order_K > max_na_index * order_A:
                continue
            perms = tuple(tuple((a * x + b) % p for x in range(p)) for a, b in maps)
            yield _Candidate("affine", None, seed, FiniteQuotient(perms))


@dataclass
class _Evaluated:
    candidate: _Candidate
    quotient: FiniteQuotient
    order: int
    phi_A: PermGroup
    products: ProductSet

    @property
    def ratio(self) -> Fraction:
        return Fraction(self.products.size, self.order)

    @property
    def na_index(self) -> int:
        return self.order // self.phi_A.order

    @property
    def index_B_B0(self) -> int:
        return self.products.size // self.phi_A.order


def _evaluate(A, B, cand: _Candidate, epsilon: Fraction | None = None,
              max_na_index: int | None = None) -> _Evaluated | None:
    """Exact data of the candidate quotient (the coset action of ``cand.cover`` by default).

    Returns None as soon as the candidate is known to miss ``epsilon``, to
    need more than ``max_na_index`` cosets of φ(A), or to exceed the work
    budget for group orders.
    """
    q = cand.quotient if cand.quotient is not None else coset_action(cand.cover)
    try:
        with work_budget(SEARCH_WORK):
            order = q.order_of_image
            phi_A = q.image(A)
            if max_na_index is not None:
                if phi_A.order_upper_bound * max_na_index < order:
                    return None
                if order // phi_A.order > max_na_index:
                    return None
                anchor = "first"
                big = phi_A.order
            else:
                anchor = "auto"
                big = max(phi_A.order, q.image(B).order)
    except CapExceeded:
        return None
    cap = caps().productset
    if epsilon is not None:
        # cosets of the anchor group inside a set of size <= ε|K|
        cap = min(cap, int(epsilon * order / big))
        if cap < 1:
            return None
    try:
        products = ProductSet(q, [A, B], cap=cap, anchor=anchor)
    except CapExceeded:
        if epsilon is not None and cap < caps().productset:
            return None
        raise
    return _Evaluated(cand, q, order, phi_A, products)


def find_small_product_quotient(A: StallingsGraph, B: StallingsGraph, epsilon: Fraction,
                                seed: int = 0) -> FiniteQuotient:
    """A quotient with |φ(A)φ(B)| / |K| <= ε, from the transversal argument over the lemma."""
    _same_rank(A, B)
    _require_infinite(A, B)
    epsilon = Fraction(epsilon)
    if not 0 < epsilon <= 1:
        raise InvalidInput("epsilon must lie in (0, 1]")
    if epsilon == 1:
        return trivial_quotient(A.k)
    last: Exception | None = None
    for a in range(4):
        cand = _lemma_candidate(A, B, epsilon, seed + 7 * a)
        try:
            ev = _evaluate(A, B, cand, epsilon)
        except CapExceeded as exc:
            last = exc
            continue
        if ev is not None and ev.ratio <= epsilon:
            return ev.quotient
        last = SearchFailed(f"candidate quotient missed {epsilon}")
    assert last is not None
    raise last


# --------------------------------------------------------------------------
# the main certificate


def olshanskii_epsilon(k: int, r: int) -> Fraction:
    return Fraction(k - 1, 2 * max(r, 1))


@dataclass
class OlshanskiiCertificate:
    input_A: StallingsGraph
    input_B: StallingsGraph
    r: int
    epsilon: Fraction
    quotient: FiniteQuotient
    NA_cover: StallingsGraph
    B0: StallingsGraph
    B0_generators: list[Word]
    index_B_B0: int
    C: StallingsGraph
    chain: dict
    deficiency_witness: tuple[int, str, str] | None
    seed: int
    strategy: str = ""

    @property
    def k(self) -> int:
        return self.input_A.k

    def to_json(self) -> dict:
        chain = {key: (_frac_json(v) if isinstance(v, Fraction) else v) for key, v in self.chain.items()}
        return {
            "schema": 1,
            "kind": "olshanskii",
            "rank": self.k,
            "seed": self.seed,
            "strategy": self.strategy,
            "A": subgroup_spec(self.input_A, "A"),
            "B": subgroup_spec(self.input_B, "B"),
            "r": self.r,
            "epsilon": _frac_json(self.epsilon),
            "quotient": self.quotient.to_json(),
            "NA_cover": self.NA_cover.to_json(),
            "B0": {"generators": [str(w) for w in self.B0_generators], "graph": self.B0.to_json()},
            "index_B_B0": self.index_B_B0,
            "C": {"generators": [str(w) for w in self.C.basis], "graph": self.C.to_json()},
            "chain": chain,
            "deficiency_witness": list(self.deficiency_witness) if self.deficiency_witness else None,
        }

    @classmethod
    def from_json(cls, data: dict) -> "OlshanskiiCertificate":
        try:
            k = int(data["rank"])
            B0_gens = [Word.parse(w, k) for w in data["B0"]["generators"]]
            wit = data.get("deficiency_witness")
            return cls(
                input_A=parse_subgroup_spec(data["A"], k),
                input_B=parse_subgroup_spec(data["B"], k),
                r=int(data["r"]),
                epsilon=_frac_parse(data["epsilon"]),
                quotient=FiniteQuotient.from_json(data["quotient"]),
                NA_cover=StallingsGraph.from_json(data["NA_cover"], k),
                B0=StallingsGraph.from_json(data["B0"]["graph"], k),
                B0_generators=B0_gens,
                index_B_B0=int(data["index_B_B0"]),
                C=StallingsGraph.from_json(data["C"]["graph"], k),
                chain={key: (_frac_parse(v) if isinstance(v, dict) else v) for key, v in data["chain"].items()},
                deficiency_witness=(int(wit[0]), str(wit[1]), str(wit[2])) if wit else None,
                seed=int(data.get("seed", 0)),
                strategy=str(data.get("strategy", "")),
            )
        except (KeyError, TypeError, ValueError, IndexError) as exc:
            raise InvalidInput(f"malformed certificate: {exc}") from exc


def _chain_values(k: int, A, B, B0, C, q: FiniteQuotient, NA_index: int, index_B_B0: int,
                  r: int, epsilon: Fraction) -> dict:
    phi_A = q.image(A)
    phi_B = q.image(B)
    order = q.order_of_image
    prod = ProductSet(q, [A, B]).size
    phi_B0 = q.image(B0).order
    return {
        "K_order": order,
        "phi_A": phi_A.order,
        "phi_B": phi_B.order,
        "phi_B0": phi_B0,
        "phi_A_phi_B": prod,
        "phi_A_cap_phi_B": Fraction(phi_A.order * phi_B.order, prod),
        "ratio": Fraction(prod, order),
        "NA_index": NA_index,
        "epsilon_NA_index": epsilon * NA_index,
        "rank_A": A.rank,
        "rank_B": B.rank,
        "rank_B0": B0.rank,
        "rank_C": C.rank,
        "rank_A_plus_index_rank_B": A.rank + index_B_B0 * B.rank,
        "r_times_1_plus_index": r * (1 + index_B_B0),
        "two_r_index": 2 * r * index_B_B0,
        "two_r_epsilon_NA_index": 2 * r * epsilon * NA_index,
        "NA_index_times_k_minus_1": NA_index * (k - 1),
    }


def _chain_checks(cert: OlshanskiiCertificate) -> list[dict]:
    """Every inequality of the certificate, evaluated on the stored values."""
    c = cert.chain
    k = cert.k
    idx = cert.index_B_B0
    eps = cert.epsilon
    na = cert.NA_cover.n
    r = cert.r
    return [
        _check("r = max(d(A), d(B))", r, max(cert.input_A.rank, cert.input_B.rank), "=="),
        _check("epsilon = (k-1)/(2r)", eps, olshanskii_epsilon(k, r), "=="),
        _check("|phi(A)phi(B)| / |K| <= epsilon", Fraction(c["phi_A_phi_B"], c["K_order"]), eps, "<="),
        _check("[F:NA] = |K| / |phi(A)|", Fraction(na), Fraction(c["K_order"], c["phi_A"]), "=="),
        _check("[B:B0] = |phi(B)| / |phi(B0)|", Fraction(idx), Fraction(c["phi_B"], c["phi_B0"]), "=="),
        _check("|phi(B)| / |phi(B0)| <= |phi(B)| / |phi(A) cap phi(B)|",
               Fraction(c["phi_B"], c["phi_B0"]), Fraction(c["phi_B"]) / Fraction(c["phi_A_cap_phi_B"]), "<="),
        _check("|phi(B)| / |phi(A) cap phi(B)| = |phi(A)phi(B)| / |phi(A)|",
               Fraction(c["phi_B"]) / Fraction(c["phi_A_cap_phi_B"]), Fraction(c["phi_A_phi_B"], c["phi_A"]), "=="),
        _check("|phi(A)phi(B)| / |phi(A)| <= epsilon [K:phi(A)]",
               Fraction(c["phi_A_phi_B"], c["phi_A"]), eps * Fraction(c["K_order"], c["phi_A"]), "<="),
        _check("[B:B0] <= epsilon [F:NA]", Fraction(idx), eps * na, "<="),
        _check("d(C) <= d(A) + d(B0)", cert.C.rank, cert.input_A.rank + cert.B0.rank, "<="),
        _check("d(B0) <= [B:B0] d(B)", cert.B0.rank, idx * cert.input_B.rank, "<="),
        _check("d(A) + d(B0) <= d(A) + [B:B0] d(B)", cert.input_A.rank + cert.B0.rank,
               cert.input_A.rank + idx * cert.input_B.rank, "<="),
        _check("d(A) + [B:B0] d(B) <= r(1 + [B:B0])", cert.input_A.rank + idx * cert.input_B.rank, r * (1 + idx), "<="),
        _check("r(1 + [B:B0]) <= 2r[B:B0]", r * (1 + idx), 2 * r * idx, "<="),
        _check("2r[B:B0] <= 2r epsilon [F:NA]", Fraction(2 * r * idx), 2 * r * eps * na, "<="),
        _check("2r epsilon [F:NA] = (k-1)[F:NA]", 2 * r * eps * na, Fraction((k - 1) * na), "=="),
        _check("d(C) <= (k-1)[F:NA]", cert.C.rank, (k - 1) * na, "<="),
    ]


def _witness_ok(C: StallingsGraph, wit) -> bool:
    if wit is None or C.is_cover():
        return False
    v, letter, direction = wit
    if not 0 <= v < C.n:
        return False
    i = ord(letter) - ord("a") + 1
    if not 1 <= i <= C.k:
        return False
    return (C.out if direction == "out" else C.inn)[i - 1][v] < 0


def _build_certificate(A, B, ev: _Evaluated, seed: int, r: int, epsilon: Fraction) -> OlshanskiiCertificate:
    k = A.k
    NA = preimage_cover(ev.quotient, ev.phi_A)
    gens = schreier_generators(B, NA)
    B0 = from_generators(gens, k)
    index_B_B0 = len(orbit_transversal(NA, B.basis))
    C = join(A, B0)
    chain = _chain_values(k, A, B, B0, C, ev.quotient, NA.n, index_B_B0, r, epsilon)
    return OlshanskiiCertificate(A, B, r, epsilon, ev.quotient, NA, B0, gens, index_B_B0, C, chain,
                                 C.deficiency(), seed, ev.candidate.strategy)


def olshanskii(A: StallingsGraph, B: StallingsGraph, seed: int = 0, pool: int = 4,
               patience: int = 16) -> OlshanskiiCertificate:
    """Finite-index B0 ≤ B with ⟨A, B0⟩ of infinite index, with a full certificate.

    Candidate quotients are generated from ``seed``; the first ``pool``
    candidates that satisfy the product bound with a small enough coset space
    K/φ(A) are compared (stopping after ``patience`` tries once one exists)
    and the one with the smallest [F:NA], then [B:B0], then |K| is used.
    """
    k = _same_rank(A, B)
    _require_infinite(A, B)
    r = max(A.rank, B.rank, 1)
    epsilon = olshanskii_epsilon(k, r)
    degree_cap = caps().degree
    if epsilon >= 1:
        q = trivial_quotient(k)
        ev = _Evaluated(_Candidate("trivial", whole_group(k), seed), q, 1,
                        q.image(A), ProductSet(q, [A, B]))
        return _finish(A, B, ev, seed, r, epsilon)
    good: list[_Evaluated] = []
    last: Exception | None = None
    for tried, cand in enumerate(_candidates(A, B, epsilon, seed)):
        if good and tried >= patience:
            break
        try:
            ev = _evaluate(A, B, cand, epsilon, degree_cap)
        except CapExceeded as exc:
            last = exc
            continue
        if ev is None:
            last = CapExceeded("coset space K/phi(A)", degree_cap)
            continue
        good.append(ev)
        if len(good) >= pool:
            break
    if not good:
        # structured fallback for pairs whose guaranteed quotients are giant
        for cand in _affine_candidates(A, B, epsilon, seed, degree_cap):
            try:
                ev = _evaluate(A, B, cand, epsilon, degree_cap)
            except CapExceeded as exc:
                last = exc
                continue
            if ev is not None:
                good.append(ev)
                break
    if not good:
        for cand in _wide_absorb_candidates(A, B, epsilon, seed, degree_cap):
            try:
                ev = _evaluate(A, B, cand, epsilon, degree_cap)
            except CapExceeded as exc:
                last = exc
                continue
            if ev is not None:
                good.append(ev)
                break
    if not good:
        if last is not None:
            raise last
        raise SearchFailed("no candidate quotient met the product bound")
    best = min(good, key=lambda e: (e.na_index, e.index_B_B0, e.order))
    return _finish(A, B, best, seed, r, epsilon)


def _finish(A, B, ev: _Evaluated, seed: int, r: int, epsilon: Fraction) -> OlshanskiiCertificate:
    cert = _build_certificate(A, B, ev, seed, r, epsilon)
    bad = [c for c in _chain_checks(cert) if not c["ok"]]
    if bad or cert.C.is_cover():
        raise SearchFailed(f"internal consistency failure: {bad}")
    return cert


def verify_olshanskii(cert: OlshanskiiCertificate) -> tuple[bool, list[dict]]:
    """Recompute every certificate invariant from the raw inputs.

    Returns ``(ok, report)``; the report has one entry per check with both
    sides as exact values.  Never raises on a bad certificate.
    """
    report: list[dict] = []
    try:
        A, B, q = cert.input_A, cert.input_B, cert.quotient
        k = cert.k
        if q.k != k:
            return False, [_check("quotient has one permutation per generator", q.k, k, "==")]
        phi_A = q.image(A)
        NA = preimage_cover(q, phi_A)
        B0 = intersect(B, NA)
        C = join(A, B0)
        idx = relative_index(B, NA)
        fresh = _chain_values(k, A, B, B0, C, q, NA.n, int(idx) if idx != INFINITE else -1,
                              cert.r, cert.epsilon)
        report.append(_check("NA cover equals the preimage of phi(A)", int(cert.NA_cover == NA), 1, "=="))
        report.append(_check("B0 = B cap NA", int(cert.B0 == B0), 1, "=="))
        report.append(_check("B0 generators generate B0", int(from_generators(cert.B0_generators, k) == B0), 1, "=="))
        report.append(_check("C = join(A, B0)", int(cert.C == C), 1, "=="))
        stored_join = join(A, cert.B0)
        report.append(_check("stored C = join(A, stored B0)", int(cert.C == stored_join), 1, "=="))
        report.append(_check("[F : join(A, stored B0)] is infinite", int(not stored_join.is_cover()), 1, "=="))
        report.append(_check("[B:B0] equals the B-orbit of the base NA coset", cert.index_B_B0, idx, "=="))
        for key, value in fresh.items():
            if key in cert.chain:
                report.append(_check(f"stored chain value {key} recomputed", cert.chain.get(key), value, "=="))
            else:
                report.append(_check(f"chain value {key} present", 0, 1, "=="))
        report.extend(_chain_checks(cert))
        report.append(_check("phi(A) cap phi(B) contained in phi(B0)", int(_intersection_inside(q, A, B, B0)), 1, "=="))
        report.append(_check("[F:C] is infinite (deficiency witness)", int(_witness_ok(C, cert.deficiency_witness)),
                             1, "=="))
    except Exception as exc:  # a malformed certificate is a failed verification
        report.append({"check": "recomputation", "ok": False, "error": f"{type(exc).__name__}: {exc}"})
    return all(c["ok"] for c in report), report


def _intersection_inside(q: FiniteQuotient, A, B, B0) -> bool:
    """φ(A) ∩ φ(B) ⊆ φ(B0), element-wise when φ(A) is small enough to list."""
    gA, gB, g0 = q.image(A), q.image(B), q.image(B0)
    cap = caps().closure
    if gA.order <= cap:
        return all(g0.contains(x) for x in gA.elements(cap) if gB.contains(x))
    # φ(B0) ⊆ φ(A) ∩ φ(B) always; equal orders give equality
    inside = all(gA.contains(g) and gB.contains(g) for g in g0.gens)
    inter = Fraction(gA.order * gB.order, ProductSet(q, [A, B]).size)
    return inside and g0.order == inter


# --------------------------------------------------------------------------
# product witnesses


@dataclass
class ProductWitness:
    inputs: list[StallingsGraph]
    quotient: FiniteQuotient
    witness: Word
    image_product_size: int
    quotient_order: int = 0
    epsilon: Fraction = Fraction(1, 2)
    seed: int = 0

    def to_json(self) -> dict:
        return {
            "schema": 1,
            "kind": "product-witness",
            "rank": self.quotient.k,
            "seed": self.seed,
            "subgroups": [subgroup_spec(H, f"H{i + 1}") for i, H in enumerate(self.inputs)],
            "epsilon": _frac_json(self.epsilon),
            "quotient": self.quotient.to_json(),
            "witness": str(self.witness),
            "image_product_size": self.image_product_size,
            "quotient_order": self.quotient_order,
        }

    @classmethod
    def from_json(cls, data: dict) -> "ProductWitness":
        try:
            k = int(data["rank"])
            return cls(
                inputs=[parse_subgroup_spec(s, k) for s in data["subgroups"]],
                quotient=FiniteQuotient.from_json(data["quotient"]),
                witness=Word.parse(data["witness"], k),
                image_product_size=int(data["image_product_size"]),
                quotient_order=int(data.get("quotient_order", 0)),
                epsilon=_frac_parse(data.get("epsilon", {"num": 1, "den": 2})),
                seed=int(data.get("seed", 0)),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise InvalidInput(f"malformed product witness: {exc}") from exc

    def verify(self) -> tuple[bool, list[dict]]:
        ps = ProductSet(self.quotient, self.inputs)
        x = self.quotient.eval(self.witness)
        checks = [
            _check("image product size recomputed", self.image_product_size, ps.size, "=="),
            _check("quotient order recomputed", self.quotient_order, self.quotient.order_of_image, "=="),
            _check("witness image lies outside the image product set", int(x in ps), 0, "=="),
        ]
        return all(c["ok"] for c in checks), checks


def product_witness(Hs: Sequence[StallingsGraph], seed: int = 0, max_length: int = 16,
                    rounds: int = 20) -> ProductWitness:
    """A word w with w ∉ H1···Hn, proved by a finite quotient."""
    Hs = list(Hs)
    if not Hs:
        raise InvalidInput("need at least one subgroup")
    k = _same_rank(*Hs)
    _require_infinite(*Hs)
    epsilon = Fraction(1, 2)
    for rnd in range(rounds):
        mb = measure_product_bound(Hs, epsilon, seed=seed + rnd)
        q = mb.witness_quotient
        ps = ProductSet(q, Hs)
        if ps.size < mb.quotient_order:
            w = _lift_outside(q, ps, k, max_length)
            if w is not None:
                return ProductWitness(Hs, q, w, ps.size, mb.quotient_order, epsilon, seed + rnd)
        epsilon /= 2
    raise LiftNotFound(f"no word of length <= {max_length} left the product set in {rounds} rounds")


def _lift_outside(q: FiniteQuotient, ps: ProductSet, k: int, max_length: int) -> Word | None:
    """Shortlex-first reduced word whose image lies outside ``ps``.

    Images are tracked incrementally along a breadth-first search, pruning
    words whose image was already reached by a shorter word.
    """
    e = tuple(range(q.degree))
    if e not in ps:
        return Word()
    gens = {}
    for i in range(1, k + 1):
        gens[i] = q.perms[i - 1]
        gens[-i] = q._inverses[i - 1]
    order = [x for i in range(1, k + 1) for x in (i, -i)]
    seen = {e}
    frontier = [((), e)]
    for _ in range(max_length):
        nxt = []
        for letters, x in frontier:
            for a in order:
                if letters and letters[-1] == -a:
                    continue
                y = mul(x, gens[a])
                if y in seen:
                    continue
                seen.add(y)
                w = letters + (a,)
                if y not in ps:
                    return Word(w)
                nxt.append((w, y))
                if len(seen) > caps().closure:
                    return None
        frontier = nxt
        if not frontier:
            return None
    return None


# --------------------------------------------------------------------------
# bounded base and kernel probe


@dataclass
class BaseRecord:
    inputs: list[StallingsGraph]
    R: StallingsGraph
    per_input_relative_index: list[int]
    chain_transcript: list[OlshanskiiCertificate] = field(default_factory=list)
    seed: int = 0

    def to_json(self) -> dict:
        return {
            "schema": 1,
            "kind": "base",
            "rank": self.R.k,
            "seed": self.seed,
            "subgroups": [subgroup_spec(H, f"L{i + 1}") for i, H in enumerate(self.inputs)],
            "R": {"generators": [str(w) for w in self.R.basis], "graph": self.R.to_json()},
            "per_input_relative_index": self.per_input_relative_index,
            "chain_transcript": [c.to_json() for c in self.chain_transcript],
        }

    @classmethod
    def from_json(cls, data: dict) -> "BaseRecord":
        try:
            k = int(data["rank"])
            return cls(
                inputs=[parse_subgroup_spec(s, k) for s in data["subgroups"]],
                R=StallingsGraph.from_json(data["R"]["graph"], k),
                per_input_relative_index=[int(x) for x in data["per_input_relative_index"]],
                chain_transcript=[OlshanskiiCertificate.from_json(c) for c in data["chain_transcript"]],
                seed=int(data.get("seed", 0)),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise InvalidInput(f"malformed base record: {exc}") from exc

    def verify(self) -> tuple[bool, list[dict]]:
        checks = [_check("[F:R] is infinite", int(not self.R.is_cover()), 1, "==")]
        for i, (L, stored) in enumerate(zip(self.inputs, self.per_input_relative_index)):
            ri = relative_index(L, self.R)
            checks.append(_check(f"[L{i + 1} : L{i + 1} cap R] finite and recomputed",
                                 stored, ri if ri != INFINITE else -1, "=="))
        checks.append(_check("one relative index per input", len(self.per_input_relative_index),
                             len(self.inputs), "=="))
        R = self.inputs[0] if self.inputs else None
        for i, cert in enumerate(self.chain_transcript):
            ok, _ = verify_olshanskii(cert)
            checks.append(_check(f"chain certificate {i + 1} verifies", int(ok), 1, "=="))
            checks.append(_check(f"chain certificate {i + 1} has the expected inputs",
                                 int(cert.input_A == R and cert.input_B == self.inputs[i + 1]), 1, "=="))
            R = cert.C
        if R is not None:
            checks.append(_check("R is the last join of the chain", int(R == self.R), 1, "=="))
        return all(c["ok"] for c in checks), checks


def bounded_base(Ls: Sequence[StallingsGraph], seed: int = 0) -> BaseRecord:
    """Infinite-index R such that every L_i ∩ R has finite index in L_i."""
    Ls = list(Ls)
    if not Ls:
        raise InvalidInput("need at least one subgroup")
    _same_rank(*Ls)
    _require_infinite(*Ls)
    R = Ls[0]
    transcript = []
    for i, L in enumerate(Ls[1:]):
        cert = olshanskii(R, L, seed=seed + i)
        transcript.append(cert)
        R = cert.C
    rel = []
    for L in Ls:
        ri = relative_index(L, R)
        if ri == INFINITE:
            raise SearchFailed("an input meets R in an infinite-index subgroup")
        rel.append(int(ri))
    return BaseRecord(Ls, R, rel, transcript, seed)


def kernel_ball_check(R: StallingsGraph, radius: int, conjugators: int | Sequence[Word] = 4,
                      seed: int = 0) -> dict:
    """Look for nontrivial words of length <= radius in R ∩ ⋂ g⁻¹Rg.

    With an integer ``conjugators`` the conjugating words are drawn from the
    seed among short words outside R, keeping a draw only when it shrinks the
    intersection.  Survivors would contradict a trivial action kernel.
    """
    k = R.k
    if isinstance(conjugators, int):
        rng = random.Random(seed)
        pool = [w for w in reduced_words(k, 3, 1) if not contains(R, w)]
        rng.shuffle(pool)
        chosen: list[Word] = []
        inter = R
        for g in pool:
            if len(chosen) >= conjugators:
                break
            nxt = intersect(inter, conjugate(R, g))
            if nxt != inter:
                chosen.append(g)
                inter = nxt
        for _ in range(conjugators - len(chosen)):
            chosen.append(random_word(k, rng.randint(1, 3), rng))
            inter = intersect(inter, conjugate(R, chosen[-1]))
    else:
        chosen = list(conjugators)
        inter = R
        for g in chosen:
            inter = intersect(inter, conjugate(R, g))
    survivors = [str(w) for w in _short_loops(inter, radius)]
    return {
        "schema": 1,
        "kind": "kernel-check",
        "rank": k,
        "seed": seed,
        "R": [str(w) for w in R.basis],
        "radius": radius,
        "conjugators": [str(g) for g in chosen],
        "intersection_rank": inter.rank,
        "intersection_vertices": inter.n,
        "survivors": survivors,
        "ok": not survivors,
    }


def _short_loops(H: StallingsGraph, radius: int) -> list[Word]:
    """Nontrivial reduced words of length <= radius read as loops at the base."""
    out: list[Word] = []
    k = H.k

    def walk(v: int, letters: tuple[int, ...]) -> None:
        if letters and v == 0:
            out.append(Word(letters))
        if len(letters) == radius:
            return
        for i in range(1, k + 1):
            for x in (i, -i):
                if letters and letters[-1] == -x:
                    continue
                w = H.step(v, x)
                if w >= 0:
                    walk(w, letters + (x,))

    walk(0, ())
    return sorted(out, key=lambda w: (len(w), [_letter_rank(x) for x in w.letters]))


def _letter_rank(x: int) -> int:
    return 2 * (abs(x) - 1) + (0 if x > 0 else 1)


__all__ = [
    "BaseRecord",
    "LemmaResult",
    "OlshanskiiCertificate",
    "ProductWitness",
    "bounded_base",
    "find_small_product_quotient",
    "kernel_ball_check",
    "lemma_weak_ol",
    "olshanskii",
    "olshanskii_epsilon",
    "product_witness",
    "right_transversal",
    "schreier_generators",
    "verify_olshanskii",
]
