from __future__ import annotations

import random
from math import factorial

import pytest

from oracles import closure, perm_mul
from sgf.errors import CapExceeded
from sgf.permgroup import PermGroup, cycles, format_cycles, inv, mul, order_of, sign, work_budget


def random_perm(n: int, rng: random.Random) -> tuple:
    p = list(range(n))
    rng.shuffle(p)
    return tuple(p)


def small_groups(count: int, seed: int, max_degree: int = 7):
    rng = random.Random(seed)
    for _ in range(count):
        n = rng.randint(1, max_degree)
        gens = []
        for _ in range(rng.randint(1, 3)):
            p = random_perm(n, rng)
            if rng.random() < 0.4:
                # sparse generators give intransitive and imprimitive groups too
                q = list(range(n))
                i, j = rng.randrange(n), rng.randrange(n)
                q[i], q[j] = q[j], q[i]
                p = tuple(q)
            gens.append(p)
        yield n, gens


def test_mul_is_left_to_right():
    p, q = (1, 0, 2), (0, 2, 1)
    assert mul(p, q) == perm_mul(p, q) == (2, 0, 1)
    assert mul(p, inv(p)) == (0, 1, 2)


def test_cycle_helpers():
    p = (1, 2, 0, 4, 3)
    assert cycles(p) == [[0, 1, 2], [3, 4]]
    assert format_cycles(p) == "(1 2 3)(4 5)"
    assert order_of(p) == 6 and sign(p) == -1


def test_order_and_membership_match_closure():
    rng = random.Random(0)
    for n, gens in small_groups(150, 1):
        G = PermGroup(gens, n)
        elements = closure(gens, n)
        assert G.order == len(elements)
        assert G.order <= G.order_upper_bound
        for _ in range(10):
            x = random_perm(n, rng)
            assert G.contains(x) == (x in elements)
        assert G.elements(10_000) == elements


def test_coset_key_identifies_right_cosets():
    rng = random.Random(2)
    for n, gens in small_groups(40, 3, 6):
        G = PermGroup(gens, n)
        elements = closure(gens, n)
        x, y = random_perm(n, rng), random_perm(n, rng)
        # G·x = G·y iff x·y⁻¹ ∈ G
        assert (G.coset_key(x) == G.coset_key(y)) == (mul(x, inv(y)) in elements)


def test_giants_are_recognized():
    n = 40
    cyc = tuple(list(range(1, n)) + [0])
    sym = PermGroup([cyc, (1, 0) + tuple(range(2, n))], n)
    assert sym.order == factorial(n)
    alt = PermGroup([tuple([1, 2, 0] + list(range(3, n))), tuple(list(range(1, n - 1)) + [0, n - 1])], n)
    # the 39-cycle fixes the last point, so this is Alt(39)
    assert alt.order == factorial(n - 1) // 2


def test_work_budget_caps_long_computations():
    rng = random.Random(4)
    # two equal orbits: neither the giant test nor the orbit split applies
    gens = [random_perm(30, rng) + tuple(30 + x for x in random_perm(30, rng)) for _ in range(2)]
    with pytest.raises(CapExceeded):
        with work_budget(10):
            PermGroup(gens, 60).order


def test_against_sympy_on_larger_groups():
    sympy_perm = pytest.importorskip("sympy.combinatorics")
    rng = random.Random(5)
    for _ in range(25):
        n = rng.randint(6, 30)
        gens = []
        for _ in range(rng.randint(1, 3)):
            # products of disjoint short cycles on random blocks
            p = list(range(n))
            pts = rng.sample(range(n), rng.randint(2, min(n, 8)))
            for a, b in zip(pts, pts[1:] + pts[:1]):
                p[a] = b
            gens.append(tuple(p))
        ref = sympy_perm.PermutationGroup([sympy_perm.Permutation(list(g)) for g in gens]).order()
        assert PermGroup(gens, n).order == ref


def test_giant_orbit_split_matches_plain_chain():
    # a giant orbit of 9 or 10 points glued to a small orbit, sometimes
    # through a shared quotient (diagonal generators), checked against a
    # stabilizer chain built without the split
    from sgf.permgroup import _Chain

    rng = random.Random(6)
    checked = 0
    for trial in range(30):
        m, rest = rng.choice([9, 10]), rng.randint(2, 5)
        n = m + rest
        gens = []
        for _ in range(rng.randint(2, 3)):
            a = random_perm(m, rng)
            b = random_perm(rest, rng) if rng.random() < 0.7 else tuple(range(rest))
            gens.append(a + tuple(m + x for x in b))
        if trial % 3 == 0:
            # Sym(O) x C2 glued by parity: a transposition on O with a swap on the rest
            gens.append((1, 0) + tuple(range(2, m)) + (m + 1, m) + tuple(range(m + 2, n)))
        G = PermGroup(gens, n)
        if G.split is None:
            continue
        checked += 1
        plain = _Chain(G.gens, n, budget=10**9)
        assert G.order == plain.order
        for _ in range(20):
            x = random_perm(n, rng)
            word = gens[rng.randrange(len(gens))]
            for _ in range(rng.randint(0, 4)):
                word = mul(word, gens[rng.randrange(len(gens))])
            assert G.contains(word)
            assert G.contains(x) == plain.contains(x)
            y = mul(word, x)
            assert G.coset_key(y) == G.coset_key(x)
            z = random_perm(n, rng)
            assert (G.coset_key(z) == G.coset_key(x)) == plain.contains(mul(z, inv(x)))
    assert checked >= 10
