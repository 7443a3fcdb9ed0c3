from __future__ import annotations

import json
import random

import pytest
from hypothesis import given, strategies as st

from oracles import ProductOracle, all_reduced, exponent_sum, inv_str, reduce_str
from sgf.errors import AlreadySmaller, AvoidInSubgroup
from sgf.graph import (
    INFINITE, StallingsGraph, complete, conjugate, contains, from_generators, from_permutations,
    index, intersect, join, rank, relative_index, trivial_group, whole_group,
)
from sgf.sampling import random_cover, random_subgroup
from sgf.words import Word, random_word
from strategies import generator_sets, raw_words


def sg(*gens: str, k: int = 2) -> StallingsGraph:
    return from_generators(list(gens), k)


KERNEL2 = ("b", "aa", "abA")


def test_from_generators_examples():
    a = sg("a")
    assert a.n == 1 and a.to_json()["edges"] == [[0, "a", 0]]
    f2 = sg("a", "b")
    assert f2 == whole_group(2) and f2.n == 1 and f2.num_edges == 2
    h = sg(*KERNEL2)
    assert h.to_json() == {"base": 0, "vertices": 2,
                           "edges": [[0, "a", 1], [0, "b", 0], [1, "a", 0], [1, "b", 1]]}


def test_index_two_kernel_matches_exponent_sum_oracle():
    h = sg(*KERNEL2)
    for w in all_reduced(2, 6):
        assert contains(h, Word.parse(w)) == (exponent_sum(w, "a") % 2 == 0)


def test_contains_examples():
    assert contains(sg("a"), Word.parse("aaa"))
    assert not contains(sg("a"), Word.parse("ab"))
    assert contains(sg(*KERNEL2), Word.parse("abAb"))


def test_rank_examples():
    assert rank(sg("a")) == 1
    h = sg("a", "bAB")
    assert rank(h) == 2 and h.n == 2 and h.num_edges == 3
    assert rank(sg(*KERNEL2)) == 3


def test_index_examples():
    assert index(whole_group(2)) == 1
    assert index(sg("a")) == INFINITE
    assert sg("a").deficiency() == (0, "b", "out")
    assert index(sg(*KERNEL2)) == 2 and sg(*KERNEL2).deficiency() is None


def test_intersection_examples():
    assert intersect(sg("a"), sg("b")) == trivial_group(2)
    assert intersect(sg("aa"), sg("aaa")) == sg("aaaaaa")
    assert intersect(sg("a", "bb"), sg("b")) == sg("bb")


def test_intersection_powers_brute_force():
    I = intersect(sg("aa"), sg("aaa"))
    for m in range(-13, 14):
        assert contains(I, Word.parse("a") ** m) == (m % 6 == 0)


def test_join_examples():
    assert join(sg("a"), sg("b")) == whole_group(2)
    assert join(sg("aa"), sg("aaa")) == sg("a")
    J = join(sg("a"), sg("bb"))
    assert J == sg("a", "bb") and index(J) == INFINITE
    # the only vertex missing edge-ends is the midpoint of the b² loop
    v, letter, _ = J.deficiency()
    assert v == J.step(0, 2) != 0 and letter == "a"


def test_conjugate_examples():
    assert conjugate(sg("a"), Word.parse("")) == sg("a")
    c = conjugate(sg("a"), Word.parse("b"))
    assert c == sg("Bab") and rank(c) == 1 and index(c) == INFINITE
    h = sg(*KERNEL2)
    assert conjugate(h, Word.parse("a")) == h
    for g in ("a", "b", "ab"):
        gw = Word.parse(g)
        assert all(contains(h, gw.inverse() * x * gw) for x in h.basis)


def test_complete_examples():
    U = complete(sg("a"), 3)
    assert U.n == 3 and contains(U, Word.parse("a"))
    assert U.trace(Word.parse("a")) == (0, 1)
    h = sg(*KERNEL2)
    assert complete(h, 2) is h
    V = complete(sg("a"), 2, avoid=Word.parse("b"))
    assert V.out == ((0, 1), (1, 0))
    assert contains(V, Word.parse("a")) and not contains(V, Word.parse("b"))


def test_complete_errors():
    with pytest.raises(AvoidInSubgroup):
        complete(sg("a"), 2, avoid=Word.parse("aa"))
    with pytest.raises(AlreadySmaller):
        complete(sg(*KERNEL2), 5)


def test_serialization_round_trip_and_dot():
    h = sg("a", "bb")
    data = json.loads(json.dumps(h.to_json()))
    assert StallingsGraph.from_json(data, 2) == h
    dot = h.to_dot()
    assert dot == sg("bb", "a").to_dot()
    assert "v0 [shape=doublecircle]" in dot and dot.count("->") == 3
    assert trivial_group(2).to_dot().count("->") == 0


def test_from_permutations_is_canonical():
    U = from_permutations([(0, 2, 1), (1, 2, 0)])
    assert U.n == 3 and U.index == 3
    assert contains(U, Word.parse("a")) and not contains(U, Word.parse("b"))


# properties


def test_folding_confluence_200_sets():
    rng = random.Random(11)
    for _ in range(200):
        k = rng.choice([2, 3])
        gens = [str(random_word(k, rng.randint(1, 7), rng)) for _ in range(rng.randint(1, 4))]
        ref = from_generators(gens, k).to_json()
        for s in range(3):
            shuffled = gens[:]
            random.Random(s).shuffle(shuffled)
            assert from_generators(shuffled, k, rng=random.Random(100 + s)).to_json() == ref


@given(generator_sets(2, 4, 6), st.lists(raw_words(2, 8), max_size=20))
def test_membership_matches_oracles(gens, tests):
    H = from_generators(gens, 2)
    positives = ProductOracle([reduce_str(g) for g in gens], half=4)
    for raw in tests:
        w = reduce_str(raw)
        member = contains(H, Word.parse(w))
        if w in positives:
            assert member
        if not member:
            U = complete(H, H.n + 1 if H.index == INFINITE else 1, avoid=Word.parse(w))
            assert not contains(U, Word.parse(w))
            assert all(contains(U, Word.parse(reduce_str(g))) for g in gens)


@given(generator_sets(2, 3, 5), st.lists(st.integers(0, 2), min_size=1, max_size=8), st.data())
def test_products_of_generators_are_members(gens, idx, data):
    word = ""
    for i in idx:
        g = gens[i % len(gens)]
        word += g if data.draw(st.booleans()) else inv_str(g)
    assert contains(from_generators(gens, 2), Word.parse(reduce_str(word)))


@given(generator_sets(3, 4, 6))
def test_rank_is_euler_characteristic(gens):
    H = from_generators(gens, 3)
    assert rank(H) == H.num_edges - H.n + 1 == len(H.basis)
    # core: no non-base vertex of degree 1
    for v in range(1, H.n):
        deg = sum(1 for i in range(3) if H.out[i][v] >= 0) + sum(1 for i in range(3) if H.inn[i][v] >= 0)
        assert deg >= 2


def test_schreier_exactness_on_covers():
    rng = random.Random(5)
    for _ in range(60):
        k = rng.choice([2, 3])
        U = random_cover(k, rng.randint(1, 15), rng)
        assert rank(U) - 1 == U.index * (k - 1)
        W = complete(random_subgroup(k, rng), rng.randint(2, 12), seed=rng.randint(0, 99))
        assert rank(W) - 1 == W.index * (k - 1)


@given(generator_sets(2, 3, 5), generator_sets(2, 3, 5), st.lists(raw_words(2, 8), max_size=25))
def test_intersection_is_conjunction(ga, gb, tests):
    A, B = from_generators(ga, 2), from_generators(gb, 2)
    I = intersect(A, B)
    for raw in tests:
        w = Word.parse(reduce_str(raw))
        assert contains(I, w) == (contains(A, w) and contains(B, w))


@given(generator_sets(2, 3, 5), generator_sets(2, 3, 5), st.lists(raw_words(2, 8), max_size=25))
def test_join_monotone_and_generated(ga, gb, tests):
    A, B = from_generators(ga, 2), from_generators(gb, 2)
    J = join(A, B)
    assert J == from_generators(ga + gb, 2)
    for raw in tests:
        w = Word.parse(reduce_str(raw))
        if contains(A, w) or contains(B, w):
            assert contains(J, w)


@given(generator_sets(2, 3, 5), raw_words(2, 6), st.lists(raw_words(2, 8), max_size=20))
def test_conjugate_membership(gens, g, tests):
    H = from_generators(gens, 2)
    gw = Word.parse(reduce_str(g))
    C = conjugate(H, gw)
    assert rank(C) == rank(H) and index(C) == index(H)
    for raw in tests:
        w = Word.parse(reduce_str(raw))
        assert contains(C, w) == contains(H, gw * w * gw.inverse())


@given(generator_sets(2, 3, 5), st.integers(1, 12), st.integers(0, 50), raw_words(2, 8))
def test_complete_postconditions(gens, target, seed, avoid):
    H = from_generators(gens, 2)
    if H.is_cover():
        return
    avoid_w = Word.parse(reduce_str(avoid))
    if contains(H, avoid_w):
        with pytest.raises(AvoidInSubgroup):
            complete(H, target, avoid=avoid_w, seed=seed)
        return
    U = complete(H, target, avoid=avoid_w, seed=seed)
    assert U.is_cover() and U.index >= target
    assert all(contains(U, g) for g in H.basis)
    assert not contains(U, avoid_w)
    assert complete(H, target, avoid=avoid_w, seed=seed) == U


@given(generator_sets(2, 3, 4), generator_sets(2, 3, 4))
def test_relative_index_matches_intersection(ga, gb):
    L, R = from_generators(ga, 2), from_generators(gb, 2)
    ri = relative_index(L, R)
    I = intersect(L, R)
    if ri != INFINITE:
        assert rank(I) - 1 == ri * (rank(L) - 1)
