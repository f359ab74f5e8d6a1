import pytest
from hypothesis import given
from hypothesis import strategies as st

from digivis.intervals import (
    EMPTY,
    Interval,
    IntervalSeq,
    from_values,
    intersection,
    member,
    normalize,
    translations,
    translations_single,
)


def seq(*items):
    return IntervalSeq(items)


def test_interval_str():
    assert str(Interval(2, 5)) == "[2,5]"
    assert str(seq((0, 1), (4, 4))) == "[0,1] [4,4]"
    assert str(EMPTY) == ""


@pytest.mark.parametrize(
    "raw, expected",
    [
        ([], []),
        ([(0, 1), (2, 3)], [(0, 3)]),
        ([(5, 6), (0, 2), (1, 3)], [(0, 3), (5, 6)]),
        ([(4, 4), (4, 4)], [(4, 4)]),
    ],
)
def test_normalize(raw, expected):
    assert normalize(raw) == IntervalSeq(expected)


def test_normalize_rejects_inverted():
    with pytest.raises(ValueError):
        normalize([(3, 1)])


@pytest.mark.parametrize(
    "items, k, expected",
    [([(0, 3), (6, 9)], 3, True), ([(0, 3), (6, 9)], 5, False), ([], 0, False), ([(0, 3), (6, 9)], -1, False)],
)
def test_member(items, k, expected):
    L = IntervalSeq(items)
    assert member(L, k) is expected
    assert (k in L) is expected


@pytest.mark.parametrize(
    "K, L, expected",
    [
        ([(0, 3), (6, 9)], [(2, 7)], [(2, 3), (6, 7)]),
        ([(0, 5)], [], []),
        ([(0, 1), (4, 4), (8, 10)], [(1, 9)], [(1, 1), (4, 4), (8, 9)]),
        # equal ends: both sides advance
        ([(0, 3), (5, 6)], [(1, 3), (5, 8)], [(1, 3), (5, 6)]),
    ],
)
def test_intersection(K, L, expected):
    assert intersection(IntervalSeq(K), IntervalSeq(L)) == IntervalSeq(expected)


@pytest.mark.parametrize(
    "p, target, expected",
    [
        ((0, 1), [(0, 5)], [(0, 4)]),
        ((0, 3), [(0, 2), (5, 7)], []),
        ((2, 3), [(0, 3), (10, 12)], [(-2, 0), (8, 9)]),
    ],
)
def test_translations_single(p, target, expected):
    assert translations_single(p, IntervalSeq(target)) == IntervalSeq(expected)


def _brute_translations(P, T, lo=-20, hi=20):
    pv, tv = set(P.values()), set(T.values())
    return [t for t in range(lo, hi + 1) if all(k + t in tv for k in pv)]


def test_translations_single_brute_force():
    got = translations_single((2, 3), seq((0, 3), (10, 12)))
    assert got.values() == _brute_translations(seq((2, 3)), seq((0, 3), (10, 12)))


@pytest.mark.parametrize(
    "P, T, expected",
    [
        # t = 2 also fits: 2 and 4 are both in the target
        ([(0, 0), (2, 2)], [(0, 2), (4, 6)], [(0, 0), (2, 2), (4, 4)]),
        ([(0, 1)], [(3, 8)], [(3, 7)]),
        ([(0, 0), (5, 5)], [(0, 3)], []),
    ],
)
def test_translations(P, T, expected):
    got = translations(IntervalSeq(P), IntervalSeq(T))
    assert got == IntervalSeq(expected)
    assert got.values() == _brute_translations(IntervalSeq(P), IntervalSeq(T), -10, 10)


def test_translations_rejects_empty_pattern():
    with pytest.raises(ValueError):
        translations(EMPTY, seq((0, 4)))


def test_empty_target():
    assert translations(seq((0, 0)), EMPTY) == EMPTY
    assert translations_single((0, 0), EMPTY) == EMPTY


def test_seq_helpers():
    L = seq((0, 2), (5, 5))
    assert L.values() == [0, 1, 2, 5]
    assert L.bounds() == Interval(0, 5)
    assert L.shifted(3) == seq((3, 5), (8, 8))
    assert from_values([5, 1, 2, 0]) == L
    assert L.is_canonical()
    assert not IntervalSeq([(0, 1), (2, 3)]).is_canonical()


value_sets = st.sets(st.integers(-60, 60), max_size=40)


@given(value_sets, value_sets)
def test_intersection_is_set_intersection(a, b):
    K, L = from_values(a), from_values(b)
    got = intersection(K, L)
    assert set(got.values()) == a & b
    assert got.is_canonical()
    assert got == intersection(L, K)


@given(value_sets, value_sets, value_sets)
def test_intersection_associative_idempotent(a, b, c):
    A, B, C = from_values(a), from_values(b), from_values(c)
    assert intersection(intersection(A, B), C) == intersection(A, intersection(B, C))
    assert intersection(A, A) == A


@given(st.lists(st.tuples(st.integers(-50, 50), st.integers(0, 10)), max_size=20))
def test_normalize_idempotent(raw):
    items = [(a, a + w) for a, w in raw]
    once = normalize(items)
    assert normalize(once) == once
    assert once.is_canonical()
    assert set(once.values()) == {k for a, b in items for k in range(a, b + 1)}


@given(st.sets(st.integers(-8, 8), min_size=1, max_size=8), value_sets)
def test_translations_match_brute_force(p, t):
    P, T = from_values(p), from_values(t)
    got = translations(P, T)
    assert got.is_canonical()
    assert got.values() == _brute_translations(P, T, -130, 130)
