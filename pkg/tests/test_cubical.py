import itertools
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import GOLDEN, STAIRCASE
from digivis.cubical import (
    cell_dim,
    closed_cell_box,
    complex_of_points,
    pick_main_axis,
    pointels_of,
    segment_meets_cell,
    segment_star,
    star_codes,
    star_of_cell,
    star_of_pointel,
    star_of_subcomplex,
    to_lattice_map,
    to_tuples,
)
from digivis.intervals import IntervalSeq


def test_star_of_pointel_2d():
    S = star_of_pointel((0, 0))
    assert S == set(itertools.product((-1, 0, 1), repeat=2))
    assert (0, 0) in S


def test_star_of_pointel_3d():
    S = star_of_pointel((1, 2, 3))
    assert len(S) == 27
    assert S == set(itertools.product(range(1, 4), range(3, 6), range(5, 8)))


def test_star_of_subcomplex_small_cases():
    assert star_of_subcomplex([(0, 0)]) == star_of_pointel((0, 0))
    assert star_of_subcomplex([(1, 1)]) == {(1, 1)}
    assert star_of_cell((1, 0)) == {(1, -1), (1, 0), (1, 1)}


def test_staircase_star_matches_union(staircase):
    expected = set()
    for k in staircase:
        box = [[c] if c & 1 else [c - 1, c, c + 1] for c in k]
        expected |= set(itertools.product(*box))
    S = star_of_subcomplex(staircase)
    assert S == expected
    assert len(S) == 69


def test_star_codes_matches_sets(staircase):
    arr = star_codes(np.array(sorted(staircase)))
    assert to_tuples(arr) == star_of_subcomplex(staircase)
    assert len(arr) == len(to_tuples(arr))


def test_pointel_star_identity_exhaustive():
    for p in itertools.product(range(5), repeat=2):
        assert star_of_subcomplex([tuple(2 * c for c in p)]) == star_of_pointel(p)


@given(st.sets(st.tuples(st.integers(-4, 4), st.integers(-4, 4)), max_size=12))
def test_zero_cells_of_star_are_members(cells):
    S = star_of_subcomplex(cells)
    for y in S:
        if cell_dim(y) == 0:
            assert y in cells
    for k in cells:
        assert k in S


@pytest.mark.parametrize(
    "k, box",
    [((0, 0), ((0, 0), (0, 0))), ((1, 1), ((0, 1), (0, 1))), ((2, 3, 4), ((1, 1), (1, 2), (2, 2))), ((-1, 0), ((-1, 0), (0, 0)))],
)
def test_closed_cell_box(k, box):
    assert closed_cell_box(k) == box


@pytest.mark.parametrize(
    "p, q, k, expected",
    [
        ((0, 0), (2, 1), (1, 1), True),
        ((0, 0), (2, 0), (1, 3), False),
        ((0, 0), (2, 1), (2, 1), True),
        ((0, 0), (0, 0), (0, 0), True),
        ((0, 0), (0, 0), (1, 1), True),
        ((0, 0), (0, 0), (3, 1), False),
        ((0, 0), (2, 2), (3, 1), True),
        ((0, 0), (2, 2), (2, 0), False),
    ],
)
def test_segment_meets_cell(p, q, k, expected):
    assert segment_meets_cell(p, q, k) is expected
    assert segment_meets_cell(q, p, k) is expected


def _meets_float(p, q, k, samples=4001):
    box = closed_cell_box(k)
    for t in np.linspace(0.0, 1.0, samples):
        x = [a + t * (b - a) for a, b in zip(p, q)]
        if all(lo - 1e-12 <= xi <= hi + 1e-12 for (lo, hi), xi in zip(box, x)):
            return True
    return False


def _meets_fraction(p, q, k):
    lo, hi = Fraction(0), Fraction(1)
    for (a, b), pi, qi in zip(closed_cell_box(k), p, q):
        d = qi - pi
        if d == 0:
            if not a <= pi <= b:
                return False
            continue
        t0, t1 = Fraction(a - pi, d), Fraction(b - pi, d)
        lo, hi = max(lo, min(t0, t1)), min(hi, max(t0, t1))
    return lo <= hi


@given(
    st.tuples(st.integers(-3, 3), st.integers(-3, 3), st.integers(-3, 3)),
    st.tuples(st.integers(-3, 3), st.integers(-3, 3), st.integers(-3, 3)),
    st.tuples(st.integers(-7, 7), st.integers(-7, 7), st.integers(-7, 7)),
)
def test_segment_meets_cell_rational(p, q, k):
    assert segment_meets_cell(p, q, k) == _meets_fraction(p, q, k)


def test_segment_meets_cell_agrees_with_sampling():
    rng = np.random.default_rng(5)
    for _ in range(400):
        p = tuple(int(c) for c in rng.integers(-3, 4, 2))
        q = tuple(int(c) for c in rng.integers(-3, 4, 2))
        k = tuple(int(c) for c in rng.integers(-7, 8, 2))
        sampled = _meets_float(p, q, k)
        # sampling can miss a single touching point, never invent one
        if sampled:
            assert segment_meets_cell(p, q, k)
        elif cell_dim(k) == 2 and p != q:
            # a crossing of the open square is long enough to be sampled
            lo, hi = np.array(closed_cell_box(k)).T
            mid = [(a + b) / 2 for a, b in zip(lo, hi)]
            d = np.subtract(q, p)
            t = np.dot(np.subtract(mid, p), d) / np.dot(d, d)
            x = np.add(p, np.clip(t, 0, 1) * d)
            assert not (np.all(x > lo) and np.all(x < hi))


def test_segment_star_unit():
    S = to_tuples(segment_star((1, 0)))
    assert len(S) == 15
    assert S == set(itertools.product(range(-1, 4), range(-1, 2)))
    assert S == star_of_pointel((0, 0)) | star_of_pointel((1, 0)) | star_of_cell((1, 0))


def test_segment_star_diagonal():
    S = to_tuples(segment_star((1, 1)))
    assert (1, 1) in S
    assert (3, -1) not in S
    assert star_of_pointel((0, 0)) <= S
    assert star_of_pointel((1, 1)) <= S


def test_segment_star_2_1_matches_predicate():
    S = to_tuples(segment_star((2, 1)))
    box = itertools.product(range(-1, 6), range(-1, 4))
    assert S == {k for k in box if segment_meets_cell((0, 0), (2, 1), k)}
    assert len(S) == 19
    assert {(0, 0), (4, 2)} <= S


def test_segment_star_rejects_zero():
    with pytest.raises(ValueError):
        segment_star((0, 0))


@pytest.mark.parametrize("v", [(1, 0), (1, 1), (2, 1), (1, -2), (0, 1, 0), (1, 1, 1), (2, -1, 1)])
def test_segment_star_predicate_3d(v):
    d = len(v)
    box = itertools.product(*[range(2 * min(0, c) - 1, 2 * max(0, c) + 2) for c in v])
    assert to_tuples(segment_star(v)) == {k for k in box if segment_meets_cell((0,) * d, v, k)}


@pytest.mark.parametrize("u", [(1, 0), (1, 1), (2, 1), (1, -3), (1, 1, 0), (2, 1, -1)])
@pytest.mark.parametrize("k", [2, 3])
def test_segment_star_union_decomposition(u, k):
    whole = to_tuples(segment_star(tuple(k * c for c in u)))
    base = segment_star(u)
    parts = set()
    for i in range(k):
        parts |= to_tuples(base + 2 * i * np.array(u))
    assert whole == parts


def test_lattice_map_golden_curve():
    moves = "RRRURURUU"
    p = (0, 0)
    pts = [p]
    for m in moves:
        p = (p[0] + 1, p[1]) if m == "R" else (p[0], p[1] + 1)
        pts.append(p)
    C = complex_of_points(pts)
    S = star_of_subcomplex(C)
    assert len(S) == 63
    M = to_lattice_map(S, pick_main_axis(C))
    assert M.n_intervals() == 11
    assert M.dump() + "\n" == (GOLDEN / "curve10_lattice_map.txt").read_text()
    assert M.cells() == S


def test_lattice_map_empty_and_single():
    assert len(to_lattice_map([], 0, dim=2)) == 0
    M = to_lattice_map(star_of_pointel((0, 0)), 1)
    assert len(M) == 3
    for s in [(-1,), (0,), (1,)]:
        assert M[s] == IntervalSeq([(-1, 1)])
    assert M[(7,)] == IntervalSeq()
    assert M.dump().splitlines()[0] == "shift: -1 | [-1,1]"


@given(
    st.sets(st.tuples(st.integers(-5, 5), st.integers(-5, 5), st.integers(-5, 5)), max_size=60),
    st.integers(0, 2),
)
def test_lattice_map_round_trip(cells, axis):
    M = to_lattice_map(list(cells), axis, dim=3)
    assert M.cells() == cells
    assert to_tuples(M.cell_array()) == cells
    assert all(seq.is_canonical() and len(seq) for seq in M.entries.values())


def test_pick_main_axis():
    run = complex_of_points([(i, 0) for i in range(10)])
    assert pick_main_axis(run) == 0
    cube = [tuple(2 * c for c in p) for p in itertools.product((0, 3), repeat=3)]
    assert pick_main_axis(cube) == 0
    assert pick_main_axis([(0, 0), (0, 8)]) == 1
    assert pick_main_axis(complex_of_points(STAIRCASE)) == 0
    with pytest.raises(ValueError):
        pick_main_axis([])


def test_pointels_of():
    assert pointels_of(complex_of_points([(0, 0), (1, 0)])) == {(0, 0), (1, 0)}
