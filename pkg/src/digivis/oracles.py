"""Slow, exact reference implementations of digital visibility.

Two independent characterizations are checked against each other and
against the engine:

* star inclusion: ``Star([p, q])`` is a subset of ``Star(C)``;
* chessboard distance: every point of ``[p, q]`` is at l-inf distance
  strictly below 1 from some point of ``X``.

:func:`brute_force_pairs` is the pairwise baseline used for timing: it tests
each pair cell by cell against a dense Khalimsky grid, with no interval
compression and no chaining.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache
from math import lcm

import numpy as np

from .cubical import (
    as_codes,
    khalimsky_box,
    pointels_of,
    segment_meets_cell,
    segment_star,
    star_codes,
    star_of_subcomplex,
)


@lru_cache(maxsize=4096)
def _relative_segment_cells(w: tuple[int, ...]) -> tuple[tuple[int, ...], ...]:
    origin = (0,) * len(w)
    return tuple(k for k in khalimsky_box(origin, w) if segment_meets_cell(origin, w, k))


def segment_cells(p, q) -> list[tuple[int, ...]]:
    """Codes of the cells met by the closed segment ``[p, q]``."""
    w = tuple(b - a for a, b in zip(p, q))
    return [tuple(2 * a + c for a, c in zip(p, k)) for k in _relative_segment_cells(w)]


def visible_star_oracle(C, p, q, star: set | None = None) -> bool:
    """Definition-level check; pass ``star`` to reuse a precomputed ``Star(C)``."""
    if star is None:
        star = star_of_subcomplex(C)
    return all(k in star for k in segment_cells(tuple(p), tuple(q)))


def visible_chessboard_oracle(X, p, q) -> bool:
    """Whether ``[p, q]`` stays inside the union of open unit l-inf balls around ``X``.

    The segment parameter is scaled by the lcm of the nonzero components of
    ``q - p`` so each ball contributes an open integer interval; visibility
    holds when those intervals cover ``[0, scale]``.
    """
    p, q = tuple(p), tuple(q)
    w = [b - a for a, b in zip(p, q)]
    scale = 1
    for c in w:
        if c:
            scale = lcm(scale, abs(c))
    lo_box = [min(a, b) for a, b in zip(p, q)]
    hi_box = [max(a, b) for a, b in zip(p, q)]
    spans = []
    for x in X:
        if any(not lo_box[i] <= x[i] <= hi_box[i] for i in range(len(p))):
            continue
        lo, hi = None, None
        empty = False
        for xi, pi, wi in zip(x, p, w):
            if wi == 0:
                if xi != pi:
                    empty = True
                    break
                continue
            m = scale // wi
            a, b = (xi - 1 - pi) * m, (xi + 1 - pi) * m
            if a > b:
                a, b = b, a
            lo = a if lo is None else max(lo, a)
            hi = b if hi is None else min(hi, b)
            if lo >= hi:
                empty = True
                break
        if empty:
            continue
        if lo is None:
            # degenerate segment sitting on x
            return True
        spans.append((lo, hi))
    # sweep the open intervals over the closed range [0, scale]
    spans.sort()
    cur = 0
    best = None
    i = 0
    while True:
        while i < len(spans) and spans[i][0] < cur:
            best = spans[i][1] if best is None else max(best, spans[i][1])
            i += 1
        if best is None or best <= cur:
            return False
        if best > scale:
            return True
        cur = best


def visible_set_oracle(C, p, r: int, star: set | None = None) -> set[tuple[int, ...]]:
    """Pointels of ``C`` within l-inf distance ``r`` of ``p`` that ``p`` sees."""
    C = [tuple(k) for k in C]
    pts = pointels_of(C)
    p = tuple(p)
    if p not in pts:
        raise ValueError(f"{p} is not a pointel of the complex")
    if star is None:
        star = star_of_subcomplex(C)
    return {
        q for q in pts
        if max(abs(a - b) for a, b in zip(p, q)) <= r and visible_star_oracle(C, p, q, star)
    }


@dataclass(frozen=True)
class OracleReport:
    pair: tuple
    star_inclusion: bool
    chessboard: bool

    @property
    def agree(self) -> bool:
        return self.star_inclusion == self.chessboard


def compare_oracles(X, p, q, star: set | None = None) -> OracleReport:
    """Run both definitions on the complex made of the 0-cells of ``X``."""
    X = [tuple(x) for x in X]
    if star is None:
        star = star_of_subcomplex(tuple(2 * c for c in x) for x in X)
    return OracleReport(
        (tuple(p), tuple(q)),
        visible_star_oracle(None, p, q, star),
        visible_chessboard_oracle(X, p, q),
    )


def oracle_pairs(C, r: int) -> set:
    """All visible pairs ``p < q`` with ``|q - p|_inf <= r``, by star inclusion."""
    C = [tuple(k) for k in C]
    star = star_of_subcomplex(C)
    pts = sorted(pointels_of(C))
    out = set()
    for a, b in itertools.combinations(pts, 2):
        if max(abs(x - y) for x, y in zip(a, b)) <= r and visible_star_oracle(C, a, b, star):
            out.add((a, b))
    return out


def chessboard_pairs(X, r: int) -> set:
    pts = sorted({tuple(x) for x in X})
    out = set()
    for a, b in itertools.combinations(pts, 2):
        if max(abs(x - y) for x, y in zip(a, b)) <= r and visible_chessboard_oracle(pts, a, b):
            out.add((a, b))
    return out


def brute_force_pairs(C, r: int) -> tuple[np.ndarray, np.ndarray]:
    """Baseline: test every pair ``(p, p + w)``, ``w`` in the half box, cell by cell.

    Returns ``(points, pairs)`` where ``pairs`` holds ``(i, j)`` row indices
    into the sorted pointel array with ``points[i] < points[j]``.
    """
    codes = as_codes(C)
    d = codes.shape[1]
    even = ~(codes & 1).any(axis=1)
    points = np.unique(codes[even] // 2, axis=0)
    star = star_codes(codes)
    pad = 2 * r + 3
    lo = star.min(axis=0) - pad
    shape = tuple(star.max(axis=0) + pad + 1 - lo)
    grid = np.zeros(shape, dtype=bool)
    grid[tuple((star - lo).T)] = True

    from .engine import PointIndex

    index = PointIndex(points, pad=r)
    base = 2 * points - lo
    I, J = [], []
    for w in itertools.product(range(-r, r + 1), repeat=d):
        nz = [c for c in w if c]
        if not nz or nz[0] < 0:
            continue
        dst = index.lookup(points + np.array(w))
        alive = np.flatnonzero(dst >= 0)
        for cell in segment_star(w):
            if not len(alive):
                break
            pos = base[alive] + cell
            alive = alive[grid[tuple(pos.T)]]
        I.append(alive)
        J.append(dst[alive])
    I = np.concatenate(I) if I else np.empty(0, np.int64)
    J = np.concatenate(J) if J else np.empty(0, np.int64)
    order = np.lexsort((J, I))
    return points, np.stack([I[order], J[order]], axis=1)
