"""Cubical cell complex of Z^d in Khalimsky coordinates.

A cell is identified by the doubled coordinates of its centroid (its
Khalimsky code): odd coordinates span an open unit interval, even ones are
degenerate. Pointel ``p`` has code ``2p``. Subcomplexes are plain sets of
code tuples, or ``(n, d)`` integer arrays in the vectorized helpers.

Lattice maps store a cell set as run-length fibres along a main axis: each
shift (the code with the axis coordinate removed) maps to an
:class:`~digivis.intervals.IntervalSeq` of axis coordinates.
"""

from __future__ import annotations

import itertools
from functools import lru_cache
from math import lcm
from typing import Iterable, Iterator, Mapping

import numpy as np

from .intervals import EMPTY, Interval, IntervalSeq

Point = tuple[int, ...]
KCode = tuple[int, ...]


def as_codes(cells, d: int | None = None) -> np.ndarray:
    """Coerce a cell collection to an ``(n, d)`` int64 array."""
    if isinstance(cells, np.ndarray):
        arr = np.asarray(cells, dtype=np.int64)
    else:
        cells = list(cells)
        if not cells:
            return np.empty((0, d or 0), dtype=np.int64)
        arr = np.array(cells, dtype=np.int64)
    if arr.ndim != 2:
        raise ValueError("expected an (n, d) array of codes")
    return arr


def to_tuples(arr: np.ndarray) -> set[tuple[int, ...]]:
    return set(map(tuple, arr.tolist()))


def cell_dim(k: KCode) -> int:
    return sum(c & 1 for c in k)


def pointel_code(p: Point) -> KCode:
    return tuple(2 * c for c in p)


def pointels_of(C: Iterable[KCode]) -> set[Point]:
    """The 0-cells of a subcomplex, as lattice points."""
    return {tuple(c // 2 for c in k) for k in C if not any(c & 1 for c in k)}


def complex_of_points(points: Iterable[Point], with_linels: bool = True) -> set[KCode]:
    """0-cells of ``points`` plus the linels joining 1-adjacent pairs."""
    pts = {tuple(p) for p in points}
    cells = {pointel_code(p) for p in pts}
    if with_linels:
        for p in pts:
            for i in range(len(p)):
                q = p[:i] + (p[i] + 1,) + p[i + 1:]
                if q in pts:
                    cells.add(tuple(2 * c + (j == i) for j, c in enumerate(p)))
    return cells


# -- stars --------------------------------------------------------------------


def star_of_cell(k: KCode) -> set[KCode]:
    ranges = [(c,) if c & 1 else (c - 1, c, c + 1) for c in k]
    return set(itertools.product(*ranges))


def star_of_pointel(p: Point) -> set[KCode]:
    return star_of_cell(pointel_code(p))


def star_of_subcomplex(C: Iterable[KCode]) -> set[KCode]:
    out: set[KCode] = set()
    for k in C:
        out |= star_of_cell(tuple(k))
    return out


def star_codes(codes: np.ndarray) -> np.ndarray:
    """Vectorized star: unique, lexicographically sorted codes."""
    codes = as_codes(codes)
    n, d = codes.shape
    if n == 0:
        return codes
    odd = (codes & 1).astype(bool)
    parts = []
    for off in itertools.product((-1, 0, 1), repeat=d):
        off = np.array(off, dtype=np.int64)
        moving = off != 0
        sel = ~(odd[:, moving].any(axis=1)) if moving.any() else np.ones(n, bool)
        parts.append(codes[sel] + off)
    return np.unique(np.concatenate(parts), axis=0)


# -- exact segment / cell incidence ------------------------------------------


def closed_cell_box(k: KCode) -> tuple[tuple[int, int], ...]:
    """Per-axis integer bounds of the closure of cell ``k``."""
    return tuple(((c - 1) // 2, (c + 1) // 2) if c & 1 else (c // 2, c // 2) for c in k)


def segment_meets_cell(p: Point, q: Point, k: KCode) -> bool:
    """Closed segment ``[p, q]`` against the closed cell ``k``, exactly.

    The segment parameter is scaled by the lcm of the nonzero direction
    components so every slab bound becomes an integer.
    """
    box = closed_cell_box(k)
    dirs = [b - a for a, b in zip(p, q)]
    scale = 1
    for c in dirs:
        if c:
            scale = lcm(scale, abs(c))
    lo, hi = 0, scale
    for (a, b), pi, di in zip(box, p, dirs):
        if di == 0:
            if not a <= pi <= b:
                return False
            continue
        m = scale // di
        t0, t1 = (a - pi) * m, (b - pi) * m
        if t0 > t1:
            t0, t1 = t1, t0
        lo = max(lo, t0)
        hi = min(hi, t1)
        if lo > hi:
            return False
    return True


def khalimsky_box(p: Point, q: Point) -> Iterator[KCode]:
    """Every code whose closure can meet the box spanned by ``p`` and ``q``."""
    ranges = [range(2 * min(a, b) - 1, 2 * max(a, b) + 2) for a, b in zip(p, q)]
    return itertools.product(*ranges)


def segment_star(v: Point) -> np.ndarray:
    """Codes of all cells whose closure meets the segment ``[0, v]``.

    Vectorized form of :func:`segment_meets_cell` over the Khalimsky bounding
    box; each per-axis parameter bound is an integer multiple of
    ``1/|v_i|`` so comparisons are done by integer cross-multiplication.
    """
    v = tuple(int(c) for c in v)
    if not any(v):
        raise ValueError("segment_star needs a nonzero vector")
    return _segment_star_cached(v).copy()


@lru_cache(maxsize=None)
def _segment_star_cached(v: Point) -> np.ndarray:
    axes = [np.arange(2 * min(0, c) - 1, 2 * max(0, c) + 2, dtype=np.int64) for c in v]
    grid = np.stack([g.ravel() for g in np.meshgrid(*axes, indexing="ij")], axis=1)
    odd = grid & 1
    box_lo = (grid - odd) // 2
    box_hi = (grid + odd) // 2
    keep = np.ones(len(grid), dtype=bool)
    # parameter bounds as (numerator, denominator); [0, 1] is (0/1, 1/1)
    lows = [(np.zeros(len(grid), np.int64), 1)]
    highs = [(np.ones(len(grid), np.int64), 1)]
    for i, c in enumerate(v):
        if c == 0:
            keep &= (box_lo[:, i] <= 0) & (box_hi[:, i] >= 0)
        elif c > 0:
            lows.append((box_lo[:, i], c))
            highs.append((box_hi[:, i], c))
        else:
            lows.append((-box_hi[:, i], -c))
            highs.append((-box_lo[:, i], -c))
    for ln, ld in lows:
        for hn, hd in highs:
            keep &= ln * hd <= hn * ld
    return grid[keep]


# -- lattice maps -------------------------------------------------------------


def project(code, axis: int) -> tuple[int, ...]:
    return tuple(code[:axis]) + tuple(code[axis + 1:])


def unproject(shift, axis: int, t: int) -> tuple[int, ...]:
    return tuple(shift[:axis]) + (t,) + tuple(shift[axis:])


class LatticeMap:
    """Fibres of a cell set along ``axis``.

    ``shifts``/``lo``/``hi`` are the flat sorted form (one row per interval,
    ordered by shift then ``lo``); :attr:`entries` is the dict view keyed by
    shift tuple.
    """

    def __init__(self, dim: int, axis: int, shifts: np.ndarray, lo: np.ndarray, hi: np.ndarray):
        if not 0 <= axis < dim:
            raise ValueError(f"axis {axis} out of range for dimension {dim}")
        self.dim = dim
        self.axis = axis
        self.shifts = shifts
        self.lo = lo
        self.hi = hi
        self._entries: dict[tuple[int, ...], IntervalSeq] | None = None

    @classmethod
    def from_entries(cls, dim: int, axis: int, entries: Mapping[tuple, IntervalSeq]) -> LatticeMap:
        rows = [(tuple(s), a, b) for s, seq in entries.items() if seq for a, b in seq]
        rows.sort()
        shifts = np.array([r[0] for r in rows], dtype=np.int64).reshape(len(rows), dim - 1)
        lo = np.array([r[1] for r in rows], dtype=np.int64)
        hi = np.array([r[2] for r in rows], dtype=np.int64)
        return cls(dim, axis, shifts, lo, hi)

    @property
    def entries(self) -> dict[tuple[int, ...], IntervalSeq]:
        if self._entries is None:
            out: dict[tuple[int, ...], list] = {}
            for s, a, b in zip(map(tuple, self.shifts.tolist()), self.lo.tolist(), self.hi.tolist()):
                out.setdefault(s, []).append((a, b))
            self._entries = {s: IntervalSeq(v) for s, v in out.items()}
        return self._entries

    def __getitem__(self, shift) -> IntervalSeq:
        return self.entries.get(tuple(shift), EMPTY)

    def __contains__(self, shift) -> bool:
        return tuple(shift) in self.entries

    def __len__(self) -> int:
        return len(self.entries)

    def n_intervals(self) -> int:
        return len(self.lo)

    def bounds(self) -> Interval:
        """Extent along the main axis (the ``BoundingBoxZ`` of the map)."""
        if not len(self.lo):
            raise ValueError("empty lattice map")
        return Interval(int(self.lo.min()), int(self.hi.max()))

    def cells(self) -> set[KCode]:
        return {unproject(s, self.axis, t) for s, seq in self.entries.items() for t in seq.values()}

    def cell_array(self) -> np.ndarray:
        lens = self.hi - self.lo + 1
        t = np.repeat(self.lo - np.cumsum(np.r_[0, lens[:-1]]), lens) + np.arange(lens.sum())
        s = np.repeat(self.shifts, lens, axis=0)
        return np.insert(s, self.axis, t, axis=1) if len(t) else np.empty((0, self.dim), np.int64)

    def dump(self) -> str:
        """Text form, one fibre per line: ``shift: q1 q2 | [a,b] [c,d]``."""
        lines = []
        for s in sorted(self.entries):
            lines.append(f"shift: {' '.join(map(str, s))} | {self.entries[s]}")
        return "\n".join(lines)

    def __eq__(self, other) -> bool:
        if not isinstance(other, LatticeMap):
            return NotImplemented
        return self.axis == other.axis and self.dim == other.dim and self.entries == other.entries

    def __repr__(self) -> str:
        return f"LatticeMap(dim={self.dim}, axis={self.axis}, shifts={len(self)}, intervals={self.n_intervals()})"


def to_lattice_map(C, axis: int, dim: int | None = None) -> LatticeMap:
    codes = as_codes(C, dim)
    d = codes.shape[1] if codes.shape[1] else (dim or 0)
    if d == 0:
        raise ValueError("cannot infer the dimension of an empty complex; pass dim")
    if not len(codes):
        return LatticeMap(d, axis, np.empty((0, d - 1), np.int64), np.empty(0, np.int64), np.empty(0, np.int64))
    codes = np.unique(codes, axis=0)
    proj = np.delete(codes, axis, axis=1)
    t = codes[:, axis]
    order = np.lexsort((t,) + tuple(proj[:, j] for j in reversed(range(d - 1))))
    proj, t = proj[order], t[order]
    new_shift = np.ones(len(t), dtype=bool)
    if len(t) > 1:
        new_shift[1:] = (proj[1:] != proj[:-1]).any(axis=1)
    brk = new_shift.copy()
    brk[1:] |= t[1:] != t[:-1] + 1
    starts = np.flatnonzero(brk)
    ends = np.r_[starts[1:], len(t)] - 1
    return LatticeMap(d, axis, proj[starts], t[starts], t[ends])


def pick_main_axis(C) -> int:
    """Axis of largest Khalimsky extent; ties go to the smallest index."""
    codes = as_codes(C)
    if not len(codes):
        raise ValueError("cannot pick an axis for an empty complex")
    extent = codes.max(axis=0) - codes.min(axis=0)
    return int(np.argmax(extent))
