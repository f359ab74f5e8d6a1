"""Exact digital visibility by interval translation and intersection.

For each primitive direction ``v`` the star of the segment ``[0, v]`` is
stored as a lattice map (the *pattern*) and slid over the lattice map
``omega`` of ``Star(C)``; positions where the whole pattern fits are the
base pointels ``p`` for which ``(p, p + v)`` is visible. Pairs along
non-primitive vectors follow by chaining primitive steps.

Two evaluators are provided and must agree:

``"intervals"``
    the interval-algebra sweep over every shift of ``omega``
    (:func:`visibility_direction`).
``"batched"``
    the same containment tests, but evaluated with numpy for all base
    pointels at once; candidate pointels are dropped as soon as one pattern
    fibre fails to fit.
"""

from __future__ import annotations

import itertools
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from math import gcd
from typing import Iterable, Sequence

import numpy as np

from . import intervals as iv
from .cubical import (
    LatticeMap,
    as_codes,
    pick_main_axis,
    project,
    star_codes,
    segment_star,
    to_lattice_map,
    unproject,
)
from .intervals import Interval, IntervalSeq

METHODS = ("batched", "intervals")


def primitive_directions(d: int, r: int) -> list[tuple[int, ...]]:
    """Primitive vectors with ``|v|_inf <= r`` whose first nonzero entry is positive."""
    if r < 1:
        raise ValueError(f"radius must be >= 1, got {r}")
    if d < 1:
        raise ValueError(f"dimension must be >= 1, got {d}")
    out = []
    for v in itertools.product(range(-r, r + 1), repeat=d):
        nz = [c for c in v if c]
        if not nz or nz[0] < 0:
            continue
        g = 0
        for c in nz:
            g = gcd(g, c)
        if g == 1:
            out.append(v)
    return sorted(out)


# -- the interval sweep -------------------------------------------------------


def pattern_map(v, axis: int) -> LatticeMap:
    return to_lattice_map(segment_star(v), axis)


def _fit(omega: LatticeMap, fibres, base: tuple[int, ...], bounds: Interval) -> IntervalSeq:
    R = IntervalSeq([bounds])
    for shift, seq in fibres:
        target = omega[tuple(b + s for b, s in zip(base, shift))]
        if not target:
            return iv.EMPTY
        R = iv.intersection(R, iv.translations(seq, target))
        if not R:
            break
    return R


def visibility_direction(omega: LatticeMap, mv: LatticeMap, bounds: Interval | None = None) -> dict:
    """Translations of the pattern ``mv`` that fit inside ``omega``, per shift.

    Returns ``{S: R}`` where ``R`` holds the main-axis offsets ``t`` such that
    ``mv`` moved by ``(S, t)`` is contained in ``omega``. Shifts with no
    survivor are left out.
    """
    if omega.axis != mv.axis or omega.dim != mv.dim:
        raise ValueError(f"axis mismatch: omega along {omega.axis}, pattern along {mv.axis}")
    if bounds is None:
        bounds = omega.bounds()
    fibres = list(mv.entries.items())
    out = {}
    for S in omega.entries:
        R = _fit(omega, fibres, S, bounds)
        if R:
            out[S] = R
    return out


def pattern_match(omega: LatticeMap, pattern: Iterable) -> set[tuple[int, ...]]:
    """Lattice translations ``t`` with ``Star(pattern) + 2t`` inside ``omega``.

    This is a binary erosion of ``omega`` by the star of the pattern,
    restricted to even (pointel) translations.
    """
    codes = as_codes(pattern, omega.dim)
    if not len(codes):
        raise ValueError("empty pattern")
    pm = to_lattice_map(star_codes(codes), omega.axis)
    fibres = list(pm.entries.items())
    first = fibres[0][0]
    bounds = omega.bounds()
    span = pm.bounds()
    # widen so that every placement of the pattern inside omega is reachable
    wide = Interval(bounds.lo - span.hi, bounds.hi - span.lo)
    out = set()
    seen = set()
    for S in omega.entries:
        base = tuple(a - b for a, b in zip(S, first))
        if base in seen or any(c & 1 for c in base):
            continue
        seen.add(base)
        R = _fit(omega, fibres, base, wide)
        for t in R.values():
            if t % 2 == 0:
                out.add(tuple(c // 2 for c in unproject(base, omega.axis, t)))
    return out


# -- visibility graph ---------------------------------------------------------


class PointIndex:
    """Row lookup for a sorted, duplicate-free ``(n, d)`` point array."""

    def __init__(self, points: np.ndarray, pad: int = 0):
        self.points = points
        d = points.shape[1]
        if len(points):
            self.base = points.min(axis=0) - pad - 1
            ext = points.max(axis=0) + pad + 2 - self.base
        else:
            self.base = np.zeros(d, np.int64)
            ext = np.ones(d, np.int64)
        self.ext = ext
        self.strides = np.ones(d, dtype=np.int64)
        for i in range(d - 2, -1, -1):
            self.strides[i] = self.strides[i + 1] * ext[i + 1]
        self.keys = self.encode(points)
        order = np.argsort(self.keys, kind="stable")
        self.sorted_keys = self.keys[order]
        self.order = order

    def encode(self, pts: np.ndarray) -> np.ndarray:
        rel = np.asarray(pts, dtype=np.int64) - self.base
        inside = ((rel >= 0) & (rel < self.ext)).all(axis=1)
        key = rel @ self.strides
        return np.where(inside, key, -1)

    def lookup(self, pts: np.ndarray) -> np.ndarray:
        """Row index of each query point, ``-1`` where absent."""
        key = self.encode(pts)
        pos = np.searchsorted(self.sorted_keys, key)
        pos = np.minimum(pos, len(self.sorted_keys) - 1)
        if not len(self.sorted_keys):
            return np.full(len(key), -1, dtype=np.int64)
        hit = (self.sorted_keys[pos] == key) & (key >= 0)
        return np.where(hit, self.order[pos], -1)


@dataclass
class VisibilityGraph:
    """Primitive-direction visibility table.

    ``primitive[k, i]`` is true when ``points[i]`` sees
    ``points[i] + directions[k]``. Only the canonical half of the directions
    is stored; the reverse pair is implied.
    """

    points: np.ndarray
    directions: np.ndarray
    primitive: np.ndarray
    radius: int
    _index: PointIndex | None = field(default=None, repr=False, compare=False)

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    @property
    def index(self) -> PointIndex:
        if self._index is None:
            self._index = PointIndex(self.points, pad=self.radius)
        return self._index

    def step(self, k: int) -> np.ndarray:
        """Index of ``points[i] + directions[k]`` or -1."""
        return self.index.lookup(self.points + self.directions[k])

    def index_pairs(self, rmax: int | None = None) -> tuple[np.ndarray, np.ndarray]:
        """Chained visible pairs ``(i, j)`` with ``points[i] < points[j]``, ``|q - p|_inf <= rmax``."""
        rmax = self.radius if rmax is None else rmax
        if rmax > self.radius:
            raise ValueError(f"graph radius {self.radius} is smaller than requested {rmax}")
        I, J = [], []
        for k, u in enumerate(self.directions):
            steps = rmax // int(np.abs(u).max())
            if steps < 1:
                continue
            row = self.primitive[k]
            src = np.flatnonzero(row)
            if not len(src):
                continue
            nxt = self.step(k)
            cur = nxt[src]
            for m in range(1, steps + 1):
                I.append(src)
                J.append(cur)
                if m == steps:
                    break
                ok = row[cur]
                src, cur = src[ok], nxt[cur[ok]]
                if not len(src):
                    break
        if not I:
            e = np.empty(0, dtype=np.int64)
            return e, e
        I = np.concatenate(I)
        J = np.concatenate(J)
        order = np.lexsort((J, I))
        return I[order], J[order]

    def pairs(self, rmax: int | None = None) -> set[tuple[tuple[int, ...], tuple[int, ...]]]:
        I, J = self.index_pairs(rmax)
        P = self.points.tolist()
        return {(tuple(P[i]), tuple(P[j])) for i, j in zip(I.tolist(), J.tolist())}

    def visible_from(self, p, rmax: int | None = None) -> set[tuple[int, ...]]:
        """Points visible from ``p`` (``p`` included)."""
        p = tuple(p)
        out = {p}
        for a, b in self.pairs(rmax):
            if a == p:
                out.add(b)
            elif b == p:
                out.add(a)
        return out


def chain_closure(G: VisibilityGraph, r: int | None = None) -> set:
    """All visible pairs ``(p, q)``, ``p < q``, with ``|q - p|_inf <= r``."""
    return G.pairs(r)


class _Sweep:
    """Flat, searchable form of ``omega`` used by the batched evaluator.

    Every (shift, main-axis coordinate) pair is folded into one integer key
    ``enc(shift) * width + z``, linear in both parts, so the key of a shifted
    query is the base key plus a constant. Interval ``[lo, hi]`` at a shift
    becomes the key range ``[klo, khi]``; ranges never cross shift blocks.
    """

    def __init__(self, omega: LatticeMap, pad: int):
        sh = omega.shifts
        b = omega.bounds()
        self.zbase = b.lo - pad
        self.width = (b.hi - b.lo) + 2 * pad + 1
        slo = sh.min(axis=0) - pad
        ext = sh.max(axis=0) - slo + pad + 1
        self.slo = slo
        # mixed-radix strides, scaled by the main-axis width
        strides = np.ones(len(ext), dtype=np.int64)
        for j in range(len(ext) - 2, -1, -1):
            strides[j] = strides[j + 1] * ext[j + 1]
        self.strides = strides * self.width
        if float(np.prod(ext.astype(float))) * self.width >= 2.0**62:
            raise OverflowError("complex too large for 64-bit sweep keys")
        key0 = (sh - slo) @ self.strides
        klo = key0 + (omega.lo - self.zbase)
        order = np.argsort(klo, kind="stable")
        self.klo = klo[order]
        self.khi = (key0 + (omega.hi - self.zbase))[order]

    def keys(self, shifts: np.ndarray, z: np.ndarray) -> np.ndarray:
        return (shifts - self.slo) @ self.strides + (z - self.zbase)

    def offset(self, shift, dz: int) -> int:
        return int(np.dot(shift, self.strides)) + int(dz)

    def contains(self, q: np.ndarray, length: int) -> np.ndarray:
        """Whether the key range ``[q, q + length]`` lies inside one interval."""
        pos = np.searchsorted(self.klo, q, side="right") - 1
        return (pos >= 0) & (self.khi[np.maximum(pos, 0)] >= q + length)


def _batched_direction(sweep: _Sweep, keys: np.ndarray, v, axis: int) -> np.ndarray:
    """Boolean mask over base pointels (given by their sweep keys) that see ``+v``."""
    mv = pattern_map(v, axis)
    end = project(tuple(2 * c for c in v), axis)
    order = sorted(range(len(mv.lo)), key=lambda i: tuple(mv.shifts[i]) != end)
    alive = np.arange(len(keys))
    q = keys
    for i in order:
        if not len(alive):
            break
        lo, hi = int(mv.lo[i]), int(mv.hi[i])
        ok = sweep.contains(q + sweep.offset(mv.shifts[i], lo), hi - lo)
        alive = alive[ok]
        q = q[ok]
    mask = np.zeros(len(keys), dtype=bool)
    mask[alive] = True
    return mask


def visibility_all(
    C,
    r: int,
    method: str = "batched",
    threads: int = 1,
    directions: Sequence | None = None,
) -> VisibilityGraph:
    """Visibility of every pointel of ``C`` along every primitive direction up to ``r``."""
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}; choose from {METHODS}")
    codes = as_codes(C)
    if not len(codes):
        raise ValueError("empty complex")
    if r < 1:
        raise ValueError(f"radius must be >= 1, got {r}")
    d = codes.shape[1]
    even = ~(codes & 1).any(axis=1)
    points = np.unique(codes[even] // 2, axis=0)
    dirs = primitive_directions(d, r) if directions is None else [tuple(int(c) for c in v) for v in directions]
    table = np.zeros((len(dirs), len(points)), dtype=bool)
    G = VisibilityGraph(points, np.array(dirs, dtype=np.int64).reshape(len(dirs), d), table, r)
    if not len(points):
        return G

    axis = pick_main_axis(codes)
    omega = to_lattice_map(star_codes(codes), axis)
    bounds = omega.bounds()

    if method == "batched":
        sweep = _Sweep(omega, pad=2 * r + 4)
        base = 2 * points
        keys = sweep.keys(np.delete(base, axis, axis=1), base[:, axis])
        # sorted needles keep every searchsorted call cache friendly
        by_key = np.argsort(keys, kind="stable")
        keys = keys[by_key]

        def run(k):
            table[k, by_key] = _batched_direction(sweep, keys, dirs[k], axis)

    else:
        index = G.index

        def run(k):
            hits = []
            for S, R in visibility_direction(omega, pattern_map(dirs[k], axis), bounds).items():
                if any(c & 1 for c in S):
                    continue
                for t in R.values():
                    if t % 2 == 0:
                        hits.append(unproject(S, axis, t))
            if hits:
                idx = index.lookup(np.array(hits, dtype=np.int64) // 2)
                if (idx < 0).any():
                    raise AssertionError("surviving translation is not a pointel of C")
                table[k, idx] = True

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(run, range(len(dirs))))
    else:
        for k in range(len(dirs)):
            run(k)
    return G


# -- export -------------------------------------------------------------------


def pairs_to_rows(G: VisibilityGraph, rmax: int | None = None) -> np.ndarray:
    """``(n, 2d)`` rows ``p..., q...`` of visible pairs in canonical order."""
    I, J = G.index_pairs(rmax)
    return np.hstack([G.points[I], G.points[J]])
