"""Sequences of disjoint integer intervals.

An :class:`IntervalSeq` is the run-length atom used by lattice maps: an
ordered tuple of closed intervals ``[lo, hi]`` separated by at least one
missing integer. Everything here is immutable and pure.
"""

from __future__ import annotations

from bisect import bisect_right
from typing import Iterable, NamedTuple


class Interval(NamedTuple):
    lo: int
    hi: int

    def __str__(self) -> str:
        return f"[{self.lo},{self.hi}]"


class IntervalSeq:
    """Canonical set of integers stored as gapped, sorted intervals.

    The constructor trusts its input; use :func:`normalize` for raw data.

    >>> s = normalize([(5, 6), (0, 2), (1, 3)])
    >>> str(s)
    '[0,3] [5,6]'
    >>> 4 in s, 5 in s
    (False, True)
    """

    __slots__ = ("items", "_los")

    def __init__(self, items: Iterable[tuple[int, int]] = ()):
        self.items = tuple(Interval(int(a), int(b)) for a, b in items)
        self._los = None

    def __iter__(self):
        return iter(self.items)

    def __len__(self) -> int:
        return len(self.items)

    def __bool__(self) -> bool:
        return bool(self.items)

    def __getitem__(self, i):
        return self.items[i]

    def __eq__(self, other) -> bool:
        if isinstance(other, IntervalSeq):
            return self.items == other.items
        return NotImplemented

    def __hash__(self) -> int:
        return hash(self.items)

    def __repr__(self) -> str:
        return f"IntervalSeq({[tuple(i) for i in self.items]})"

    def __str__(self) -> str:
        return " ".join(str(i) for i in self.items)

    def __contains__(self, k: int) -> bool:
        return member(self, k)

    def is_canonical(self) -> bool:
        its = self.items
        if any(a > b for a, b in its):
            return False
        return all(its[i].hi + 1 < its[i + 1].lo for i in range(len(its) - 1))

    def values(self) -> list[int]:
        return [k for a, b in self.items for k in range(a, b + 1)]

    def bounds(self) -> Interval:
        if not self.items:
            raise ValueError("empty interval sequence has no bounds")
        return Interval(self.items[0].lo, self.items[-1].hi)

    def shifted(self, t: int) -> IntervalSeq:
        return IntervalSeq((a + t, b + t) for a, b in self.items)


EMPTY = IntervalSeq()


def normalize(raw: Iterable[tuple[int, int]]) -> IntervalSeq:
    """Sort and merge overlapping or adjacent intervals."""
    spans = sorted((int(a), int(b)) for a, b in raw)
    out: list[list[int]] = []
    for a, b in spans:
        if a > b:
            raise ValueError(f"invalid interval [{a},{b}]")
        if out and a <= out[-1][1] + 1:
            if b > out[-1][1]:
                out[-1][1] = b
        else:
            out.append([a, b])
    return IntervalSeq(out)


def from_values(values: Iterable[int]) -> IntervalSeq:
    return normalize((k, k) for k in values)


def member(seq: IntervalSeq, k: int) -> bool:
    if seq._los is None:
        seq._los = [a for a, _ in seq.items]
    i = bisect_right(seq._los, k) - 1
    return i >= 0 and k <= seq.items[i].hi


def intersection(K: IntervalSeq, L: IntervalSeq) -> IntervalSeq:
    """Two-pointer sweep; equal ends advance both cursors."""
    out = []
    k = l = 0
    nk, nl = len(K.items), len(L.items)
    while k < nk and l < nl:
        a, b = K.items[k]
        c, d = L.items[l]
        e = a if a > c else c
        f = b if b < d else d
        if e <= f:
            out.append((e, f))
        if b <= d:
            k += 1
        if d <= b:
            l += 1
    return IntervalSeq(out)


def translations_single(p: tuple[int, int], target: IntervalSeq) -> IntervalSeq:
    """All ``t`` such that ``[p.lo + t, p.hi + t]`` lies inside ``target``.

    Each target interval long enough to hold ``p`` contributes one interval
    of offsets; the target's gaps keep those disjoint, so the result is
    already canonical.
    """
    lo, hi = p
    span = hi - lo
    return IntervalSeq((c - lo, d - hi) for c, d in target.items if d - c >= span)


def translations(P: IntervalSeq, target: IntervalSeq) -> IntervalSeq:
    """All ``t`` such that every integer of ``P`` shifted by ``t`` is in ``target``."""
    if not P:
        raise ValueError("empty pattern fits everywhere; translations are unbounded")
    items = P.items
    result = translations_single(items[0], target)
    for p in items[1:]:
        if not result:
            break
        result = intersection(result, translations_single(p, target))
    return result
