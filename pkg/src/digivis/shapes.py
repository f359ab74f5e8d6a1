"""Implicit test shapes, Gauss digitization and boundary surfaces.

Conventions: a lattice point ``v`` returned by :func:`gauss_digitize` is a
voxel, i.e. the d-cell with Khalimsky code ``2v + 1``. Its corners are the
pointels ``v .. v + 1``. In world units the voxel is centred on ``h * v``,
so pointel ``p`` sits at ``h * (p - 1/2)``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from importlib import resources
from typing import Callable

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .engine import PointIndex


def load_defaults() -> dict:
    with resources.files("digivis").joinpath("data/shapes.toml").open("rb") as fh:
        return tomllib.load(fh)


@dataclass(frozen=True)
class ImplicitShape:
    name: str
    dim: int
    f: Callable[[np.ndarray], np.ndarray]
    grad: Callable[[np.ndarray], np.ndarray]
    bbox: tuple[tuple[float, ...], tuple[float, ...]]
    params: dict = field(default_factory=dict)

    def __call__(self, x) -> np.ndarray:
        return self.f(np.atleast_2d(np.asarray(x, dtype=float)))


def _cube(half: float, dim: int):
    return (tuple([-half] * dim), tuple([half] * dim))


def _sphere(radius: float, dim: int = 3):
    R = float(radius)
    return (
        lambda x: (x * x).sum(axis=1) - R * R,
        lambda x: 2.0 * x,
        _cube(1.05 * R + 0.5, dim),
    )


def _ellipsoid(radii):
    r = np.asarray(radii, dtype=float)
    return (
        lambda x: ((x / r) ** 2).sum(axis=1) - 1.0,
        lambda x: 2.0 * x / r**2,
        (tuple(-1.05 * r - 0.5), tuple(1.05 * r + 0.5)),
    )


def _power_ball(radius: float, power: int, dim: int = 3):
    # sum |x_i|^n - R^n; the absolute value keeps odd powers bounded
    R = float(radius)
    n = power
    return (
        lambda x: (np.abs(x) ** n).sum(axis=1) - R**n,
        lambda x: n * np.sign(x) * np.abs(x) ** (n - 1),
        _cube(1.05 * R + 0.5, dim),
    )


def _goursat(a: float, b: float, c: float):
    def f(x):
        s = (x * x).sum(axis=1)
        return (x**4).sum(axis=1) + a * s * s + b * s + c

    def grad(x):
        s = (x * x).sum(axis=1)[:, None]
        return 4 * x**3 + 4 * a * s * x + 2 * b * x

    # sum x^4 >= s^2 / 3 with s = |x|^2, so f > 0 beyond the largest root
    # of (1/3 + a) s^2 + b s + c
    k = 1.0 / 3.0 + a
    if k <= 0:
        raise ValueError("goursat shape is unbounded for a <= -1/3")
    roots = [z.real for z in np.roots([k, b, c]) if abs(z.imag) < 1e-9 and z.real > 0]
    half = np.sqrt(max(roots, default=1.0)) * 1.05 + 0.5
    return f, grad, _cube(half, 3)


def _torus(major: float, minor: float):
    R, rho = float(major), float(minor)

    def f(x):
        q = np.hypot(x[:, 0], x[:, 1])
        return (q - R) ** 2 + x[:, 2] ** 2 - rho * rho

    def grad(x):
        q = np.hypot(x[:, 0], x[:, 1])
        k = 2 * (q - R) / np.where(q > 0, q, 1.0)
        return np.stack([k * x[:, 0], k * x[:, 1], 2 * x[:, 2]], axis=1)

    e = R + rho
    return f, grad, ((-1.05 * e - 0.5, -1.05 * e - 0.5, -rho * 1.05 - 0.5), (1.05 * e + 0.5, 1.05 * e + 0.5, rho * 1.05 + 0.5))


def _halfspace(extent: float, dim: int = 3):
    def grad(x):
        g = np.zeros_like(x)
        g[:, 0] = 1.0
        return g

    return (lambda x: x[:, 0].copy(), grad, _cube(float(extent), dim))


_BUILDERS = {
    "sphere": lambda p: (_sphere(p["radius"], int(p.get("dim", 3))), int(p.get("dim", 3))),
    "circle": lambda p: (_sphere(p["radius"], 2), 2),
    "ellipsoid": lambda p: (_ellipsoid(p["radii"]), len(p["radii"])),
    "sphere9": lambda p: (_power_ball(p["radius"], 9), 3),
    "rcube": lambda p: (_power_ball(p["radius"], 4), 3),
    "goursat": lambda p: (_goursat(p["a"], p["b"], p["c"]), 3),
    "torus": lambda p: (_torus(p["major"], p["minor"]), 3),
    "halfspace": lambda p: (_halfspace(p["extent"], int(p.get("dim", 3))), int(p.get("dim", 3))),
}

SHAPES = tuple(sorted(_BUILDERS))


def make_shape(name: str, **params) -> ImplicitShape:
    """Build a registered shape; keyword arguments override the TOML defaults."""
    if name not in _BUILDERS:
        raise KeyError(f"unknown shape {name!r}; valid shapes: {', '.join(SHAPES)}")
    merged = dict(load_defaults().get(name, {}))
    merged.update(params)
    (f, grad, bbox), dim = _BUILDERS[name](merged)
    return ImplicitShape(name, dim, f, grad, bbox, merged)


def gauss_digitize(shape: ImplicitShape, h: float, bbox=None) -> np.ndarray:
    """Lattice points ``p`` with ``f(h p) <= 0`` and ``h p`` inside ``bbox``."""
    if h <= 0:
        raise ValueError(f"gridstep must be positive, got {h}")
    lo, hi = _lattice_range(shape.bbox if bbox is None else bbox, h)
    axes = [np.arange(a, b + 1) for a, b in zip(lo, hi)]
    if any(len(a) == 0 for a in axes):
        return np.empty((0, shape.dim), np.int64)
    grid = np.stack([g.ravel() for g in np.meshgrid(*axes, indexing="ij")], axis=1).astype(np.int64)
    keep = shape.f(h * grid.astype(float)) <= 0
    return grid[keep]


def _lattice_range(bbox, h):
    lo = np.ceil(np.asarray(bbox[0], float) / h - 1e-12).astype(np.int64)
    hi = np.floor(np.asarray(bbox[1], float) / h + 1e-12).astype(np.int64)
    return lo, hi


@dataclass
class DigitalSurface:
    """Boundary of a voxel set.

    ``surfels`` are Khalimsky codes of the (d-1)-cells separating an inside
    voxel from an outside one; ``surfel_normals`` are the matching
    inside-to-outside axis vectors. ``clipped`` marks surfels created by
    the digitization box rather than by the shape itself.
    """

    gridstep: float
    inside: np.ndarray
    surfels: np.ndarray
    surfel_normals: np.ndarray
    pointels: np.ndarray
    complex: np.ndarray
    clipped: np.ndarray

    @property
    def dim(self) -> int:
        return self.inside.shape[1]

    def pointel_positions(self) -> np.ndarray:
        return self.gridstep * (self.pointels - 0.5)

    def cells_of_dim(self, k: int) -> np.ndarray:
        return self.complex[(self.complex & 1).sum(axis=1) == k]

    def euler_characteristic(self) -> int:
        return sum((-1) ** k * len(self.cells_of_dim(k)) for k in range(self.dim))

    def pointel_trivial_normals(self) -> tuple[np.ndarray, np.ndarray]:
        """Sum of incident trivial normals and incidence count per pointel."""
        index = PointIndex(self.pointels, pad=1)
        acc = np.zeros(self.pointels.shape, dtype=float)
        cnt = np.zeros(len(self.pointels), dtype=np.int64)
        for corner in _surfel_corners(self.surfels):
            idx = index.lookup(corner)
            np.add.at(acc, idx, self.surfel_normals)
            np.add.at(cnt, idx, 1)
        return acc, cnt

    def clipped_pointels(self) -> np.ndarray:
        if not self.clipped.any():
            return np.empty((0, self.dim), np.int64)
        return np.unique(np.concatenate(_surfel_corners(self.surfels[self.clipped])), axis=0)

    def evaluation_mask(self, margin: int) -> np.ndarray:
        """Pointels farther than ``margin`` (l-inf) from every clipped surfel."""
        bad = self.clipped_pointels()
        mask = np.ones(len(self.pointels), dtype=bool)
        if not len(bad):
            return mask
        index = PointIndex(self.pointels, pad=margin + 1)
        for off in itertools.product(range(-margin, margin + 1), repeat=self.dim):
            idx = index.lookup(bad + np.array(off))
            mask[idx[idx >= 0]] = False
        return mask


def _surfel_corners(surfels: np.ndarray) -> list[np.ndarray]:
    """The 2^(d-1) pointels of each surfel, one array per corner slot."""
    odd = (surfels & 1).astype(bool)
    d = surfels.shape[1]
    out = []
    for signs in itertools.product((-1, 1), repeat=d - 1):
        off = np.zeros_like(surfels)
        # distribute the signs over each row's odd axes in order
        cols = np.argsort(~odd, axis=1, kind="stable")[:, : d - 1]
        for j, s in enumerate(signs):
            off[np.arange(len(surfels)), cols[:, j]] = s
        out.append((surfels + off) // 2)
    return out


def surfel_faces(surfels: np.ndarray) -> np.ndarray:
    """Every cell in the closure of the given cells."""
    odd = (surfels & 1).astype(bool)
    d = surfels.shape[1]
    parts = []
    for off in itertools.product((-1, 0, 1), repeat=d):
        off = np.array(off, dtype=np.int64)
        moving = off != 0
        sel = odd[:, moving].all(axis=1) if moving.any() else np.ones(len(surfels), bool)
        parts.append(surfels[sel] + off)
    return np.unique(np.concatenate(parts), axis=0)


def extract_boundary(inside, gridstep: float = 1.0, outside_inside=None) -> DigitalSurface:
    """Boundary surfels, their faces and pointels for a voxel set.

    ``outside_inside`` optionally classifies the outside neighbours (a
    callable on an ``(n, d)`` array); surfels whose outer voxel it reports
    as inside the shape are flagged as clipped.
    """
    inside = np.unique(np.asarray(inside, dtype=np.int64).reshape(-1, np.shape(inside)[-1]), axis=0)
    d = inside.shape[1]
    index = PointIndex(inside, pad=1)
    codes, normals, outer = [], [], []
    for i in range(d):
        e = np.zeros(d, dtype=np.int64)
        e[i] = 1
        for s in (-1, 1):
            nb = inside + s * e
            free = index.lookup(nb) < 0
            codes.append(2 * inside[free] + 1 + s * e)
            normals.append(np.broadcast_to(s * e, (int(free.sum()), d)))
            outer.append(nb[free])
    surfels = np.concatenate(codes) if codes else np.empty((0, d), np.int64)
    normals = np.concatenate(normals) if normals else np.empty((0, d), np.int64)
    outer = np.concatenate(outer) if outer else np.empty((0, d), np.int64)
    order = np.lexsort(tuple(surfels[:, j] for j in reversed(range(d))))
    surfels, normals, outer = surfels[order], normals[order], outer[order]
    clipped = np.zeros(len(surfels), dtype=bool)
    if outside_inside is not None and len(outer):
        clipped = np.asarray(outside_inside(outer), dtype=bool)
    if len(surfels):
        cells = surfel_faces(surfels)
        even = ~(cells & 1).any(axis=1)
        pointels = cells[even] // 2
    else:
        cells = np.empty((0, d), np.int64)
        pointels = np.empty((0, d), np.int64)
    return DigitalSurface(float(gridstep), inside, surfels, np.ascontiguousarray(normals), pointels, cells, clipped)


def digitize_surface(shape: ImplicitShape, h: float, bbox=None) -> DigitalSurface:
    """Gauss-digitize ``shape`` and extract its boundary."""
    vox = gauss_digitize(shape, h, bbox)
    lo, hi = _lattice_range(shape.bbox if bbox is None else bbox, h)

    def clipped(outer):
        beyond = ((outer < lo) | (outer > hi)).any(axis=1)
        return beyond & (shape.f(h * outer.astype(float)) <= 0)

    if not len(vox):
        return extract_boundary(np.empty((0, shape.dim), np.int64), h)
    return extract_boundary(vox, h, clipped)


def trivial_surfel_normal(code, sign: int) -> np.ndarray:
    """Unit inside-to-outside normal of an oriented surfel."""
    code = np.asarray(code)
    axes = np.flatnonzero((code & 1) == 0)
    if len(axes) != 1:
        raise ValueError(f"{tuple(code)} is not a surfel")
    n = np.zeros(len(code))
    n[axes[0]] = 1.0 if sign > 0 else -1.0
    return n


def ground_truth_normal(shape: ImplicitShape, x, h: float) -> np.ndarray:
    """Normalized gradient of ``shape`` at world point ``h * x``.

    ``x`` may be an ``(n, d)`` array of lattice positions, possibly
    half-integer (pointels sit at ``p - 1/2``).
    """
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    g = shape.grad(h * np.atleast_2d(x))
    norm = np.linalg.norm(g, axis=1)
    if (norm <= 1e-300).any():
        raise ValueError("gradient vanishes: critical point of the implicit function")
    out = g / norm[:, None]
    return out[0] if single else out
