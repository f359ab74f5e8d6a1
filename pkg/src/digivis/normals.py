"""Visibility normals.

The normal at a pointel ``p`` is the eigenvector for the smallest eigenvalue
of the Gaussian-weighted covariance of the points visible from ``p``,
oriented like the mean of the trivial normals of the surfels around ``p``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .engine import VisibilityGraph
from .shapes import DigitalSurface

FLAG_OK = 0
FLAG_FEW_POINTS = 1
FLAG_DEGENERATE = 2
FLAG_ORIENT_TIE = 4


@dataclass(frozen=True)
class EstimatorParams:
    sigma: float = 4.0
    rmax: int | None = None

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError(f"sigma must be positive, got {self.sigma}")
        if self.rmax is None:
            object.__setattr__(self, "rmax", max(1, math.ceil(2 * self.sigma)))
        if self.rmax < 1:
            raise ValueError(f"rmax must be >= 1, got {self.rmax}")


@dataclass
class NormalField:
    points: np.ndarray
    normals: np.ndarray
    flags: np.ndarray

    def as_dict(self) -> dict:
        return {tuple(p): n for p, n in zip(self.points.tolist(), self.normals)}


def gaussian_weight(x, sigma: float):
    if sigma <= 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    x = np.asarray(x, dtype=float)
    return np.exp(-(x * x) / (2.0 * sigma * sigma))


def weighted_centroid(p, visible, sigma: float) -> np.ndarray:
    V = np.asarray(visible, dtype=float).reshape(-1, len(p))
    if not len(V):
        raise ValueError("empty visible set")
    w = gaussian_weight(np.linalg.norm(V - np.asarray(p, float), axis=1), sigma)
    return (w[:, None] * V).sum(axis=0) / w.sum()


def visibility_covariance(p, visible, sigma: float) -> np.ndarray:
    V = np.asarray(visible, dtype=float).reshape(-1, len(p))
    w = gaussian_weight(np.linalg.norm(V - np.asarray(p, float), axis=1), sigma)
    c = weighted_centroid(p, V, sigma)
    D = V - c
    return (w[:, None, None] * D[:, :, None] * D[:, None, :]).sum(axis=0)


def _sign_fix(v: np.ndarray) -> np.ndarray:
    nz = np.flatnonzero(np.abs(v) > 1e-12)
    if len(nz) and v[nz[0]] < 0:
        return -v
    return v


def smallest_eigenvector(M, rel_tol: float = 1e-9) -> tuple[np.ndarray, bool]:
    """Unit eigenvector of the smallest eigenvalue and a degeneracy flag.

    The flag is raised when the two smallest eigenvalues coincide within
    ``rel_tol * (1 + |M|)``; a vector of the eigenspace is still returned.
    """
    M = np.asarray(M, dtype=float)
    vals, vecs = np.linalg.eigh(0.5 * (M + M.T))
    scale = 1.0 + np.abs(vals).max()
    degenerate = len(vals) > 1 and vals[1] - vals[0] <= rel_tol * scale
    return _sign_fix(vecs[:, 0]), bool(degenerate)


def orient(n, p, surf: DigitalSurface, _trivial=None) -> tuple[np.ndarray, bool]:
    """Flip ``n`` to agree with the mean trivial normal at pointel ``p``.

    Returns the oriented vector and whether the dot product was exactly zero
    (in which case ``n`` is kept as is).
    """
    acc, cnt = _trivial if _trivial is not None else surf.pointel_trivial_normals()
    hit = np.flatnonzero((surf.pointels == np.asarray(p)).all(axis=1))
    if not len(hit) or cnt[hit[0]] == 0:
        raise ValueError(f"{tuple(p)} has no incident surfel")
    dot = float(np.dot(n, acc[hit[0]]))
    if dot < 0:
        return -np.asarray(n, float), False
    return np.asarray(n, float), dot == 0


def visible_lists(G: VisibilityGraph, rmax: int) -> tuple[np.ndarray, np.ndarray]:
    """Directed visible pairs ``(i, j)`` in both orientations, without self pairs."""
    I, J = G.index_pairs(rmax)
    return np.concatenate([I, J]), np.concatenate([J, I])


def estimate_normals(surf: DigitalSurface, G: VisibilityGraph, params: EstimatorParams) -> NormalField:
    """Visibility normal at every pointel of ``surf``."""
    if G.radius < params.rmax:
        raise ValueError(f"graph radius {G.radius} < rmax {params.rmax}; recompute with r >= {params.rmax}")
    pts = surf.pointels
    d = pts.shape[1]
    gidx = G.index.lookup(pts)
    if (gidx < 0).any():
        raise ValueError("visibility graph does not cover every pointel of the surface")
    n = len(G.points)

    src, dst = visible_lists(G, params.rmax)
    diff = (G.points[dst] - G.points[src]).astype(float)
    w = gaussian_weight(np.sqrt((diff * diff).sum(axis=1)), params.sigma)
    # the point itself, weight 1, offset 0
    wsum = np.bincount(src, weights=w, minlength=n) + 1.0
    count = np.bincount(src, minlength=n) + 1
    first = np.stack([np.bincount(src, weights=w * diff[:, a], minlength=n) for a in range(d)], axis=1)
    second = np.empty((n, d, d))
    for a in range(d):
        for b in range(a, d):
            s = np.bincount(src, weights=w * diff[:, a] * diff[:, b], minlength=n)
            second[:, a, b] = second[:, b, a] = s
    c = first / wsum[:, None]
    cov = second - wsum[:, None, None] * c[:, :, None] * c[:, None, :]

    vals, vecs = np.linalg.eigh(cov)
    normals = vecs[:, :, 0].copy()
    scale = 1.0 + np.abs(vals).max(axis=1)
    degenerate = (vals[:, 1] - vals[:, 0]) <= 1e-9 * scale

    acc, cnt = surf.pointel_trivial_normals()
    tri = np.zeros((n, d))
    tri[gidx] = acc
    flags = np.zeros(n, dtype=np.int64)
    few = count < 3
    flags[few] |= FLAG_FEW_POINTS
    flags[degenerate & ~few] |= FLAG_DEGENERATE
    fallback = few | degenerate
    tnorm = np.linalg.norm(tri, axis=1)
    usable = fallback & (tnorm > 0)
    normals[usable] = tri[usable] / tnorm[usable, None]

    dot = (normals * tri).sum(axis=1)
    normals[dot < 0] *= -1
    flags[dot == 0] |= FLAG_ORIENT_TIE
    normals /= np.linalg.norm(normals, axis=1)[:, None]
    return NormalField(pts.copy(), normals[gidx], flags[gidx])


def angular_errors(est: np.ndarray, truth: np.ndarray) -> np.ndarray:
    dots = np.clip((np.asarray(est) * np.asarray(truth)).sum(axis=1), -1.0, 1.0)
    return np.arccos(dots)


def error_metrics(est: NormalField | dict, truth: NormalField | dict) -> tuple[float, float]:
    """RMSE and maximum of the per-point angle (radians) between normals."""
    if isinstance(est, NormalField):
        est = est.as_dict()
    if isinstance(truth, NormalField):
        truth = truth.as_dict()
    if set(est) != set(truth):
        raise ValueError("estimated and reference normals are defined on different pointels")
    if not est:
        return 0.0, 0.0
    keys = sorted(est)
    err = angular_errors(np.array([est[k] for k in keys]), np.array([truth[k] for k in keys]))
    return float(np.sqrt(np.mean(err**2))), float(err.max())


def mean_visibility_distance(surf: DigitalSurface | None, G: VisibilityGraph, rmax: int | None = None) -> float:
    """Mean over pointels of the mean Euclidean distance to their visible partners.

    Pointels without any visible partner are left out. Distances are in
    lattice units; multiply by the gridstep for world units.
    """
    src, dst = visible_lists(G, rmax)
    n = len(G.points)
    diff = (G.points[dst] - G.points[src]).astype(float)
    dist = np.sqrt((diff * diff).sum(axis=1))
    total = np.bincount(src, weights=dist, minlength=n)
    count = np.bincount(src, minlength=n)
    if surf is not None:
        keep = np.zeros(n, dtype=bool)
        idx = G.index.lookup(surf.pointels)
        keep[idx[idx >= 0]] = True
        count = np.where(keep, count, 0)
    has = count > 0
    if not has.any():
        return 0.0
    return float(np.mean(total[has] / count[has]))
