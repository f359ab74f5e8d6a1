"""Timing and multigrid-convergence experiments."""

from __future__ import annotations

import logging
import time
from dataclasses import asdict, dataclass

import numpy as np

from .engine import visibility_all
from .normals import EstimatorParams, NormalField, angular_errors, estimate_normals, mean_visibility_distance
from .oracles import brute_force_pairs
from .shapes import DigitalSurface, ImplicitShape, digitize_surface, ground_truth_normal

log = logging.getLogger(__name__)


@dataclass
class BenchRecord:
    shape: str
    h: float
    pointels: int
    r: int
    algorithm: str
    seconds: float
    pairs: int

    COLUMNS = ("shape", "h", "pointels", "r", "algorithm", "seconds", "pairs")

    def row(self) -> tuple:
        return tuple(asdict(self)[c] for c in self.COLUMNS)


def fit_exponent(x, y) -> float:
    """Least-squares slope of ``log y`` against ``log x``."""
    x, y = np.asarray(x, float), np.asarray(y, float)
    if len(x) < 2 or (y <= 0).any() or (x <= 0).any():
        raise ValueError("need at least two positive samples")
    return float(np.polyfit(np.log(x), np.log(y), 1)[0])


def time_visibility(surf: DigitalSurface, r: int, shape: str = "", baseline: bool = True, threads: int = 1):
    """Engine (and optionally brute-force baseline) timings on one surface.

    Raises ``AssertionError`` if the two pair counts differ.
    """
    records = []
    t0 = time.perf_counter()
    G = visibility_all(surf.complex, r, threads=threads)
    n_engine = len(G.index_pairs()[0])
    records.append(BenchRecord(shape, surf.gridstep, len(G.points), r, "engine", time.perf_counter() - t0, n_engine))
    if baseline:
        t0 = time.perf_counter()
        _, pairs = brute_force_pairs(surf.complex, r)
        records.append(BenchRecord(shape, surf.gridstep, len(G.points), r, "oracle", time.perf_counter() - t0, len(pairs)))
        if len(pairs) != n_engine:
            raise AssertionError(f"pair count mismatch: engine {n_engine}, baseline {len(pairs)}")
    return records, G


def project_to_surface(shape: ImplicitShape, x: np.ndarray, iters: int = 50) -> np.ndarray:
    """Move world points onto ``f = 0`` by Newton steps along the gradient."""
    x = np.array(x, dtype=float)
    for _ in range(iters):
        f = shape.f(x)
        g = shape.grad(x)
        g2 = (g * g).sum(axis=1)
        step = np.where(g2 > 0, f / np.where(g2 > 0, g2, 1.0), 0.0)
        x -= step[:, None] * g
        if np.abs(step).max(initial=0.0) * np.sqrt(g2.max(initial=0.0)) < 1e-13:
            break
    return x


def reference_normals(shape: ImplicitShape, surf: DigitalSurface) -> NormalField:
    """Continuous normals at the surface points closest to each pointel."""
    on = project_to_surface(shape, surf.pointel_positions())
    n = ground_truth_normal(shape, on, 1.0)
    return NormalField(surf.pointels.copy(), n, np.zeros(len(n), np.int64))


def convergence_ladder(shape: ImplicitShape, hs, params: EstimatorParams, threads: int = 1) -> list[dict]:
    rows = []
    for h in hs:
        t0 = time.perf_counter()
        surf = digitize_surface(shape, h)
        G = visibility_all(surf.complex, params.rmax, threads=threads)
        est = estimate_normals(surf, G, params)
        mask = surf.evaluation_mask(params.rmax + 1)
        truth = reference_normals(shape, surf)
        err = angular_errors(est.normals[mask], truth.normals[mask])
        rows.append({
            "shape": shape.name,
            "h": h,
            "pointels": len(surf.pointels),
            "rmse": float(np.sqrt(np.mean(err**2))),
            "emax": float(err.max()),
            "seconds": time.perf_counter() - t0,
        })
        log.info("convergence %s h=%g pointels=%d rmse=%.5f emax=%.5f", shape.name, h, rows[-1]["pointels"], rows[-1]["rmse"], rows[-1]["emax"])
    return rows


def mean_distance_ladder(shape: ImplicitShape, hs, r: int, threads: int = 1) -> list[dict]:
    rows = []
    for h in hs:
        surf = digitize_surface(shape, h)
        G = visibility_all(surf.complex, r, threads=threads)
        lattice = mean_visibility_distance(surf, G)
        rows.append({"shape": shape.name, "h": h, "pointels": len(surf.pointels), "lattice": lattice, "world": h * lattice})
        log.info("mean distance %s h=%g lattice=%.4f world=%.4f", shape.name, h, lattice, h * lattice)
    return rows
