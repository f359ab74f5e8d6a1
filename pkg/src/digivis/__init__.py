"""Exact digital visibility on cubical complexes.

The engine computes, for every pointel of a subcomplex, which other pointels
it sees through segments whose star stays inside the star of the complex.
Cell sets are run-length encoded as interval sequences along one axis.
A visibility-based normal estimator and shape/benchmark tooling sit on top.
"""

from .cubical import LatticeMap, pick_main_axis, segment_star, star_of_subcomplex, to_lattice_map
from .engine import VisibilityGraph, chain_closure, pattern_match, primitive_directions, visibility_all
from .intervals import Interval, IntervalSeq, intersection, normalize, translations
from .normals import EstimatorParams, NormalField, error_metrics, estimate_normals
from .shapes import DigitalSurface, digitize_surface, gauss_digitize, make_shape

__version__ = "0.1.0"

__all__ = [
    "DigitalSurface",
    "EstimatorParams",
    "Interval",
    "IntervalSeq",
    "LatticeMap",
    "NormalField",
    "VisibilityGraph",
    "chain_closure",
    "digitize_surface",
    "error_metrics",
    "estimate_normals",
    "gauss_digitize",
    "intersection",
    "make_shape",
    "normalize",
    "pattern_match",
    "pick_main_axis",
    "primitive_directions",
    "segment_star",
    "star_of_subcomplex",
    "to_lattice_map",
    "translations",
    "visibility_all",
]
