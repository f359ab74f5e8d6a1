import math

import numpy as np
import pytest

from digivis.bench import (
    BenchRecord,
    convergence_ladder,
    fit_exponent,
    mean_distance_ladder,
    reference_normals,
    time_visibility,
)
from digivis.normals import EstimatorParams
from digivis.shapes import digitize_surface, make_shape


def test_fit_exponent():
    h = np.array([1.0, 0.5, 0.25])
    assert fit_exponent(h, 3 * h**0.5) == pytest.approx(0.5)
    assert fit_exponent(h, h**2) == pytest.approx(2.0)
    with pytest.raises(ValueError):
        fit_exponent([1.0], [1.0])
    with pytest.raises(ValueError):
        fit_exponent([1.0, 0.5], [0.0, 1.0])


def test_bench_record_row():
    rec = BenchRecord("sphere", 0.5, 80, 3, "engine", 0.1, 12)
    assert rec.row() == ("sphere", 0.5, 80, 3, "engine", 0.1, 12)


def test_time_visibility_counts_agree():
    surf = digitize_surface(make_shape("sphere"), 0.5)
    recs, G = time_visibility(surf, 3, "sphere")
    assert [r.algorithm for r in recs] == ["engine", "oracle"]
    assert recs[0].pairs == recs[1].pairs == len(G.pairs())


def test_reference_normals_sphere():
    s = make_shape("sphere", radius=3.0)
    surf = digitize_surface(s, 0.5)
    ref = reference_normals(s, surf)
    pos = surf.pointel_positions()
    assert np.allclose(ref.normals, pos / np.linalg.norm(pos, axis=1)[:, None])


def test_ladders_small():
    rows = mean_distance_ladder(make_shape("sphere"), [0.5, 0.25], 4)
    assert rows[0]["world"] == pytest.approx(0.5 * rows[0]["lattice"])
    conv = convergence_ladder(make_shape("sphere", radius=2.0), [0.5], EstimatorParams(2.0))
    assert 0 < conv[0]["rmse"] <= conv[0]["emax"] < math.pi / 4
