import warnings
from dataclasses import replace

import numpy as np
import pytest

from phiconj.coupling import make_coupling
from phiconj.domain import Box
from phiconj.prox_solver import (
    MultiValuedError,
    SolverConfig,
    UnboundedOuterWarning,
    biconjugate,
    conjugate,
    prox,
    scaled_prox,
)
from phiconj.testfns import make_function

ROOT34 = np.sqrt(0.75)


def _brute_1d(g, c, y, n=120_001):
    x = np.linspace(-6, 6, n)[:, None]
    ok = c.X.contains(x)
    x = x[ok]
    vals = g.value(x) - c.eval(x, np.broadcast_to(y, (len(x), y.size)))
    k = int(np.argmin(vals))
    return x[k], vals[k]


@pytest.mark.parametrize("fid,fam,kernel,y", [
    ("quad", "euclidean", None, 0.7),
    ("abs", "euclidean", None, 0.3),
    ("huber", "left_bregman", "cosh", -0.8),
    ("double_well", "euclidean", None, 0.4),
    ("shifted_quad", "anisotropic", "cosh", 1.5),
    ("linear", "entropic", "kl_generator", 1.3),
    ("indicator_box", "right_bregman", "cosh", 2.0),
])
def test_prox_matches_dense_grid_1d(fid, fam, kernel, y):
    g = make_function(fid)
    c = make_coupling(fam, 0.5, kernel, 1)
    y = np.array([y])
    res = prox(g, c, y)
    xb, vb = _brute_1d(g, c, y)
    assert res.status == "converged"
    assert res.value <= vb + 1e-12
    assert res.value == pytest.approx(vb, abs=1e-7)
    assert np.min([abs(m[0] - xb[0]) for m in res.minimizers]) < 1e-3


def test_prox_matches_dense_grid_2d():
    g = make_function("quad_form", 2)
    c = make_coupling("anisotropic", 0.8, "cosh", 2)
    y = np.array([0.6, -0.4])
    u = np.linspace(-2, 2, 1000)
    X = np.stack(np.meshgrid(u, u, indexing="ij"), -1).reshape(-1, 2)
    vals = g.value(X) - c.eval(X, np.broadcast_to(y, X.shape))
    k = int(np.argmin(vals))
    res = prox(g, c, y)
    assert res.value <= vals[k] + 1e-12
    assert res.value == pytest.approx(vals[k], abs=1e-5)
    np.testing.assert_allclose(res.x, X[k], atol=5e-3)


def test_euclidean_quad_closed_form():
    g = make_function("quad")
    c = make_coupling("euclidean", 1.0, dim=1)
    for y in (-2.0, 0.0, 1.3):
        res = prox(g, c, np.array([y]))
        assert res.x[0] == pytest.approx(y / 2, abs=1e-10)
        assert res.envelope == pytest.approx(-y * y / 4, abs=1e-12)


def test_soft_threshold():
    g = make_function("abs")
    c = make_coupling("euclidean", 0.5, dim=1)
    for y in (-1.2, -0.3, 0.2, 0.9):
        expected = np.sign(y) * max(abs(y) - 0.5, 0.0)
        assert prox(g, c, np.array([y])).x[0] == pytest.approx(expected, abs=1e-8)


def test_double_well_has_two_clusters():
    res = prox(make_function("double_well"), make_coupling("euclidean", 1.0, dim=1), np.array([0.0]))
    assert len(res.minimizers) == 2
    np.testing.assert_allclose(sorted(m[0] for m in res.minimizers), [-ROOT34, ROOT34], atol=1e-8)
    with pytest.raises(MultiValuedError):
        res.x


def test_localized_prox_picks_one_well():
    cfg = SolverConfig(locality_radius=0.25)
    res = prox(make_function("double_well"), make_coupling("euclidean", 1.0, dim=1), np.array([0.0]), cfg,
               center=np.array([0.8]))
    assert res.x[0] == pytest.approx(ROOT34, abs=1e-8)


def test_scaled_prox_soft_threshold_and_wells():
    g = make_function("abs")
    assert scaled_prox(g, [[0.3]], np.array([1.0])).x[0] == pytest.approx(0.7, abs=1e-8)
    dw = make_function("double_well")
    two = scaled_prox(dw, [[1.0]], np.array([0.0]))
    np.testing.assert_allclose(sorted(m[0] for m in two.minimizers), [-ROOT34, ROOT34], atol=1e-8)
    # below the hypoconvexity threshold the minimizer is unique
    assert scaled_prox(dw, [[0.05]], np.array([0.0])).x[0] == pytest.approx(0.0, abs=1e-9)


def test_scaled_prox_rejects_non_spd():
    g = make_function("quad", 2)
    with pytest.raises(ValueError, match="non-SPD"):
        scaled_prox(g, [[1.0, 2.0], [2.0, 1.0]], np.zeros(2))
    with pytest.raises(ValueError, match="non-SPD"):
        scaled_prox(g, [[1.0, 0.5], [0.0, 1.0]], np.zeros(2))


def test_biconjugate_of_convex_function_recovers_it():
    g = make_function("quad")
    c = make_coupling("euclidean", 1.0, dim=1)
    cfg = SolverConfig(y_box=Box.cube(1, -3, 3))
    assert biconjugate(g, c, np.array([0.5]), cfg) == pytest.approx(0.125, abs=1e-8)


def test_biconjugate_never_exceeds_function():
    g = make_function("double_well")
    c = make_coupling("euclidean", 1.0, dim=1)
    cfg = SolverConfig(y_box=Box.cube(1, -3, 3))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", UnboundedOuterWarning)
        for x in (0.0, 0.5, 1.2):
            assert biconjugate(g, c, np.array([x]), cfg) <= g.value(np.array([x])) + 1e-8


def test_biconjugate_boundary_warning():
    g = make_function("linear")
    c = make_coupling("euclidean", 1.0, dim=1)
    with pytest.warns(UnboundedOuterWarning):
        biconjugate(g, c, np.array([0.0]), SolverConfig(y_box=Box.cube(1, 0.5, 1.0)))
    with pytest.raises(ValueError):
        biconjugate(g, c, np.array([0.0]), SolverConfig())


def test_determinism_and_validation():
    g = make_function("double_well", 2)
    c = make_coupling("left_bregman", 0.4, "cosh", 2)
    y = np.array([0.3, -0.2])
    a, b = prox(g, c, y), prox(g, c, y)
    assert a.value == b.value
    assert all(np.array_equal(p, q) for p, q in zip(a.minimizers, b.minimizers))
    with pytest.raises(ValueError, match="domain violation"):
        prox(make_function("linear"), make_coupling("entropic", 1.0, "kl_generator", 1), np.array([-1.0]))
    with pytest.raises(ValueError):
        conjugate(g, c, np.zeros(3))
    with pytest.raises(ValueError):
        replace(SolverConfig(), grid_points_per_dim=2)
