import numpy as np
import pytest

from phiconj.coupling import make_coupling
from phiconj.derivatives import (
    compare,
    envelope_gradient,
    envelope_gradient_fd,
    envelope_gradient_table,
    envelope_hessian,
    envelope_hessian_fd,
    prox_jacobian_fd,
    prox_jacobian_formula,
)
from phiconj.prox_solver import MultiValuedError, prox
from phiconj.testfns import make_function

TABLE_CASES = [
    ("double_well", "euclidean", None, 0.2, [0.7]),
    ("huber", "left_bregman", "boltzmann_shannon", 0.5, [1.4]),
    ("quad", "right_bregman", "cosh", 0.8, [-0.6]),
    ("shifted_quad", "anisotropic", "quartic_quadratic", 0.6, [0.9]),
    ("linear", "entropic", "kl_generator", 0.5, [1.7]),
    ("quad_form", "left_bregman", "cosh", 0.7, [0.4, -0.3]),
]
NONCOMMUTING = [
    ("left_bregman", "boltzmann_shannon"),
    ("anisotropic", "cosh"),
    ("right_bregman", "cosh"),
]


def _rel(a, b):
    return np.linalg.norm(a - b) / np.linalg.norm(b)


@pytest.mark.parametrize("fid,fam,k,gam,y", TABLE_CASES, ids=[c[1] + "-" + c[0] for c in TABLE_CASES])
def test_gradient_table_and_differences(fid, fam, k, gam, y):
    g = make_function(fid, len(y))
    c = make_coupling(fam, gam, k, len(y))
    y = np.array(y)
    a = envelope_gradient(g, c, y)
    np.testing.assert_allclose(envelope_gradient_table(g, c, y), a, rtol=1e-10, atol=1e-12)
    assert compare(a, envelope_gradient_fd(g, c, y), 1e-5, mode="gradient").passed


def test_gradient_fd_near_boundary_of_y():
    g, c = make_function("linear"), make_coupling("entropic", 0.5, "kl_generator", 1)
    y = np.array([1e-6])
    fd = envelope_gradient_fd(g, c, y)
    assert np.isfinite(fd).all()


def test_gradient_rejects_multivalued_prox():
    g, c = make_function("double_well"), make_coupling("euclidean", 1.0, dim=1)
    with pytest.raises(MultiValuedError):
        envelope_gradient(g, c, np.zeros(1))
    with pytest.raises(ValueError):
        envelope_gradient_table(g, make_coupling("exp_coupling"), np.zeros(1))


def test_euclidean_hessian_identity():
    g, c = make_function("double_well"), make_coupling("euclidean", 0.2, dim=1)
    y = np.array([0.4])
    J = prox_jacobian_formula(g, c, y)
    H = envelope_hessian(g, c, y)
    np.testing.assert_allclose(H, (J - 1.0) / 0.2, atol=1e-12)
    assert _rel(H, envelope_hessian_fd(g, c, y)) < 1e-3


@pytest.mark.parametrize("fam,k", NONCOMMUTING)
def test_jacobian_composition_order(fam, k):
    g, c = make_function("quad_form", 2), make_coupling(fam, 0.7, k, 2)
    y = np.array([0.6, 1.7])
    J_fd = prox_jacobian_fd(g, c, y)
    assert _rel(prox_jacobian_formula(g, c, y), J_fd) < 1e-6
    # M ahead of the scaled-prox Jacobian does not commute through it here
    assert _rel(prox_jacobian_formula(g, c, y, order="leading_m"), J_fd) > 1e-2


@pytest.mark.parametrize("fam,k", NONCOMMUTING)
def test_hessian_orientation(fam, k):
    g, c = make_function("quad_form", 2), make_coupling(fam, 0.7, k, 2)
    y = np.array([0.6, 1.7])
    H_fd = envelope_hessian_fd(g, c, y)
    H = envelope_hessian(g, c, y)
    assert _rel(H, H_fd) < 1e-3
    assert np.max(np.abs(H - H.T)) < 1e-8
    assert _rel(envelope_hessian(g, c, y, orientation="jacobian_first"), H_fd) > 1e-2
    np.testing.assert_allclose(envelope_hessian(g, c, y, jacobian="fd"), H, rtol=1e-5, atol=1e-7)


def test_localized_scaled_prox_stays_in_its_well():
    g, c = make_function("double_well"), make_coupling("entropic", 0.05, "kl_generator", 1)
    y = np.array([0.258])
    assert _rel(prox_jacobian_formula(g, c, y), prox_jacobian_fd(g, c, y)) < 1e-4


def test_jacobian_preconditions():
    g = make_function("neg_quad")
    with pytest.raises(ValueError):
        prox_jacobian_formula(g, make_coupling("euclidean", 2.0, dim=1), np.array([0.3]))
    with pytest.raises(ValueError):
        prox_jacobian_formula(make_function("quad"), make_coupling("euclidean", dim=1), np.zeros(1), order="x")


def test_compare_modes():
    r = compare([1.0, 2.0], [1.0, 2.0 + 1e-9], 1e-8)
    assert r.passed and r.abs_err == pytest.approx(1e-9)
    assert not compare([0.0], [1e-3], 1e-6, mode="gradient").passed
    with pytest.raises(ValueError):
        compare([0.0], [0.0], 1.0, mode="bogus")
    assert prox(make_function("quad"), make_coupling("euclidean", dim=1), np.zeros(1)).single_valued
