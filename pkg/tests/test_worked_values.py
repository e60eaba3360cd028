"""Hand-computed values and reduction identities."""

import numpy as np
import pytest

from phiconj.coupling import make_coupling
from phiconj.derivatives import (
    envelope_gradient,
    envelope_gradient_fd,
    envelope_gradient_table,
    envelope_hessian,
    envelope_hessian_fd,
    prox_jacobian_fd,
    prox_jacobian_formula,
)
from phiconj.prox_solver import conjugate, prox, scaled_prox
from phiconj.regularity import (
    check_eigen_condition,
    check_local_strong_twist,
    check_phi_prox_regularity,
    check_prox_single_valued,
    check_twist,
)
from phiconj.subdiff import SampleConfig, equivalence_check, fenchel_young_gap, is_phi_subgradient, smooth_phi_gradient
from phiconj.testfns import make_function

E = np.e
RNG = np.random.default_rng(7)


def a(*v):
    return np.array(v, dtype=float)


def test_entropic_values():
    c = make_coupling("entropic", 1.0, "kl_generator", 1)
    assert c.eval(a(2), a(1)) == pytest.approx(-(2 * np.log(2) - 1), abs=1e-12)
    assert make_coupling("entropic", 2.0, "kl_generator", 1).grad_x(a(1), a(1))[0] == pytest.approx(0.0)
    assert c.twist_inverse(a(2), a(np.log(2)))[0] == pytest.approx(4.0)
    g = make_function("linear", c=1.0)
    res = prox(g, c, a(1))
    assert res.x[0] == pytest.approx(np.exp(-1), abs=1e-9)
    assert res.envelope == pytest.approx(-(1 - np.exp(-1)), abs=1e-10)
    assert envelope_gradient(g, c, a(1))[0] == pytest.approx(np.exp(-1) - 1, abs=1e-8)
    assert envelope_gradient_table(g, c, a(1))[0] == pytest.approx(np.exp(-1) - 1, abs=1e-8)
    assert smooth_phi_gradient(g, c, a(2))[0] == pytest.approx(2 * E)


def test_euclidean_values():
    c = make_coupling("euclidean", 1.0, dim=1)
    assert make_coupling("euclidean", 1.0, dim=2).eval(a(1, 0), a(1, 0)) == 0
    assert make_coupling("euclidean", 0.5, dim=1).grad_x(a(2), a(1))[0] == pytest.approx(-2.0)
    assert make_coupling("euclidean", 2.0, dim=1).twist_inverse(a(1), a(3))[0] == pytest.approx(7.0)
    q, zero = make_function("quad"), make_function("zero")
    assert prox(q, c, a(2)).x[0] == pytest.approx(1.0)
    assert conjugate(q, c, a(2)) == pytest.approx(-1.0)
    assert conjugate(zero, c, a(0.7)) == pytest.approx(0.0, abs=1e-14)
    res = prox(make_function("const_rho", rho=5.0), c, a(0.3))
    assert res.x[0] == pytest.approx(0.3) and res.envelope == pytest.approx(-5.0)
    assert envelope_gradient(q, c, a(2))[0] == pytest.approx(-1.0)
    assert envelope_gradient_fd(q, c, a(2))[0] == pytest.approx(-1.0, abs=1e-6)
    assert envelope_gradient_fd(zero, c, a(2))[0] == pytest.approx(0.0, abs=1e-8)
    assert smooth_phi_gradient(q, c, a(1))[0] == pytest.approx(2.0)
    assert smooth_phi_gradient(zero, c, a(1.5))[0] == pytest.approx(1.5)
    assert fenchel_young_gap(q, c, a(1), a(2)) == pytest.approx(0.0, abs=1e-12)
    assert fenchel_young_gap(q, c, a(1), a(3)) == pytest.approx(0.25, abs=1e-12)
    assert is_phi_subgradient(q, c, a(1), a(2)).holds
    assert make_function("quad", 2).value(a(3, 4)) == pytest.approx(12.5)


def test_catalog_values():
    dw = make_function("double_well")
    assert dw.value(a(1)) == 0 and dw.value(a(0)) == 1
    assert make_function("neg_abs").value(a(0)) == 0
    assert scaled_prox(make_function("quad"), [[1.0]], a(2)).x[0] == pytest.approx(1.0)
    assert scaled_prox(make_function("abs"), [[1.0]], a(0.5)).x[0] == pytest.approx(0.0, abs=1e-9)


def test_double_well_conjugate_against_dense_grid():
    g, c = make_function("double_well"), make_coupling("euclidean", 0.1, dim=1)
    x = np.linspace(-6, 6, 1_000_001)[:, None]
    brute = -np.min(g.value(x) - c.eval(x, np.zeros_like(x)))
    assert conjugate(g, c, a(0)) == pytest.approx(brute, abs=1e-8)


def test_jacobian_and_hessian_values():
    c = make_coupling("euclidean", 1.0, dim=1)
    q, zero = make_function("quad"), make_function("zero")
    for J in (prox_jacobian_fd(q, c, a(2)), prox_jacobian_formula(q, c, a(2))):
        assert J[0, 0] == pytest.approx(0.5, abs=1e-6)
    assert prox_jacobian_fd(zero, c, a(0.3))[0, 0] == pytest.approx(1.0, abs=1e-8)
    assert prox_jacobian_formula(zero, c, a(0.3))[0, 0] == pytest.approx(1.0, abs=1e-8)
    assert envelope_hessian(q, c, a(2))[0, 0] == pytest.approx(-0.5, abs=1e-6)
    assert envelope_hessian_fd(q, c, a(2))[0, 0] == pytest.approx(-0.5, abs=1e-4)
    assert envelope_hessian(zero, c, a(2))[0, 0] == pytest.approx(0.0, abs=1e-6)
    assert envelope_hessian_fd(zero, c, a(2))[0, 0] == pytest.approx(0.0, abs=1e-6)


def test_double_well_basin_jacobian():
    g, gam = make_function("double_well"), 0.05
    c = make_coupling("euclidean", gam, dim=1)
    y = a(1.1)
    x = prox(g, c, y).x
    implicit = 1.0 / (1.0 + gam * g.hess(x)[0, 0])
    J_fd = prox_jacobian_fd(g, c, y)[0, 0]
    assert 0 < J_fd < 1 and J_fd == pytest.approx(implicit, rel=1e-6)
    assert prox_jacobian_formula(g, c, y)[0, 0] == pytest.approx(J_fd, rel=1e-4)
    H = envelope_hessian(g, c, y)[0, 0]
    assert H == pytest.approx(envelope_hessian_fd(g, c, y)[0, 0], rel=1e-3)
    assert envelope_gradient(g, c, y)[0] == pytest.approx(envelope_gradient_fd(g, c, y)[0], abs=1e-5)


@pytest.mark.parametrize("family,kernel", [("left_bregman", "quadratic"), ("anisotropic", "quadratic")])
def test_reduction_to_euclidean(family, kernel):
    gam = 0.6
    red, euc = make_coupling(family, gam, kernel, 2), make_coupling("euclidean", gam, dim=2)
    X, Y = RNG.uniform(-2, 2, (50, 2)), RNG.uniform(-2, 2, (50, 2))
    np.testing.assert_allclose(red.eval(X, Y), euc.eval(X, Y), atol=1e-12)
    np.testing.assert_allclose(red.grad_x(X, Y), euc.grad_x(X, Y), atol=1e-10)
    np.testing.assert_allclose(red.grad_y(X, Y), euc.grad_y(X, Y), atol=1e-10)
    for x, y in zip(X[:10], Y[:10]):
        for A, B in zip(red.hess(x, y), euc.hess(x, y)):
            np.testing.assert_allclose(A, B, atol=1e-10)
    g = make_function("double_well", 2)
    y = a(0.9, -1.2)
    np.testing.assert_allclose(envelope_gradient_table(g, red, y), envelope_gradient_table(g, euc, y), atol=1e-8)


def test_quadratic_transform_blocks_and_signs():
    c = make_coupling("quadratic_transform", dim=1)
    hxx, hxy, _ = c.hess(a(0.3), a(1.0, 2.5))
    assert hxx[0, 0] == pytest.approx(-2.5) and hxy.shape == (1, 2)
    rep = check_eigen_condition(1.0, c, a(0.3), a(1.0, -0.5))
    assert rep.status == "structure_violation"
    assert not is_phi_subgradient(make_function("neg_abs"), c, a(0), a(0.2, 3.0)).holds


def test_right_bregman_requires_full_domain_kernel():
    with pytest.raises(ValueError):
        make_coupling("right_bregman", 1.0, "boltzmann_shannon", 1)
    g, c = make_function("quad"), make_coupling("right_bregman", 1.0, "cosh", 1)
    assert envelope_gradient_table(g, c, a(1))[0] == pytest.approx(envelope_gradient(g, c, a(1))[0], abs=1e-8)


def test_regularity_values():
    assert check_twist(make_coupling("exp_coupling"), a(0), np.linspace(-2, 2, 41)[:, None]).holds
    lb = make_coupling("left_bregman", 0.5, "boltzmann_shannon", 2)
    assert check_local_strong_twist(lb, a(0.4, 1.1), a(0.8, 2.0)).holds
    q, euc = make_function("quad"), make_coupling("euclidean", 1.0, dim=1)
    x = a(0.7)
    assert check_phi_prox_regularity(q, euc, x, smooth_phi_gradient(q, euc, x), 0.5).holds
    dw, sharp = make_function("double_well"), make_coupling("euclidean", 0.05, dim=1)
    assert check_phi_prox_regularity(dw, sharp, a(1), smooth_phi_gradient(dw, sharp, a(1)), 0.1).holds
    assert check_prox_single_valued(dw, sharp, a(1), 0.1, 8).holds
    rep = check_phi_prox_regularity(make_function("neg_abs"), euc, a(0), a(0), 0.1)
    assert rep.status == "precondition_failed"
    aniso = make_coupling("anisotropic", 0.4, "quartic_quadratic", 1)
    rep = check_eigen_condition(1.0, aniso, a(0.3), a(-0.2))
    assert rep.witness <= 0.4 / aniso.kernel.scalar_d2(0.0) + 1e-12


def test_equivalence_with_constant_function():
    g, c = make_function("const_rho", rho=5.0), make_coupling("euclidean", 1.0, dim=1)
    rep = equivalence_check(g, c, a(0.4), a(0.4))
    assert rep.membership and rep.gap_zero and rep.in_prox


def test_conjugate_continuity_and_cluster_points():
    g, c = make_function("double_well"), make_coupling("left_bregman", 0.3, "cosh", 1)
    ybar = a(0.45)
    f0 = conjugate(g, c, ybar)
    p0 = prox(g, c, ybar).minimizers
    diffs, dists = [], []
    for k in range(10):
        y = ybar + 0.5 ** (k + 1)
        res = prox(g, c, y)
        diffs.append(abs(res.envelope - f0))
        dists.append(min(np.linalg.norm(res.minimizers[0] - p) for p in p0))
        assert g.search_box.contains(res.minimizers[0])
    assert all(d2 <= d1 + 1e-10 for d1, d2 in zip(diffs, diffs[1:]))
    assert diffs[-1] < 1e-2 and dists[-1] < 1e-2


def test_subgradient_graph_is_closed():
    g, c = make_function("huber"), make_coupling("anisotropic", 0.5, "cosh", 1)
    xbar = a(1.0)
    for k in range(1, 6):
        x = xbar + 0.5**k
        assert is_phi_subgradient(g, c, x, smooth_phi_gradient(g, c, x)).holds
    assert is_phi_subgradient(g, c, xbar, smooth_phi_gradient(g, c, xbar), sample_cfg=SampleConfig(tol=1e-4)).holds


def test_lower_semicontinuity_by_sampling():
    for g in (make_function("indicator_box"), make_function("abs"), make_function("neg_abs")):
        for x0 in (-1.0, 0.0, 1.0):
            seq = x0 + np.array([(-1) ** k * 2.0**-k for k in range(5, 40)])[:, None]
            vals = g.value(seq)
            assert np.min(vals[-10:]) >= g.value(a(x0)) - 1e-9
