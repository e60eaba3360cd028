import numpy as np
import pytest

from phiconj.coupling import make_coupling
from phiconj.prox_solver import prox
from phiconj.subdiff import (
    SampleConfig,
    equivalence_check,
    fenchel_young_gap,
    is_phi_subgradient,
    smooth_phi_gradient,
)
from phiconj.testfns import make_function

EUC = make_coupling("euclidean", 1.0, dim=1)


def test_phi_gradient_of_smooth_convex_function_is_subgradient():
    g = make_function("quad")
    x = np.array([0.4])
    y = smooth_phi_gradient(g, EUC, x)
    assert y[0] == pytest.approx(0.8)
    assert is_phi_subgradient(g, EUC, x, y).holds
    cert = is_phi_subgradient(g, EUC, x, y + 0.5)
    assert not cert.holds and cert.worst_violation < 0
    assert cert.samples_checked > 1000


def test_kink_interval():
    g = make_function("abs")
    x = np.zeros(1)
    for y, ok in ((0.0, True), (0.99, True), (-1.0, True), (1.5, False)):
        assert is_phi_subgradient(g, EUC, x, np.array([y])).holds is ok


def test_epsilon_relaxation():
    g = make_function("quad")
    x = np.array([0.4])
    y = np.array([0.8 + 0.5])
    cert = is_phi_subgradient(g, EUC, x, y)
    assert is_phi_subgradient(g, EUC, x, y, eps=-cert.worst_violation + 1e-6).holds


def test_constant_under_exponential_coupling_has_no_subgradient():
    g = make_function("const_rho", rho=5.0)
    c = make_coupling("exp_coupling")
    for y in (-1.0, 0.0, 2.0):
        assert not is_phi_subgradient(g, c, np.zeros(1), np.array([y])).holds


def test_fenchel_young():
    g = make_function("double_well")
    c = make_coupling("left_bregman", 0.5, "cosh", 1)
    for x, y in ((0.3, -0.4), (1.1, 0.2), (-0.7, 1.5)):
        assert fenchel_young_gap(g, c, np.array([x]), np.array([y])) >= -1e-9
    y = np.array([0.6])
    assert fenchel_young_gap(g, c, prox(g, c, y).x, y) == pytest.approx(0.0, abs=1e-9)


def test_smooth_phi_gradient_rejects():
    with pytest.raises(ValueError):
        smooth_phi_gradient(make_function("abs"), EUC, np.zeros(1))
    with pytest.raises(ValueError):
        smooth_phi_gradient(make_function("quad"), make_coupling("quadratic_transform"), np.zeros(1))


@pytest.mark.parametrize("shift,expected", [(0.0, True), (0.5, False)])
def test_three_conditions_agree(shift, expected):
    g = make_function("double_well")
    c = make_coupling("anisotropic", 0.2, "cosh", 1)
    x = np.array([1.1])
    y = smooth_phi_gradient(g, c, x) + shift
    rep = equivalence_check(g, c, x, y, check_biconjugate=True)
    assert rep.agree and rep.consistent
    assert rep.membership is expected
    if expected:
        assert rep.biconjugate_ok


def test_sampler_determinism():
    g = make_function("double_well", 2)
    c = make_coupling("euclidean", 0.3, dim=2)
    x = np.array([0.9, -1.0])
    y = smooth_phi_gradient(g, c, x) + 0.3
    a = is_phi_subgradient(g, c, x, y, sample_cfg=SampleConfig(seed=4))
    b = is_phi_subgradient(g, c, x, y, sample_cfg=SampleConfig(seed=4))
    assert a.worst_violation == b.worst_violation
    np.testing.assert_array_equal(a.witness, b.witness)
