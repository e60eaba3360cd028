"""Acceptance criteria as library functions.

Each ``criterion_*`` function runs one property suite and returns a
:class:`CriterionResult`. Thresholds come from ``DEFAULT_TOLERANCES`` and can
be overridden per key, which is how fault injection is tested. Instances are
generated deterministically from ``seed``.
"""

from __future__ import annotations

import time
import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from . import _sampling
from .coupling import TWIST_FAMILIES, Coupling, make_coupling
from .derivatives import (
    compare,
    envelope_gradient,
    envelope_gradient_fd,
    envelope_gradient_table,
    envelope_hessian,
    envelope_hessian_fd,
    prox_jacobian_fd,
    prox_jacobian_formula,
)
from .domain import Box
from .prox_solver import MultiValuedError, SolverConfig, UnboundedOuterWarning, biconjugate, conjugate, prox
from .regularity import (
    check_eigen_condition,
    check_phi_prox_regularity,
    check_prox_single_valued,
    check_strict_monotonicity,
)
from .subdiff import SampleConfig, equivalence_check, is_phi_subgradient, smooth_phi_gradient
from .testfns import make_function

__all__ = [
    "CriterionResult",
    "DEFAULT_TOLERANCES",
    "CRITERIA",
    "run_criterion",
    "run_all",
    "regularity_instances",
]

DEFAULT_TOLERANCES = {
    "fenchel_young": 1e-8,
    "biconjugate_bound": 1e-6,
    "biconjugate_equality": 1e-4,
    "twist_round_trip": 1e-8,
    "gradient_fd": 1e-5,
    "gradient_table": 1e-8,
    "hessian_fd": 1e-3,
    "euclidean_identity": 1e-8,
    "jacobian_fd": 1e-4,
    "counterexample_violation": -0.01,
    "equivalence_gap": 1e-5,
    "equivalence_distance": 1e-4,
    "closed_form": 1e-6,
    "wall_clock_seconds": 600.0,
}


@dataclass
class CriterionResult:
    number: int
    name: str
    passed: bool
    metric: float
    threshold: float
    n_instances: int
    detail: str = ""
    seconds: float = 0.0
    extra: dict = field(default_factory=dict)

    def line(self) -> str:
        verdict = "PASS" if self.passed else "FAIL"
        return (f"[{verdict}] {self.number:2d} {self.name}: metric={self.metric:.3e} "
                f"threshold={self.threshold:.3e} n={self.n_instances} {self.detail}").rstrip()


def _tol(tols, key):
    return float((tols or {}).get(key, DEFAULT_TOLERANCES[key]))


def _range(c: Coupling, lo=-2.0, hi=2.0):
    """Sampling interval for x and y per coordinate."""
    if c.family in ("left_bregman", "entropic"):
        return 0.2, 3.0
    return lo, hi


def _scale(u, a, b):
    return a + u * (b - a)


# 1 ----------------------------------------------------------------------------
FY_FUNCTIONS = (("quad", {}), ("shifted_quad", {}), ("abs", {}), ("huber", {}), ("linear", {}),
                ("double_well", {}), ("const_rho", {"rho": 5.0}), ("indicator_box", {}))


def criterion_fenchel_young(seed=0, tols=None, n_samples=50):
    tol = _tol(tols, "fenchel_young")
    worst, count = np.inf, 0
    for fam in TWIST_FAMILIES:
        c = make_coupling(fam)
        for k, (fid, params) in enumerate(FY_FUNCTIONS):
            g = make_function(fid, 1, **params)
            a, b = _range(c)
            u = _sampling.halton(n_samples, 2, seed + 11 * k)
            xlo = max(a, g.dom.lower[0]) if fam not in ("left_bregman", "entropic") else max(0.0, g.dom.lower[0])
            xhi = min(b, g.dom.upper[0])
            for ux, uy in u:
                x = np.array([_scale(ux, xlo, xhi)])
                y = np.array([_scale(uy, a, b)])
                gap = float(g.value(x)) + conjugate(g, c, y) - float(c.eval(x, y))
                worst = min(worst, gap)
                count += 1
    return CriterionResult(1, "fenchel_young", bool(worst >= -tol), worst, -tol, count,
                           "min gap over sampled (x, y)")


# 2 ----------------------------------------------------------------------------
def _bicon(g, c, x, y_box, cfg=SolverConfig()):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", UnboundedOuterWarning)
        return biconjugate(g, c, np.atleast_1d(np.asarray(x, float)), replace(cfg, y_box=y_box))


def criterion_biconjugate(seed=0, tols=None):
    tol_b, tol_e = _tol(tols, "biconjugate_bound"), _tol(tols, "biconjugate_equality")
    bound_cases = [
        ("double_well", {}, "euclidean", 1.0, Box([-3.0], [3.0])),
        ("neg_abs", {}, "euclidean", 0.5, Box([-3.0], [3.0])),
        ("abs", {}, "left_bregman", 1.0, Box([0.05], [4.0])),
        ("double_well", {}, "anisotropic", 1.0, Box([-3.0], [3.0])),
        ("huber", {}, "entropic", 1.0, Box([0.05], [4.0])),
    ]
    worst_bound, n = -np.inf, 0
    xs = _sampling.halton(3, 1, seed)[:, 0]
    for fid, params, fam, gam, ybox in bound_cases:
        g, c = make_function(fid, 1, **params), make_coupling(fam, gam)
        a, b = _range(c, -1.5, 1.5)
        for u in xs:
            x = np.array([_scale(u, a, b)])
            worst_bound = max(worst_bound, _bicon(g, c, x, ybox) - float(g.value(x)))
            n += 1
    worst_eq = 0.0
    eu = make_coupling("euclidean", 1.0)
    for fid in ("quad", "shifted_quad", "abs", "huber", "linear"):
        g = make_function(fid, 1)
        for x in (-1.0, -0.3, 0.4, 1.2):
            worst_eq = max(worst_eq, abs(_bicon(g, eu, [x], Box([-4.0], [4.0])) - float(g.value(np.array([x])))))
            n += 1
    g, qt = make_function("neg_abs", 1), make_coupling("quadratic_transform")
    qt_box = Box([-3.0, -1.0], [3.0, 1e4])
    for x in (-1.0, -0.5, 0.0, 0.5, 1.0):
        worst_eq = max(worst_eq, abs(_bicon(g, qt, [x], qt_box) - float(g.value(np.array([x])))))
        n += 1
    passed = worst_bound <= tol_b and worst_eq <= tol_e
    return CriterionResult(2, "biconjugate", bool(passed), worst_eq, tol_e, n,
                           f"max(bicon - g)={worst_bound:.3e} (<= {tol_b:.0e})",
                           extra={"bound": worst_bound, "equality": worst_eq})


# 3 ----------------------------------------------------------------------------
def criterion_twist_round_trip(seed=0, tols=None, n_samples=100, dim=2):
    tol = _tol(tols, "twist_round_trip")
    worst, n = 0.0, 0
    for fam in TWIST_FAMILIES:
        c = make_coupling(fam, 0.7, dim=dim)
        a, b = _range(c)
        u = _sampling.halton(n_samples, 2 * dim, seed)
        X, Y = _scale(u[:, :dim], a, b), _scale(u[:, dim:], a, b)
        for x, y in zip(X, Y):
            err = np.max(np.abs(c.twist_inverse(x, c.grad_x(x, y)) - y))
            worst = max(worst, float(err))
            n += 1
    return CriterionResult(3, "twist_round_trip", bool(worst <= tol), worst, tol, n, "sup |G(x, grad_x(x,y)) - y|")


# 4-6 --------------------------------------------------------------------------
def gradient_instances(seed=0, n_y=6):
    """(g, coupling, y) triples spanning all twist families, 1-D and 2-D."""
    out = []
    cases = []
    for fam in TWIST_FAMILIES:
        for fid in ("quad", "shifted_quad", "abs", "huber", "linear"):
            cases.append((fid, 1, fam, 1.0))
        cases.append(("quad_form", 2, fam, 1.0))
        cases.append(("double_well", 1, fam, 0.1))
    cases.append(("neg_quad", 1, "euclidean", 0.5))
    cases.append(("double_well", 2, "euclidean", 0.1))
    for k, (fid, dim, fam, gam) in enumerate(cases):
        g, c = make_function(fid, dim), make_coupling(fam, gam, dim=dim)
        a, b = _range(c)
        for u in _sampling.halton(n_y, dim, seed + k):
            out.append((g, c, _scale(u, a, b)))
    return out


def criterion_gradient(seed=0, tols=None):
    tol_fd, tol_tab = _tol(tols, "gradient_fd"), _tol(tols, "gradient_table")
    worst_fd, worst_tab, n, skipped = 0.0, 0.0, 0, 0
    for g, c, y in gradient_instances(seed):
        try:
            an = envelope_gradient(g, c, y)
        except MultiValuedError:
            skipped += 1
            continue
        worst_fd = max(worst_fd, compare(an, envelope_gradient_fd(g, c, y), tol_fd, mode="gradient").rel_err)
        worst_tab = max(worst_tab, compare(envelope_gradient_table(g, c, y), an, tol_tab, mode="gradient").rel_err)
        n += 1
    passed = worst_fd <= tol_fd and worst_tab <= tol_tab and n >= 200
    return CriterionResult(4, "gradient", bool(passed), worst_fd, tol_fd, n,
                           f"table max err={worst_tab:.3e} (<= {tol_tab:.0e}); multi-valued skipped={skipped}",
                           extra={"table": worst_tab})


def hessian_instances(seed=0, n_y=4):
    """Smooth instances on which the eigenvalue condition can hold."""
    cases = []
    for fam in TWIST_FAMILIES:
        for fid, dim, gam in (("quad", 1, 1.0), ("shifted_quad", 1, 0.5), ("linear", 1, 1.0),
                              ("quad_form", 2, 1.0), ("double_well", 1, 0.05)):
            cases.append((fid, dim, fam, gam))
    cases += [("neg_quad", 1, "euclidean", 0.5), ("double_well", 2, "euclidean", 0.05),
              ("zero", 1, "euclidean", 1.0)]
    out = []
    for k, (fid, dim, fam, gam) in enumerate(cases):
        g, c = make_function(fid, dim), make_coupling(fam, gam, dim=dim)
        a, b = _range(c)
        for u in _sampling.halton(n_y, dim, seed + 100 + k):
            out.append((g, c, _scale(u, a, b)))
    return out


def _hessian_data(seed, cache):
    key = ("hessian", seed)
    if key in cache:
        return cache[key]
    rows = []
    for g, c, y in hessian_instances(seed):
        try:
            x = prox(g, c, y).x
        except MultiValuedError:
            continue
        if not check_eigen_condition(g, c, x, y).holds:
            continue
        J = prox_jacobian_formula(g, c, y)
        Jfd = prox_jacobian_fd(g, c, y)
        H = envelope_hessian(g, c, y)
        Hfd = envelope_hessian_fd(g, c, y)
        rows.append((g, c, y, J, Jfd, H, Hfd))
    cache[key] = rows
    return rows


def criterion_hessian(seed=0, tols=None, cache=None):
    tol_h, tol_id = _tol(tols, "hessian_fd"), _tol(tols, "euclidean_identity")
    rows = _hessian_data(seed, {} if cache is None else cache)
    worst_h, worst_id, asym = 0.0, 0.0, 0.0
    for g, c, y, J, Jfd, H, Hfd in rows:
        worst_h = max(worst_h, compare(H, Hfd, tol_h).rel_err)
        asym = max(asym, float(np.max(np.abs(H - H.T))))
        if c.family == "euclidean":
            ident = (J - np.eye(c.dim_x)) / c.gamma
            worst_id = max(worst_id, float(np.max(np.abs(H - ident))))
    passed = worst_h <= tol_h and worst_id <= tol_id and len(rows) >= 50
    return CriterionResult(5, "hessian", bool(passed), worst_h, tol_h, len(rows),
                           f"euclidean identity err={worst_id:.3e}; raw asymmetry={asym:.3e}",
                           extra={"identity": worst_id, "asymmetry": asym})


def criterion_prox_jacobian(seed=0, tols=None, cache=None):
    tol = _tol(tols, "jacobian_fd")
    rows = _hessian_data(seed, {} if cache is None else cache)
    worst = max((compare(J, Jfd, tol).rel_err for _, _, _, J, Jfd, _, _ in rows), default=np.inf)
    return CriterionResult(6, "prox_jacobian", bool(worst <= tol and len(rows) >= 50), worst, tol, len(rows),
                           "relative Frobenius error, formula vs FD")


# 7 ----------------------------------------------------------------------------
def criterion_counterexamples(seed=0, tols=None):
    tol = _tol(tols, "counterexample_violation")
    g, c = make_function("const_rho", 1, rho=5.0), make_coupling("exp_coupling")
    worst_exp, n = -np.inf, 0
    for xbar in (-2.0, -1.0, 0.0, 1.0, 2.0):
        for y in np.linspace(-3.0, 3.0, 13):
            cert = is_phi_subgradient(g, c, [xbar], [y])
            worst_exp = max(worst_exp, cert.worst_violation)
            n += 1
    g, c = make_function("neg_abs", 1), make_coupling("quadratic_transform")
    u = _sampling.halton(100, 2, seed)
    all_fail = True
    worst_qt = -np.inf
    for uv, ur in u:
        cert = is_phi_subgradient(g, c, [0.0], [_scale(uv, -3, 3), _scale(ur, -5, 100)])
        all_fail &= not cert.holds
        worst_qt = max(worst_qt, cert.worst_violation)
        n += 1
    passed = worst_exp <= tol and all_fail
    return CriterionResult(7, "counterexamples", bool(passed), worst_exp, tol, n,
                           f"neg_abs/quadratic_transform all fail={all_fail} (largest violation {worst_qt:.3e})",
                           extra={"qt_all_fail": all_fail})


# 8 ----------------------------------------------------------------------------
def equivalence_instances(seed=0, n_pos=100):
    """Half members ``y = G(x, grad g(x))``, half the same ``y`` shifted by 0.5."""
    cases = []
    for fam in ("euclidean", "left_bregman", "anisotropic", "entropic", "right_bregman"):
        for fid in ("quad", "shifted_quad", "huber", "linear"):
            cases.append((fid, 1, fam, 1.0))
    cases += [("double_well", 1, "euclidean", 0.2), ("quad_form", 2, "euclidean", 1.0),
              ("abs", 1, "euclidean", 1.0), ("quad_form", 2, "entropic", 1.0),
              ("double_well", 1, "euclidean", 0.25)]
    pos = []
    k = 0
    while len(pos) < n_pos:
        fid, dim, fam, gam = cases[k % len(cases)]
        g, c = make_function(fid, dim), make_coupling(fam, gam, dim=dim)
        a, b = _range(c, -1.5, 1.5)
        u = _sampling.halton(1 + k // len(cases), dim, seed + k % len(cases))[-1]
        x = _scale(u, a, b)
        try:
            y = smooth_phi_gradient(g, c, x)
        except ValueError:
            k += 1
            continue
        if np.all(np.abs(y) <= 5.0):
            pos.append((g, c, x, y))
        k += 1
    neg = [(g, c, x, y + 0.5) for g, c, x, y in pos]
    return pos, neg


def criterion_equivalence(seed=0, tols=None, n_pos=100, bicon_every=10):
    tg, td = _tol(tols, "equivalence_gap"), _tol(tols, "equivalence_distance")
    pos, neg = equivalence_instances(seed, n_pos)
    disagree, wrong, bicon_bad = 0, 0, 0
    scfg = SampleConfig(tol=tg, seed=seed)
    for label, items in ((True, pos), (False, neg)):
        for i, (g, c, x, y) in enumerate(items):
            rep = equivalence_check(g, c, x, y, tol_gap=tg, tol_dist=td, sample_cfg=scfg,
                                    check_biconjugate=(i % bicon_every == 0))
            disagree += not rep.agree
            wrong += rep.agree and rep.membership != label
            bicon_bad += rep.biconjugate_ok is False
    n = len(pos) + len(neg)
    passed = disagree == 0 and wrong == 0 and bicon_bad == 0
    return CriterionResult(8, "equivalence", bool(passed), float(disagree), 0.0, n,
                           f"misclassified={wrong}; biconjugate mismatches={bicon_bad}",
                           extra={"wrong": wrong, "bicon_bad": bicon_bad})


# 9 ----------------------------------------------------------------------------
def regularity_instances():
    """Twenty curated (g, coupling, xbar, ybar) cases; the first ten are regular.

    ``ybar`` is the Phi-gradient at ``xbar``, so the base pair always
    satisfies the subgradient precondition.
    """
    cases = [
        ("quad", 1, "euclidean", 1.0, [1.0]),
        ("shifted_quad", 1, "left_bregman", 1.0, [1.0]),
        ("huber", 1, "anisotropic", 1.0, [0.5]),
        ("linear", 1, "entropic", 1.0, [1.0]),
        ("quad_form", 2, "euclidean", 1.0, [0.3, -0.4]),
        ("double_well", 1, "euclidean", 0.05, [1.0]),
        ("double_well", 1, "euclidean", 0.2, [0.0]),
        ("neg_quad", 1, "euclidean", 0.5, [0.4]),
        ("abs", 1, "euclidean", 1.0, [1.0]),
        ("double_well", 1, "anisotropic", 0.1, [1.0]),
        ("double_well", 1, "euclidean", 1.0, [0.0]),
        ("double_well", 1, "euclidean", 0.5, [0.0]),
        ("double_well", 1, "euclidean", 2.0, [0.0]),
        ("neg_quad", 1, "euclidean", 2.0, [0.0]),
        ("neg_quad", 1, "euclidean", 1.5, [0.0]),
        ("double_well", 2, "euclidean", 1.0, [0.0, 0.0]),
        ("double_well", 1, "anisotropic", 1.0, [0.0]),
        ("double_well", 1, "right_bregman", 1.0, [0.0]),
        ("neg_quad", 1, "anisotropic", 2.0, [0.0]),
        ("neg_quad", 2, "euclidean", 2.0, [0.0, 0.0]),
    ]
    out = []
    for fid, dim, fam, gam, xbar in cases:
        g, c = make_function(fid, dim), make_coupling(fam, gam, dim=dim)
        x = np.array(xbar, dtype=float)
        out.append((g, c, x, c.twist_inverse(x, g.grad(x))))
    return out


def criterion_regularity(seed=0, tols=None, eps=0.1, n_probe=8):
    scfg = SampleConfig(n_quasi=256, seed=seed)
    disagree, n_hold = 0, 0
    labels = []
    for g, c, x, y in regularity_instances():
        a = check_phi_prox_regularity(g, c, x, y, eps, scfg, strict=True).holds
        b = check_strict_monotonicity(g, c, x, y, eps, scfg).holds
        s = check_prox_single_valued(g, c, y, eps, n_probe, seed=seed).holds
        disagree += not (a == b == s)
        n_hold += a and b and s
        labels.append((a, b, s))
    canonical = labels[10] == (False, False, False)
    passed = disagree == 0 and canonical
    return CriterionResult(9, "regularity_coherence", bool(passed), float(disagree), 0.0, len(labels),
                           f"all-hold={n_hold} all-fail={len(labels) - n_hold - disagree}; "
                           f"double_well/gamma=1/y=0 all fail={canonical}",
                           extra={"labels": labels})


# 10 ---------------------------------------------------------------------------
def criterion_closed_form(seed=0, tols=None):
    tol = _tol(tols, "closed_form")
    g, c = make_function("quad", 1), make_coupling("euclidean", 1.0)
    worst, n = 0.0, 0
    for yv in (-2.0, -1.0, 0.5, 2.0):
        y = np.array([yv])
        res = prox(g, c, y)
        errs = [
            abs(res.envelope + yv**2 / 4),
            abs(res.x[0] - yv / 2),
            abs(envelope_gradient(g, c, y)[0] + yv / 2),
            abs(envelope_hessian(g, c, y)[0, 0] + 0.5),
        ]
        worst = max(worst, max(errs))
        n += 1
    g, c = make_function("linear", 1), make_coupling("entropic", 1.0)
    worst = max(worst, abs(conjugate(g, c, np.array([1.0])) + (1 - np.exp(-1.0))))
    n += 1
    return CriterionResult(10, "closed_form", bool(worst <= tol), worst, tol, n,
                           "quad/euclidean and entropic/linear desk values")


CRITERIA = {
    1: criterion_fenchel_young,
    2: criterion_biconjugate,
    3: criterion_twist_round_trip,
    4: criterion_gradient,
    5: criterion_hessian,
    6: criterion_prox_jacobian,
    7: criterion_counterexamples,
    8: criterion_equivalence,
    9: criterion_regularity,
    10: criterion_closed_form,
}
NAMES = {
    "fenchel_young": 1, "biconjugate": 2, "twist_round_trip": 3, "gradient": 4, "hessian": 5,
    "prox_jacobian": 6, "counterexamples": 7, "equivalence": 8, "regularity_coherence": 9,
    "closed_form": 10,
}


def run_criterion(key, seed=0, tols=None, cache=None) -> CriterionResult:
    """Run one criterion given its number or name."""
    num = NAMES.get(key, key) if isinstance(key, str) else key
    if num not in CRITERIA:
        raise ValueError(f"unknown criterion {key!r}; expected one of {sorted(NAMES)}")
    fn = CRITERIA[num]
    t0 = time.perf_counter()
    kwargs = {"cache": cache} if num in (5, 6) else {}
    res = fn(seed=seed, tols=tols, **kwargs)
    res.seconds = time.perf_counter() - t0
    return res


def run_all(seed=0, tols=None, criteria=None, progress=None) -> list[CriterionResult]:
    """Run the selected criteria in order; criterion 10 also checks the total wall clock."""
    cache = {}
    t0 = time.perf_counter()
    results = []
    for num in sorted(criteria or CRITERIA):
        res = run_criterion(num, seed, tols, cache)
        if num == 10:
            total = time.perf_counter() - t0
            limit = _tol(tols, "wall_clock_seconds")
            res.passed = res.passed and total <= limit
            res.detail += f"; wall clock {total:.1f}s (<= {limit:.0f}s)"
            res.extra["wall_clock"] = total
        results.append(res)
        if progress is not None:
            progress(res)
    return results
