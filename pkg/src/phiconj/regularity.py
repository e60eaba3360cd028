"""Sampled checks of the regularity hypotheses behind prox differentiability.

All neighbourhood quantifiers are made concrete through a caller-supplied
radius ``eps``; ``largest_passing_radius`` sweeps a list of radii.
Inequality margins are normalized by ``||x - x'||^2`` so that pairs with
nearby points are not dismissed as vacuously satisfied; a positive margin
means the (strict) inequality holds.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _sampling
from .coupling import Coupling
from .prox_solver import SolverConfig, prox
from .subdiff import SampleConfig
from .testfns import TestFunction

__all__ = [
    "RegularityReport",
    "check_twist",
    "check_local_strong_twist",
    "check_phi_prox_regularity",
    "check_strict_monotonicity",
    "check_prox_single_valued",
    "check_eigen_condition",
    "largest_passing_radius",
    "EPS_SWEEP",
]

EPS_SWEEP = (0.5, 0.1, 0.02)
MIN_VALID_PAIRS = 100


@dataclass
class RegularityReport:
    """Outcome of one check.

    ``status`` is ``"ok"`` when the check ran, ``"precondition_failed"`` when
    the base point does not satisfy the hypothesis the check presupposes,
    ``"structure_violation"`` when the coupling lacks the required structure
    and ``"insufficient_samples"`` when too few samples survived filtering.
    """

    condition: str
    holds: bool
    samples_checked: int
    worst_margin: float
    witness: object = None
    status: str = "ok"


def check_twist(c: Coupling, x, y_grid, tol: float = 1e-8) -> RegularityReport:
    """Collision search for ``y -> grad_x(x, y)`` over a finite grid."""
    if not c.has_twist or c.dim_y != c.dim_x:
        raise ValueError(f"{c.family}: grad_x(x, .) maps R^{c.dim_y} to R^{c.dim_x}; not a twist family")
    x = np.asarray(x, dtype=float)
    Yg = np.atleast_2d(np.asarray(y_grid, dtype=float))
    G = c.grad_x(np.broadcast_to(x, Yg.shape), Yg)
    dG = np.linalg.norm(G[:, None, :] - G[None, :, :], axis=-1)
    dY = np.linalg.norm(Yg[:, None, :] - Yg[None, :, :], axis=-1)
    iu = np.triu_indices(len(Yg), k=1)
    distinct = dY[iu] > 0
    ratio = dG[iu][distinct] / (1.0 + dY[iu][distinct])
    if ratio.size == 0:
        return RegularityReport("twist", True, 0, np.inf)
    k = int(np.argmin(ratio))
    pair = (Yg[iu[0][distinct][k]], Yg[iu[1][distinct][k]])
    return RegularityReport("twist", bool(ratio[k] > tol), int(ratio.size), float(ratio[k]), pair)


def check_local_strong_twist(c: Coupling, x, y, tol: float = 1e-8) -> RegularityReport:
    """Smallest singular value of the mixed block at ``(x, y)``."""
    _, hxy, _ = c.hess(x, y)
    if hxy.shape[0] != hxy.shape[1]:
        return RegularityReport("local_strong_twist", False, 1, 0.0, hxy.shape, "structure_violation")
    s = float(np.linalg.svd(hxy, compute_uv=False).min())
    return RegularityReport("local_strong_twist", bool(s > tol), 1, s, (np.asarray(x), np.asarray(y)))


def _subgradient_choices(g: TestFunction, x):
    """Representable elements of the regular subdifferential at ``x``."""
    sd = g.subdiff(x)
    if sd is None:
        return []
    lo, hi = sd
    if np.all(lo == hi):
        return [np.asarray(lo, float)]
    lo_f = np.where(np.isfinite(lo), lo, np.where(np.isfinite(hi), hi - 1.0, 0.0))
    hi_f = np.where(np.isfinite(hi), hi, lo_f + 1.0)
    return [lo_f + t * (hi_f - lo_f) for t in (0.0, 0.25, 0.5, 0.75, 1.0)]


def _in_subdiff(g: TestFunction, x, v, tol):
    sd = g.subdiff(x)
    if sd is None:
        return False
    lo, hi = sd
    return bool(np.all(v >= lo - tol) and np.all(v <= hi + tol))


def _localized_pairs(g: TestFunction, c: Coupling, xbar, ybar, eps, scfg: SampleConfig):
    """Pairs ``(x, y)`` with ``grad_x(x, y)`` in the subdifferential, filtered to the eps-box.

    Returns the arrays of points, the list of accepted pairs and ``vbar``.
    """
    vbar = c.grad_x(xbar, ybar)
    gbar = float(g.value(xbar))
    n = c.dim_x
    xs = _sampling.in_ball(xbar, eps, scfg.n_quasi, scfg.seed)
    # include the base point and points snapped onto kinks
    extra = [xbar[None, :]]
    for k in g.kinks:
        if abs(k - xbar).min() <= eps:
            for i in range(n):
                p = xbar.copy()
                p[i] = k
                extra.append(p[None, :])
    xs = np.vstack(extra + [xs])
    xs = xs[c.X.interior_contains(xs) & np.isfinite(g.value(xs))]
    xs = xs[g.value(xs) <= gbar + eps]

    pts_x, pts_y = [], []
    if c.has_twist:
        for x in xs:
            for v in _subgradient_choices(g, x):
                if np.linalg.norm(v - vbar) > eps:
                    continue
                try:
                    y = c.twist_inverse(x, v)
                except ValueError:
                    continue
                if np.linalg.norm(y - ybar) <= eps:
                    pts_x.append(x)
                    pts_y.append(y)
    else:
        ys = _sampling.in_ball(ybar, eps, scfg.n_quasi, scfg.seed + 7)
        ys = ys[c.Y.contains(ys)]
        ftol = 1e-2 * eps
        for x in xs:
            V = c.grad_x(np.broadcast_to(x, (len(ys), n)), ys)
            for y, v in zip(ys, V):
                if np.linalg.norm(v - vbar) <= eps and _in_subdiff(g, x, v, ftol):
                    pts_x.append(x)
                    pts_y.append(y)
    return np.array(pts_x).reshape(-1, n), np.array(pts_y).reshape(-1, c.dim_y), vbar


def _precondition(g, c, xbar, ybar, tol=1e-6):
    if not np.all(c.X.interior_contains(xbar)):
        return False
    v = c.grad_x(xbar, ybar)
    return _in_subdiff(g, xbar, v, tol * (1 + np.linalg.norm(v)))


def check_phi_prox_regularity(g: TestFunction, c: Coupling, xbar, ybar, eps: float,
                              sample_cfg: SampleConfig = SampleConfig(n_quasi=256),
                              strict: bool = True, tol: float = 1e-8) -> RegularityReport:
    """Sampled local inequality ``g(x') >= g(x) + Phi(x', y) - Phi(x, y)``.

    ``(x, y)`` ranges over localized subgradient pairs and ``x'`` over the
    eps-ball around ``xbar``. The margin is the slack divided by
    ``||x' - x||^2``. With ``strict`` the check holds when the worst margin
    exceeds ``tol``; otherwise when the raw slack is at least ``-tol``.
    """
    xbar = np.asarray(xbar, dtype=float)
    ybar = np.asarray(ybar, dtype=float)
    name = "phi_prox_regularity"
    if not _precondition(g, c, xbar, ybar):
        return RegularityReport(name, False, 0, -np.inf, xbar, "precondition_failed")
    X, Yp, _ = _localized_pairs(g, c, xbar, ybar, eps, sample_cfg)
    if len(X) == 0:
        return RegularityReport(name, False, 0, np.nan, None, "insufficient_samples")
    xp = _sampling.in_ball(xbar, eps, sample_cfg.n_quasi, sample_cfg.seed + 3)
    xp = np.vstack([xp, X])
    xp = xp[c.X.contains(xp) & np.isfinite(g.value(xp))]

    worst, witness, count = np.inf, None, 0
    gxp = g.value(xp)
    for x, y in zip(X, Yp):
        yb = np.broadcast_to(y, (len(xp), y.size))
        slack = gxp - float(g.value(x)) - c._eval(xp, yb) + float(c._eval(x, y))
        d2 = np.sum((xp - x) ** 2, axis=1)
        keep = d2 > 1e-20
        if not np.any(keep):
            continue
        m = slack[keep] / d2[keep] if strict else slack[keep]
        count += int(keep.sum())
        k = int(np.argmin(m))
        if m[k] < worst:
            worst, witness = float(m[k]), (x, xp[keep][k], y)
    if count < MIN_VALID_PAIRS:
        return RegularityReport(name, False, count, worst, witness, "insufficient_samples")
    holds = worst > tol if strict else worst >= -tol
    return RegularityReport(name, bool(holds), count, worst, witness)


def check_strict_monotonicity(g: TestFunction, c: Coupling, xbar, ybar, eps: float,
                              sample_cfg: SampleConfig = SampleConfig(n_quasi=256),
                              tol: float = 1e-8) -> RegularityReport:
    """Sampled ``Phi(x', y) - Phi(x, y) + Phi(x, y') - Phi(x', y') < 0`` over localized pairs.

    The margin of a pair is minus that expression over ``||x - x'||^2``.
    At least ``MIN_VALID_PAIRS`` pairs with ``x != x'`` are required.
    """
    xbar = np.asarray(xbar, dtype=float)
    ybar = np.asarray(ybar, dtype=float)
    name = "strict_monotonicity"
    if not _precondition(g, c, xbar, ybar):
        return RegularityReport(name, False, 0, -np.inf, xbar, "precondition_failed")
    X, Yp, _ = _localized_pairs(g, c, xbar, ybar, eps, sample_cfg)
    N = len(X)
    if N < 2:
        return RegularityReport(name, False, 0, np.nan, None, "insufficient_samples")
    i, j = np.triu_indices(N, k=1)
    d2 = np.sum((X[i] - X[j]) ** 2, axis=1)
    keep = d2 > 1e-20
    i, j, d2 = i[keep], j[keep], d2[keep]
    if i.size < MIN_VALID_PAIRS:
        return RegularityReport(name, False, int(i.size), np.nan, None, "insufficient_samples")
    expr = (c._eval(X[j], Yp[i]) - c._eval(X[i], Yp[i])
            + c._eval(X[i], Yp[j]) - c._eval(X[j], Yp[j]))
    margin = -expr / d2
    k = int(np.argmin(margin))
    witness = ((X[i[k]], Yp[i[k]]), (X[j[k]], Yp[j[k]]))
    return RegularityReport(name, bool(margin[k] > tol), int(i.size), float(margin[k]), witness)


def check_prox_single_valued(g: TestFunction, c: Coupling, ybar, radius: float, n_probe: int = 16,
                             cfg: SolverConfig = SolverConfig(), seed: int = 0) -> RegularityReport:
    """Run the prox at ``ybar`` and ``n_probe - 1`` points of the ball around it.

    The margin is ``1 - (largest number of minimizer clusters)``, so zero
    means single-valued at every probe.
    """
    ybar = np.asarray(ybar, dtype=float)
    probes = np.vstack([ybar[None, :], _sampling.in_ball(ybar, radius, max(n_probe - 1, 0), seed)])
    probes = probes[c.Y.contains(probes)]
    worst, witness = 1, ybar
    for y in probes:
        res = prox(g, c, y, cfg)
        k = len(res.minimizers) or np.inf  # an empty result counts as a failure
        if k > worst:
            worst, witness = k, y
    margin = 1.0 - worst
    return RegularityReport("prox_single_valued", bool(margin > -0.5), int(len(probes)), float(margin), witness)


def check_eigen_condition(g_meta_r, c: Coupling, xbar, ybar, tol: float = 1e-12) -> RegularityReport:
    """``lambda_max(M) < 1/r`` with ``M = -hess_xx(xbar, ybar)^{-1}``.

    ``g_meta_r`` is either the constant ``r`` or a ``TestFunction`` whose
    ``prox_regular`` metadata supplies it at ``xbar``.
    """
    xbar = np.asarray(xbar, dtype=float)
    r = float(g_meta_r.prox_regular(xbar)) if isinstance(g_meta_r, TestFunction) else float(g_meta_r)
    hxx, _, _ = c.hess(xbar, ybar)
    eig = np.linalg.eigvalsh(0.5 * (hxx + hxx.T))
    if eig.max() >= 0:
        return RegularityReport("eigen_condition", False, 1, -np.inf, float(eig.max()), "structure_violation")
    lam_max_M = float(1.0 / -eig.max())  # eigenvalues of M are -1/eig
    margin = (1.0 / r if r > 0 else np.inf) - lam_max_M
    return RegularityReport("eigen_condition", bool(margin > tol), 1, float(margin), lam_max_M)


def largest_passing_radius(check, radii=EPS_SWEEP):
    """Largest radius in ``radii`` for which ``check(eps).holds``; ``None`` if none does."""
    for eps in sorted(radii, reverse=True):
        if check(eps).holds:
            return eps
    return None
