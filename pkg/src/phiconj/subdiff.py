"""Membership tests for Phi-subgradients and the Fenchel-Young gap.

``y`` is an ``eps``-Phi-subgradient of ``g`` at ``xbar`` when

    g(x) >= g(xbar) + Phi(x, y) - Phi(xbar, y) - eps   for all x in X.

Membership is checked by sampling ``X cap search_box`` densely, adding the
declared kinks of ``g`` and a geometric cloud around ``xbar``, then polishing
the worst samples with a bounded Nelder-Mead search. The sampler never calls
the prox solver, so it serves as an independent oracle for it.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.optimize import minimize

from . import _sampling
from .coupling import Coupling
from .domain import Box
from .prox_solver import SolverConfig, biconjugate, conjugate, prox
from .testfns import TestFunction

__all__ = [
    "SampleConfig",
    "SubgradientCertificate",
    "EquivalenceReport",
    "is_phi_subgradient",
    "smooth_phi_gradient",
    "fenchel_young_gap",
    "equivalence_check",
]


@dataclass(frozen=True)
class SampleConfig:
    """Sampling budget for membership and regularity checks.

    Attributes
    ----------
    grid_budget : int
        Number of points of the tensor grid over the sampled box.
    n_quasi : int
        Additional scrambled Halton points.
    near_levels : tuple
        Radii of the cloud around the base point.
    refine : int
        Number of worst samples polished by a local search.
    tol : float
        Slack tolerance; scaled by ``1 + |g(xbar)|``.
    seed : int
    """

    grid_budget: int = 4001
    n_quasi: int = 1024
    near_levels: tuple = tuple(10.0 ** -k for k in range(1, 9))
    refine: int = 3
    tol: float = 1e-9
    seed: int = 0


@dataclass
class SubgradientCertificate:
    holds: bool
    epsilon: float
    worst_violation: float
    witness: np.ndarray
    samples_checked: int = 0


def _sample_box(g: TestFunction, c: Coupling) -> Box:
    box = g.search_box.intersect(g.dom)
    box = box.intersect(c.X) if box is not None else None
    if box is None:
        raise ValueError("X cap search_box is empty")
    return Box(box.lower, box.upper)


def _membership_samples(g, c, xbar, scfg: SampleConfig, box: Box) -> np.ndarray:
    n = c.dim_x
    parts = [_sampling.dense_grid(box, scfg.grid_budget), _sampling.in_box(box, scfg.n_quasi, scfg.seed)]
    # every coordinate snapped to each kink, starting from xbar
    for k in g.kinks:
        for i in range(n):
            p = xbar.copy()
            p[i] = k
            parts.append(p[None, :])
        parts.append(np.full((1, n), float(k)))
    dirs = np.vstack([np.eye(n), -np.eye(n)])
    if n > 1:
        u = _sampling.in_ball(np.zeros(n), 1.0, 4 * n, scfg.seed + 1)
        u = u / np.maximum(np.linalg.norm(u, axis=1, keepdims=True), 1e-12)
        dirs = np.vstack([dirs, u])
    for delta in scfg.near_levels:
        parts.append(xbar + delta * dirs)
    pts = np.vstack(parts)
    pts = np.clip(pts, box.lower, box.upper)
    return pts[c.X.contains(pts)]


def _slack_fn(g, c, xbar, y, eps):
    base = float(g.value(xbar)) - float(c.eval(xbar, y))

    def slack(x):
        with np.errstate(invalid="ignore", over="ignore"):
            s = g.value(x) - base - c._eval(x, np.broadcast_to(y, x.shape[:-1] + y.shape)) + eps
        return np.where(np.isnan(s), np.inf, s)

    return slack, base


def is_phi_subgradient(g: TestFunction, c: Coupling, xbar, y, eps: float = 0.0,
                       sample_cfg: SampleConfig = SampleConfig()) -> SubgradientCertificate:
    """Sampled test of the eps-Phi-subgradient inequality.

    Returns a certificate whose ``worst_violation`` is the minimum over the
    samples of ``g(x) - g(xbar) - Phi(x, y) + Phi(xbar, y) + eps``.
    Over an unbounded ``X`` only ``search_box`` is sampled.
    """
    xbar = np.asarray(xbar, dtype=float)
    y = np.asarray(y, dtype=float)
    c._xy(xbar, y)
    if not np.isfinite(g.value(xbar)):
        raise ValueError("xbar outside dom g")
    box = _sample_box(g, c)
    pts = _membership_samples(g, c, xbar, sample_cfg, box)
    slack, _ = _slack_fn(g, c, xbar, y, eps)
    vals = slack(pts)
    order = np.lexsort((np.arange(vals.size), vals))
    worst, witness = float(vals[order[0]]), pts[order[0]].copy()

    bounds = list(zip(box.lower, box.upper))
    for i in order[: sample_cfg.refine]:
        if not np.isfinite(vals[i]):
            continue
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            res = minimize(lambda u: float(slack(np.clip(u, box.lower, box.upper))), pts[i],
                           method="Nelder-Mead", bounds=bounds,
                           options={"xatol": 1e-12, "fatol": 1e-15, "maxiter": 400 * c.dim_x})
        if res.fun < worst:
            worst, witness = float(res.fun), np.clip(res.x, box.lower, box.upper)
    tol = sample_cfg.tol * (1.0 + abs(float(g.value(xbar))))
    return SubgradientCertificate(
        holds=bool(worst >= -tol),
        epsilon=float(eps),
        worst_violation=worst,
        witness=witness,
        samples_checked=int(pts.shape[0]),
    )


def smooth_phi_gradient(g: TestFunction, c: Coupling, x) -> np.ndarray:
    """``G(x, grad g(x))``: the Phi-gradient of a differentiable ``g``."""
    if g.grad is None or g.kinks:
        raise ValueError(f"{g.id} is not differentiable")
    if not c.has_twist:
        raise ValueError(f"{c.family} coupling has no twist inverse")
    x = np.asarray(x, dtype=float)
    return c.twist_inverse(x, g.grad(x))


def fenchel_young_gap(g: TestFunction, c: Coupling, x, y, cfg: SolverConfig = SolverConfig()) -> float:
    """``g(x) + g^Phi(y) - Phi(x, y)``, nonnegative up to solver error."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    phi = float(c.eval(x, y))
    return float(g.value(x)) + conjugate(g, c, y, cfg) - phi


@dataclass
class EquivalenceReport:
    """The three equivalent subgradient conditions evaluated independently.

    ``membership`` is the sampled inequality, ``gap_zero`` the Fenchel-Young
    equality, ``in_prox`` whether ``xbar`` is a global minimizer of
    ``g - Phi(., ybar)``.
    """

    membership: bool
    gap_zero: bool
    in_prox: bool
    certificate: SubgradientCertificate
    gap: float
    prox_distance: float
    biconjugate_value: float = np.nan
    biconjugate_ok: bool | None = None
    details: dict = field(default_factory=dict)

    @property
    def agree(self) -> bool:
        return self.membership == self.gap_zero == self.in_prox

    @property
    def consistent(self) -> bool:
        return self.agree and self.biconjugate_ok is not False


def equivalence_check(g: TestFunction, c: Coupling, xbar, ybar, cfg: SolverConfig = SolverConfig(),
                      tol_gap: float = 1e-5, tol_dist: float = 1e-4,
                      sample_cfg: SampleConfig = SampleConfig(tol=1e-5),
                      check_biconjugate: bool = False, y_radius: float = 0.5) -> EquivalenceReport:
    """Evaluate membership, the Fenchel-Young equality and prox membership.

    With ``check_biconjugate`` the consequence ``g^{PhiPhi}(xbar) = g(xbar)``
    is tested whenever one of the conditions holds, maximizing over the box
    of half-width ``y_radius`` around ``ybar`` (unless ``cfg.y_box`` is set).
    """
    xbar = np.asarray(xbar, dtype=float)
    ybar = np.asarray(ybar, dtype=float)
    cert = is_phi_subgradient(g, c, xbar, ybar, 0.0, sample_cfg)
    res = prox(g, c, ybar, cfg)
    gap = float(g.value(xbar)) + res.envelope - float(c.eval(xbar, ybar))
    dist = float(min(np.linalg.norm(xbar - m) for m in res.minimizers))
    rep = EquivalenceReport(
        membership=cert.holds,
        gap_zero=bool(gap <= tol_gap),
        in_prox=bool(dist <= tol_dist),
        certificate=cert,
        gap=gap,
        prox_distance=dist,
        details={"n_clusters": len(res.minimizers), "status": res.status},
    )
    if check_biconjugate and (rep.membership or rep.gap_zero or rep.in_prox):
        y_box = cfg.y_box
        if y_box is None:
            y_box = Box(ybar - y_radius, ybar + y_radius)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            val = biconjugate(g, c, xbar, replace(cfg, y_box=y_box))
        rep.biconjugate_value = val
        rep.biconjugate_ok = bool(abs(val - float(g.value(xbar))) <= 1e-4 * (1 + abs(val)))
    return rep
