"""Envelope gradient and Hessian, prox Jacobian, and their finite-difference oracles.

With ``P`` the (single-valued) generalized prox and ``xbar = P(ybar)``:

* ``grad g^Phi(y) = grad_y Phi(P(y), y)``.
* ``grad P(ybar) = grad prox_M g(z) @ M @ hess_xy``, where
  ``M = -hess_xx^{-1}`` and ``z = xbar + M grad_x Phi(xbar, ybar)``.
  The scaled-prox Jacobian is taken by finite differences of
  :func:`~phiconj.prox_solver.scaled_prox`. Implicit differentiation of the
  optimality condition gives this order. The variant with ``M`` in front
  (``order="leading_m"``) agrees with it only when ``M`` commutes with the
  scaled-prox Jacobian; it is kept for comparison.
* ``hess g^Phi(ybar) = hess_xy.T @ grad P(ybar) + hess_yy``. This is the
  derivative of ``grad_y Phi(P(y), y)`` and is symmetric;
  ``orientation="jacobian_first"`` computes ``grad P @ hess_xy.T + hess_yy``
  instead.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .coupling import Coupling
from .prox_solver import MultiValuedError, SolverConfig, conjugate, prox, scaled_prox
from .regularity import check_eigen_condition
from .testfns import TestFunction

__all__ = [
    "DiffReport",
    "compare",
    "envelope_gradient",
    "envelope_gradient_table",
    "envelope_gradient_fd",
    "prox_jacobian_fd",
    "prox_jacobian_formula",
    "envelope_hessian",
    "envelope_hessian_fd",
    "TABLE_FAMILIES",
]

TABLE_FAMILIES = ("euclidean", "left_bregman", "right_bregman", "anisotropic", "entropic")
GRAD_STEP = 1e-5
HESS_STEP = 1e-3
# neighbourhood on which the prox-regularity metadata of the catalog is valid
LOCAL_RADIUS = 0.25


@dataclass
class DiffReport:
    """Analytic value against an oracle.

    ``mode="gradient"`` passes when ``abs_err <= threshold * (1 + ||oracle||)``;
    ``mode="relative"`` when ``rel_err <= threshold`` with
    ``rel_err = abs_err / max(||oracle||, floor)``.
    """

    analytic: np.ndarray
    oracle: np.ndarray
    abs_err: float
    rel_err: float
    fd_step: float
    passed: bool
    threshold: float
    mode: str = "relative"


def compare(analytic, oracle, threshold: float, fd_step: float = np.nan, mode: str = "relative",
            floor: float = 1e-6) -> DiffReport:
    a = np.asarray(analytic, dtype=float)
    o = np.asarray(oracle, dtype=float)
    err = float(np.linalg.norm(a - o))
    scale = float(np.linalg.norm(o))
    if mode == "gradient":
        rel = err / (1.0 + scale)
    elif mode == "relative":
        rel = err / max(scale, floor)
    else:
        raise ValueError(f"unknown mode {mode!r}")
    return DiffReport(a, o, err, rel, fd_step, bool(rel <= threshold), threshold, mode)


def _prox_point(g, c, y, cfg):
    res = prox(g, c, y, cfg)
    if not res.single_valued:
        raise MultiValuedError(f"prox at y={np.asarray(y)} has {len(res.minimizers)} minimizer clusters")
    return res.minimizers[0]


def envelope_gradient(g: TestFunction, c: Coupling, y, cfg: SolverConfig = SolverConfig()) -> np.ndarray:
    """``grad_y Phi(P(y), y)``; raises ``MultiValuedError`` if the prox is not single-valued."""
    y = np.asarray(y, dtype=float)
    return c.grad_y(_prox_point(g, c, y, cfg), y)


def envelope_gradient_table(g: TestFunction, c: Coupling, y, cfg: SolverConfig = SolverConfig()) -> np.ndarray:
    """Family-specific closed forms of the envelope gradient in terms of ``P(y)``."""
    if c.family not in TABLE_FAMILIES:
        raise ValueError(f"no table row for the {c.family} coupling")
    y = np.asarray(y, dtype=float)
    P = _prox_point(g, c, y, cfg)
    gam = c.gamma
    h = c.kernel
    if c.family == "euclidean":
        return (P - y) / gam
    if c.family == "left_bregman":
        return h.hess(y) @ (P - y) / gam
    if c.family == "right_bregman":
        return (h.grad(P) - h.grad(y)) / gam
    if c.family == "anisotropic":
        return h.grad((P - y) / gam)
    return gam * h.scalar_conj(h.scalar_d1(P / y))


def _stencil_step(c: Coupling, y, h, offsets):
    """Shrink ``h`` until every ``y + h * d`` lies in ``Y``; ``None`` if impossible."""
    for _ in range(12):
        pts = y + h * offsets
        if np.all(c.Y.contains(pts)):
            return h
        h *= 0.5
    return None


def envelope_gradient_fd(g: TestFunction, c: Coupling, y, cfg: SolverConfig = SolverConfig(),
                         step: float | None = None) -> np.ndarray:
    """Central differences of the conjugate, step ``1e-5 (1 + ||y||)`` by default.

    Near the boundary of ``Y`` the step is halved until the stencil fits; if
    it never does, a one-sided difference is used along that axis.
    """
    y = np.asarray(y, dtype=float)
    h0 = GRAD_STEP * (1.0 + np.linalg.norm(y)) if step is None else float(step)
    f0 = None
    out = np.empty_like(y)
    for i in range(y.size):
        e = np.zeros_like(y)
        e[i] = 1.0
        h = _stencil_step(c, y, h0, np.array([e, -e]))
        if h is not None:
            out[i] = (conjugate(g, c, y + h * e, cfg) - conjugate(g, c, y - h * e, cfg)) / (2 * h)
            continue
        f0 = conjugate(g, c, y, cfg) if f0 is None else f0
        for sgn in (1.0, -1.0):
            if c.Y.contains(y + sgn * h0 * e):
                out[i] = sgn * (conjugate(g, c, y + sgn * h0 * e, cfg) - f0) / h0
                break
        else:
            raise ValueError(f"domain violation: no finite-difference stencil fits in Y at {y}")
    return out


def prox_jacobian_fd(g: TestFunction, c: Coupling, ybar, cfg: SolverConfig = SolverConfig(),
                     step: float | None = None) -> np.ndarray:
    """Column-wise central differences of ``P`` at ``ybar``, shape ``(dim_x, dim_y)``."""
    ybar = np.asarray(ybar, dtype=float)
    h0 = GRAD_STEP * (1.0 + np.linalg.norm(ybar)) if step is None else float(step)
    J = np.empty((c.dim_x, c.dim_y))
    for j in range(c.dim_y):
        e = np.zeros_like(ybar)
        e[j] = 1.0
        h = _stencil_step(c, ybar, h0, np.array([e, -e]))
        if h is None:
            raise ValueError(f"domain violation: no finite-difference stencil fits in Y at {ybar}")
        J[:, j] = (_prox_point(g, c, ybar + h * e, cfg) - _prox_point(g, c, ybar - h * e, cfg)) / (2 * h)
    return J


def _scaled_prox_jacobian(g, M, z, cfg, center, step=None):
    h = GRAD_STEP * (1.0 + np.linalg.norm(z)) if step is None else float(step)
    n = z.size
    J = np.empty((n, n))
    for j in range(n):
        e = np.zeros(n)
        e[j] = h
        rp, rm = scaled_prox(g, M, z + e, cfg, center), scaled_prox(g, M, z - e, cfg, center)
        if not (rp.single_valued and rm.single_valued):
            raise MultiValuedError("scaled prox is multi-valued on the stencil")
        J[:, j] = (rp.minimizers[0] - rm.minimizers[0]) / (2 * h)
    return J


def prox_jacobian_formula(g: TestFunction, c: Coupling, ybar, cfg: SolverConfig = SolverConfig(),
                          order: str = "trailing_m", step: float | None = None,
                          locality: float | None = LOCAL_RADIUS) -> np.ndarray:
    """Prox Jacobian through the scaled proximal mapping.

    Parameters
    ----------
    order : {"trailing_m", "leading_m"}
        ``"trailing_m"`` returns ``grad prox_M g(z) @ M @ hess_xy``, the
        composition that matches finite differences. ``"leading_m"`` returns
        ``M @ grad prox_M g(z) @ hess_xy``.
    locality : float or None
        The scaled prox is differentiated as a localized mapping: its search
        is restricted to the max-norm ball of this radius around ``xbar``.
        Without it a nonconvex ``g`` with large ``M`` can send
        ``prox_M g(z)`` to a different well than ``xbar``.

    Raises
    ------
    ValueError
        If ``hess_xx`` is not negative definite, the eigenvalue condition
        ``lambda_max(M) < 1/r`` fails, or ``lambda_max(M)`` exceeds the
        prox-boundedness threshold of ``g``.
    MultiValuedError
        If the prox or the scaled prox is not single-valued where needed.
    """
    if order not in ("trailing_m", "leading_m"):
        raise ValueError(f"unknown order {order!r}")
    ybar = np.asarray(ybar, dtype=float)
    xbar = _prox_point(g, c, ybar, cfg)
    eig = check_eigen_condition(g, c, xbar, ybar)
    if eig.status == "structure_violation":
        raise ValueError("hess_xx is not negative definite at (xbar, ybar)")
    if not eig.holds:
        raise ValueError(f"eigen condition fails: lambda_max(M) = {eig.witness:g}, 1/r margin {eig.worst_margin:g}")
    if not eig.witness < g.prox_bound_threshold:
        raise ValueError("lambda_max(M) exceeds the prox-boundedness threshold of g")
    hxx, hxy, _ = c.hess(xbar, ybar)
    M = -np.linalg.inv(hxx)
    M = 0.5 * (M + M.T)
    z = xbar + M @ c.grad_x(xbar, ybar)
    local_cfg = cfg if locality is None else replace(cfg, locality_radius=locality)
    Js = _scaled_prox_jacobian(g, M, z, local_cfg, xbar, step)
    if order == "trailing_m":
        return Js @ M @ hxy
    return M @ Js @ hxy


def envelope_hessian(g: TestFunction, c: Coupling, ybar, cfg: SolverConfig = SolverConfig(),
                     jacobian: str = "formula", orientation: str = "transpose_first",
                     symmetrize: bool = False) -> np.ndarray:
    """Hessian of the conjugate at ``ybar``.

    ``jacobian`` selects the prox Jacobian: ``"formula"`` or ``"fd"``. The
    raw matrix is returned unless ``symmetrize`` is set, so its asymmetry can
    be inspected.
    """
    ybar = np.asarray(ybar, dtype=float)
    if jacobian == "formula":
        J = prox_jacobian_formula(g, c, ybar, cfg)
    elif jacobian == "fd":
        J = prox_jacobian_fd(g, c, ybar, cfg)
    else:
        raise ValueError(f"unknown jacobian source {jacobian!r}")
    xbar = _prox_point(g, c, ybar, cfg)
    _, hxy, hyy = c.hess(xbar, ybar)
    if orientation == "transpose_first":
        H = hxy.T @ J + hyy
    elif orientation == "jacobian_first":
        H = J @ hxy.T + hyy
    else:
        raise ValueError(f"unknown orientation {orientation!r}")
    return 0.5 * (H + H.T) if symmetrize else H


def envelope_hessian_fd(g: TestFunction, c: Coupling, ybar, cfg: SolverConfig = SolverConfig(),
                        step: float | None = None) -> np.ndarray:
    """Second-order central differences of the conjugate, symmetrized; step ``1e-3 (1 + ||y||)``."""
    ybar = np.asarray(ybar, dtype=float)
    m = ybar.size
    h = HESS_STEP * (1.0 + np.linalg.norm(ybar)) if step is None else float(step)
    corners = np.array([s * np.eye(m)[i] + t * np.eye(m)[j]
                        for i in range(m) for j in range(m) for s in (1, -1) for t in (1, -1)])
    h = _stencil_step(c, ybar, h, np.vstack([corners, 2 * np.eye(m), -2 * np.eye(m)]))
    if h is None:
        raise ValueError(f"domain violation: no finite-difference stencil fits in Y at {ybar}")
    f = lambda u: conjugate(g, c, u, cfg)  # noqa: E731
    f0 = f(ybar)
    H = np.empty((m, m))
    E = np.eye(m) * h
    for i in range(m):
        H[i, i] = (f(ybar + E[i]) - 2 * f0 + f(ybar - E[i])) / h**2
        for j in range(i):
            H[i, j] = H[j, i] = (f(ybar + E[i] + E[j]) - f(ybar + E[i] - E[j])
                                 - f(ybar - E[i] + E[j]) + f(ybar - E[i] - E[j])) / (4 * h**2)
    return H
