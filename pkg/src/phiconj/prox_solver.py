"""Inner minimization engine.

Computes the generalized proximal mapping
``P(y) = argmin_{x in X} g(x) - Phi(x, y)``, the conjugate
``g^Phi(y) = -min_x (g(x) - Phi(x, y))``, the biconjugate and the scaled
proximal mapping ``argmin_x 1/2 <x - z, M^{-1}(x - z)> + g(x)``.

The global phase evaluates the objective on a uniform grid over
``X cap search_box cap dom g``; the local phase runs projected descent
(Newton direction when the Hessian is positive definite, gradient otherwise,
Armijo backtracking) from the best grid cells. Box faces and the declared
kink coordinates of ``g`` act as breakpoints: a step stops on them, and the
one-sided difference quotients of ``g`` decide whether a coordinate sitting
on a kink stays there.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from .coupling import Coupling
from .domain import Box
from .testfns import TestFunction

__all__ = [
    "SolverConfig",
    "ProxResult",
    "MultiValuedError",
    "InfeasibleError",
    "UnboundedOuterWarning",
    "prox",
    "conjugate",
    "biconjugate",
    "scaled_prox",
]

_ARMIJO = 1e-4
_KINK_STEP = 1e-9


class MultiValuedError(ValueError):
    """The minimizer set has more than one cluster where a single point was required."""


class InfeasibleError(ValueError):
    """``X cap search_box`` is empty."""


class UnboundedOuterWarning(UserWarning):
    """The biconjugate maximizer sits on the boundary of the supplied y-box."""


@dataclass(frozen=True)
class SolverConfig:
    grid_points_per_dim: int = 33
    local_steps: int = 500
    tol_grad: float = 1e-10
    tol_cluster: float = 1e-6
    multistart_topk: int = 8
    # half-width of the max-norm ball the search is restricted to (localized prox)
    locality_radius: float | None = None
    # outer search box and grid for the biconjugate
    y_box: Box | None = None
    outer_grid_points: int = 17

    def __post_init__(self):
        if self.grid_points_per_dim < 3:
            raise ValueError("grid_points_per_dim must be >= 3")
        for name in ("tol_grad", "tol_cluster"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.local_steps < 1 or self.multistart_topk < 1:
            raise ValueError("local_steps and multistart_topk must be positive")
        if self.locality_radius is not None and not self.locality_radius > 0:
            raise ValueError("locality_radius must be positive")
        if self.outer_grid_points < 2:
            raise ValueError("outer_grid_points must be >= 2")


@dataclass
class ProxResult:
    minimizers: list
    value: float
    status: str
    n_starts_agreeing: int
    n_starts: int = 0
    objective_values: list = field(default_factory=list)
    on_boundary: bool = False

    @property
    def envelope(self) -> float:
        return -self.value

    @property
    def single_valued(self) -> bool:
        return len(self.minimizers) == 1

    @property
    def x(self) -> np.ndarray:
        """The unique minimizer; raises ``MultiValuedError`` otherwise."""
        if len(self.minimizers) != 1:
            raise MultiValuedError(f"{len(self.minimizers)} minimizer clusters")
        return self.minimizers[0]


class _Objective:
    """``g(x) + s(x)`` with ``s`` smooth."""

    def __init__(self, g: TestFunction, s_val, s_grad, s_hess):
        self.g = g
        self.s_val = s_val
        self.s_grad = s_grad
        self.s_hess = s_hess

    def value(self, x):
        with np.errstate(invalid="ignore", divide="ignore", over="ignore"):
            v = self.g.value(x) + self.s_val(x)
        return np.where(np.isnan(v), np.inf, v)

    def parts(self, x):
        with np.errstate(invalid="ignore", divide="ignore", over="ignore"):
            return self.g.grad(x), self.s_grad(x)

    def hessian(self, x):
        if self.g.hess is None or self.s_hess is None:
            return None
        with np.errstate(invalid="ignore", divide="ignore", over="ignore"):
            return self.g.hess(x) + self.s_hess(x)


def _feasible_box(g: TestFunction, X: Box | None, center, radius) -> Box:
    box = g.search_box.intersect(g.dom)
    if box is not None and X is not None:
        box = box.intersect(X)
    if box is not None and radius is not None:
        if center is None:
            raise ValueError("locality_radius needs a center")
        c = np.asarray(center, dtype=float)
        box = box.intersect(Box(c - radius, c + radius))
    if box is None:
        raise InfeasibleError("X cap search_box is empty")
    if not box.bounded:
        raise ValueError("search box must be bounded")
    return Box(box.lower, box.upper)  # closed: the minimization runs on the closure


def _grid(box: Box, k: int) -> np.ndarray:
    axes = [np.linspace(a, b, k) if b > a else np.array([a]) for a, b in zip(box.lower, box.upper)]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack(mesh, axis=-1)


def _seeds(box: Box, values: np.ndarray, points: np.ndarray, topk: int) -> list:
    """Discrete local minima of the grid first (by value), then the best remaining cells."""
    finite = np.isfinite(values)
    is_min = finite.copy()
    for ax in range(values.ndim):
        for shift in (1, -1):
            nb = np.roll(values, shift, axis=ax)
            idx = [slice(None)] * values.ndim
            idx[ax] = 0 if shift == 1 else -1
            nb[tuple(idx)] = np.inf
            is_min &= values <= nb
    flat_vals = values.ravel()
    flat_pts = points.reshape(-1, points.shape[-1])
    order = np.lexsort((np.arange(flat_vals.size), flat_vals))
    mins = [i for i in order if is_min.ravel()[i]]
    rest = [i for i in order if not is_min.ravel()[i] and np.isfinite(flat_vals[i])]
    chosen = (mins + rest)[:topk]
    return [flat_pts[i].copy() for i in chosen]


class _Descent:
    """Projected descent with kink/bound breakpoints for one objective on one box."""

    def __init__(self, obj: _Objective, box: Box, cfg: SolverConfig):
        self.obj = obj
        self.lo = box.lower
        self.hi = box.upper
        self.cfg = cfg
        self.kinks = np.asarray(obj.g.kinks, dtype=float)

    def _f(self, x):
        return float(self.obj.value(x))

    def _at_kink(self, x):
        if self.kinks.size == 0:
            return np.zeros(x.shape, bool)
        return np.any(x[:, None] == self.kinks[None, :], axis=1)

    def _effective_gradient(self, x):
        """Kink- and bound-aware descent gradient, plus a scale for the stopping test."""
        gg, sg = self.obj.parts(x)
        grad = gg + sg
        kink = self._at_kink(x)
        if np.any(kink):
            f0 = self._f(x)
            for i in np.flatnonzero(kink):
                e = np.zeros_like(x)
                e[i] = _KINK_STEP
                dplus = (self._f(np.minimum(x + e, self.hi)) - f0) / _KINK_STEP if x[i] < self.hi[i] else np.inf
                dminus = (f0 - self._f(np.maximum(x - e, self.lo))) / _KINK_STEP if x[i] > self.lo[i] else -np.inf
                if dminus <= 0.0 <= dplus:
                    grad[i] = 0.0
                elif dplus < 0.0 and (dminus <= 0.0 or -dplus >= dminus):
                    grad[i] = dplus
                else:
                    grad[i] = dminus
        # bound constraints: gradient pushing outward is inactive
        grad = np.where((x <= self.lo) & (grad > 0), 0.0, grad)
        grad = np.where((x >= self.hi) & (grad < 0), 0.0, grad)
        scale = 1.0 + np.max(np.abs(np.where(np.isfinite(gg), gg, 0.0))) + np.max(np.abs(np.where(np.isfinite(sg), sg, 0.0)))
        return grad, kink, scale

    def _max_step(self, x, d):
        t = np.inf
        for i in np.flatnonzero(d):
            bounds = [self.hi[i] if d[i] > 0 else self.lo[i]]
            ahead = self.kinks[(self.kinks - x[i]) * np.sign(d[i]) > 0]
            bounds.extend(ahead)
            dist = np.min(np.abs(np.asarray(bounds) - x[i]))
            t = min(t, dist / abs(d[i]))
        return t

    def _step(self, x, d, slope, f0):
        t_max = self._max_step(x, d)
        t = min(1.0, t_max)
        for _ in range(80):
            if t == t_max:
                xn = x + t * d
                # land exactly on the breakpoint that limited the step
                for i in np.flatnonzero(d):
                    targets = np.concatenate([[self.lo[i], self.hi[i]], self.kinks])
                    j = np.argmin(np.abs(targets - xn[i]))
                    if abs(targets[j] - xn[i]) <= 1e-12 * (1 + abs(targets[j])):
                        xn[i] = targets[j]
            else:
                xn = x + t * d
            xn = np.clip(xn, self.lo, self.hi)
            fn = self._f(xn)
            if np.isfinite(fn) and fn <= f0 + _ARMIJO * t * slope:
                gg, sg = self.obj.parts(xn)
                if np.all(np.isfinite(gg + sg)):
                    return xn, fn
            t = 0.5 * t
            if t < 1e-18:
                break
        return None, f0

    def _newton_direction(self, x, grad, free):
        d = np.zeros_like(x)
        H = self.obj.hessian(x)
        if H is None:
            return d, False
        idx = np.flatnonzero(free)
        Hf = H[np.ix_(idx, idx)]
        if idx.size == 0 or not np.all(np.isfinite(Hf)):
            return d, False
        try:
            L = np.linalg.cholesky(Hf)
        except np.linalg.LinAlgError:
            return d, False
        d[idx] = -np.linalg.solve(L.T, np.linalg.solve(L, grad[idx]))
        return d, True

    def _newton_by_gradient(self, x, d, grad):
        t = min(1.0, self._max_step(x, d))
        xn = np.clip(x + t * d, self.lo, self.hi)
        gn, _, _ = self._effective_gradient(xn)
        if np.all(np.isfinite(gn)) and np.max(np.abs(gn)) < np.max(np.abs(grad)):
            return xn
        return None

    def run(self, x0):
        x = np.clip(np.asarray(x0, dtype=float), self.lo, self.hi)
        # move off boundary points where the objective has infinite slope
        for _ in range(60):
            gg, sg = self.obj.parts(x)
            bad = ~np.isfinite(gg + sg)
            if not np.any(bad):
                break
            mid = 0.5 * (self.lo + self.hi)
            x = np.where(bad, x + 1e-3 * (mid - x), x)
        f = self._f(x)
        for _ in range(self.cfg.local_steps):
            grad, kink, scale = self._effective_gradient(x)
            if not np.all(np.isfinite(grad)):
                return x, f, False
            free = grad != 0.0
            converged = np.max(np.abs(grad)) <= self.cfg.tol_grad * scale
            d, newton_ok = self._newton_direction(x, grad, free)
            if converged:
                # one polishing Newton step takes the error from tol_grad to rounding level
                xn = self._newton_by_gradient(x, d, grad) if newton_ok else None
                return (xn, self._f(xn), True) if xn is not None else (x, f, True)
            if not newton_ok:
                d = -grad
            slope = float(grad @ d)
            xn, fn = self._step(x, d, slope, f) if slope < 0 else (None, f)
            if (xn is None or np.array_equal(xn, x)) and newton_ok and -slope <= 1e-12 * (1 + abs(f)):
                # predicted decrease below the rounding level of f: judge by the gradient
                xn = self._newton_by_gradient(x, d, grad)
                fn = self._f(xn) if xn is not None else f
            if xn is not None and np.array_equal(xn, x):
                xn = None
            if xn is None and newton_ok:
                d = -grad
                xn, fn = self._step(x, d, float(grad @ d), f)
            if xn is None:
                # no decrease possible at working precision
                stalled_ok = np.max(np.abs(grad)) <= 1e-7 * scale
                return x, f, stalled_ok
            x, f = xn, fn
        grad, _, scale = self._effective_gradient(x)
        return x, f, bool(np.max(np.abs(grad)) <= self.cfg.tol_grad * scale)


def _snap_candidates(x, kinks, spacing):
    out = []
    if len(kinks) == 0:
        return out
    kinks = np.asarray(kinks, float)
    near = np.abs(x[:, None] - kinks[None, :]) <= spacing[:, None]
    if np.any(near):
        xs = x.copy()
        for i in range(x.size):
            if np.any(near[i]):
                xs[i] = kinks[np.argmin(np.abs(kinks - x[i]))]
        out.append(xs)
    return out


def _minimize(obj: _Objective, box: Box, cfg: SolverConfig) -> ProxResult:
    k = cfg.grid_points_per_dim
    pts = _grid(box, k)
    vals = obj.value(pts)
    if not np.any(np.isfinite(vals)):
        return ProxResult([], np.inf, "infeasible", 0)
    seeds = _seeds(box, vals, pts, cfg.multistart_topk)
    spacing = (box.upper - box.lower) / (k - 1)
    for s in list(seeds[:2]):
        seeds.extend(_snap_candidates(s, obj.g.kinks, spacing))

    descent = _Descent(obj, box, cfg)
    runs = [descent.run(s) for s in seeds]
    fvals = np.array([r[1] for r in runs])
    best = float(np.min(fvals))
    vtol = 10 * cfg.tol_cluster
    cands = sorted((r for r in runs if r[1] <= best + vtol), key=lambda r: r[1])

    clusters = []  # [representative, value, count, converged]
    for x, f, ok in cands:
        for c in clusters:
            if np.linalg.norm(x - c[0]) <= cfg.tol_cluster:
                c[2] += 1
                c[3] = c[3] and ok
                break
        else:
            clusters.append([x, f, 1, ok])
    clusters.sort(key=lambda c: tuple(c[0]))
    best_cluster = min(clusters, key=lambda c: c[1])
    status = "converged" if all(r[2] for r in runs) else "max_iter"
    width = box.upper - box.lower
    on_boundary = any(
        np.any((c[0] - box.lower <= 1e-9 * (1 + width)) | (box.upper - c[0] <= 1e-9 * (1 + width)))
        for c in clusters)
    return ProxResult(
        minimizers=[c[0] for c in clusters],
        value=best,
        status=status,
        n_starts_agreeing=best_cluster[2],
        n_starts=len(runs),
        objective_values=[float(c[1]) for c in clusters],
        on_boundary=bool(on_boundary),
    )


def _coupling_objective(g: TestFunction, c: Coupling, y):
    y = np.asarray(y, dtype=float)
    return _Objective(
        g,
        lambda x: -c._eval(x, y),
        lambda x: -c._grad_x(x, y),
        lambda x: -c._hess(x, y)[0],
    )


def _check_y(c: Coupling, y):
    y = np.asarray(y, dtype=float)
    if y.shape != (c.dim_y,):
        raise ValueError(f"dimension mismatch: y must have shape ({c.dim_y},)")
    if not c.Y.contains(y):
        raise ValueError(f"domain violation: y outside Y = {c.Y}")
    return y


def prox(g: TestFunction, c: Coupling, y, cfg: SolverConfig = SolverConfig(), center=None) -> ProxResult:
    """Global minimizers of ``g(x) - Phi(x, y)`` over ``X cap search_box``.

    With ``cfg.locality_radius`` set, the search is restricted to the
    max-norm ball of that radius around ``center``.
    """
    y = _check_y(c, y)
    if g.dim != c.dim_x:
        raise ValueError(f"dimension mismatch: g on R^{g.dim}, coupling X in R^{c.dim_x}")
    box = _feasible_box(g, c.X, center, cfg.locality_radius)
    return _minimize(_coupling_objective(g, c, y), box, cfg)


def conjugate(g: TestFunction, c: Coupling, y, cfg: SolverConfig = SolverConfig()) -> float:
    """``g^Phi(y) = sup_x Phi(x, y) - g(x)``."""
    return prox(g, c, y, cfg).envelope


def _outer_box(c: Coupling, cfg: SolverConfig) -> Box:
    if cfg.y_box is None:
        raise ValueError("biconjugate needs cfg.y_box")
    box = cfg.y_box.intersect(c.Y)
    if box is None or not box.bounded:
        raise ValueError("y_box must be a bounded box meeting Y")
    margin = 1e-6 * (1 + np.abs(box.lower))
    lo = np.where(box.lower_closed, box.lower, box.lower + margin)
    hi = np.where(box.upper_closed, box.upper, box.upper - margin)
    return Box(lo, hi)


def biconjugate(g: TestFunction, c: Coupling, x, cfg: SolverConfig) -> float:
    """``g^{PhiPhi}(x) = sup_{y in y_box} Phi(x, y) - g^Phi(y)``.

    The outer maximization is a grid over ``cfg.y_box`` followed by bounded
    L-BFGS-B refinement of the best cells; its gradient is
    ``grad_y Phi(x, y) - grad_y Phi(P(y), y)``. Emits
    ``UnboundedOuterWarning`` if the maximizer lies on the y-box boundary.
    """
    x = np.asarray(x, dtype=float)
    if x.shape != (c.dim_x,) or not c.X.contains(x):
        raise ValueError("x must be a point of X")
    box = _outer_box(c, cfg)
    x_int = bool(c.X.interior_contains(x))

    def neg_psi(yv):
        yv = np.clip(yv, box.lower, box.upper)
        res = prox(g, c, yv, cfg)
        val = -(c._eval(x, yv) - res.envelope)
        if x_int:
            grad = -(c._grad_y(x, yv) - c._grad_y(res.minimizers[0], yv))
        else:
            grad = np.full(yv.shape, np.nan)
        return float(val), grad

    pts = _grid(box, cfg.outer_grid_points).reshape(-1, c.dim_y)
    vals = np.array([neg_psi(p)[0] for p in pts])
    order = np.lexsort((np.arange(vals.size), vals))
    best_val, best_y = vals[order[0]], pts[order[0]]
    bounds = list(zip(box.lower, box.upper))
    for i in order[:3]:
        def fun(yv):
            v, gr = neg_psi(yv)
            if not np.all(np.isfinite(gr)):
                gr = _fd_grad(lambda u: neg_psi(u)[0], yv, box)
            return v, gr
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            res = minimize(fun, pts[i], jac=True, method="L-BFGS-B", bounds=bounds,
                           options={"ftol": 1e-15, "gtol": 1e-10, "maxiter": 200})
        if res.fun < best_val:
            best_val, best_y = float(res.fun), np.clip(res.x, box.lower, box.upper)
    width = box.upper - box.lower
    if np.any((best_y - box.lower <= 1e-7 * (1 + width)) | (box.upper - best_y <= 1e-7 * (1 + width))):
        warnings.warn(f"biconjugate maximizer {best_y} on the y-box boundary", UnboundedOuterWarning,
                      stacklevel=2)
    return -float(best_val)


def _fd_grad(f, y, box, h=1e-6):
    out = np.zeros_like(y)
    for i in range(y.size):
        e = np.zeros_like(y)
        e[i] = h
        yp, ym = np.minimum(y + e, box.upper), np.maximum(y - e, box.lower)
        out[i] = (f(yp) - f(ym)) / (yp[i] - ym[i])
    return out


def scaled_prox(g: TestFunction, M, z, cfg: SolverConfig = SolverConfig(), center=None) -> ProxResult:
    """Minimizers of ``1/2 <x - z, M^{-1}(x - z)> + g(x)`` for symmetric positive definite ``M``.

    With ``cfg.locality_radius`` the search is restricted to the max-norm
    ball around ``center``.
    """
    M = np.atleast_2d(np.asarray(M, dtype=float))
    z = np.asarray(z, dtype=float)
    if M.shape != (g.dim, g.dim) or z.shape != (g.dim,):
        raise ValueError("dimension mismatch in scaled_prox")
    if not np.allclose(M, M.T, rtol=1e-10, atol=1e-14):
        raise ValueError("non-SPD M: not symmetric")
    try:
        np.linalg.cholesky(M)
    except np.linalg.LinAlgError:
        raise ValueError("non-SPD M: not positive definite") from None
    Minv = np.linalg.inv(M)
    Minv = 0.5 * (Minv + Minv.T)
    obj = _Objective(
        g,
        lambda x: 0.5 * np.einsum("...i,ij,...j->...", x - z, Minv, x - z),
        lambda x: (x - z) @ Minv,
        lambda x: Minv,
    )
    box = _feasible_box(g, None, center, cfg.locality_radius)
    return _minimize(obj, box, cfg)
