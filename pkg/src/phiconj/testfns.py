"""Catalog of target functions ``g`` used throughout the package.

Each entry carries a vectorized value oracle (``+inf`` outside its effective
domain), a gradient and Hessian where they exist, its regular subdifferential
as a per-coordinate interval, the coordinate values where it has kinks, and
analytic metadata (convexity, hypoconvexity modulus, a conservative local
prox-regularity constant, the prox-boundedness threshold).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .domain import Box

__all__ = ["TestFunction", "make_function", "catalog", "FUNCTION_IDS"]

# prox-regularity constant reported for convex functions; any r > 0 works for them
R_CONVEX = 1e-8
SEARCH_HALF_WIDTH = 6.0


@dataclass(frozen=True)
class TestFunction:
    """A target function together with the structure the solvers rely on.

    ``subdiff(x)`` returns the regular subdifferential as a pair of arrays
    ``(lo, hi)`` so that ``dg(x) = prod_i [lo_i, hi_i]``, or ``None`` when it
    is empty. ``prox_regular(x)`` returns a constant ``r`` for which the
    function is prox-regular on a neighbourhood of ``x`` (``inf`` if it is
    not prox-regular there).
    """

    __test__ = False  # keep pytest from collecting this class

    id: str
    dim: int
    value: Callable
    grad: Callable | None
    hess: Callable | None
    subdiff: Callable
    dom: Box
    search_box: Box
    kinks: tuple = ()
    convex: bool = False
    hypoconvex_modulus: float = 0.0
    prox_bound_threshold: float = np.inf
    prox_regular: Callable = field(default=lambda x: R_CONVEX)
    params: dict = field(default_factory=dict)

    def __repr__(self):
        extra = ", ".join(f"{k}={v}" for k, v in self.params.items())
        return f"TestFunction({self.id}, n={self.dim}{', ' + extra if extra else ''})"

    @property
    def smooth(self) -> bool:
        return not self.kinks and self.grad is not None

    def __call__(self, x):
        return self.value(x)


def _smooth_subdiff(grad):
    def subdiff(x):
        g = np.asarray(grad(x), dtype=float)
        return g, g.copy()
    return subdiff


def _vec(params, key, n, default):
    val = np.asarray(params.get(key, default), dtype=float)
    return np.broadcast_to(val, (n,)).astype(float)


def _quad(n, params):
    center = _vec(params, "center", n, 0.0)
    scale = float(params.get("scale", 1.0))
    if scale == 0:
        raise ValueError("quadratic scale must be nonzero")

    def value(x):
        return 0.5 * scale * np.sum((np.asarray(x, float) - center) ** 2, axis=-1)

    def grad(x):
        return scale * (np.asarray(x, float) - center)

    def hess(x):
        return scale * np.eye(n)

    convex = scale > 0
    return dict(
        value=value, grad=grad, hess=hess, subdiff=_smooth_subdiff(grad),
        convex=convex, hypoconvex_modulus=max(0.0, -scale),
        prox_bound_threshold=np.inf if convex else 1.0 / -scale,
        prox_regular=(lambda x: R_CONVEX) if convex else (lambda x: -scale),
    )


def _quad_form(n, params):
    """``1/2 <x, A x>``; the default ``A`` has 2 on the diagonal and 0.5 off it."""
    default = np.full((n, n), 0.5) + 1.5 * np.eye(n)
    A = np.asarray(params.get("matrix", default), dtype=float).reshape(n, n)
    if not np.allclose(A, A.T):
        raise ValueError("quad_form matrix must be symmetric")
    lam_min = float(np.linalg.eigvalsh(A).min())

    def value(x):
        x = np.asarray(x, float)
        return 0.5 * np.einsum("...i,ij,...j->...", x, A, x)

    def grad(x):
        return np.asarray(x, float) @ A

    def hess(x):
        return A.copy()

    convex = lam_min >= 0
    return dict(
        value=value, grad=grad, hess=hess, subdiff=_smooth_subdiff(grad),
        convex=convex, hypoconvex_modulus=max(0.0, -lam_min),
        prox_bound_threshold=np.inf if convex else 1.0 / -lam_min,
        prox_regular=(lambda x: R_CONVEX) if lam_min > 0 else (lambda x: max(-lam_min, R_CONVEX)),
    )


def _abs(n, params, sign=1.0):
    def value(x):
        return sign * np.sum(np.abs(np.asarray(x, float)), axis=-1)

    def grad(x):
        return sign * np.sign(np.asarray(x, float))

    def hess(x):
        return np.zeros((n, n))

    def subdiff(x):
        x = np.asarray(x, float)
        s = sign * np.sign(x)
        at_kink = x == 0
        if sign < 0 and np.any(at_kink):
            # -|.| has an empty regular subdifferential at the kink
            return None
        lo = np.where(at_kink, -1.0, s)
        hi = np.where(at_kink, 1.0, s)
        return lo, hi

    def prox_regular(x, radius=0.25):
        if sign > 0:
            return R_CONVEX
        return np.inf if np.any(np.abs(np.asarray(x, float)) <= radius) else R_CONVEX

    return dict(value=value, grad=grad, hess=hess, subdiff=subdiff, kinks=(0.0,),
                convex=sign > 0, prox_regular=prox_regular)


def _double_well(n, params):
    def value(x):
        x = np.asarray(x, float)
        return np.sum((x**2 - 1.0) ** 2, axis=-1)

    def grad(x):
        x = np.asarray(x, float)
        return 4.0 * x * (x**2 - 1.0)

    def hess(x):
        x = np.asarray(x, float)
        return np.diag(12.0 * x**2 - 4.0)

    def prox_regular(x, radius=0.25):
        # lower bound of g'' = 12 t^2 - 4 over [x_i - radius, x_i + radius]
        d = np.maximum(np.abs(np.asarray(x, float)) - radius, 0.0)
        return float(max(R_CONVEX, np.max(4.0 - 12.0 * d**2)))

    return dict(value=value, grad=grad, hess=hess, subdiff=_smooth_subdiff(grad),
                hypoconvex_modulus=4.0, prox_regular=prox_regular)


def _const(n, params):
    rho = float(params.get("rho", 0.0))

    def value(x):
        x = np.asarray(x, float)
        return np.full(x.shape[:-1], rho)

    def grad(x):
        return np.zeros_like(np.asarray(x, float))

    def hess(x):
        return np.zeros((n, n))

    return dict(value=value, grad=grad, hess=hess, subdiff=_smooth_subdiff(grad), convex=True)


def _linear(n, params):
    c = _vec(params, "c", n, 1.0)

    def value(x):
        return np.sum(np.asarray(x, float) * c, axis=-1)

    def grad(x):
        return np.broadcast_to(c, np.shape(x)).copy()

    def hess(x):
        return np.zeros((n, n))

    return dict(value=value, grad=grad, hess=hess, subdiff=_smooth_subdiff(grad), convex=True)


def _indicator_box(n, params):
    half = float(params.get("half_width", 1.0))
    dom = Box.cube(n, -half, half)

    def value(x):
        x = np.asarray(x, float)
        return np.where(dom.contains(x), 0.0, np.inf)

    def grad(x):
        return np.zeros_like(np.asarray(x, float))

    def hess(x):
        return np.zeros((n, n))

    def subdiff(x):
        x = np.asarray(x, float)
        if not dom.contains(x):
            return None
        lo = np.where(x <= -half, -np.inf, 0.0)
        hi = np.where(x >= half, np.inf, 0.0)
        return lo, hi

    return dict(value=value, grad=grad, hess=hess, subdiff=subdiff, dom=dom, convex=True)


def _huber(n, params):
    delta = float(params.get("delta", 1.0))
    if delta <= 0:
        raise ValueError("huber delta must be positive")

    def value(x):
        a = np.abs(np.asarray(x, float))
        return np.sum(np.where(a <= delta, 0.5 * a**2, delta * (a - 0.5 * delta)), axis=-1)

    def grad(x):
        return np.clip(np.asarray(x, float), -delta, delta)

    def hess(x):
        return np.diag((np.abs(np.asarray(x, float)) < delta).astype(float))

    return dict(value=value, grad=grad, hess=hess, subdiff=_smooth_subdiff(grad), convex=True)


_BUILDERS = {
    "quad": lambda n, p: _quad(n, p),
    "shifted_quad": lambda n, p: _quad(n, {"center": 0.5, **p}),
    "neg_quad": lambda n, p: _quad(n, {"scale": -1.0, **p}),
    "quad_form": _quad_form,
    "abs": lambda n, p: _abs(n, p),
    "neg_abs": lambda n, p: _abs(n, p, sign=-1.0),
    "double_well": _double_well,
    "const_rho": _const,
    "zero": lambda n, p: _const(n, {"rho": 0.0}),
    "linear": _linear,
    "indicator_box": _indicator_box,
    "huber": _huber,
}
FUNCTION_IDS = tuple(_BUILDERS)


def make_function(id: str, dim: int = 1, **params) -> TestFunction:
    """Build one catalog entry.

    Parameters
    ----------
    id : str
        One of ``FUNCTION_IDS``.
    dim : int
        Dimension of the argument.
    **params
        Family parameters: ``center``/``scale`` (quadratics), ``matrix``
        (quad_form), ``rho``
        (const_rho), ``c`` (linear), ``half_width`` (indicator_box),
        ``delta`` (huber).
    """
    if id not in _BUILDERS:
        raise ValueError(f"unknown function id {id!r}; expected one of {FUNCTION_IDS}")
    if dim < 1:
        raise ValueError("dim must be positive")
    parts = _BUILDERS[id](dim, params)
    parts.setdefault("dom", Box.full(dim))
    parts.setdefault("search_box", Box.cube(dim, -SEARCH_HALF_WIDTH, SEARCH_HALF_WIDTH))
    return TestFunction(id=id, dim=dim, params=dict(params), **parts)


def catalog(dim: int = 1) -> list[TestFunction]:
    """Default instance of every catalog entry in dimension ``dim``."""
    out = []
    for fid in FUNCTION_IDS:
        if fid == "const_rho":
            out.append(make_function(fid, dim, rho=5.0))
        else:
            out.append(make_function(fid, dim))
    return out
