"""Coupling functions ``Phi: X x Y -> R`` and their derivatives.

Every coupling exposes ``eval``, the partial gradients ``grad_x`` and
``grad_y``, the three second-derivative blocks and, for twisting families,
the inverse ``G(x, v)`` of ``y -> grad_x(x, y)``.

Block conventions: ``hess_xy[i, j] = d^2 Phi / dx_i dy_j`` has shape
``(dim_x, dim_y)``; ``hess_yx`` is its transpose.

``eval``, ``grad_x`` and ``grad_y`` broadcast over leading axes; ``hess`` and
``twist_inverse`` act on single points.
"""

from __future__ import annotations

import numpy as np

from .domain import Box
from .kernels import Kernel, make_kernel

__all__ = [
    "Coupling",
    "Euclidean",
    "LeftBregman",
    "RightBregman",
    "Anisotropic",
    "Entropic",
    "QuadraticTransform",
    "ExpCoupling",
    "make_coupling",
    "FAMILIES",
    "TWIST_FAMILIES",
]


class NoTwistError(ValueError):
    """The coupling family has no (closed-form) twist inverse."""


class Coupling:
    family = ""
    has_twist = True

    def __init__(self, dim_x: int, dim_y: int, X: Box, Y: Box, gamma: float = 1.0,
                 kernel: Kernel | None = None):
        if not gamma > 0 or not np.isfinite(gamma):
            raise ValueError(f"gamma must be positive, got {gamma}")
        self.dim_x = int(dim_x)
        self.dim_y = int(dim_y)
        self.X = X
        self.Y = Y
        self.gamma = float(gamma)
        self.kernel = kernel

    def __repr__(self):
        k = f", kernel={self.kernel.id}" if self.kernel is not None else ""
        return f"{type(self).__name__}(gamma={self.gamma:g}, n={self.dim_x}{k})"

    # -- validation -----------------------------------------------------------
    def _xy(self, x, y, interior_x=False):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        if x.shape[-1:] != (self.dim_x,) or y.shape[-1:] != (self.dim_y,):
            raise ValueError(
                f"dimension mismatch: expected x in R^{self.dim_x}, y in R^{self.dim_y}, "
                f"got shapes {x.shape} and {y.shape}")
        inside = self.X.interior_contains(x) if interior_x else self.X.contains(x)
        if not np.all(inside):
            raise ValueError(f"domain violation: x outside {'int ' if interior_x else ''}X = {self.X}")
        if not np.all(self.Y.contains(y)):
            raise ValueError(f"domain violation: y outside Y = {self.Y}")
        return x, y

    # -- public API -------------------------------------------------------------
    def eval(self, x, y):
        return self._eval(*self._xy(x, y))

    def grad_x(self, x, y):
        return self._grad_x(*self._xy(x, y, interior_x=True))

    def grad_y(self, x, y):
        return self._grad_y(*self._xy(x, y, interior_x=True))

    def hess(self, x, y):
        """Return ``(hess_xx, hess_xy, hess_yy)`` as dense matrices at one point."""
        x, y = self._xy(x, y, interior_x=True)
        if x.ndim != 1 or y.ndim != 1:
            raise ValueError("hess acts on single points")
        return self._hess(x, y)

    def twist_inverse(self, x, v):
        """The unique ``y`` in ``Y`` with ``grad_x(x, y) = v``."""
        if not self.has_twist:
            raise NoTwistError(f"{self.family} coupling has no twist inverse")
        x = np.asarray(x, dtype=float)
        v = np.asarray(v, dtype=float)
        if x.shape[-1:] != (self.dim_x,) or v.shape[-1:] != (self.dim_x,):
            raise ValueError("dimension mismatch in twist_inverse")
        if not np.all(self.X.interior_contains(x)):
            raise ValueError(f"domain violation: x outside int X = {self.X}")
        y = self._twist_inverse(x, v)
        if not np.all(np.isfinite(y)) or not np.all(self.Y.contains(y)):
            raise ValueError(f"v outside the range of grad_x(x, .) for {self.family}")
        return y

    # -- family hooks ---------------------------------------------------------
    def _eval(self, x, y):
        raise NotImplementedError

    def _grad_x(self, x, y):
        raise NotImplementedError

    def _grad_y(self, x, y):
        raise NotImplementedError

    def _hess(self, x, y):
        raise NotImplementedError

    def _twist_inverse(self, x, v):
        raise NoTwistError(f"{self.family} coupling has no twist inverse")


class Euclidean(Coupling):
    """``-||x - y||^2 / (2 gamma)`` on ``R^n x R^n``."""

    family = "euclidean"

    def __init__(self, gamma=1.0, dim=1):
        super().__init__(dim, dim, Box.full(dim), Box.full(dim), gamma)

    def _eval(self, x, y):
        return -np.sum((x - y) ** 2, axis=-1) / (2 * self.gamma)

    def _grad_x(self, x, y):
        return -(x - y) / self.gamma

    def _grad_y(self, x, y):
        return (x - y) / self.gamma

    def _hess(self, x, y):
        eye = np.eye(self.dim_x) / self.gamma
        return -eye, eye.copy(), -eye

    def _twist_inverse(self, x, v):
        return x + self.gamma * v


class LeftBregman(Coupling):
    """``-D_h(x, y) / gamma`` with ``X = dom h`` and ``Y = int dom h``."""

    family = "left_bregman"

    def __init__(self, kernel: Kernel, gamma=1.0, dim=1):
        super().__init__(dim, dim, kernel.domain(dim), kernel.interior(dim), gamma, kernel)

    def _eval(self, x, y):
        h = self.kernel
        d = h.value(x) - h.value(y) - np.sum(h.grad(y) * (x - y), axis=-1)
        return -d / self.gamma

    def _grad_x(self, x, y):
        h = self.kernel
        return -(h.grad(x) - h.grad(y)) / self.gamma

    def _grad_y(self, x, y):
        return self.kernel.hess_diag(y) * (x - y) / self.gamma

    def _hess(self, x, y):
        h = self.kernel
        hxx = -np.diag(h.hess_diag(x)) / self.gamma
        hxy = np.diag(h.hess_diag(y)) / self.gamma
        hyy = np.diag(h.third_diag(y) * (x - y) - h.hess_diag(y)) / self.gamma
        return hxx, hxy, hyy

    def _twist_inverse(self, x, v):
        h = self.kernel
        return h.conj_grad(h.grad(x) + self.gamma * v)


class RightBregman(Coupling):
    """``-D_h(y, x) / gamma``; requires ``dom h = R^n`` and ``hess h`` positive definite."""

    family = "right_bregman"

    def __init__(self, kernel: Kernel, gamma=1.0, dim=1):
        if not kernel.full_domain:
            raise ValueError(f"right_bregman requires a kernel with full domain; {kernel.id} is not")
        super().__init__(dim, dim, Box.full(dim), Box.full(dim), gamma, kernel)

    def _eval(self, x, y):
        h = self.kernel
        d = h.value(y) - h.value(x) - np.sum(h.grad(x) * (y - x), axis=-1)
        return -d / self.gamma

    def _grad_x(self, x, y):
        return self.kernel.hess_diag(x) * (y - x) / self.gamma

    def _grad_y(self, x, y):
        h = self.kernel
        return (h.grad(x) - h.grad(y)) / self.gamma

    def _hess(self, x, y):
        h = self.kernel
        hxx = np.diag(h.third_diag(x) * (y - x) - h.hess_diag(x)) / self.gamma
        hxy = np.diag(h.hess_diag(x)) / self.gamma
        hyy = -np.diag(h.hess_diag(y)) / self.gamma
        return hxx, hxy, hyy

    def _twist_inverse(self, x, v):
        return x + self.gamma * v / self.kernel.hess_diag(x)


class Anisotropic(Coupling):
    """``-gamma * phi((x - y) / gamma)`` (epi-scaled reference), full-domain ``phi``."""

    family = "anisotropic"

    def __init__(self, kernel: Kernel, gamma=1.0, dim=1):
        if not kernel.full_domain:
            raise ValueError(f"anisotropic coupling requires dom phi = R^n; {kernel.id} is not")
        super().__init__(dim, dim, Box.full(dim), Box.full(dim), gamma, kernel)

    def _eval(self, x, y):
        return -self.gamma * self.kernel.value((x - y) / self.gamma)

    def _grad_x(self, x, y):
        return -self.kernel.grad((x - y) / self.gamma)

    def _grad_y(self, x, y):
        return self.kernel.grad((x - y) / self.gamma)

    def _hess(self, x, y):
        d = np.diag(self.kernel.hess_diag((x - y) / self.gamma)) / self.gamma
        return -d, d.copy(), -d

    def _twist_inverse(self, x, v):
        return x - self.gamma * self.kernel.conj_grad(-v)


class Entropic(Coupling):
    """``-gamma * sum_i y_i phi(x_i / y_i)`` on ``R^n_+ x R^n_++``.

    The generator must satisfy ``phi(1) = phi'(1) = 0``. The gradient in
    ``x`` is ``-gamma phi'(x_i / y_i)``, so the twist inverse is
    ``y_i = x_i / (phi^*)'(-v_i / gamma)``.
    """

    family = "entropic"

    def __init__(self, kernel: Kernel, gamma=1.0, dim=1):
        if kernel.dom_lower != 0.0:
            raise ValueError("entropic coupling needs a generator on [0, inf)")
        if abs(kernel.scalar(1.0)) > 1e-12 or abs(kernel.scalar_d1(1.0)) > 1e-12:
            raise ValueError(f"generator {kernel.id} violates phi(1) = phi'(1) = 0")
        super().__init__(dim, dim, Box.nonnegative(dim), Box.positive(dim), gamma, kernel)

    def _eval(self, x, y):
        return -self.gamma * np.sum(y * self.kernel.scalar(x / y), axis=-1)

    def _grad_x(self, x, y):
        return -self.gamma * self.kernel.scalar_d1(x / y)

    def _grad_y(self, x, y):
        k = self.kernel
        t = x / y
        return self.gamma * (t * k.scalar_d1(t) - k.scalar(t))

    def _hess(self, x, y):
        t = x / y
        d2 = self.kernel.scalar_d2(t)
        g = self.gamma
        return np.diag(-g * d2 / y), np.diag(g * t * d2 / y), np.diag(-g * t**2 * d2 / y)

    def _twist_inverse(self, x, v):
        return x / self.kernel.scalar_conj_d1(-v / self.gamma)


class QuadraticTransform(Coupling):
    """``<x, v> - (r/2) ||x||^2`` for ``y = (v, r)`` in ``R^n x R``; not a twist."""

    family = "quadratic_transform"
    has_twist = False

    def __init__(self, dim=1):
        super().__init__(dim, dim + 1, Box.full(dim), Box.full(dim + 1), 1.0)

    def _eval(self, x, y):
        v, r = y[..., :-1], y[..., -1]
        return np.sum(x * v, axis=-1) - 0.5 * r * np.sum(x**2, axis=-1)

    def _grad_x(self, x, y):
        v, r = y[..., :-1], y[..., -1:]
        return v - r * x

    def _grad_y(self, x, y):
        x, y = np.broadcast_arrays(x, y[..., :-1])
        return np.concatenate([x, -0.5 * np.sum(x**2, axis=-1, keepdims=True)], axis=-1)

    def _hess(self, x, y):
        n = self.dim_x
        hxx = -y[-1] * np.eye(n)
        hxy = np.hstack([np.eye(n), -x[:, None]])
        return hxx, hxy, np.zeros((n + 1, n + 1))


class ExpCoupling(Coupling):
    """``exp(x - y)`` on ``R x R``; used for the empty-subdifferential example."""

    family = "exp_coupling"

    def __init__(self):
        super().__init__(1, 1, Box.full(1), Box.full(1), 1.0)

    def _eval(self, x, y):
        return np.exp(x - y)[..., 0]

    def _grad_x(self, x, y):
        return np.exp(x - y)

    def _grad_y(self, x, y):
        return -np.exp(x - y)

    def _hess(self, x, y):
        e = np.exp(x - y).reshape(1, 1)
        return e, -e, e.copy()

    def _twist_inverse(self, x, v):
        with np.errstate(divide="ignore", invalid="ignore"):
            return x - np.log(v)


FAMILIES = ("euclidean", "left_bregman", "right_bregman", "anisotropic", "entropic",
            "quadratic_transform", "exp_coupling")
TWIST_FAMILIES = ("euclidean", "left_bregman", "right_bregman", "anisotropic", "entropic")

_DEFAULT_KERNEL = {
    "left_bregman": "boltzmann_shannon",
    "right_bregman": "cosh",
    "anisotropic": "cosh",
    "entropic": "kl_generator",
}


def make_coupling(family: str, gamma: float = 1.0, kernel: str | Kernel | None = None,
                  dim: int = 1, kernel_params: dict | None = None) -> Coupling:
    """Build a coupling from a family tag, step ``gamma`` and kernel id."""
    if family not in FAMILIES:
        raise ValueError(f"unknown coupling family {family!r}; expected one of {FAMILIES}")
    if family in _DEFAULT_KERNEL:
        if kernel is None:
            kernel = _DEFAULT_KERNEL[family]
        if isinstance(kernel, str):
            kernel = make_kernel(kernel, kernel_params)
    elif kernel is not None:
        raise ValueError(f"{family} coupling takes no kernel")
    if family == "euclidean":
        return Euclidean(gamma, dim)
    if family == "left_bregman":
        return LeftBregman(kernel, gamma, dim)
    if family == "right_bregman":
        return RightBregman(kernel, gamma, dim)
    if family == "anisotropic":
        return Anisotropic(kernel, gamma, dim)
    if family == "entropic":
        return Entropic(kernel, gamma, dim)
    if family == "quadratic_transform":
        return QuadraticTransform(dim)
    if dim != 1:
        raise ValueError("exp_coupling is one-dimensional")
    return ExpCoupling()
