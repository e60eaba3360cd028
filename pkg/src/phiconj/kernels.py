"""Separable Legendre kernels.

A kernel is ``h(x) = sum_i k(x_i)`` for a scalar generator ``k``. It is used
as the Bregman distance-generating function ``h`` (left/right Bregman
couplings), the anisotropic reference ``phi`` and the generator of a
phi-divergence (entropic coupling). Every family has its convex conjugate in
closed form.

All methods accept a point or a stack of points; the last axis is the
coordinate axis.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import ClassVar

import numpy as np
from scipy.special import xlogy

from .domain import Box

__all__ = ["Kernel", "make_kernel", "KERNEL_IDS"]


@dataclass(frozen=True)
class Kernel:
    """Base class; subclasses implement the scalar generator and its conjugate."""

    params: dict = field(default_factory=dict)

    id: ClassVar[str] = ""
    # effective domain of the scalar generator: [dom_lower, +inf)
    dom_lower: ClassVar[float] = -np.inf
    strictly_convex: ClassVar[bool] = True

    # scalar pieces, vectorized elementwise
    def _k(self, t):
        raise NotImplementedError

    def _d1(self, t):
        raise NotImplementedError

    def _d2(self, t):
        raise NotImplementedError

    def _d3(self, t):
        raise NotImplementedError

    def _conj(self, s):
        raise NotImplementedError

    def _conj_d1(self, s):
        raise NotImplementedError

    # --- domain -------------------------------------------------------------
    @property
    def full_domain(self) -> bool:
        return not np.isfinite(self.dom_lower)

    def domain(self, n: int) -> Box:
        if self.full_domain:
            return Box.full(n)
        return Box(np.full(n, self.dom_lower), np.full(n, np.inf), True, False)

    def interior(self, n: int) -> Box:
        if self.full_domain:
            return Box.full(n)
        return Box(np.full(n, self.dom_lower), np.full(n, np.inf), False, False)

    def _check(self, x):
        x = np.asarray(x, dtype=float)
        if np.any(x < self.dom_lower):
            raise ValueError(f"{self.id}: point outside the kernel domain")
        return x

    # --- public vector interface -------------------------------------------
    def value(self, x):
        return np.sum(self._k(self._check(x)), axis=-1)

    def grad(self, x):
        return self._d1(self._check(x))

    def hess_diag(self, x):
        return self._d2(self._check(x))

    def hess(self, x):
        return np.diag(self.hess_diag(x))

    def third_diag(self, x):
        """Diagonal of the (diagonal) third-derivative tensor."""
        return self._d3(self._check(x))

    def conj_value(self, v):
        return np.sum(self._conj(np.asarray(v, dtype=float)), axis=-1)

    def conj_grad(self, v):
        return self._conj_d1(np.asarray(v, dtype=float))

    # scalar access for the entropic coupling, which needs the generator
    # itself rather than the separable sum
    def scalar(self, t):
        return self._k(np.asarray(t, dtype=float))

    def scalar_d1(self, t):
        return self._d1(np.asarray(t, dtype=float))

    def scalar_d2(self, t):
        return self._d2(np.asarray(t, dtype=float))

    def scalar_d3(self, t):
        return self._d3(np.asarray(t, dtype=float))

    def scalar_conj(self, s):
        return self._conj(np.asarray(s, dtype=float))

    def scalar_conj_d1(self, s):
        return self._conj_d1(np.asarray(s, dtype=float))


@dataclass(frozen=True)
class Quadratic(Kernel):
    """``k(t) = (a/2) t^2``; self-conjugate up to scaling."""

    id: ClassVar[str] = "quadratic"

    @property
    def a(self) -> float:
        return float(self.params.get("curvature", 1.0))

    def _k(self, t):
        return 0.5 * self.a * t**2

    def _d1(self, t):
        return self.a * t

    def _d2(self, t):
        return np.full_like(np.asarray(t, dtype=float), self.a)

    def _d3(self, t):
        return np.zeros_like(np.asarray(t, dtype=float))

    def _conj(self, s):
        return s**2 / (2.0 * self.a)

    def _conj_d1(self, s):
        return s / self.a


@dataclass(frozen=True)
class BoltzmannShannon(Kernel):
    """``k(t) = t log t - t`` on ``[0, inf)`` with ``0 log 0 = 0``."""

    id: ClassVar[str] = "boltzmann_shannon"
    dom_lower: ClassVar[float] = 0.0
    offset: ClassVar[float] = 0.0

    def _k(self, t):
        return np.where(t >= 0, xlogy(t, t) - t + self.offset, np.inf)

    def _d1(self, t):
        with np.errstate(divide="ignore"):
            return np.log(t)

    def _d2(self, t):
        with np.errstate(divide="ignore"):
            return 1.0 / t

    def _d3(self, t):
        with np.errstate(divide="ignore"):
            return -1.0 / t**2

    def _conj(self, s):
        return np.exp(s) - self.offset

    def _conj_d1(self, s):
        return np.exp(s)


@dataclass(frozen=True)
class KLGenerator(BoltzmannShannon):
    """``phi(t) = t log t - t + 1``: the Kullback-Leibler divergence generator.

    Satisfies ``phi(1) = phi'(1) = 0``, ``phi'' > 0`` and ``phi'(t) -> -inf``
    as ``t -> 0``; its conjugate is ``exp(s) - 1``.
    """

    id: ClassVar[str] = "kl_generator"
    offset: ClassVar[float] = 1.0


@dataclass(frozen=True)
class Cosh(Kernel):
    """``k(t) = a (cosh t - 1)``."""

    id: ClassVar[str] = "cosh"

    @property
    def a(self) -> float:
        return float(self.params.get("scale", 1.0))

    def _k(self, t):
        return self.a * (np.cosh(t) - 1.0)

    def _d1(self, t):
        return self.a * np.sinh(t)

    def _d2(self, t):
        return self.a * np.cosh(t)

    def _d3(self, t):
        return self.a * np.sinh(t)

    def _conj(self, s):
        u = s / self.a
        return s * np.arcsinh(u) - self.a * np.sqrt(1.0 + u**2) + self.a

    def _conj_d1(self, s):
        return np.arcsinh(s / self.a)


@dataclass(frozen=True)
class QuarticQuadratic(Kernel):
    """``k(t) = t^4/4 + (a/2) t^2``; conjugate via the real root of ``t^3 + a t = s``."""

    id: ClassVar[str] = "quartic_quadratic"

    @property
    def a(self) -> float:
        return float(self.params.get("curvature", 1.0))

    def _k(self, t):
        return 0.25 * t**4 + 0.5 * self.a * t**2

    def _d1(self, t):
        return t**3 + self.a * t

    def _d2(self, t):
        return 3.0 * t**2 + self.a

    def _d3(self, t):
        return 6.0 * t

    def _root(self, s):
        s = np.asarray(s, dtype=float)
        a = self.a
        m = np.abs(s)
        u = np.cbrt(0.5 * m + np.sqrt(0.25 * m**2 + a**3 / 27.0))
        t = u - a / (3.0 * u)
        # one Newton polish removes the cancellation error of Cardano's form
        t = t - (t**3 + a * t - m) / (3.0 * t**2 + a)
        return np.sign(s) * t

    def _conj(self, s):
        t = self._root(s)
        return s * t - self._k(t)

    def _conj_d1(self, s):
        return self._root(s)


_FAMILIES = {cls.id: cls for cls in (Quadratic, BoltzmannShannon, KLGenerator, Cosh, QuarticQuadratic)}
KERNEL_IDS = tuple(_FAMILIES)

_POSITIVE_PARAMS = {
    "quadratic": ("curvature",),
    "cosh": ("scale",),
    "quartic_quadratic": ("curvature",),
    "boltzmann_shannon": (),
    "kl_generator": (),
}


def make_kernel(id: str, params: dict | None = None) -> Kernel:
    """Construct a kernel by family id.

    Raises
    ------
    ValueError
        If ``id`` is unknown, a parameter is not recognised, or a curvature /
        scale parameter is not strictly positive.
    """
    if id not in _FAMILIES:
        raise ValueError(f"unknown kernel id {id!r}; expected one of {KERNEL_IDS}")
    params = dict(params or {})
    allowed = _POSITIVE_PARAMS[id]
    for key, val in params.items():
        if key not in allowed:
            raise ValueError(f"kernel {id!r} has no parameter {key!r}")
        if not np.isfinite(val) or val <= 0:
            raise ValueError(f"kernel {id!r}: parameter {key!r} must be positive, got {val}")
    return _FAMILIES[id](params)
