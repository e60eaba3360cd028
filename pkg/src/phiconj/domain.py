"""Axis-aligned boxes with per-face open/closed flags."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class Box:
    """Product of intervals ``[lower_i, upper_i]`` in R^n.

    Each face carries its own open/closed flag so that sets such as
    ``R^n_+`` (closed at 0) and ``R^n_++`` (open at 0) can be told apart.
    Infinite bounds are allowed; an infinite face is always open.
    """

    lower: np.ndarray
    upper: np.ndarray
    lower_closed: np.ndarray = field(default=None)
    upper_closed: np.ndarray = field(default=None)

    def __post_init__(self):
        lo = np.atleast_1d(np.asarray(self.lower, dtype=float))
        hi = np.atleast_1d(np.asarray(self.upper, dtype=float))
        if lo.shape != hi.shape or lo.ndim != 1:
            raise ValueError("lower and upper must be 1-d arrays of equal length")
        if np.any(lo > hi):
            raise ValueError("box has lower > upper")
        lc = np.ones(lo.shape, bool) if self.lower_closed is None else np.broadcast_to(
            np.asarray(self.lower_closed, bool), lo.shape).copy()
        uc = np.ones(hi.shape, bool) if self.upper_closed is None else np.broadcast_to(
            np.asarray(self.upper_closed, bool), hi.shape).copy()
        lc &= np.isfinite(lo)
        uc &= np.isfinite(hi)
        for name, val in (("lower", lo), ("upper", hi), ("lower_closed", lc), ("upper_closed", uc)):
            val.setflags(write=False)
            object.__setattr__(self, name, val)

    @classmethod
    def full(cls, n: int) -> "Box":
        return cls(np.full(n, -np.inf), np.full(n, np.inf))

    @classmethod
    def cube(cls, n: int, lo: float, hi: float, closed: bool = True) -> "Box":
        return cls(np.full(n, float(lo)), np.full(n, float(hi)), closed, closed)

    @classmethod
    def nonnegative(cls, n: int) -> "Box":
        return cls(np.zeros(n), np.full(n, np.inf), True, False)

    @classmethod
    def positive(cls, n: int) -> "Box":
        return cls(np.zeros(n), np.full(n, np.inf), False, False)

    @property
    def dim(self) -> int:
        return self.lower.size

    @property
    def bounded(self) -> bool:
        return bool(np.all(np.isfinite(self.lower)) and np.all(np.isfinite(self.upper)))

    def contains(self, x, tol: float = 0.0) -> np.ndarray:
        """Membership for a point or a stack of points (last axis = coordinates)."""
        x = np.asarray(x, dtype=float)
        lo_ok = np.where(self.lower_closed, x >= self.lower - tol, x > self.lower - tol)
        hi_ok = np.where(self.upper_closed, x <= self.upper + tol, x < self.upper + tol)
        return np.all(lo_ok & hi_ok, axis=-1)

    def interior_contains(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return np.all((x > self.lower) & (x < self.upper), axis=-1)

    def intersect(self, other: "Box") -> "Box | None":
        """Intersection, or ``None`` when empty."""
        if other.dim != self.dim:
            raise ValueError(f"dimension mismatch: {self.dim} vs {other.dim}")
        lo = np.maximum(self.lower, other.lower)
        hi = np.minimum(self.upper, other.upper)
        # at a shared bound the face is closed only if closed in both
        lc = np.where(self.lower > other.lower, self.lower_closed,
                      np.where(self.lower < other.lower, other.lower_closed,
                               self.lower_closed & other.lower_closed))
        uc = np.where(self.upper < other.upper, self.upper_closed,
                      np.where(self.upper > other.upper, other.upper_closed,
                               self.upper_closed & other.upper_closed))
        if np.any(lo > hi) or np.any((lo == hi) & ~(lc & uc)):
            return None
        return Box(lo, hi, lc, uc)

    def project(self, x, margin: float = 0.0) -> np.ndarray:
        """Clip into the box; open faces are kept ``margin`` away."""
        lo = np.where(self.lower_closed, self.lower, self.lower + margin)
        hi = np.where(self.upper_closed, self.upper, self.upper - margin)
        return np.clip(x, lo, hi)

    def __repr__(self):
        faces = []
        for a, b, lc, uc in zip(self.lower, self.upper, self.lower_closed, self.upper_closed):
            faces.append(f"{'[' if lc else '('}{a:g}, {b:g}{']' if uc else ')'}")
        return "Box(" + " x ".join(faces) + ")"
