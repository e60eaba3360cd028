"""Deterministic low-discrepancy sampling in boxes and balls."""

import numpy as np
from scipy.stats import qmc

from .domain import Box


def halton(n_points: int, dim: int, seed: int = 0) -> np.ndarray:
    """Scrambled Halton points in ``[0, 1)^dim``, reproducible for a fixed seed."""
    return qmc.Halton(d=dim, scramble=True, seed=seed).random(n_points)


def in_box(box: Box, n_points: int, seed: int = 0) -> np.ndarray:
    u = halton(n_points, box.dim, seed)
    return box.lower + u * (box.upper - box.lower)


def in_ball(center, radius: float, n_points: int, seed: int = 0) -> np.ndarray:
    """Points in the closed Euclidean ball, by rejection from Halton points in the cube."""
    center = np.asarray(center, dtype=float)
    d = center.size
    out = []
    need = n_points
    offset = 0
    while need > 0:
        u = 2.0 * halton(max(4 * need, 16), d, seed + offset) - 1.0
        u = u[np.sum(u**2, axis=1) <= 1.0]
        out.append(u[:need])
        need -= len(out[-1])
        offset += 1
    return center + radius * np.concatenate(out)[:n_points]


def dense_grid(box: Box, budget: int) -> np.ndarray:
    """Tensor grid with about ``budget`` points in total."""
    k = max(3, int(round(budget ** (1.0 / box.dim))))
    axes = [np.linspace(a, b, k) for a, b in zip(box.lower, box.upper)]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack(mesh, axis=-1).reshape(-1, box.dim)
