"""Shared independent oracles for the test suite.

Everything here is deliberately implemented by a different route than the
library code it checks (power iteration instead of LAPACK, dense grids
instead of interval arithmetic, closed forms instead of the recurrences).
"""

from __future__ import annotations

import numpy as np

from reachguard.geometry import Box


def power_iteration_norm(A: np.ndarray, iters: int = 200, seed: int = 0) -> float:
    """Spectral norm by power iteration on A^T A."""
    rng = np.random.default_rng(seed)
    M = A.T @ A
    v = rng.normal(size=A.shape[1])
    v /= np.linalg.norm(v)
    for _ in range(iters):
        w = M @ v
        norm = np.linalg.norm(w)
        if norm == 0.0:
            return 0.0
        v = w / norm
    return float(np.sqrt(v @ M @ v))


def grid_points(box: Box, per_axis: int) -> np.ndarray:
    """Regular grid over a box, shape (per_axis**dim, dim)."""
    axes = [np.linspace(lo, hi, per_axis) for lo, hi in zip(box.lo, box.hi)]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=1)


def sym_deviation_norm(model, x: np.ndarray, J_center: np.ndarray) -> float:
    """||(J(x) + J(x)^T) - (Jc + Jc^T)||_2 evaluated directly."""
    J = model.jac(x)
    E = (J + J.T) - (J_center + J_center.T)
    return float(np.linalg.norm(E, 2))


def grid_max_deviation(model, S: Box, J_center: np.ndarray, per_axis: int) -> float:
    return max(sym_deviation_norm(model, x, J_center) for x in grid_points(S, per_axis))


def ball_sample(rng: np.random.Generator, center, radius: float, count: int) -> np.ndarray:
    """Uniform samples from an l2 ball."""
    center = np.atleast_1d(np.asarray(center, dtype=float))
    n = center.size
    out = np.empty((count, n))
    for i in range(count):
        v = rng.normal(size=n)
        v /= np.linalg.norm(v)
        r = radius * rng.uniform() ** (1.0 / n)
        out[i] = center + r * v
    return out


def decay_with_input(x0: float, signal_breaks, signal_values, t: float) -> float:
    """Variation-of-constants solution of x' = -x + u for piecewise-constant
    u: x(t) = x0 e^{-t} + sum over pieces of u_j (e^{-(t-b)} - e^{-(t-a)})."""
    x = x0 * np.exp(-t)
    breaks = list(signal_breaks) + [np.inf]
    for j, u in enumerate(signal_values):
        a = breaks[j]
        b = min(breaks[j + 1], t)
        if a >= t:
            break
        x += float(u) * (np.exp(-(t - b)) - np.exp(-(t - a)))
    return float(x)
