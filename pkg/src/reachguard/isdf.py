"""Input-to-state local discrepancy under bounded nondeterministic inputs.

The per-interval coefficients (a, M) bound the distance between trajectories
driven by different input signals from the same compact input set: a is the
symmetric-Jacobian rate plus one half (the half arises from splitting the
input cross-term), M bounds the input Jacobian over the enclosure times the
input set.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import BlowupError
from .geometry import Box, bloat, box_hull, diameter
from .intervals import eval_interval, jacobian_error_bound
from .linalg import entrywise_norm_upper, sym_part_max_eig
from .models import DynamicalSystem
from .simulate import SimulationTrace

from .ldf import DELTA_CAP, Reachtube


@dataclass(frozen=True)
class ISCoefficients:
    """Per-interval rates a and input gains M over the trace grid, for inputs
    ranging over input_box (l is its diameter)."""

    a: np.ndarray
    M: np.ndarray
    times: np.ndarray
    delta0: float
    eps: float
    input_box: Box
    l: float

    def __post_init__(self):
        a = np.asarray(self.a, dtype=float)
        M = np.asarray(self.M, dtype=float)
        times = np.asarray(self.times, dtype=float)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "M", M)
        object.__setattr__(self, "times", times)
        if a.size != times.size - 1 or M.size != a.size:
            raise ValueError("need one (a, M) pair per trace interval")
        if np.any(M < 0):
            raise ValueError("input gains must be >= 0")


@dataclass(frozen=True)
class InputSignal:
    """Piecewise-constant input: value(t) = values[j] on
    [breakpoints[j], breakpoints[j+1])."""

    breakpoints: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        bp = np.atleast_1d(np.asarray(self.breakpoints, dtype=float))
        vals = np.atleast_2d(np.asarray(self.values, dtype=float))
        if vals.shape[0] != bp.size:
            raise ValueError("one value row per breakpoint required")
        if np.any(np.diff(bp) <= 0):
            raise ValueError("breakpoints must be strictly increasing")
        object.__setattr__(self, "breakpoints", bp)
        object.__setattr__(self, "values", vals)

    @staticmethod
    def constant(u, t0: float = 0.0) -> "InputSignal":
        return InputSignal(np.array([t0]), np.atleast_2d(np.asarray(u, dtype=float)))

    def value(self, t: float) -> np.ndarray:
        j = int(np.searchsorted(self.breakpoints, t, side="right")) - 1
        return self.values[max(j, 0)]

    def inside(self, box: Box) -> bool:
        return all(box.contains_point(v) for v in self.values)


def deviation_integrals(u1: InputSignal, u2: InputSignal, times) -> np.ndarray:
    """Exact per-interval integrals of ||u1(s) - u2(s)|| for piecewise-constant
    signals over the grid `times`."""
    times = np.asarray(times, dtype=float)
    out = np.zeros(times.size - 1)
    for i in range(times.size - 1):
        lo, hi = times[i], times[i + 1]
        cuts = np.concatenate(
            [
                [lo],
                [b for b in u1.breakpoints if lo < b < hi],
                [b for b in u2.breakpoints if lo < b < hi],
                [hi],
            ]
        )
        cuts = np.unique(cuts)
        total = 0.0
        for a, b in zip(cuts[:-1], cuts[1:]):
            mid = 0.5 * (a + b)
            total += float(np.linalg.norm(u1.value(mid) - u2.value(mid))) * (b - a)
        out[i] = total
    return out


def _input_gain_bound(m: DynamicalSystem, S: Box, input_box: Box) -> float:
    eval_box = Box(
        np.concatenate([S.lo, input_box.lo]), np.concatenate([S.hi, input_box.hi])
    )
    bounds = np.zeros((m.n, m.p))
    for i in range(m.n):
        for j in range(m.p):
            bounds[i, j] = eval_interval(m.jac_u_exprs[i][j], eval_box).magnitude()
    return entrywise_norm_upper(bounds)


def compute_is_ldf(
    trace: SimulationTrace,
    m: DynamicalSystem,
    delta: float,
    eps: float,
    input_box: Box,
    delta_cap: float = DELTA_CAP,
) -> ISCoefficients:
    """Coefficients of the input-to-state discrepancy along a nominal trace.

    The nominal trace is expected to have been simulated under the held
    centroid of input_box (see the centroid convention in the CLI)."""
    if not m.has_inputs:
        raise ValueError(f"model {m.name!r} takes no inputs")
    if delta <= 0:
        raise ValueError("delta must be positive")
    if input_box.dim != m.p:
        raise ValueError("input box dimension does not match the model")
    l = diameter(input_box)
    L = m.lipschitz
    k = trace.steps
    a = np.zeros(k)
    M = np.zeros(k)
    big_delta = delta
    for i in range(1, k + 1):
        tau = float(trace.times[i] - trace.times[i - 1])
        growth = math.exp(min(L * tau, 700.0))
        d = (big_delta + eps) * growth + l * L * growth * tau
        if not math.isfinite(d) or d > delta_cap:
            raise BlowupError(f"one-step enclosure radius {d:.3g} exceeded cap")
        S = bloat(box_hull(trace.boxes[i - 1], trace.boxes[i]), d)
        J = m.jac(S.center())
        lam = sym_part_max_eig(J)
        err = jacobian_error_bound(m, S, J, input_box=input_box)
        a[i - 1] = lam + err / 2.0 + 0.5
        M[i - 1] = _input_gain_bound(m, S, input_box)
        rate = math.exp(min(a[i - 1] * tau, 700.0))
        big_delta = (big_delta + eps) * rate + M[i - 1] * rate * l * tau
        if not math.isfinite(big_delta) or big_delta > delta_cap:
            raise BlowupError(f"discrepancy radius {big_delta:.3g} exceeded cap")
    return ISCoefficients(
        a=a,
        M=M,
        times=trace.times.copy(),
        delta0=delta,
        eps=eps,
        input_box=input_box,
        l=l,
    )


def eval_is_discrepancy(
    c: ISCoefficients, dist0: float, input_dev_integrals, t: float
) -> float:
    """Inductive bound: across each interval the running value is scaled by
    e^{a (t - t_prev)} and the input deviation integral enters through M."""
    if dist0 < 0:
        raise ValueError("dist0 must be >= 0")
    integrals = np.asarray(input_dev_integrals, dtype=float)
    if integrals.size != c.a.size or np.any(integrals < 0):
        raise ValueError("need one nonnegative integral per interval")
    times = c.times
    if t < times[0] - 1e-12 or t > times[-1] * (1 + 1e-12) + 1e-12:
        raise ValueError(f"time {t} outside the coefficient grid")
    if t <= times[0]:
        return float(dist0)
    i = int(np.searchsorted(times, min(t, times[-1]), side="left"))
    alpha = float(dist0)
    for j in range(i):
        upto = times[j + 1] if j < i - 1 else t
        rate = math.exp(c.a[j] * (upto - times[j]))
        alpha = alpha * rate + c.M[j] * rate * integrals[j]
    return alpha


def build_input_reachtube(trace: SimulationTrace, c: ISCoefficients) -> Reachtube:
    """Reach-tube over all admissible input signals: per interval the input
    deviation integral is bounded by l * tau."""
    k = c.a.size
    deltas = np.zeros(k + 1)
    primes = np.zeros(k)
    deltas[0] = c.delta0
    for i in range(1, k + 1):
        tau = float(c.times[i] - c.times[i - 1])
        rate = math.exp(min(c.a[i - 1] * tau, 700.0))
        deltas[i] = (deltas[i - 1] + c.eps) * rate + c.M[i - 1] * rate * c.l * tau
        primes[i - 1] = max(deltas[i], deltas[i - 1] + c.eps)
    segments = []
    for i in range(1, k + 1):
        seg = bloat(box_hull(trace.boxes[i - 1], trace.boxes[i]), primes[i - 1])
        segments.append((seg, (float(c.times[i - 1]), float(c.times[i]))))
    return Reachtube(segments=tuple(segments), deltas=deltas, prime_deltas=primes)
