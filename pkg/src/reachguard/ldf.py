"""Piece-wise exponential local discrepancy coefficients and reach-tubes.

Per trace interval the one-step enclosure S is built from the Lipschitz
(Gronwall) bound, the local divergence rate is the maximum eigenvalue of the
symmetric Jacobian part at the center of S, and the remaining slack over S is
absorbed by an interval bound on the symmetric Jacobian deviation.  The
coordinate-transformed variant computes the same rates on a per-block
similarity transform and pays the transform's condition number once per
block.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import BlowupError
from .geometry import Box, bloat, box_hull
from .intervals import jacobian_error_bound
from .linalg import Transform, real_block_transform, sym_part_max_eig
from .models import DynamicalSystem
from .simulate import SimulationTrace

DELTA_CAP = 1e12


@dataclass(frozen=True)
class BlockInfo:
    """Intervals [start, end] share one transform; K = cond multiplies the
    tracked radius when the block boundary is crossed."""

    start: int
    end: int
    K: float
    transform: Transform


@dataclass(frozen=True)
class DiscrepancyCoefficients:
    """Per-interval exponents b over the trace grid, plus the block
    multipliers of the coordinate-transformed variant (empty without it)."""

    b: np.ndarray
    times: np.ndarray
    delta0: float
    eps: float
    blocks: tuple[BlockInfo, ...] = ()

    def __post_init__(self):
        b = np.asarray(self.b, dtype=float)
        times = np.asarray(self.times, dtype=float)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "times", times)
        if b.size != times.size - 1:
            raise ValueError("need one exponent per trace interval")
        if not np.all(np.isfinite(b)):
            raise ValueError("exponents must be finite")
        if any(block.K < 1.0 - 1e-12 for block in self.blocks):
            raise ValueError("block multipliers must be >= 1")


@dataclass(frozen=True)
class Reachtube:
    """Tube segments (box, [t_{i-1}, t_i]) with the radius recurrences that
    produced them: deltas are the per-grid-time radii, prime_deltas the
    per-interval max(delta_i, delta_{i-1} + eps)."""

    segments: tuple[tuple[Box, tuple[float, float]], ...]
    deltas: np.ndarray
    prime_deltas: np.ndarray

    def terminal_box(self) -> Box:
        return self.segments[-1][0]

    def segment_at(self, t: float) -> Box:
        for box, (t0, t1) in self.segments:
            if t0 <= t <= t1:
                return box
        raise ValueError(f"time {t} outside the tube range")


def _enclosure(trace: SimulationTrace, i: int, d: float) -> Box:
    return bloat(box_hull(trace.boxes[i - 1], trace.boxes[i]), d)


def _grow(delta: float, eps: float, b: float, tau: float, cap: float) -> float:
    out = (delta + eps) * math.exp(min(b * tau, 700.0))
    if not math.isfinite(out) or out > cap:
        raise BlowupError(f"discrepancy radius {out:.3g} exceeded cap {cap:.3g}")
    return out


def compute_ldf(
    trace: SimulationTrace,
    m: DynamicalSystem,
    delta: float,
    eps: float,
    delta_cap: float = DELTA_CAP,
) -> DiscrepancyCoefficients:
    """Exponents of a local discrepancy bound valid on B_delta(R_0)."""
    if delta <= 0:
        raise ValueError("delta must be positive")
    k = trace.steps
    b = np.zeros(k)
    big_delta = delta
    for i in range(1, k + 1):
        tau = float(trace.times[i] - trace.times[i - 1])
        d = _grow(big_delta, eps, m.lipschitz, tau, delta_cap)
        S = _enclosure(trace, i, d)
        J = m.jac(S.center())
        lam = sym_part_max_eig(J)
        err = jacobian_error_bound(m, S, J)
        b[i - 1] = lam + err / 2.0
        big_delta = _grow(big_delta, eps, b[i - 1], tau, delta_cap)
    return DiscrepancyCoefficients(b=b, times=trace.times.copy(), delta0=delta, eps=eps)


def compute_ldf_ct(
    trace: SimulationTrace,
    m: DynamicalSystem,
    delta: float,
    eps: float,
    step: int,
    cond_cap: float = 1e6,
    delta_cap: float = DELTA_CAP,
) -> DiscrepancyCoefficients:
    """Coordinate-transformed variant: per block of `step` intervals the rates
    are computed on P J P^-1 for the real block transform P taken at the
    block's average trace center, and the tracked radius pays cond(P) at the
    block boundary."""
    if delta <= 0:
        raise ValueError("delta must be positive")
    if step < 1:
        raise ValueError("step must be >= 1")
    k = trace.steps
    b = np.zeros(k)
    blocks: list[BlockInfo] = []
    centers = trace.centers()
    big_delta = delta
    for start in range(0, k, step):
        end = min(start + step, k) - 1
        avg = centers[start : end + 2].mean(axis=0)
        tr = real_block_transform(m.jac(avg), cond_cap=cond_cap)
        for i in range(start + 1, end + 2):
            tau = float(trace.times[i] - trace.times[i - 1])
            d = _grow(big_delta, eps, m.lipschitz, tau, delta_cap)
            S = _enclosure(trace, i, d)
            J = m.jac(S.center())
            lam = sym_part_max_eig(tr.P @ J @ tr.Pinv)
            # ||P E P^-1|| <= cond(P) * ||E||, bounded entrywise in the
            # original frame.
            err = tr.cond * jacobian_error_bound(m, S, J)
            b[i - 1] = lam + err / 2.0
            big_delta = _grow(big_delta, eps, b[i - 1], tau, delta_cap)
        big_delta *= tr.cond
        if big_delta > delta_cap:
            raise BlowupError(
                f"discrepancy radius {big_delta:.3g} exceeded cap {delta_cap:.3g}"
            )
        blocks.append(BlockInfo(start=start, end=end, K=tr.cond, transform=tr))
    return DiscrepancyCoefficients(
        b=b, times=trace.times.copy(), delta0=delta, eps=eps, blocks=tuple(blocks)
    )


def eval_discrepancy(c: DiscrepancyCoefficients, dist0: float, t: float) -> float:
    """Distance bound at time t for trajectories starting dist0 apart."""
    if dist0 < 0:
        raise ValueError("dist0 must be >= 0")
    times = c.times
    if t < times[0] - 1e-12 or t > times[-1] * (1 + 1e-12) + 1e-12:
        raise ValueError(f"time {t} outside the coefficient grid")
    if t <= times[0]:
        return float(dist0)
    i = int(np.searchsorted(times, min(t, times[-1]), side="left"))
    taus = np.diff(times)
    exponent = float(np.dot(c.b[: i - 1], taus[: i - 1])) + c.b[i - 1] * (t - times[i - 1])
    factor = 1.0
    for block in c.blocks:
        if times[block.end + 1] <= t:
            factor *= block.K
    return dist0 * factor * math.exp(exponent)


def _delta_sequence(
    times: np.ndarray, b: np.ndarray, delta0: float, eps: float, blocks
) -> tuple[np.ndarray, np.ndarray]:
    k = b.size
    block_end = {blk.end: blk.K for blk in blocks}
    deltas = np.zeros(k + 1)
    primes = np.zeros(k)
    deltas[0] = delta0
    for i in range(1, k + 1):
        tau = float(times[i] - times[i - 1])
        deltas[i] = (deltas[i - 1] + eps) * math.exp(min(b[i - 1] * tau, 700.0))
        if (i - 1) in block_end:
            deltas[i] *= block_end[i - 1]
        primes[i - 1] = max(deltas[i], deltas[i - 1] + eps)
    return deltas, primes


def build_reachtube(trace: SimulationTrace, c: DiscrepancyCoefficients) -> Reachtube:
    """Bloat each inter-grid hull by its discrepancy radius; the union of the
    segments contains every trajectory from B_delta0(R_0) on [0, T]."""
    deltas, primes = _delta_sequence(c.times, c.b, c.delta0, c.eps, c.blocks)
    segments = []
    for i in range(1, trace.steps + 1):
        seg = bloat(box_hull(trace.boxes[i - 1], trace.boxes[i]), primes[i - 1])
        segments.append((seg, (float(c.times[i - 1]), float(c.times[i]))))
    return Reachtube(segments=tuple(segments), deltas=deltas, prime_deltas=primes)
