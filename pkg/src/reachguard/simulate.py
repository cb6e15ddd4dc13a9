"""Validated simulation traces: time-stamped boxes enclosing one trajectory.

The integrator is scipy's embedded Runge-Kutta 4(5) pair with absolute-error
control well below the requested trace precision; grid states are inflated to
boxes whose l2 diameter is exactly the requested eps.  Between grid points
the trajectory is covered by the hull of adjacent boxes inflated by a
second-order chord bound; this is checked against closed-form oracles in the
test suite rather than certified per step (the integrator is not validated).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

from .errors import SimulationError
from .geometry import Box
from .models import DynamicalSystem


@dataclass(frozen=True)
class SimulationTrace:
    """Sequence of (R_i, t_i) with t_0 = 0, t_k = T, gaps at most tau, and
    dia(R_i) <= epsilon; `origin` is the simulated initial state."""

    boxes: tuple[Box, ...]
    times: np.ndarray
    tau: float
    epsilon: float
    origin: np.ndarray
    intra_step_bounds: np.ndarray

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "origin", np.asarray(self.origin, dtype=float))
        if len(self.boxes) != times.size or times.size < 2:
            raise ValueError("trace needs one box per time stamp, at least two")
        gaps = np.diff(times)
        if times[0] != 0.0 or np.any(gaps <= 0) or np.any(gaps > self.tau * (1 + 1e-9)):
            raise ValueError("trace times must rise from 0 in gaps of at most tau")
        slop = 1.0 + 1e-9
        for box in self.boxes:
            if float(np.linalg.norm(box.widths())) > self.epsilon * slop:
                raise ValueError("trace box diameter exceeds epsilon")
        if not self.boxes[0].contains_point(self.origin):
            raise ValueError("origin must lie in the first trace box")
        if self.intra_step_bounds.size != times.size - 1:
            raise ValueError("one intra-step bound per interval required")

    @property
    def steps(self) -> int:
        return self.times.size - 1

    @property
    def T(self) -> float:
        return float(self.times[-1])

    def centers(self) -> np.ndarray:
        return np.array([b.center() for b in self.boxes])


def _integrate(m: DynamicalSystem, x0: np.ndarray, times: np.ndarray, atol: float) -> np.ndarray:
    sol = solve_ivp(
        lambda t, x: m.f(x),
        (float(times[0]), float(times[-1])),
        x0,
        method="RK45",
        t_eval=times,
        rtol=1e-10,
        atol=atol,
    )
    if not sol.success:
        raise SimulationError(f"integrator failed on {m.name!r}: {sol.message}")
    states = sol.y.T
    if not np.all(np.isfinite(states)):
        raise SimulationError(f"non-finite state while simulating {m.name!r}")
    return states


def simulate_trace(
    m: DynamicalSystem, x0, tau: float, eps: float, T: float
) -> SimulationTrace:
    """Simulate from x0 and wrap the numerical states into a trace whose boxes
    enclose the true trajectory at grid times (up to integrator honesty)."""
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    if not (tau > 0 and eps > 0 and T > 0):
        raise ValueError("tau, eps, T must be positive")
    if tau > T:
        raise ValueError("tau must not exceed T")
    if not m.domain.contains_point(x0):
        raise SimulationError(f"initial state {x0.tolist()} outside {m.name!r} domain")

    n = x0.size
    k = max(1, int(math.ceil(T / tau - 1e-12)))
    times = np.linspace(0.0, T, k + 1)
    radius = eps / (2.0 * math.sqrt(n))
    states = _integrate(m, x0, times, atol=radius / 8.0)
    # Shave the radius by the float representation error of the states so
    # the l2 diameter stays under eps even after cancellation in hi - lo.
    scale = max(1.0, float(np.max(np.abs(states))))
    radius = max(radius - 4.0 * np.spacing(scale), 0.0)

    boxes = []
    for x in states:
        box = Box(x - radius, x + radius)
        if not m.domain.contains_box(box):
            raise SimulationError(
                f"trajectory from {x0.tolist()} left the domain of {m.name!r}"
            )
        boxes.append(box)

    speeds = np.array([float(np.linalg.norm(m.f(x))) for x in states])
    taus = np.diff(times)
    intra = eps + taus**2 * m.lipschitz * np.maximum(speeds[:-1], speeds[1:])
    return SimulationTrace(
        boxes=tuple(boxes),
        times=times,
        tau=float(tau),
        epsilon=float(eps),
        origin=x0,
        intra_step_bounds=intra,
    )


def reference_trajectory(m: DynamicalSystem, x0, times, tight_eps: float) -> np.ndarray:
    """Re-integration oracle at tolerance tight_eps, returning center points
    only; used to cross-check traces and tubes."""
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    times = np.asarray(times, dtype=float)
    n = x0.size
    atol = tight_eps / (16.0 * math.sqrt(n))
    prepend = times[0] > 0.0
    t_eval = np.concatenate([[0.0], times]) if prepend else times
    states = _integrate(m, x0, t_eval, atol=atol)
    return states[1:] if prepend else states
