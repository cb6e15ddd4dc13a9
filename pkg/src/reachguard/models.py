"""Dynamical-system records, model validation, and builtin benchmarks.

Builtin right-hand sides other than the linear oscillator are documented
choices: the benchmark names are standard but their exact ODEs vary across
the literature, so the forms used here are pinned below and validated
against finite differences on every run of the test suite.

Lipschitz constants are valid only on each model's declared `domain`;
operations that would leave the domain raise instead of extrapolating.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import ValidationError
from .geometry import Ball, Box, HalfspaceSet
from .intervals import Expr, eval_interval, parse_expr


@dataclass(frozen=True)
class DynamicalSystem:
    """An autonomous ODE system with Jacobian data for discrepancy bounds.

    `jac_exprs` are interval-evaluable forms of the Jacobian entries; for
    systems with inputs they may also reference input variables, which are
    indexed after the state variables.
    """

    name: str
    n: int
    f: Callable[[np.ndarray], np.ndarray]
    jac: Callable[[np.ndarray], np.ndarray]
    jac_exprs: tuple[tuple[Expr, ...], ...]
    lipschitz: float
    domain: Box
    default_center: np.ndarray
    p: int = 0
    f_u: Callable[[np.ndarray, np.ndarray], np.ndarray] | None = None
    jac_u: Callable[[np.ndarray, np.ndarray], np.ndarray] | None = None
    jac_u_exprs: tuple[tuple[Expr, ...], ...] | None = None

    @property
    def has_inputs(self) -> bool:
        return self.p > 0

    def with_constant_input(self, u) -> "DynamicalSystem":
        """Input-free view of this system under a held input value."""
        if not self.has_inputs:
            raise ValueError(f"model {self.name!r} takes no inputs")
        u = np.atleast_1d(np.asarray(u, dtype=float))
        f_u = self.f_u
        return DynamicalSystem(
            name=f"{self.name}@u={u.tolist()}",
            n=self.n,
            f=lambda x: f_u(x, u),
            jac=self.jac,
            jac_exprs=self.jac_exprs,
            lipschitz=self.lipschitz,
            domain=self.domain,
            default_center=self.default_center,
        )


@dataclass(frozen=True)
class VerificationProblem:
    """A bounded-time safety query: do trajectories from B_delta(theta_center)
    avoid the unsafe set over [0, T]?"""

    system: DynamicalSystem
    theta_center: np.ndarray
    delta: float
    unsafe: HalfspaceSet
    T: float
    tau: float
    epsilon0: float
    ct_enabled: bool = False
    ct_step: int = 10
    max_refinements: int = 12

    def __post_init__(self):
        center = np.atleast_1d(np.asarray(self.theta_center, dtype=float))
        object.__setattr__(self, "theta_center", center)
        if center.size != self.system.n:
            raise ValueError("theta_center dimension does not match the system")
        if self.unsafe.dim != self.system.n:
            raise ValueError("unsafe set dimension does not match the system")
        if not (self.delta > 0 and self.T > 0 and self.tau > 0 and self.epsilon0 > 0):
            raise ValueError("delta, T, tau, epsilon0 must all be positive")
        if not self.tau < self.T:
            raise ValueError("tau must be smaller than T")
        if self.ct_step < 1 or self.max_refinements < 1:
            raise ValueError("ct_step and max_refinements must be >= 1")
        init = Ball(center, self.delta).bounding_box()
        if not self.system.domain.contains_box(init):
            raise ValueError("initial ball is not inside the system domain")


# --------------------------------------------------------------------------
# Validation
# --------------------------------------------------------------------------


def _fd_jacobian(f, x: np.ndarray, h: float) -> np.ndarray:
    n = x.size
    cols = []
    for j in range(n):
        e = np.zeros(n)
        e[j] = h
        cols.append((f(x + e) - f(x - e)) / (2.0 * h))
    return np.column_stack(cols)


def validate_model(m: DynamicalSystem, samples: int = 100, seed: int = 0) -> dict:
    """Check the model invariants on random domain points.

    Returns a report of maximum deviations; raises ValidationError naming the
    first violated invariant.
    """
    rng = np.random.default_rng(seed)
    h = 1e-6 * max(1.0, float(np.max(np.abs(m.domain.widths()))) / 100.0)
    inset = Box(m.domain.lo + 2 * h, m.domain.hi - 2 * h)
    points = inset.sample(rng, samples)

    max_fd_dev = 0.0
    max_norm = 0.0
    for x in points:
        J = m.jac(x)
        scale = max(1.0, float(np.linalg.norm(J)))
        max_fd_dev = max(max_fd_dev, float(np.linalg.norm(_fd_jacobian(m.f, x, h) - J)) / scale)
        max_norm = max(max_norm, float(np.linalg.norm(J, 2)))

    max_expr_dev = 0.0
    for x in points[: min(samples, 20)]:
        xs = np.concatenate([x, np.zeros(m.p)]) if m.has_inputs else x
        point_box = Box(xs, xs)
        J = m.jac(x)
        for i in range(m.n):
            for j in range(m.n):
                iv = eval_interval(m.jac_exprs[i][j], point_box)
                mid = 0.5 * (iv.lo + iv.hi)
                max_expr_dev = max(max_expr_dev, abs(mid - J[i, j]))

    report = {
        "model": m.name,
        "max_jacobian_fd_deviation": max_fd_dev,
        "max_jacobian_norm": max_norm,
        "lipschitz": m.lipschitz,
        "max_expr_deviation": max_expr_dev,
    }
    if max_fd_dev > 1e-4:
        raise ValidationError(
            f"{m.name}: Jacobian disagrees with finite differences "
            f"(relative deviation {max_fd_dev:.3g} > 1e-4)"
        )
    if max_norm > m.lipschitz * (1 + 1e-9):
        raise ValidationError(
            f"{m.name}: Lipschitz constant {m.lipschitz} below sampled "
            f"Jacobian norm {max_norm:.6g}"
        )
    if max_expr_dev > 1e-10:
        raise ValidationError(
            f"{m.name}: Jacobian expressions deviate from jac by {max_expr_dev:.3g} > 1e-10"
        )
    return report


# --------------------------------------------------------------------------
# Builtin registry
# --------------------------------------------------------------------------


def _exprs(rows: list[list[str]], n: int, p: int = 0) -> tuple[tuple[Expr, ...], ...]:
    return tuple(tuple(parse_expr(s, n, p) for s in row) for row in rows)


def _decay1d() -> DynamicalSystem:
    return DynamicalSystem(
        name="decay1d",
        n=1,
        f=lambda x: -x,
        jac=lambda x: np.array([[-1.0]]),
        jac_exprs=_exprs([["-1"]], 1),
        lipschitz=1.0,
        domain=Box([-50.0], [50.0]),
        default_center=np.array([1.0]),
    )


def _growth1d() -> DynamicalSystem:
    return DynamicalSystem(
        name="growth1d",
        n=1,
        f=lambda x: x.copy(),
        jac=lambda x: np.array([[1.0]]),
        jac_exprs=_exprs([["1"]], 1),
        lipschitz=1.0,
        domain=Box([-50.0], [50.0]),
        default_center=np.array([1.0]),
    )


_LINOSC_A = np.array([[0.0, 3.0], [-1.0, 0.0]])


def _linosc() -> DynamicalSystem:
    return DynamicalSystem(
        name="linosc",
        n=2,
        f=lambda x: _LINOSC_A @ x,
        jac=lambda x: _LINOSC_A.copy(),
        jac_exprs=_exprs([["0", "3"], ["-1", "0"]], 2),
        lipschitz=3.0,
        domain=Box([-80.0, -80.0], [80.0, 80.0]),
        default_center=np.array([1.0, 0.0]),
    )


def _vanderpol() -> DynamicalSystem:
    # x' = y, y' = (1 - x^2) y - x  (mu = 1)
    def f(x):
        return np.array([x[1], (1.0 - x[0] ** 2) * x[1] - x[0]])

    def jac(x):
        return np.array([[0.0, 1.0], [-2.0 * x[0] * x[1] - 1.0, 1.0 - x[0] ** 2]])

    # Default center sits on the far-left slow manifold (y close to
    # x/(1-x^2)), where trajectories creep right for longer than the
    # benchmark horizons before the relaxation jump.
    return DynamicalSystem(
        name="vanderpol",
        n=2,
        f=f,
        jac=jac,
        jac_exprs=_exprs([["0", "1"], ["-2*x1*x2-1", "1-x1^2"]], 2),
        lipschitz=72.0,
        domain=Box([-7.0, -3.5], [3.0, 3.5]),
        default_center=np.array([-5.5, 0.188]),
    )


def _brusselator() -> DynamicalSystem:
    # a = 1, b = 1.5: x' = 1 + x^2 y - 2.5 x, y' = 1.5 x - x^2 y
    def f(x):
        return np.array(
            [1.0 + x[0] ** 2 * x[1] - 2.5 * x[0], 1.5 * x[0] - x[0] ** 2 * x[1]]
        )

    def jac(x):
        return np.array(
            [
                [2.0 * x[0] * x[1] - 2.5, x[0] ** 2],
                [1.5 - 2.0 * x[0] * x[1], -(x[0] ** 2)],
            ]
        )

    return DynamicalSystem(
        name="brusselator",
        n=2,
        f=f,
        jac=jac,
        jac_exprs=_exprs(
            [["2*x1*x2-2.5", "x1^2"], ["1.5-2*x1*x2", "-x1^2"]], 2
        ),
        lipschitz=60.0,
        domain=Box([-4.0, -4.0], [4.0, 4.0]),
        default_center=np.array([1.0, 1.5]),
    )


def _jetengine() -> DynamicalSystem:
    # Moore-Greitzer surge model, 2-D reduction:
    # x' = -y - 1.5 x^2 - 0.5 x^3 - 0.5, y' = 3 x - y
    def f(x):
        return np.array(
            [-x[1] - 1.5 * x[0] ** 2 - 0.5 * x[0] ** 3 - 0.5, 3.0 * x[0] - x[1]]
        )

    def jac(x):
        return np.array([[-3.0 * x[0] - 1.5 * x[0] ** 2, -1.0], [3.0, -1.0]])

    return DynamicalSystem(
        name="jetengine",
        n=2,
        f=f,
        jac=jac,
        jac_exprs=_exprs([["-3*x1-1.5*x1^2", "-1"], ["3", "-1"]], 2),
        lipschitz=40.0,
        domain=Box([-4.0, -4.0], [4.0, 4.0]),
        default_center=np.array([1.0, 1.0]),
    )


def _coupledvanderpol() -> DynamicalSystem:
    # Two mu = 1 oscillators with linear position coupling.
    def f(x):
        return np.array(
            [
                x[1],
                (1.0 - x[0] ** 2) * x[1] - x[0] + (x[2] - x[0]),
                x[3],
                (1.0 - x[2] ** 2) * x[3] - x[2] + (x[0] - x[2]),
            ]
        )

    def jac(x):
        return np.array(
            [
                [0.0, 1.0, 0.0, 0.0],
                [-2.0 * x[0] * x[1] - 2.0, 1.0 - x[0] ** 2, 1.0, 0.0],
                [0.0, 0.0, 0.0, 1.0],
                [1.0, 0.0, -2.0 * x[2] * x[3] - 2.0, 1.0 - x[2] ** 2],
            ]
        )

    rows = [
        ["0", "1", "0", "0"],
        ["-2*x1*x2-2", "1-x1^2", "1", "0"],
        ["0", "0", "0", "1"],
        ["1", "0", "-2*x3*x4-2", "1-x3^2"],
    ]
    return DynamicalSystem(
        name="coupledvanderpol",
        n=4,
        f=f,
        jac=jac,
        jac_exprs=_exprs(rows, 4),
        lipschitz=65.0,
        domain=Box([-4.0, -5.0, -4.0, -5.0], [4.0, 5.0, 4.0, 5.0]),
        default_center=np.array([1.25, 2.25, 1.25, 2.25]),
    )


def _lorenz() -> DynamicalSystem:
    # sigma = 10, rho = 28, beta = 8/3
    def f(x):
        return np.array(
            [
                10.0 * (x[1] - x[0]),
                x[0] * (28.0 - x[2]) - x[1],
                x[0] * x[1] - (8.0 / 3.0) * x[2],
            ]
        )

    def jac(x):
        return np.array(
            [
                [-10.0, 10.0, 0.0],
                [28.0 - x[2], -1.0, -x[0]],
                [x[1], x[0], -8.0 / 3.0],
            ]
        )

    rows = [
        ["-10", "10", "0"],
        ["28-x3", "-1", "-x1"],
        ["x2", "x1", "-8/3"],
    ]
    return DynamicalSystem(
        name="lorenz",
        n=3,
        f=f,
        jac=jac,
        jac_exprs=_exprs(rows, 3),
        lipschitz=75.0,
        domain=Box([-30.0, -35.0, -10.0], [30.0, 35.0, 60.0]),
        default_center=np.array([-8.0, 8.0, 27.0]),
    )


def _decayinput() -> DynamicalSystem:
    # x' = -x + u, one input channel
    def f_u(x, u):
        return -x + u

    return DynamicalSystem(
        name="decayinput",
        n=1,
        f=lambda x: -x,
        jac=lambda x: np.array([[-1.0]]),
        jac_exprs=_exprs([["-1"]], 1, p=1),
        lipschitz=1.0,
        domain=Box([-20.0], [20.0]),
        default_center=np.array([1.0]),
        p=1,
        f_u=f_u,
        jac_u=lambda x, u: np.array([[1.0]]),
        jac_u_exprs=_exprs([["1"]], 1, p=1),
    )


_REGISTRY: dict[str, Callable[[], DynamicalSystem]] = {
    "decay1d": _decay1d,
    "growth1d": _growth1d,
    "linosc": _linosc,
    "vanderpol": _vanderpol,
    "brusselator": _brusselator,
    "jetengine": _jetengine,
    "coupledvanderpol": _coupledvanderpol,
    "lorenz": _lorenz,
    "decayinput": _decayinput,
}

_CACHE: dict[str, DynamicalSystem] = {}


def model_names() -> list[str]:
    return sorted(_REGISTRY)


def get_model(name: str) -> DynamicalSystem:
    """Look up a builtin benchmark by name."""
    if name not in _REGISTRY:
        raise KeyError(f"unknown model {name!r}; builtins: {', '.join(model_names())}")
    if name not in _CACHE:
        _CACHE[name] = _REGISTRY[name]()
    return _CACHE[name]


def make_user_model(
    name: str,
    f_exprs: list[str],
    jac_expr_rows: list[list[str]],
    lipschitz: float,
    domain: Box,
    default_center=None,
    n_inputs: int = 0,
    f_u_exprs: list[str] | None = None,
    jac_u_expr_rows: list[list[str]] | None = None,
) -> DynamicalSystem:
    """Build a DynamicalSystem from expression strings (the CLI model format).

    The vector field and Jacobian evaluators are point evaluations of the
    parsed expressions, so a user model needs only strings.
    """
    n = len(f_exprs)
    if len(jac_expr_rows) != n or any(len(r) != n for r in jac_expr_rows):
        raise ValueError("jac must be an n x n grid of expressions")
    f_nodes = [parse_expr(s, n, n_inputs) for s in f_exprs]
    jac_nodes = _exprs(jac_expr_rows, n, n_inputs)

    def f(x):
        xs = np.concatenate([x, np.zeros(n_inputs)]) if n_inputs else x
        return np.array([e.value(xs) for e in f_nodes])

    def jac(x):
        xs = np.concatenate([x, np.zeros(n_inputs)]) if n_inputs else x
        return np.array([[e.value(xs) for e in row] for row in jac_nodes])

    f_u = None
    jac_u = None
    jac_u_nodes = None
    if n_inputs > 0:
        fu_nodes = [parse_expr(s, n, n_inputs) for s in (f_u_exprs or f_exprs)]
        if jac_u_expr_rows is None:
            raise ValueError("models with inputs need jac_u expressions")
        jac_u_nodes = _exprs(jac_u_expr_rows, n, n_inputs)

        def f_u(x, u):
            xs = np.concatenate([x, np.atleast_1d(u)])
            return np.array([e.value(xs) for e in fu_nodes])

        def jac_u(x, u):
            xs = np.concatenate([x, np.atleast_1d(u)])
            return np.array([[e.value(xs) for e in row] for row in jac_u_nodes])

    center = (
        np.atleast_1d(np.asarray(default_center, dtype=float))
        if default_center is not None
        else domain.center()
    )
    return DynamicalSystem(
        name=name,
        n=n,
        f=f,
        jac=jac,
        jac_exprs=jac_nodes,
        lipschitz=float(lipschitz),
        domain=domain,
        default_center=center,
        p=n_inputs,
        f_u=f_u,
        jac_u=jac_u,
        jac_u_exprs=jac_u_nodes,
    )
