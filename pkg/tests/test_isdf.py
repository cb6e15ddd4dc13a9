import math

import numpy as np
import pytest

from helpers import decay_with_input
from reachguard.geometry import Box
from reachguard.isdf import (
    InputSignal,
    ISCoefficients,
    build_input_reachtube,
    compute_is_ldf,
    deviation_integrals,
    eval_is_discrepancy,
)
from reachguard.ldf import DiscrepancyCoefficients, build_reachtube
from reachguard.models import get_model, make_user_model
from reachguard.simulate import simulate_trace

INPUT_BOX = Box([-0.1], [0.1])


def _nominal_trace(tau=0.05, eps=1e-7, T=1.0, x0=1.0):
    m = get_model("decayinput")
    closed = m.with_constant_input([0.0])
    return m, simulate_trace(closed, [x0], tau=tau, eps=eps, T=T)


def test_decayinput_coefficients():
    m, tr = _nominal_trace()
    c = compute_is_ldf(tr, m, delta=0.05, eps=1e-7, input_box=INPUT_BOX)
    np.testing.assert_allclose(c.a, -0.5, atol=1e-6)
    np.testing.assert_allclose(c.M, 1.0, atol=1e-6)
    assert c.l == pytest.approx(0.2, rel=1e-12)


def test_zero_width_input_collapses_to_ldf():
    m, tr = _nominal_trace()
    point_box = Box([0.0], [0.0])
    c = compute_is_ldf(tr, m, delta=0.05, eps=1e-7, input_box=point_box)
    assert c.l == 0.0
    tube = build_input_reachtube(tr, c)
    plain = build_reachtube(
        tr,
        DiscrepancyCoefficients(b=c.a, times=c.times, delta0=0.05, eps=1e-7),
    )
    np.testing.assert_allclose(tube.deltas, plain.deltas, rtol=1e-12)
    np.testing.assert_allclose(tube.prime_deltas, plain.prime_deltas, rtol=1e-12)


def test_eval_is_discrepancy_examples():
    c = ISCoefficients(
        a=np.array([-0.5]), M=np.array([1.0]), times=np.array([0.0, 1.0]),
        delta0=0.2, eps=0.0, input_box=INPUT_BOX, l=0.2,
    )
    got = eval_is_discrepancy(c, 0.2, [0.1], 1.0)
    assert got == pytest.approx((0.2 + 0.1) * math.exp(-0.5), rel=1e-12)

    c0 = ISCoefficients(
        a=np.array([0.0]), M=np.array([1.0]), times=np.array([0.0, 1.0]),
        delta0=0.0, eps=0.0, input_box=INPUT_BOX, l=0.2,
    )
    assert eval_is_discrepancy(c0, 0.0, [0.3], 1.0) == pytest.approx(0.3, rel=1e-12)

    # All-zero integrals reduce to the plain discrepancy with b = a.
    c2 = ISCoefficients(
        a=np.array([0.4, -0.7]), M=np.array([2.0, 3.0]),
        times=np.array([0.0, 0.5, 1.0]), delta0=0.1, eps=0.0,
        input_box=INPUT_BOX, l=0.2,
    )
    from reachguard.ldf import eval_discrepancy

    plain = DiscrepancyCoefficients(
        b=c2.a, times=c2.times, delta0=0.1, eps=0.0
    )
    for t in (0.0, 0.3, 0.5, 0.8, 1.0):
        assert eval_is_discrepancy(c2, 0.1, [0.0, 0.0], t) == pytest.approx(
            eval_discrepancy(plain, 0.1, t), rel=1e-12
        )


def test_worst_case_input_tube_radius():
    m, tr = _nominal_trace(tau=0.02, eps=1e-9, T=1.0)
    c = compute_is_ldf(tr, m, delta=1e-9, eps=1e-9, input_box=INPUT_BOX)
    tube = build_input_reachtube(tr, c)
    # Reachable deviation under |u| <= 0.1 at t=1 is 0.1 (1 - e^{-1}).
    assert tube.deltas[-1] >= 0.1 * (1 - math.exp(-1.0))


def test_random_signals_stay_in_tube():
    m, tr = _nominal_trace(tau=0.02, eps=1e-7, T=1.0)
    delta = 0.02
    c = compute_is_ldf(tr, m, delta=delta, eps=1e-7, input_box=INPUT_BOX)
    tube = build_input_reachtube(tr, c)
    rng = np.random.default_rng(0)
    check_times = np.linspace(0.01, 1.0, 40)
    for _ in range(100):
        x0 = 1.0 + rng.uniform(-delta, delta)
        breaks = np.sort(rng.uniform(0.0, 1.0, size=rng.integers(1, 6)))
        breaks[0] = 0.0
        values = rng.uniform(-0.1, 0.1, size=(breaks.size, 1))
        for t in check_times:
            x = decay_with_input(x0, breaks, values[:, 0], float(t))
            idx = max(min(int(np.searchsorted(tr.times, t, side="left")), tr.steps), 1)
            seg, _ = tube.segments[idx - 1]
            assert seg.contains_point([x], atol=1e-12)


def test_is_bound_dominates_closed_form():
    m, tr = _nominal_trace(tau=0.05, eps=1e-7, T=1.0)
    c = compute_is_ldf(tr, m, delta=0.05, eps=1e-7, input_box=INPUT_BOX)
    rng = np.random.default_rng(1)
    for _ in range(100):
        x1 = 1.0 + rng.uniform(-0.05, 0.05)
        x2 = 1.0 + rng.uniform(-0.05, 0.05)
        breaks = np.sort(rng.uniform(0.0, 1.0, size=3))
        breaks[0] = 0.0
        vals1 = rng.uniform(-0.1, 0.1, size=3)
        vals2 = rng.uniform(-0.1, 0.1, size=3)
        u1 = InputSignal(breaks, vals1[:, None])
        u2 = InputSignal(breaks, vals2[:, None])
        integrals = deviation_integrals(u1, u2, c.times)
        for t in np.linspace(0.05, 1.0, 20):
            true1 = decay_with_input(x1, breaks, vals1, float(t))
            true2 = decay_with_input(x2, breaks, vals2, float(t))
            partial = integrals.copy()
            idx = max(min(int(np.searchsorted(c.times, t, side="left")), c.a.size), 1)
            lo = float(c.times[idx - 1])
            frac_cut = min(t, float(c.times[idx]))
            # Integral over the active interval only up to t.
            cut = InputSignal(breaks, (vals1 - vals2)[:, None])
            partial[idx - 1] = _piece_integral(cut, lo, float(t))
            partial[idx:] = 0.0
            bound = eval_is_discrepancy(c, abs(x1 - x2), partial, float(t))
            assert abs(true1 - true2) <= bound + 1e-5


def _piece_integral(diff_signal: InputSignal, lo: float, hi: float) -> float:
    cuts = [lo] + [b for b in diff_signal.breakpoints if lo < b < hi] + [hi]
    total = 0.0
    for a, b in zip(cuts[:-1], cuts[1:]):
        total += abs(float(diff_signal.value(0.5 * (a + b))[0])) * (b - a)
    return total


def test_deviation_integrals_exact():
    u1 = InputSignal(np.array([0.0, 0.5]), np.array([[1.0], [0.0]]))
    u2 = InputSignal(np.array([0.0]), np.array([[0.0]]))
    grid = np.array([0.0, 0.25, 0.75, 1.0])
    np.testing.assert_allclose(
        deviation_integrals(u1, u2, grid), [0.25, 0.25, 0.0], atol=1e-15
    )


def test_generalized_mean_value_with_inputs():
    # f(x+r, u+w) - f(x, u) vs the two-integral form, quadrature oracle.
    m = make_user_model(
        name="cubic_drive",
        f_exprs=["-x1^3 + x1*u1"],
        jac_expr_rows=[["-3*x1^2 + u1"]],
        lipschitz=30.0,
        domain=Box([-3.0], [3.0]),
        n_inputs=1,
        jac_u_expr_rows=[["x1"]],
    )
    rng = np.random.default_rng(2)
    s_grid = np.linspace(0.0, 1.0, 2001)
    for _ in range(50):
        x = rng.uniform(-1.5, 1.5, size=1)
        u = rng.uniform(-0.5, 0.5, size=1)
        r = rng.uniform(-0.05, 0.05, size=1)
        w = rng.uniform(-0.05, 0.05, size=1)
        lhs = float((m.f_u(x + r, u + w) - m.f_u(x, u))[0])
        # State integral evaluated at the shifted input, input integral at
        # the base state, both by quadrature.
        jx = np.trapezoid(
            [float(m.jac_exprs[0][0].value(np.array([x[0] + s * r[0], u[0] + w[0]])))
             for s in s_grid],
            s_grid,
        )
        ju = np.trapezoid(
            [float(m.jac_u(x, u + s * w)[0, 0]) for s in s_grid], s_grid
        )
        rhs = jx * float(r[0]) + ju * float(w[0])
        denom = max(1e-8, abs(lhs))
        assert abs(lhs - rhs) / denom <= 1e-3


def test_one_step_is_bound_sampled_pairs():
    # Lemma-level: distance under constant input pairs stays below
    # e^{a dt} d0 + M e^{a dt} * integral of the input gap.
    m, tr = _nominal_trace(tau=0.1, eps=1e-7, T=1.0)
    c = compute_is_ldf(tr, m, delta=0.05, eps=1e-7, input_box=INPUT_BOX)
    rng = np.random.default_rng(3)
    for i in (1, 5, 10):
        t0 = float(c.times[i - 1])
        for _ in range(30):
            x1 = float(tr.boxes[i - 1].center()[0]) + rng.uniform(-0.05, 0.05)
            x2 = float(tr.boxes[i - 1].center()[0]) + rng.uniform(-0.05, 0.05)
            u1 = rng.uniform(-0.1, 0.1)
            u2 = rng.uniform(-0.1, 0.1)
            for dt in (0.02, 0.05, 0.1):
                y1 = decay_with_input(x1, [0.0], [u1], dt)
                y2 = decay_with_input(x2, [0.0], [u2], dt)
                gap = abs(u1 - u2) * dt
                bound = (
                    abs(x1 - x2) * math.exp(c.a[i - 1] * dt)
                    + c.M[i - 1] * math.exp(c.a[i - 1] * dt) * gap
                )
                assert abs(y1 - y2) <= bound + 1e-9


def test_compute_is_ldf_rejects_inputless_model():
    m = get_model("decay1d")
    tr = simulate_trace(m, [1.0], tau=0.1, eps=1e-6, T=0.5)
    with pytest.raises(ValueError):
        compute_is_ldf(tr, m, delta=0.05, eps=1e-6, input_box=INPUT_BOX)
