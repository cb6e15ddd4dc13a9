import numpy as np
import pytest
from scipy.linalg import expm

from reachguard.errors import SimulationError
from reachguard.geometry import bloat, box_hull
from reachguard.models import get_model
from reachguard.simulate import reference_trajectory, simulate_trace

SQRT3 = np.sqrt(3.0)


def test_decay_final_box_contains_closed_form():
    m = get_model("decay1d")
    tr = simulate_trace(m, [1.0], tau=0.1, eps=1e-4, T=1.0)
    assert tr.boxes[-1].contains_point([np.exp(-1.0)])
    assert tr.times[0] == 0.0 and tr.times[-1] == 1.0


def test_linosc_periodic_orbit():
    # x' = [[0,3],[-1,0]] x has angular frequency sqrt(3).
    m = get_model("linosc")
    period = 2 * np.pi / SQRT3
    tr = simulate_trace(m, [1.0, 0.0], tau=0.01, eps=1e-6, T=period)
    assert tr.boxes[-1].contains_point([1.0, 0.0])


def test_single_step_trace():
    m = get_model("decay1d")
    tr = simulate_trace(m, [1.0], tau=0.5, eps=1e-4, T=0.5)
    assert tr.steps == 1
    np.testing.assert_allclose(tr.times, [0.0, 0.5])


def test_grid_containment_closed_forms():
    cases = [
        ("decay1d", [1.0], lambda t: np.array([np.exp(-t)])),
        ("growth1d", [0.5], lambda t: np.array([0.5 * np.exp(t)])),
    ]
    A = np.array([[0.0, 3.0], [-1.0, 0.0]])
    cases.append(("linosc", [1.0, 0.5], lambda t: expm(A * t) @ np.array([1.0, 0.5])))
    for name, x0, exact in cases:
        m = get_model(name)
        tr = simulate_trace(m, x0, tau=0.05, eps=1e-5, T=2.0)
        for box, t in zip(tr.boxes, tr.times):
            assert box.contains_point(exact(float(t))), f"{name} at t={t}"


def test_intra_step_containment():
    rng = np.random.default_rng(0)
    A = np.array([[0.0, 3.0], [-1.0, 0.0]])
    m = get_model("linosc")
    x0 = np.array([1.0, 0.5])
    tr = simulate_trace(m, x0, tau=0.05, eps=1e-5, T=1.0)
    for i in range(1, tr.steps + 1):
        hull = bloat(
            box_hull(tr.boxes[i - 1], tr.boxes[i]), float(tr.intra_step_bounds[i - 1])
        )
        for t in rng.uniform(tr.times[i - 1], tr.times[i], size=50):
            assert hull.contains_point(expm(A * t) @ x0)


def test_monotone_precision():
    m = get_model("vanderpol")
    x0 = m.default_center
    dia_coarse = max(
        float(np.linalg.norm(b.widths()))
        for b in simulate_trace(m, x0, 0.05, 1e-4, 1.0).boxes
    )
    dia_fine = max(
        float(np.linalg.norm(b.widths()))
        for b in simulate_trace(m, x0, 0.05, 5e-5, 1.0).boxes
    )
    assert dia_fine <= dia_coarse / 2 * 4  # halving eps halves dia within factor 4
    assert dia_fine == pytest.approx(dia_coarse / 2, rel=1e-6)


def test_trace_invariants_enforced():
    m = get_model("decay1d")
    tr = simulate_trace(m, [1.0], tau=0.25, eps=1e-3, T=1.0)
    gaps = np.diff(tr.times)
    assert np.all(gaps > 0) and np.all(gaps <= 0.25 * (1 + 1e-9))
    for box in tr.boxes:
        assert float(np.linalg.norm(box.widths())) <= 1e-3 * (1 + 1e-9)
    assert tr.boxes[0].contains_point(tr.origin)


def test_domain_exit_is_reported():
    m = get_model("growth1d")
    with pytest.raises(SimulationError):
        simulate_trace(m, [30.0], tau=0.1, eps=1e-4, T=1.0)  # 30 e^1 > 50
    with pytest.raises(SimulationError):
        simulate_trace(m, [100.0], tau=0.1, eps=1e-4, T=1.0)  # starts outside


def test_reference_trajectory_closed_forms():
    m = get_model("decay1d")
    times = np.linspace(0.0, 1.0, 11)
    pts = reference_trajectory(m, [1.0], times, tight_eps=1e-5)
    np.testing.assert_allclose(pts[:, 0], np.exp(-times), atol=1e-6)

    A = np.array([[0.0, 3.0], [-1.0, 0.0]])
    m2 = get_model("linosc")
    x0 = np.array([0.3, -0.2])
    pts = reference_trajectory(m2, x0, times, tight_eps=1e-5)
    exact = np.array([expm(A * t) @ x0 for t in times])
    np.testing.assert_allclose(pts, exact, atol=1e-6)


def test_reference_trajectory_deterministic():
    m = get_model("lorenz")
    times = np.linspace(0.0, 0.5, 7)
    a = reference_trajectory(m, m.default_center, times, 1e-6)
    b = reference_trajectory(m, m.default_center, times, 1e-6)
    np.testing.assert_array_equal(a, b)


def test_simulate_rejects_bad_args():
    m = get_model("decay1d")
    with pytest.raises(ValueError):
        simulate_trace(m, [1.0], tau=-0.1, eps=1e-4, T=1.0)
    with pytest.raises(ValueError):
        simulate_trace(m, [1.0], tau=2.0, eps=1e-4, T=1.0)
