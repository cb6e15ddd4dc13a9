import numpy as np
import pytest

from helpers import power_iteration_norm
from reachguard.linalg import (
    contraction_check,
    entrywise_norm_upper,
    identity_transform,
    real_block_transform,
    sym_part_max_eig,
    two_norm,
    weyl_shift_bounds,
)

SQRT3 = np.sqrt(3.0)


def test_sym_part_max_eig_examples():
    # [[0,3],[-1,0]]: symmetric part [[0,1],[1,0]], eigenvalues +-1.
    assert sym_part_max_eig(np.array([[0.0, 3.0], [-1.0, 0.0]])) == pytest.approx(1.0, abs=1e-12)
    assert sym_part_max_eig(np.eye(3)) == pytest.approx(1.0, abs=1e-12)
    assert sym_part_max_eig(np.diag([-2.0, -5.0])) == pytest.approx(-2.0, abs=1e-12)
    with pytest.raises(ValueError):
        sym_part_max_eig(np.array([[np.nan, 0], [0, 1.0]]))
    with pytest.raises(ValueError):
        sym_part_max_eig(np.ones((2, 3)))


def test_sym_part_matches_lapack_on_random():
    rng = np.random.default_rng(0)
    for _ in range(300):
        n = rng.integers(1, 7)
        J = rng.normal(size=(n, n)) * rng.uniform(0.1, 10)
        expected = np.linalg.eigvalsh(0.5 * (J + J.T))[-1]
        assert sym_part_max_eig(J) == pytest.approx(expected, abs=1e-10 * max(1, two_norm(J)))


def test_quadratic_form_bound():
    # y^T J y <= lambda_max * ||y||^2 for the symmetrized form.
    rng = np.random.default_rng(1)
    for _ in range(1000):
        n = rng.integers(1, 6)
        J = rng.normal(size=(n, n)) * rng.uniform(0.1, 5)
        lam = sym_part_max_eig(J)
        y = rng.normal(size=n)
        assert y @ J @ y <= lam * (y @ y) + 1e-9


def test_entrywise_norm_examples():
    assert entrywise_norm_upper(np.array([[0.1, 0.2], [0.2, 0.1]])) == pytest.approx(
        np.sqrt(0.10), rel=1e-12
    )
    assert entrywise_norm_upper(np.zeros((3, 3))) == 0.0
    with pytest.raises(ValueError):
        entrywise_norm_upper(np.array([[-0.1]]))


def test_entrywise_norm_dominates_power_iteration():
    rng = np.random.default_rng(2)
    for trial in range(1000):
        n = rng.integers(1, 5)
        bounds = rng.uniform(0, 2, size=(n, n))
        E = bounds * rng.choice([-1.0, 1.0], size=(n, n)) * rng.uniform(0, 1, size=(n, n))
        assert power_iteration_norm(E, seed=trial) <= entrywise_norm_upper(bounds) + 1e-9


def test_weyl_examples():
    A = np.diag([3.0, 1.0])
    E = np.array([[0.0, 0.1], [0.1, 0.0]])
    eig_a, eig_e, eig_sum = weyl_shift_bounds(A, E)
    # Direct eigensolve oracle: largest eigenvalue of [[3,.1],[.1,1]] is
    # 2 + sqrt(1.01), a shift of sqrt(1.01)-1 ~ 0.0049876.
    assert eig_sum[0] - eig_a[0] == pytest.approx(np.sqrt(1.01) - 1.0, abs=1e-12)
    assert -0.1 <= eig_sum[0] - eig_a[0] <= 0.1

    eig_a, eig_e, eig_sum = weyl_shift_bounds(A, np.zeros((2, 2)))
    np.testing.assert_allclose(eig_sum - eig_a, 0.0, atol=1e-12)

    c = 0.7
    eig_a, eig_e, eig_sum = weyl_shift_bounds(A, c * np.eye(2))
    np.testing.assert_allclose(eig_sum - eig_a, c, atol=1e-12)

    with pytest.raises(ValueError):
        weyl_shift_bounds(np.array([[0.0, 1.0], [0.0, 0.0]]), E)


def test_weyl_random_pairs():
    rng = np.random.default_rng(3)
    for _ in range(1000):
        n = rng.integers(1, 9)
        A = rng.normal(size=(n, n))
        A = (A + A.T) / 2
        E = rng.normal(size=(n, n)) * rng.uniform(0.01, 3)
        E = (E + E.T) / 2
        weyl_shift_bounds(A, E, slack=1e-9)


def test_orthogonal_reconstruction_of_symmetric():
    rng = np.random.default_rng(4)
    for _ in range(100):
        n = rng.integers(2, 7)
        A = rng.normal(size=(n, n))
        A = (A + A.T) / 2
        w, Q = np.linalg.eigh(A)
        assert np.linalg.norm(Q @ np.diag(w) @ Q.T - A) <= 1e-8 * max(1, np.linalg.norm(A))


def test_real_block_transform_oscillator():
    J = np.array([[0.0, 3.0], [-1.0, 0.0]])
    tr = real_block_transform(J)
    assert tr.cond == pytest.approx(SQRT3, rel=1e-8)
    block = tr.P @ J @ tr.Pinv
    np.testing.assert_allclose(np.abs(block), [[0, SQRT3], [SQRT3, 0]], atol=1e-8)
    assert block[0, 1] == pytest.approx(-block[1, 0], rel=1e-8)
    assert np.linalg.norm(tr.P @ tr.Pinv - np.eye(2)) <= 1e-8 * 2


def test_real_block_transform_symmetric_is_orthogonal():
    rng = np.random.default_rng(5)
    A = rng.normal(size=(3, 3))
    A = (A + A.T) / 2
    tr = real_block_transform(A)
    assert tr.cond == pytest.approx(1.0, abs=1e-6)
    block = tr.P @ A @ tr.Pinv
    np.testing.assert_allclose(block - np.diag(np.diag(block)), 0.0, atol=1e-8)


def test_real_block_transform_defective_falls_back():
    tr = real_block_transform(np.array([[0.0, 1.0], [0.0, 0.0]]))
    assert tr.is_identity()
    assert tr.cond == 1.0


def test_real_block_transform_random_block_structure():
    rng = np.random.default_rng(6)
    for _ in range(200):
        n = rng.integers(2, 6)
        J = rng.normal(size=(n, n))
        tr = real_block_transform(J)
        assert tr.cond >= 1.0 - 1e-12
        if tr.is_identity():
            continue
        B = tr.P @ J @ tr.Pinv
        # 1x1 or [[a,c],[-c,a]] blocks: check the skew/diag pattern by
        # zeroing admissible positions and demanding the rest vanish.
        resid = B.copy()
        i = 0
        while i < n:
            if i + 1 < n and abs(B[i + 1, i]) > 1e-6 * max(1, two_norm(J)):
                assert B[i, i] == pytest.approx(B[i + 1, i + 1], rel=1e-6, abs=1e-8)
                assert B[i, i + 1] == pytest.approx(-B[i + 1, i], rel=1e-6, abs=1e-8)
                resid[i : i + 2, i : i + 2] = 0.0
                i += 2
            else:
                resid[i, i] = 0.0
                i += 1
        assert two_norm(resid) <= 1e-6 * max(1.0, two_norm(J))


def test_cond_cap_forces_identity():
    J = np.array([[1.0, 1000.0], [0.001, 1.1]])
    tr = real_block_transform(J, cond_cap=1.5)
    assert tr.is_identity()


def test_contraction_check():
    assert contraction_check(-0.3) is True
    assert contraction_check(0.0) is False
    with pytest.raises(ValueError):
        contraction_check(np.inf)


def test_identity_transform():
    tr = identity_transform(3)
    assert tr.is_identity() and tr.cond == 1.0
