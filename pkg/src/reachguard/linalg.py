"""Dense symmetric-eigenvalue bounds and real block-diagonalizing transforms.

The eigensolvers are LAPACK-backed (deterministic for identical input); the
block transform replaces an exact real Jordan decomposition, which is not
numerically stable, with an eigendecomposition-based real block form guarded
by an identity fallback.  Any invertible transform is sound, so the fallback
never loses correctness, only tightness.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


def _check_square_finite(J: np.ndarray) -> np.ndarray:
    J = np.atleast_2d(np.asarray(J, dtype=float))
    if J.ndim != 2 or J.shape[0] != J.shape[1]:
        raise ValueError("matrix must be square")
    if not np.all(np.isfinite(J)):
        raise ValueError("matrix entries must be finite")
    return J


def two_norm(A: np.ndarray) -> float:
    """Matrix 2-norm via the symmetric eigensolver on A^T A."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    w = np.linalg.eigvalsh(A.T @ A)
    return float(np.sqrt(max(w[-1], 0.0)))


def sym_part_max_eig(J: np.ndarray) -> float:
    """Maximum eigenvalue of the symmetric part (J + J^T)/2."""
    J = _check_square_finite(J)
    n = J.shape[0]
    if n == 1:
        return float(J[0, 0])
    if n == 2:
        # Closed form for the 2x2 symmetric eigenproblem.
        a = J[0, 0]
        c = J[1, 1]
        b = 0.5 * (J[0, 1] + J[1, 0])
        half = 0.5 * (a - c)
        return float(0.5 * (a + c) + np.hypot(half, b))
    return float(np.linalg.eigvalsh(0.5 * (J + J.T))[-1])


def entrywise_norm_upper(bounds: np.ndarray) -> float:
    """sqrt(sum of squared entrywise bounds): a 2-norm upper bound for any
    matrix whose entry magnitudes are dominated by `bounds`."""
    bounds = np.asarray(bounds, dtype=float)
    if np.any(bounds < 0) or not np.all(np.isfinite(bounds)):
        raise ValueError("entrywise bounds must be finite and >= 0")
    return float(np.sqrt(np.sum(bounds * bounds)))


def weyl_shift_bounds(
    A: np.ndarray, E: np.ndarray, slack: float = 1e-9
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Eigenvalue perturbation oracle: checks, for symmetric A and E, that
    lambda_n(E) <= lambda_k(A+E) - lambda_k(A) <= lambda_1(E) for every k.

    Returns the three spectra (A, E, A+E) sorted non-increasing, raising if
    the sandwich is violated beyond `slack` or an input is asymmetric.
    """
    A = _check_square_finite(A)
    E = _check_square_finite(E)
    for name, M in (("A", A), ("E", E)):
        scale = max(1.0, float(np.max(np.abs(M))))
        if np.max(np.abs(M - M.T)) > 1e-12 * scale:
            raise ValueError(f"matrix {name} is not symmetric within 1e-12")
    eig_a = np.linalg.eigvalsh(A)[::-1]
    eig_e = np.linalg.eigvalsh(E)[::-1]
    eig_sum = np.linalg.eigvalsh(A + E)[::-1]
    shifts = eig_sum - eig_a
    lo, hi = eig_e[-1], eig_e[0]
    if np.any(shifts < lo - slack) or np.any(shifts > hi + slack):
        k = int(np.argmax(np.maximum(lo - shifts, shifts - hi)))
        raise AssertionError(
            f"eigenvalue shift {shifts[k]:.6g} at k={k} outside [{lo:.6g}, {hi:.6g}]"
        )
    return eig_a, eig_e, eig_sum


@dataclass(frozen=True)
class Transform:
    """Invertible coordinate change x -> P x with cond = ||P|| ||P^-1||."""

    P: np.ndarray
    Pinv: np.ndarray
    cond: float

    def is_identity(self) -> bool:
        return self.P.shape[0] == self.P.shape[1] and np.array_equal(
            self.P, np.eye(self.P.shape[0])
        )


def identity_transform(n: int) -> Transform:
    eye = np.eye(n)
    return Transform(eye, eye.copy(), 1.0)


def _real_eigvector_column(v: np.ndarray) -> np.ndarray:
    # Rotate the complex phase away, then drop the (tiny) imaginary part.
    k = int(np.argmax(np.abs(v)))
    phase = v[k] / abs(v[k])
    w = np.real(v / phase)
    return w / np.linalg.norm(w)


def real_block_transform(J: np.ndarray, cond_cap: float = 1e6) -> Transform:
    """Transform P so that P J P^-1 is block-diagonal with 1x1 real blocks and
    2x2 blocks [[a, c], [-c, a]] for complex eigenvalue pairs a ± ci.

    Falls back to the identity transform (cond 1) whenever the eigenvalues are
    not well separated, the eigenvector matrix is worse-conditioned than
    `cond_cap`, or the block form fails to reproduce numerically.
    """
    J = _check_square_finite(J)
    n = J.shape[0]
    scale = max(1.0, two_norm(J))
    if np.max(np.abs(J - J.T)) <= 1e-12 * scale:
        # Symmetric: the spectral theorem gives an orthogonal transform.
        _, Q = np.linalg.eigh(J)
        return Transform(Q.T.copy(), Q.copy(), 1.0)

    w, V = np.linalg.eig(J)
    # Distinct eigenvalues only; repeated/defective spectra use the fallback.
    sep = np.min(
        [np.inf]
        + [abs(w[i] - w[j]) for i in range(n) for j in range(i + 1, n)]
    )
    if sep < 1e-6 * scale:
        return identity_transform(n)

    order = sorted(range(n), key=lambda i: (w[i].real, abs(w[i].imag), w[i].imag))
    cols: list[np.ndarray] = []
    expected = np.zeros((n, n))
    used = set()
    pos = 0
    for i in order:
        if i in used:
            continue
        lam = w[i]
        if abs(lam.imag) <= 1e-12 * scale:
            cols.append(_real_eigvector_column(V[:, i]))
            expected[pos, pos] = lam.real
            used.add(i)
            pos += 1
        else:
            # Pair lam with its conjugate; keep the +imag representative.
            j = min(
                (k for k in range(n) if k not in used and k != i),
                key=lambda k: abs(w[k] - np.conj(lam)),
            )
            used.update((i, j))
            if lam.imag < 0:
                lam = np.conj(lam)
                vec = V[:, j] if w[j].imag > 0 else np.conj(V[:, i])
            else:
                vec = V[:, i]
            a, c = lam.real, lam.imag
            cols.append(np.real(vec))
            cols.append(np.imag(vec))
            expected[pos, pos] = a
            expected[pos, pos + 1] = c
            expected[pos + 1, pos] = -c
            expected[pos + 1, pos + 1] = a
            pos += 2
    Vr = np.column_stack(cols)
    try:
        P = np.linalg.inv(Vr)
    except np.linalg.LinAlgError:
        return identity_transform(n)
    cond = two_norm(Vr) * two_norm(P)
    if not np.isfinite(cond) or cond > cond_cap:
        return identity_transform(n)
    if two_norm(P @ J @ Vr - expected) > 1e-8 * scale:
        return identity_transform(n)
    if two_norm(P @ Vr - np.eye(n)) > 1e-8 * n:
        return identity_transform(n)
    return Transform(P, Vr, float(cond))


def contraction_check(sym_eig_upper: float) -> bool:
    """True iff the symmetric-part eigenvalue bound is strictly negative,
    i.e. the current enclosure is a contraction region."""
    if not np.isfinite(sym_eig_upper):
        raise ValueError("bound must be finite")
    return bool(sym_eig_upper < 0.0)
