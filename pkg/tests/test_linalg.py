import numpy as np
import pytest

from eeiwfa.errors import InvalidInputError
from eeiwfa.linalg import (
    compact_svd,
    complexify,
    hermitian_evd,
    pseudo_inverse,
    psd_trace_projection,
    realify,
    spectral_radius,
)

from conftest import crandn, random_hermitian, random_psd


# --- Hermitian EVD ----------------------------------------------------------

def test_evd_identity():
    vals, vecs = hermitian_evd(np.eye(2))
    assert np.allclose(vals, [1.0, 1.0])
    assert np.allclose(vecs @ vecs.conj().T, np.eye(2), atol=1e-12)


def test_evd_diagonal_descending():
    vals, _ = hermitian_evd(np.diag([3.0, 1.0]))
    assert np.allclose(vals, [3.0, 1.0])


def test_evd_round_trip_random(rng):
    A = random_hermitian(rng, 4)
    vals, vecs = hermitian_evd(A)
    scale = max(1.0, np.abs(A).max())
    assert np.abs((vecs * vals) @ vecs.conj().T - A).max() <= 1e-9 * scale
    assert np.abs(vecs.conj().T @ vecs - np.eye(4)).max() <= 1e-9
    assert np.all(np.diff(vals) <= 1e-12)


def test_evd_rejects_non_hermitian(rng):
    A = crandn(rng, 3, 3)
    A[0, 1] += 1.0  # guarantee asymmetry
    with pytest.raises(InvalidInputError):
        hermitian_evd(A)


# --- compact SVD -------------------------------------------------------------

def test_svd_identity():
    U, s, V, r = compact_svd(np.eye(3))
    assert r == 3
    assert np.allclose(s, [1.0, 1.0, 1.0])


def test_svd_rank_one(rng):
    u = crandn(rng, 4)
    v = crandn(rng, 3)
    u /= np.linalg.norm(u)
    v /= np.linalg.norm(v)
    A = np.outer(u, v.conj())
    U, s, V, r = compact_svd(A)
    assert r == 1
    assert np.allclose(s, [1.0], atol=1e-12)


def test_svd_rectangular_round_trip(rng):
    A = crandn(rng, 4, 2)
    U, s, V, r = compact_svd(A)
    assert r == 2
    assert np.abs((U * s) @ V.conj().T - A).max() <= 1e-9 * s[0]
    assert np.all(s > 0)


def test_svd_zero_matrix():
    U, s, V, r = compact_svd(np.zeros((3, 2)))
    assert r == 0
    assert U.shape == (3, 0) and s.shape == (0,) and V.shape == (2, 0)


def test_evd_svd_round_trips_bulk():
    # 1000 random matrices up to 8x8, both factorizations
    rng = np.random.default_rng(7)
    for i in range(500):
        n = int(rng.integers(1, 9))
        m = int(rng.integers(1, 9))
        A = crandn(rng, m, n)
        U, s, V, r = compact_svd(A)
        scale = max(1.0, np.abs(A).max())
        assert np.abs((U * s) @ V.conj().T - A).max() <= 1e-9 * scale
        H = random_hermitian(rng, n)
        vals, vecs = hermitian_evd(H)
        hscale = max(1.0, np.abs(H).max())
        assert np.abs((vecs * vals) @ vecs.conj().T - H).max() <= 1e-9 * hscale


# --- pseudoinverse -----------------------------------------------------------

def test_pinv_invertible_matches_inverse():
    A = np.array([[2.0, 1.0], [0.5, 3.0]], dtype=complex)
    # 2x2 inverse by the adjugate formula
    det = A[0, 0] * A[1, 1] - A[0, 1] * A[1, 0]
    inv = np.array([[A[1, 1], -A[0, 1]], [-A[1, 0], A[0, 0]]]) / det
    assert np.abs(pseudo_inverse(A) - inv).max() <= 1e-12


def test_pinv_diagonal_with_zero():
    assert np.allclose(pseudo_inverse(np.diag([2.0, 0.0])), np.diag([0.5, 0.0]))


def test_pinv_full_row_rank_right_inverse(rng):
    A = crandn(rng, 2, 4)
    assert np.abs(A @ pseudo_inverse(A) - np.eye(2)).max() <= 1e-8


def test_pinv_moore_penrose_identities(rng):
    for _ in range(20):
        m, n, k = (int(x) for x in rng.integers(2, 7, size=3))
        A = crandn(rng, m, k) @ crandn(rng, k, n)  # rank <= k, often deficient
        P = pseudo_inverse(A)
        tol = 1e-8 * max(1.0, np.abs(A).max())
        assert np.abs(A @ P @ A - A).max() <= tol
        assert np.abs(P @ A @ P - P).max() <= tol
        assert np.abs((A @ P) - (A @ P).conj().T).max() <= tol
        assert np.abs((P @ A) - (P @ A).conj().T).max() <= tol


# --- PSD trace projection -----------------------------------------------------

def _projection_oracle(A, p):
    # independent route: sort the eigenvalues, scan active-set sizes, and
    # solve the shift in closed form
    vals, vecs = np.linalg.eigh(0.5 * (A + A.conj().T))
    lam = np.sort(vals)[::-1]
    n = lam.size
    theta = None
    for k in range(1, n + 1):
        t = (p - lam[:k].sum()) / k
        if lam[k - 1] + t > 0 and (k == n or lam[k] + t <= 0):
            theta = t
            break
    if theta is None:
        theta = (p - lam.sum()) / n
    powers = np.maximum(vals + theta, 0.0)
    return (vecs * powers) @ vecs.conj().T


def test_projection_literal_examples():
    out = psd_trace_projection(np.diag([3.0, 1.0]), 2.0)
    assert np.abs(out - np.diag([2.0, 0.0])).max() <= 1e-12
    out = psd_trace_projection(-np.eye(2), 4.0)
    assert np.abs(out - np.diag([2.0, 2.0])).max() <= 1e-12


def test_projection_feasible_fixed_point(rng):
    A = random_psd(rng, 3, trace=2.5)
    out = psd_trace_projection(A, 2.5)
    assert np.abs(out - A).max() <= 1e-10


def test_projection_zero_power():
    out = psd_trace_projection(np.diag([3.0, 1.0]), 0.0)
    assert np.abs(out).max() == 0.0


def test_projection_rejects_negative_power():
    with pytest.raises(InvalidInputError):
        psd_trace_projection(np.eye(2), -1.0)


def test_projection_matches_oracle_and_is_nearest(rng):
    for _ in range(100):
        n = int(rng.integers(1, 6))
        A = random_hermitian(rng, n, scale=3.0)
        p = float(rng.uniform(0.0, 5.0))
        out = psd_trace_projection(A, p)
        assert np.abs(out - _projection_oracle(A, p)).max() <= 1e-10
        assert abs(np.trace(out).real - p) <= 1e-10
        assert np.linalg.eigvalsh(out).min() >= -1e-12
        base = np.linalg.norm(out - A, "fro")
        for _ in range(50):
            cand = random_psd(rng, n, trace=p)
            assert np.linalg.norm(cand - A, "fro") >= base - 1e-9


# --- realify / complexify ------------------------------------------------------

def test_realify_scalar_one():
    assert np.array_equal(realify(np.array([[1.0 + 0j]])), np.eye(2))


def test_realify_scalar_j():
    R = realify(np.array([[1j]]))
    assert np.array_equal(R, np.array([[0.0, -1.0], [1.0, 0.0]]))
    eig = np.sort_complex(np.linalg.eigvals(R))
    assert np.allclose(eig, [-1j, 1j])


def test_realify_homomorphism(rng):
    X = crandn(rng, 3, 3)
    Y = crandn(rng, 3, 3)
    assert np.abs(realify(X @ Y) - realify(X) @ realify(Y)).max() <= 1e-12


def test_realify_symmetry_iff_hermitian(rng):
    H = random_hermitian(rng, 3)
    R = realify(H)
    assert np.abs(R - R.T).max() <= 1e-12
    N = crandn(rng, 3, 3)
    N[0, 1] += 1.0
    R = realify(N)
    assert np.abs(R - R.T).max() > 1e-6


def test_realify_doubled_eigenvalues(rng):
    H = random_hermitian(rng, 4)
    lam = np.sort(np.linalg.eigvalsh(H))
    lam2 = np.sort(np.linalg.eigvalsh(0.5 * (realify(H) + realify(H).T)))
    assert np.abs(np.repeat(lam, 2) - lam2).max() <= 1e-10


def test_realify_trace_and_frobenius_factors(rng):
    Z = crandn(rng, 3, 3)
    R = realify(Z)
    assert abs(np.trace(R) - 2.0 * np.trace(Z).real) <= 1e-12
    assert abs(np.linalg.norm(R, "fro") ** 2 - 2.0 * np.linalg.norm(Z, "fro") ** 2) <= 1e-10


def test_complexify_round_trip(rng):
    Z = crandn(rng, 2, 4)
    assert np.array_equal(complexify(realify(Z)), Z)


def test_complexify_rejects_bad_blocks():
    R = np.eye(4)
    R[0, 1] = 0.5  # breaks the [[a,-b],[b,a]] structure
    with pytest.raises(InvalidInputError):
        complexify(R)


# --- spectral radius -----------------------------------------------------------

def test_spectral_radius_permutation():
    sr, w, degenerate = spectral_radius(np.array([[0.0, 1.0], [1.0, 0.0]]))
    assert abs(sr - 1.0) <= 1e-9
    assert np.abs(w - np.sqrt(0.5)).max() <= 1e-9
    assert not degenerate


def test_spectral_radius_zero_matrix():
    sr, w, degenerate = spectral_radius(np.zeros((3, 3)))
    assert sr == 0.0
    assert degenerate
    assert abs(np.linalg.norm(w) - 1.0) <= 1e-12


def test_spectral_radius_char_poly_case():
    # characteristic polynomial lambda^2 = 1
    A = np.array([[0.0, 2.0], [0.5, 0.0]])
    sr, w, _ = spectral_radius(A)
    assert abs(sr - 1.0) <= 1e-9
    assert np.abs(A @ w - sr * w).max() <= 1e-9


def test_spectral_radius_matches_dense_eigensolver(rng):
    for _ in range(50):
        n = int(rng.integers(2, 9))
        A = rng.uniform(0.0, 2.0, size=(n, n))
        sr, w, degenerate = spectral_radius(A)
        dense = np.abs(np.linalg.eigvals(A)).max()
        assert abs(sr - dense) <= 1e-8 * max(1.0, dense)
        if not degenerate:
            assert np.abs(A @ w - sr * w).max() <= 1e-9 * max(1.0, sr)


def test_spectral_radius_entrywise_monotone(rng):
    for _ in range(200):
        n = int(rng.integers(2, 7))
        A = rng.uniform(0.0, 1.0, size=(n, n))
        B = A + rng.uniform(0.0, 1.0, size=(n, n))
        assert spectral_radius(A)[0] <= spectral_radius(B)[0] + 1e-9


def test_spectral_radius_rejects_negative():
    with pytest.raises(InvalidInputError):
        spectral_radius(np.array([[0.0, -1.0], [1.0, 0.0]]))


def test_spectral_radius_reducible_flags_and_floors():
    # Perron vector (1, 0): the zero entry is flagged and floored for norm use
    sr, w, degenerate = spectral_radius(np.array([[1.0, 1.0], [0.0, 0.5]]))
    assert abs(sr - 1.0) <= 1e-9
    assert degenerate
    assert w.min() >= 1e-12
    assert abs(np.linalg.norm(w) - 1.0) <= 1e-9
