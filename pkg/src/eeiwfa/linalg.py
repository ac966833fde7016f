"""Dense complex-matrix primitives.

Hermitian eigendecomposition, compact SVD, Moore-Penrose pseudoinverse,
Frobenius projection onto the trace-constrained PSD set, the complex/real
block bijection, and Perron/spectral-radius utilities for nonnegative
matrices. Everything is a pure function of its inputs.
"""

import numpy as np

from . import _kernels
from .errors import InvalidInputError

HERMITIAN_TOL = 1e-10
RANK_TOL = 1e-10
W_FLOOR = 1e-12


def as_complex_matrix(A):
    """Validate and return ``A`` as a finite 2-d complex array."""
    A = np.asarray(A, dtype=complex)
    if A.ndim != 2:
        raise InvalidInputError(f"expected a 2-d matrix, got ndim={A.ndim}")
    if A.size and not np.all(np.isfinite(A)):
        raise InvalidInputError("matrix has non-finite entries")
    return A


def check_hermitian(A, tol=HERMITIAN_TOL):
    """Validate that ``A`` is square and Hermitian within ``tol`` (relative)."""
    A = as_complex_matrix(A)
    m, n = A.shape
    if m != n:
        raise InvalidInputError(f"matrix is {m}x{n}, not square")
    if n == 0:
        return A
    scale = max(1.0, float(np.abs(A).max()))
    dev = float(np.abs(A - A.conj().T).max())
    if dev > tol * scale:
        raise InvalidInputError(
            f"matrix is not Hermitian: max |A - A^H| = {dev:.3e} "
            f"exceeds {tol:.1e} relative"
        )
    return A


def hermitize(A):
    """Return the Hermitian part (A + A^H) / 2."""
    return 0.5 * (A + A.conj().T)


def hermitian_evd(A, tol=HERMITIAN_TOL):
    """Eigendecomposition of a Hermitian matrix, eigenvalues descending.

    Returns ``(vals, vecs)`` with ``A = vecs @ diag(vals) @ vecs^H`` and the
    columns of ``vecs`` orthonormal. Ties are broken by a stable sort, so
    degenerate eigenspaces come back in LAPACK's basis unchanged.
    """
    A = check_hermitian(A, tol)
    vals, vecs = np.linalg.eigh(hermitize(A))
    order = np.argsort(-vals, kind="stable")
    return vals[order], vecs[:, order]


def compact_svd(A, rank_tol=RANK_TOL):
    """Compact SVD with relative-threshold rank truncation.

    Returns ``(U1, sigma, V1, rank)`` with ``A = U1 @ diag(sigma) @ V1^H``,
    ``sigma`` strictly positive descending, and singular values below
    ``rank_tol * sigma_max`` dropped. A zero matrix yields rank 0 with
    empty factors.
    """
    A = as_complex_matrix(A)
    U, s, Vh = np.linalg.svd(A, full_matrices=False)
    if s.size == 0 or s[0] <= 0.0:
        r = 0
    else:
        r = int(np.count_nonzero(s > rank_tol * s[0]))
    return U[:, :r], s[:r], Vh[:r, :].conj().T, r


def pseudo_inverse(A, rank_tol=RANK_TOL):
    """Moore-Penrose pseudoinverse via the compact SVD."""
    A = as_complex_matrix(A)
    U1, s, V1, r = compact_svd(A, rank_tol)
    if r == 0:
        return np.zeros((A.shape[1], A.shape[0]), dtype=complex)
    return (V1 / s) @ U1.conj().T


def psd_trace_projection(A, p, tol=HERMITIAN_TOL):
    """Frobenius-nearest PSD matrix with trace exactly ``p``.

    Shifts the spectrum of the Hermitian input: the result is
    ``U (diag(lam) + theta I)^+ U^H`` with theta the unique shift that makes
    the trace ``p``. ``p = 0`` gives the zero matrix.
    """
    if p < 0:
        raise InvalidInputError(f"target trace must be >= 0, got {p}")
    A = check_hermitian(A, tol)
    if A.shape[0] == 0:
        return A.copy()
    vals, vecs = np.linalg.eigh(hermitize(A))
    _, powers = _kernels.water_level(
        np.ascontiguousarray(vals, dtype=np.float64), float(p)
    )
    return (vecs * powers) @ vecs.conj().T


def realify(Z):
    """Map an M x N complex matrix to its 2M x 2N real block form.

    Each entry a+bj becomes the block [[a, -b], [b, a]] (unit scaling), so
    the map is a ring homomorphism: realify(X @ Y) = realify(X) @ realify(Y),
    Hermitian inputs map to symmetric outputs, and the eigenvalues of a
    Hermitian input appear with doubled multiplicity. Trace and squared
    Frobenius norm pick up a factor 2.
    """
    Z = as_complex_matrix(Z)
    m, n = Z.shape
    R = np.empty((2 * m, 2 * n))
    R[0::2, 0::2] = Z.real
    R[0::2, 1::2] = -Z.imag
    R[1::2, 0::2] = Z.imag
    R[1::2, 1::2] = Z.real
    return R


def complexify(R, tol=1e-12):
    """Inverse of :func:`realify`; validates the 2x2 block structure."""
    R = np.asarray(R, dtype=float)
    if R.ndim != 2 or R.shape[0] % 2 or R.shape[1] % 2:
        raise InvalidInputError("realified matrix must have even dimensions")
    a = R[0::2, 0::2]
    d = R[1::2, 1::2]
    b = R[1::2, 0::2]
    c = R[0::2, 1::2]
    scale = max(1.0, float(np.abs(R).max())) if R.size else 1.0
    if R.size and max(np.abs(a - d).max(), np.abs(b + c).max()) > tol * scale:
        raise InvalidInputError("matrix does not have the [[a,-b],[b,a]] block form")
    return a + 1j * b


def spectral_radius(A, tol=1e-13, max_iters=20000, w_floor=W_FLOOR):
    """Spectral radius and right Perron vector of a nonnegative matrix.

    Power iteration from the all-ones vector (deterministic). Returns
    ``(sr, w, degenerate)`` with ``w > 0`` and ``||w||_2 = 1``; the flag is
    set when the iteration failed to converge, the radius is zero, or the
    Perron vector has (near-)zero entries, in which case the weights are
    floored at ``w_floor`` and renormalized before returning.
    """
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise InvalidInputError("expected a square matrix")
    if A.size and A.min() < 0.0:
        raise InvalidInputError("matrix must be entrywise nonnegative")
    n = A.shape[0]
    if n == 0:
        return 0.0, np.empty(0), True
    sr, w, converged = _kernels.power_iteration(
        np.ascontiguousarray(A, dtype=np.float64), float(tol), int(max_iters)
    )
    sr = max(float(sr), 0.0)
    if sr <= tol * max(1.0, float(A.max(initial=0.0))):
        sr = 0.0  # below the iteration's own resolution
    degenerate = (not converged) or sr <= w_floor or float(w.min()) < w_floor
    w = np.maximum(w, w_floor)
    w = w / np.linalg.norm(w)
    return sr, w, degenerate
