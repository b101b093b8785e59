"""Small dense real linear algebra.

Matrices are plain ``float64`` numpy arrays. Every public function returns a
fresh array and never writes into its arguments. Decompositions are delegated
to LAPACK through numpy; the wrappers enforce the input contracts and turn
LAPACK non-convergence into :class:`ConvergenceError`.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConvergenceError

DEFAULT_RANK_TOL = 1e-8
SYMMETRY_TOL = 1e-12

J2 = np.array([[0.0, 1.0], [-1.0, 0.0]])


def as_matrix(a) -> np.ndarray:
    """Copy ``a`` into a finite 2-D float64 array (long double input is kept)."""
    dt = np.longdouble if np.asarray(a).dtype == np.longdouble else float
    m = np.array(a, dtype=dt, copy=True)
    if m.ndim == 1:
        m = m.reshape(-1, 1)
    if m.ndim != 2:
        raise ValueError(f"expected a matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError("matrix has non-finite entries")
    return m


def _square(a) -> np.ndarray:
    m = as_matrix(a)
    if m.shape[0] != m.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {m.shape}")
    return m


@dataclass(frozen=True)
class EigenResult:
    values: np.ndarray
    vectors: np.ndarray | None = None

    @property
    def real(self) -> np.ndarray:
        return self.values.real.copy()


def identity(n: int) -> np.ndarray:
    return np.eye(n)


def kron(a, b) -> np.ndarray:
    """Kronecker product: block (i, j) of the result is ``a[i, j] * b``."""
    return np.kron(as_matrix(a), as_matrix(b))


def direct_sum(*blocks) -> np.ndarray:
    mats = [as_matrix(b) for b in blocks]
    rows = sum(m.shape[0] for m in mats)
    cols = sum(m.shape[1] for m in mats)
    out = np.zeros((rows, cols))
    r = c = 0
    for m in mats:
        out[r:r + m.shape[0], c:c + m.shape[1]] = m
        r += m.shape[0]
        c += m.shape[1]
    return out


def determinant(a) -> float:
    """Determinant by Gaussian elimination with partial pivoting."""
    u = _square(a)
    n = u.shape[0]
    det = 1.0
    for k in range(n):
        p = k + int(np.argmax(np.abs(u[k:, k])))
        if u[p, k] == 0.0:
            return 0.0
        if p != k:
            u[[k, p]] = u[[p, k]]
            det = -det
        det *= u[k, k]
        if k + 1 < n:
            factors = u[k + 1:, k] / u[k, k]
            u[k + 1:, k:] -= np.outer(factors, u[k, k:])
    return float(det)


def singular_values(a) -> np.ndarray:
    return np.linalg.svd(as_matrix(a), compute_uv=False)


def kernel_basis(a, tol: float = DEFAULT_RANK_TOL) -> np.ndarray:
    """Orthonormal basis of the numerical null space of ``a``.

    A right-singular direction belongs to the kernel when its singular value
    is below ``tol * sigma_max``. Columns of the returned ``(cols, k)`` array
    are the basis vectors; ``k == 0`` for full column rank.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    m = as_matrix(a)
    rows, cols = m.shape
    if rows == 0 or not np.any(m):
        return np.eye(cols)
    _, s, vt = np.linalg.svd(m, full_matrices=True)
    cut = tol * s[0]
    rank = int(np.sum(s >= cut))
    return vt[rank:].T.copy()


def rank(a, tol: float = DEFAULT_RANK_TOL) -> int:
    m = as_matrix(a)
    return m.shape[1] - kernel_basis(m, tol).shape[1]


def is_symmetric(a, tol: float = SYMMETRY_TOL) -> bool:
    m = as_matrix(a)
    if m.shape[0] != m.shape[1]:
        return False
    scale = max(1.0, float(np.linalg.norm(m)))
    return float(np.linalg.norm(m - m.T)) <= tol * scale


def eig_symmetric(a) -> EigenResult:
    """Real spectrum and orthonormal eigenvectors of a symmetric matrix.

    Eigenvalues are returned in ascending order.
    """
    m = _square(a)
    if not is_symmetric(m):
        raise ValueError("eig_symmetric requires a symmetric matrix")
    m = 0.5 * (m + m.T)
    try:
        w, v = np.linalg.eigh(m)
    except np.linalg.LinAlgError as exc:
        raise ConvergenceError(f"symmetric eigensolver failed: {exc}") from exc
    return EigenResult(values=w.astype(complex), vectors=v)


def eig_general(a) -> EigenResult:
    """All complex eigenvalues of a real square matrix.

    Hessenberg reduction followed by shifted QR (LAPACK ``dgeev``). For real
    input the non-real eigenvalues come out as exact conjugate pairs.
    """
    m = _square(a)
    try:
        w = np.linalg.eigvals(m)
    except np.linalg.LinAlgError as exc:
        raise ConvergenceError(f"QR iteration did not converge: {exc}") from exc
    w = np.asarray(w, dtype=complex)
    order = np.lexsort((w.imag, w.real))
    return EigenResult(values=w[order])


def signature(gram, tol: float = 1e-9) -> tuple[int, int, int]:
    """``(n_plus, n_minus, n_zero)`` of a symmetric bilinear form."""
    w = eig_symmetric(gram).real
    n_plus = int(np.sum(w > tol))
    n_minus = int(np.sum(w < -tol))
    return n_plus, n_minus, len(w) - n_plus - n_minus
