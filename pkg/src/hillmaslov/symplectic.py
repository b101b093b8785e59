"""Symplectic structure, trace frames and plane intersections on R^{16n}.

Coordinates are ordered as boundary data ``(p(-s), w(-s), p(s), w(s))`` with
each block in R^{4n}. ``p`` is the realified solution of the Hill system and
``w`` the realified solution of the rotation system. A plane is represented
by a frame whose column span is the plane; all comparisons are rank tests.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from . import hill
from .numerics import DEFAULT_RANK_TOL, J2, direct_sum, kron, singular_values

AMBIGUITY_FACTOR = 10.0


class RankAmbiguityWarning(UserWarning):
    """A singular value sits within a factor 10 of the rank threshold."""


@dataclass(frozen=True, eq=False)
class SymplecticForm:
    n: int
    omega: np.ndarray

    def __call__(self, u, v) -> float:
        return float(np.asarray(u) @ self.omega @ np.asarray(v))


@dataclass(frozen=True, eq=False)
class LagrangianFrame:
    columns: np.ndarray

    @property
    def dim(self) -> int:
        return self.columns.shape[1]


@dataclass(frozen=True, eq=False)
class ReferencePlane(LagrangianFrame):
    n: int = 1


def omega_matrix(n: int) -> SymplecticForm:
    """``(J x I_2n) + (J^T x I_2n) + (J^T x I_2n) + (J x I_2n)`` (direct sum)."""
    if n < 1:
        raise ValueError("n must be at least 1")
    jn = kron(J2, np.eye(2 * n))
    jt = kron(J2.T, np.eye(2 * n))
    return SymplecticForm(n=n, omega=direct_sum(jn, jt, jt, jn))


def isotropy_residual(frame, omega: SymplecticForm | np.ndarray) -> float:
    """``||F^T Omega F||`` for a frame ``F`` (Frobenius norm)."""
    f = frame.columns if isinstance(frame, LagrangianFrame) else np.asarray(frame)
    om = omega.omega if isinstance(omega, SymplecticForm) else np.asarray(omega)
    g = f.T @ om @ f
    return float(np.sqrt(np.sum(g * g)))


def relative_isotropy(frame, omega) -> float:
    """Isotropy residual divided by ``||F||_2^2`` (scale-free)."""
    f = frame.columns if isinstance(frame, LagrangianFrame) else np.asarray(frame)
    scale = float(np.linalg.norm(f.astype(float), 2)) ** 2
    return isotropy_residual(f, omega) / max(1.0, scale)


def reference_plane(n: int) -> ReferencePlane:
    """Frame of ``X x X`` with ``X = {(p, w): p = w}`` at each boundary point."""
    d = 4 * n
    e = np.eye(d) / np.sqrt(2.0)
    z = np.zeros((d, d))
    cols = np.block([[e, z], [e, z], [z, e], [z, e]])
    plane = ReferencePlane(columns=cols, n=n)
    if isotropy_residual(plane, omega_matrix(n)) > 1e-12:
        raise AssertionError("reference plane is not isotropic")
    return plane


def embed_kernel(p, theta: float) -> np.ndarray:
    """Lift boundary data ``p(-s)`` of a crossing into ``(p, p, R p, R p)``.

    ``R`` is the boundary rotation, so the result lies in both the trace plane
    and ``X x X``. Accepts a vector or a ``(4n, k)`` array of columns.
    """
    p = np.asarray(p, dtype=float)
    n = p.shape[0] // 4
    rp = hill.boundary_rotation(theta, n) @ p
    return np.concatenate([p, p, rp, rp], axis=0)


def _left_block(problem, lam: float, s: float, precision: str) -> np.ndarray:
    spec = problem.potential
    if abs(s - spec.L) < 1e-15 * spec.L:
        return np.eye(2 * spec.n, dtype=float if precision == "double" else np.longdouble)
    return hill.transfer_matrices(spec, lam, -spec.L, -s, problem.steps, precision)[0]


def trace_frame(problem, lam: float, s: float, m: np.ndarray | None = None,
                precision: str = "double", left: np.ndarray | None = None) -> LagrangianFrame:
    """``16n x 8n`` frame of the trace plane at ``(s, lam)``.

    Columns are images of the standard basis of initial data
    ``(p(-L), w(-L))``. ``m`` may supply a precomputed propagator from
    ``-s`` to ``s`` so the frame is consistent with a crossing search, and
    ``left`` the transfer matrix from ``-L`` to ``-s``. With ``precision="extended"`` the Hill blocks are integrated and stored
    in long double.
    """
    spec = problem.potential
    n, L = spec.n, spec.L
    if not 0.0 < s <= L * (1 + 1e-12):
        raise ValueError("s must lie in (0, L]")
    if m is None:
        m = hill.transfer_matrices(spec, lam, -s, s, problem.steps, precision)[0]
    if left is None:
        left = _left_block(problem, lam, s, precision)
    psi_left = hill.realify(left)
    psi_right = hill.realify(m) @ psi_left
    b_left = hill.rotation_flow(s, problem.theta, -s, n, L).matrix
    b_right = hill.rotation_flow(s, problem.theta, s, n, L).matrix
    z = np.zeros((4 * n, 4 * n), dtype=psi_left.dtype)
    cols = np.block([[psi_left, z], [z, b_left], [psi_right, z], [z, b_right]])
    return LagrangianFrame(columns=cols)


def _orthonormal(f: np.ndarray) -> np.ndarray:
    q, _ = np.linalg.qr(f)
    return q


def intersection_dim(a, b, tol: float = DEFAULT_RANK_TOL, warn: bool = True) -> int:
    """``dim(span a  n  span b)`` from the null space of ``[Qa | Qb]``.

    Both frames are orthonormalised first so the threshold is scale-free.
    A singular value within a factor of 10 of ``tol * sigma_max`` triggers
    :class:`RankAmbiguityWarning`.
    """
    fa = a.columns if isinstance(a, LagrangianFrame) else np.asarray(a, dtype=float)
    fb = b.columns if isinstance(b, LagrangianFrame) else np.asarray(b, dtype=float)
    stacked = np.hstack([_orthonormal(fa), _orthonormal(fb)])
    sv = singular_values(stacked)
    cut = tol * sv[0]
    dim = int(np.sum(sv < cut))
    if warn and np.any((sv >= cut / AMBIGUITY_FACTOR) & (sv < cut * AMBIGUITY_FACTOR)):
        warnings.warn(f"rank decision is ambiguous near threshold {cut:.1e}",
                      RankAmbiguityWarning, stacklevel=2)
    return dim


def _lift(frame: np.ndarray, q0: np.ndarray, v: np.ndarray) -> np.ndarray:
    # element of span(frame) whose projection onto the reference plane span(q0) is q0 q0^T v
    coeff = np.linalg.solve(q0.T @ frame, q0.T @ v)
    return frame @ coeff


def finite_difference_form(frame_at, t0: float, kernel: np.ndarray, omega: SymplecticForm,
                           h: float = 1e-4) -> np.ndarray:
    """Crossing form by centred differences along a frame curve.

    ``frame_at(t)`` returns the frame (array or :class:`LagrangianFrame`) at
    parameter ``t``; ``kernel`` holds the intersection vectors as columns in
    R^{16n}. Each vector is lifted to nearby planes along the orthogonal
    complement of the plane at ``t0``; the Gram entry is
    ``omega(v_i, d v_j / dt)``, symmetrised.
    """
    def cols(t):
        f = frame_at(t)
        return f.columns if isinstance(f, LagrangianFrame) else np.asarray(f)

    q0 = _orthonormal(cols(t0))
    plus = _lift(cols(t0 + h), q0, kernel)
    minus = _lift(cols(t0 - h), q0, kernel)
    deriv = (plus - minus) / (2.0 * h)
    g = kernel.T @ omega.omega @ deriv
    return 0.5 * (g + g.T)
