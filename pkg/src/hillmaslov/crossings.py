"""Crossing detection along the axis-parallel sides of the (s, lambda) square.

A crossing is a point where ``e^{i theta}`` is an eigenvalue of the
propagator ``M(s, lam)``; equivalently the trace plane meets ``X x X``. On a
grid the gap between the graphs of ``M`` and ``e^{i theta} I`` is sampled
(a scale-free stand-in for ``sigma_min(M - e^{i theta} I)``), local minima
are zoomed in on (batched multisection with splitting of genuine double
minima), and for ``n = 1`` the sign-changing scalar ``tr M - 2 cos theta`` is
bracketed with Brent's method as well. Survivors are confirmed by a kernel
computation and equipped with their crossing forms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from functools import lru_cache

import numpy as np
from scipy.integrate import simpson
from scipy.optimize import brentq

from . import hill, symplectic
from .errors import ResolutionError
from .numerics import DEFAULT_RANK_TOL, kernel_basis, signature

LAMBDA = "lambda"
S = "s"
LAMBDA_FORM = "lambda_form"
S_FORM = "s_form"

ZOOM_POINTS = 33
ENDPOINT_TOL = 1e-6
MERGE_TOL = 1e-6
FORM_TOL = 1e-9
ZOOM_HALF_WIDTH = 3
HUMP_RATIO = 1.25
HUMP_FLOOR = 1e-10


@dataclass(frozen=True)
class ScanSettings:
    """Grid size and tolerances for a crossing scan.

    ``threshold`` bounds the scale-free crossing gap for a grid minimum to
    become a candidate; ``kernel_tol`` is the relative rank threshold used to
    confirm a refined candidate.
    """

    grid: int = 2000
    refine_tol: float = 1e-12
    threshold: float = 0.1
    kernel_tol: float = DEFAULT_RANK_TOL
    max_depth: int = 16

    def __post_init__(self):
        if self.grid < 2:
            raise ValueError("grid must have at least 2 points")
        if min(self.refine_tol, self.threshold, self.kernel_tol) <= 0:
            raise ValueError("tolerances must be positive")


@dataclass(frozen=True, eq=False)
class CrossingRecord:
    axis: str
    location: float
    fixed: float
    theta: float
    multiplicity: int
    kernel: np.ndarray
    indicator: float
    endpoint: str | None = None
    gram: np.ndarray | None = None
    signature: tuple[int, int, int] | None = None
    form_kind: str | None = None
    flags: tuple[str, ...] = field(default_factory=tuple)

    @property
    def normalized_multiplicity(self) -> int:
        return self.multiplicity

    @property
    def lam(self) -> float:
        return self.location if self.axis == LAMBDA else self.fixed

    @property
    def s(self) -> float:
        return self.fixed if self.axis == LAMBDA else self.location

    @property
    def form_value(self) -> float | None:
        """Largest-magnitude Gram eigenvalue divided by kernel norm (for tables)."""
        if self.gram is None:
            return None
        w = np.linalg.eigvalsh(self.gram)
        return float(w[np.argmax(np.abs(w))])


def _propagators(problem, axis: str, fixed: float, xs) -> np.ndarray:
    spec = problem.potential
    xs = np.asarray(xs, dtype=float)
    if axis == LAMBDA:
        return hill.transfer_matrices(spec, xs, -fixed, fixed, problem.steps)
    return hill.transfer_matrices(spec, fixed, -xs, xs, problem.steps)


@lru_cache(maxsize=8)
def _grid_propagators(spec, steps: int, axis: str, fixed: float, lo: float, hi: float,
                      count: int) -> np.ndarray:
    # sweeps over theta revisit the same grids; the result is shared, so freeze it
    xs = np.linspace(lo, hi, count)
    if axis == LAMBDA:
        ms = hill.transfer_matrices(spec, xs, -fixed, fixed, steps)
    else:
        ms = hill.transfer_matrices(spec, fixed, -xs, xs, steps)
    ms.flags.writeable = False
    return ms


def _indicator(ms: np.ndarray, theta: float) -> tuple[np.ndarray, np.ndarray]:
    """Scale-free crossing gap per element (and a unit scale, for the zoom).

    The gap is the smallest singular value of ``[Qa | Qb]`` where ``Qa`` and
    ``Qb`` are orthonormal bases of the graphs of ``M`` and ``e^{i theta} I``;
    it is the sine of the smallest principal angle up to a factor, vanishes
    exactly at crossings and does not depend on ``||M||``.
    """
    nb, k, _ = ms.shape
    eye = np.eye(k)
    graph = np.concatenate([np.broadcast_to(eye, ms.shape), ms], axis=1).astype(complex)
    qa = np.linalg.qr(graph)[0]
    qb = np.concatenate([eye, np.exp(1j * theta) * eye]) / math.sqrt(2.0)
    stacked = np.concatenate([qa, np.broadcast_to(qb, (nb, 2 * k, k))], axis=2)
    sv = np.linalg.svd(stacked, compute_uv=False)
    return sv[:, -1], np.ones(nb)


def crossing_indicator(problem, lam: float, s: float) -> float:
    """Smallest singular value of ``realify(M(s, lam)) - rot(theta)``."""
    if s <= 0:
        raise ValueError("s must be positive")
    m = hill.transfer_matrices(problem.potential, lam, -s, s, problem.steps)[0]
    k = hill.realify(m) - hill.boundary_rotation(problem.theta, problem.n)
    return float(np.linalg.svd(k, compute_uv=False)[-1])


def crossing_gap(problem, lam: float, s: float) -> float:
    """Scale-free counterpart of :func:`crossing_indicator` used by the scans."""
    m = hill.transfer_matrices(problem.potential, lam, -s, s, problem.steps)
    return float(_indicator(m, problem.theta)[0][0])


def multiplicity_at(problem, lam: float, s: float, tol: float = DEFAULT_RANK_TOL,
                    m: np.ndarray | None = None) -> tuple[int, np.ndarray]:
    """Normalized multiplicity and real kernel basis (columns in R^{4n}).

    The kernel of ``realify(M) - rot(theta)`` is read off the intersection of
    the graphs of ``realify(M)`` and ``rot(theta)``: null vectors
    ``(a, b)`` of ``[Qa | Qb]`` give kernel data ``p = b``. Working with
    orthonormal graph bases makes the rank threshold independent of
    ``||M||``, which can reach 1e9 when part of the system is hyperbolic.
    """
    if m is None:
        m = hill.transfer_matrices(problem.potential, lam, -s, s, problem.steps)[0]
    d = 4 * problem.n
    eye = np.eye(d)
    qa = np.linalg.qr(np.vstack([eye, hill.realify(m)]))[0]
    qb = np.vstack([eye, hill.boundary_rotation(problem.theta, problem.n)]) / math.sqrt(2.0)
    null = kernel_basis(np.hstack([qa, qb]), tol)
    dim = null.shape[1]
    if dim % 2:
        raise ResolutionError(
            f"odd real kernel dimension {dim} at lambda={lam!r}, s={s!r}; "
            "tighten the integrator or the rank tolerance")
    if dim == 0:
        return 0, np.zeros((d, 0))
    kern = np.linalg.qr(null[d:])[0]
    return dim // 2, kern


def _local_minima(sig: np.ndarray) -> np.ndarray:
    left = np.concatenate([[np.inf], sig[:-1]])
    right = np.concatenate([sig[1:], [np.inf]])
    return np.flatnonzero((sig <= left) & (sig <= right) & ((sig < left) | (sig < right)))


def _zoom(evaluate, a: float, b: float, settings: ScanSettings) -> list[float]:
    """Refine the minima of ``evaluate`` inside ``[a, b]``.

    Each level samples ``ZOOM_POINTS`` points and keeps a bracket of
    ``ZOOM_HALF_WIDTH`` cells either side of every minimum, so the bracket
    shrinks by about 5 per level. Two minima separated by a real hump are
    followed separately; two crossings too close to show a hump stay inside
    the next, finer bracket until one appears.
    """
    found = []
    stack = [(a, b, 0)]
    while stack:
        lo, hi, depth = stack.pop()
        xs = np.linspace(lo, hi, ZOOM_POINTS)
        sig, scale = evaluate(xs)
        rel = sig / scale
        cell = (hi - lo) / (ZOOM_POINTS - 1)
        mins = _local_minima(rel)
        mins = mins[rel[mins] < settings.threshold]
        if mins.size == 0:
            continue
        if mins.size > 1:
            keep = [mins[0]]
            for i in mins[1:]:
                j = keep[-1]
                hump = rel[j:i + 1].max()
                floor = max(rel[i], rel[j])
                if hump > HUMP_RATIO * floor and hump - floor > HUMP_FLOOR:
                    keep.append(i)
                elif rel[i] < rel[j]:
                    keep[-1] = i
            mins = np.array(keep)
        for i in mins:
            if cell <= settings.refine_tol or depth >= settings.max_depth:
                found.append(float(xs[i]))
                continue
            w = ZOOM_HALF_WIDTH
            stack.append((xs[max(i - w, 0)], xs[min(i + w, ZOOM_POINTS - 1)], depth + 1))
    return found


def _bounds(problem, axis: str, lo, hi) -> tuple[float, float]:
    if axis == LAMBDA:
        lo = 0.0 if lo is None else float(lo)
        hi = problem.lam_inf if hi is None else float(hi)
    else:
        lo = problem.default_s0() if lo is None else float(lo)
        if lo is None:
            raise ValueError("s range needs an explicit lower end for periodic theta")
        hi = problem.L if hi is None else float(hi)
        if lo <= 0:
            raise ValueError("s range must be positive")
    if not lo < hi:
        raise ValueError("empty scan range")
    return lo, hi


def _scan(problem, axis: str, fixed: float, lo: float, hi: float,
          settings: ScanSettings) -> list[CrossingRecord]:
    theta = problem.theta
    xs = np.linspace(lo, hi, settings.grid)
    ms = _grid_propagators(problem.potential, problem.steps, axis, fixed, lo, hi, settings.grid)
    sig, scale = _indicator(ms, theta)
    rel = sig / scale

    def evaluate(pts):
        return _indicator(_propagators(problem, axis, fixed, pts), theta)

    cands = []
    w = ZOOM_HALF_WIDTH
    for i in _local_minima(rel):
        if rel[i] >= settings.threshold:
            continue
        a, b = xs[max(i - w, 0)], xs[min(i + w, xs.size - 1)]
        cands.extend(_zoom(evaluate, a, b, settings))
    if problem.n == 1:
        g = np.trace(ms, axis1=1, axis2=2) - 2.0 * math.cos(theta)

        def scalar(x):
            m = _propagators(problem, axis, fixed, [x])[0]
            return float(np.trace(m)) - 2.0 * math.cos(theta)

        for i in np.flatnonzero(np.sign(g[:-1]) * np.sign(g[1:]) < 0):
            cands.append(brentq(scalar, xs[i], xs[i + 1], xtol=1e-14))
        cands.extend(xs[g == 0.0])
    if not cands:
        return []
    cands = np.sort(np.clip(cands, lo, hi))
    sig_c, scale_c = evaluate(cands)
    rel_c = sig_c / scale_c
    groups, cur = [], [0]
    for i in range(1, cands.size):
        if cands[i] - cands[cur[-1]] < MERGE_TOL:
            cur.append(i)
        else:
            groups.append(cur)
            cur = [i]
    groups.append(cur)
    records = []
    for grp in groups:
        best = grp[int(np.argmin(rel_c[grp]))]
        x = float(cands[best])
        lam, s = (x, fixed) if axis == LAMBDA else (fixed, x)
        m = _propagators(problem, axis, fixed, [x])[0]
        mult, kern = multiplicity_at(problem, lam, s, settings.kernel_tol, m=m)
        if mult == 0:
            continue
        endpoint = None
        if x - lo <= ENDPOINT_TOL:
            endpoint = "lower"
        elif hi - x <= ENDPOINT_TOL:
            endpoint = "upper"
        records.append(CrossingRecord(axis=axis, location=x, fixed=float(fixed), theta=theta,
                                      multiplicity=mult, kernel=kern,
                                      indicator=float(sig_c[best]), endpoint=endpoint))
    return records


def scan_profile(problem, axis: str, fixed: float, lo: float | None = None,
                 hi: float | None = None, settings: ScanSettings | None = None):
    """Grid points, propagators and crossing gap of the scan along ``axis``."""
    settings = settings or ScanSettings()
    lo, hi = _bounds(problem, axis, lo, hi)
    xs = np.linspace(lo, hi, settings.grid)
    ms = _grid_propagators(problem.potential, problem.steps, axis, float(fixed), lo, hi,
                           settings.grid)
    return xs, ms, _indicator(ms, problem.theta)[0]


def _with_form(problem, rec: CrossingRecord) -> CrossingRecord:
    if rec.axis == LAMBDA:
        gram, kind, flags = crossing_form_lambda(problem, rec), LAMBDA_FORM, ()
    else:
        gram, kind = crossing_form_s(problem, rec), S_FORM
        flags = () if _continuous(problem, rec.location) else ("discontinuous_potential",)
    sig = signature(gram, FORM_TOL * max(1.0, float(np.abs(gram).max())))
    if sig[2]:
        flags = flags + ("degenerate_form",)
    return replace(rec, gram=gram, signature=sig, form_kind=kind, flags=rec.flags + flags)


def find_crossings_lambda(problem, s: float, lo: float | None = None, hi: float | None = None,
                          settings: ScanSettings | None = None,
                          forms: bool = True) -> list[CrossingRecord]:
    """Crossings ``lam`` in ``[lo, hi]`` (default ``[0, lambda_inf]``) at fixed ``s``."""
    if not 0.0 < s <= problem.L * (1 + 1e-12):
        raise ValueError("s must lie in (0, L]")
    settings = settings or ScanSettings()
    lo, hi = _bounds(problem, LAMBDA, lo, hi)
    recs = _scan(problem, LAMBDA, float(s), lo, hi, settings)
    return [_with_form(problem, r) for r in recs] if forms else recs


def find_crossings_s(problem, lam: float = 0.0, lo: float | None = None, hi: float | None = None,
                     settings: ScanSettings | None = None,
                     forms: bool = True) -> list[CrossingRecord]:
    """Conjugate points ``s`` in ``[lo, hi]`` (default ``[s0, L]``) at fixed ``lam``."""
    settings = settings or ScanSettings()
    lo, hi = _bounds(problem, S, lo, hi)
    if hi > problem.L * (1 + 1e-12):
        raise ValueError("s range exceeds L")
    recs = _scan(problem, S, float(lam), lo, hi, settings)
    return [_with_form(problem, r) for r in recs] if forms else recs


def kernel_trajectories(problem, rec: CrossingRecord) -> tuple[np.ndarray, np.ndarray]:
    """Nodes on ``[-s, s]`` and realified solutions ``(N, 4n, k)`` from the kernel data."""
    spec = problem.potential
    nodes, path = hill.solution_path(spec, rec.lam, -rec.s, rec.s, problem.steps)
    # (Y x I_2) p without forming the Kronecker products
    k = rec.kernel.reshape(path.shape[1], 2, -1)
    traj = np.einsum("xij,jak->xiak", path, k).reshape(path.shape[0], -1, k.shape[2])
    return nodes, traj


def crossing_form_lambda(problem, rec: CrossingRecord) -> np.ndarray:
    """Gram matrix ``-int <p_i(x), p_j(x)> dx`` over ``[-s, s]`` (position part only)."""
    if rec.axis != LAMBDA:
        raise ValueError("record is not a lambda-axis crossing")
    nodes, traj = kernel_trajectories(problem, rec)
    pos = traj[:, :2 * problem.n, :]
    integrand = np.einsum("xik,xil->xkl", pos, pos)
    gram = -simpson(integrand, x=nodes, axis=0)
    return 0.5 * (gram + gram.T)


def _continuous(problem, s: float) -> bool:
    spec = problem.potential
    return spec.is_continuous_at(-s) and spec.is_continuous_at(s)


def crossing_form_s(problem, rec: CrossingRecord) -> np.ndarray:
    """Gram of ``2<p, (avg V x I_2 - lam) p> + 2<q, q>`` on the kernel data at ``-s*``.

    ``avg V`` is ``(V(-s*) + V(s*)) / 2``; at a jump of a sampled potential
    the one-sided limits from inside ``[-s*, s*]`` are used and the record is
    flagged by the caller.
    """
    if rec.axis != S:
        raise ValueError("record is not an s-axis crossing")
    spec = problem.potential
    n = problem.n
    s, lam = rec.location, rec.fixed
    vbar = 0.5 * (spec(-s, 1.0) + spec(s, -1.0))
    w = hill.realify(vbar) - lam * np.eye(2 * n)
    p = rec.kernel[:2 * n]
    q = rec.kernel[2 * n:]
    gram = 2.0 * p.T @ w @ p + 2.0 * q.T @ q
    return 0.5 * (gram + gram.T)


def finite_difference_form(problem, rec: CrossingRecord, h: float = 1e-4) -> np.ndarray:
    """Crossing form from centred differences of ``omega`` along the frame curve."""
    om = symplectic.omega_matrix(problem.n)
    v = symplectic.embed_kernel(rec.kernel, problem.theta)
    if rec.axis == LAMBDA:
        def frame_at(t):
            return symplectic.trace_frame(problem, t, rec.s)
    else:
        def frame_at(t):
            return symplectic.trace_frame(problem, rec.lam, t)
    return symplectic.finite_difference_form(frame_at, rec.location, v, om, h)
