"""Hill problems: potentials, transfer matrices and the rotation system.

The scalar-complex first-order form ``y' = A(x, lam) y`` with
``A = [[0, I_n], [lam I_n - V(x), 0]]`` is integrated with fixed-step
classical RK4. Its coefficients are real, so the realified ``4n`` system is
recovered exactly as ``m (x) I_2`` (see :func:`realify`).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _rk4
from .errors import ResolutionError
from .numerics import as_matrix, is_symmetric, kron

DEFAULT_STEPS = 4096
RICHARDSON_TOL = 1e-6
SUP_SAMPLES = 1024
LAMBDA_MARGIN = 1.25
S0_FRACTION = 0.9
_CHUNK_BYTES = 64_000_000

RULES = ("constant", "mathieu", "fourier", "sampled")


def _sym(m: np.ndarray, what: str) -> np.ndarray:
    if not is_symmetric(m):
        raise ValueError(f"{what} must be symmetric")
    return 0.5 * (m + m.T)


@dataclass(frozen=True, eq=False)
class PotentialSpec:
    """A symmetric, ``2L``-periodic ``n x n`` potential.

    Build instances with the ``constant``, ``mathieu``, ``fourier`` and
    ``sampled`` constructors rather than directly.
    """

    rule: str
    n: int
    L: float
    params: dict = field(default_factory=dict)

    @classmethod
    def constant(cls, v0, L: float = math.pi) -> PotentialSpec:
        v0 = _sym(as_matrix(np.atleast_2d(v0)), "constant potential")
        return cls("constant", v0.shape[0], float(L), {"matrix": v0})

    @classmethod
    def mathieu(cls, amplitude: float = 3.2, frequency: float = 2.0,
                L: float = math.pi) -> PotentialSpec:
        """``V(x) = amplitude * cos(frequency * x)``; ``n = 1``."""
        cycles = frequency * 2.0 * L / (2.0 * math.pi)
        if abs(cycles - round(cycles)) > 1e-9:
            raise ValueError("frequency is not commensurate with the period 2L")
        return cls("mathieu", 1, float(L),
                   {"amplitude": float(amplitude), "frequency": float(frequency)})

    @classmethod
    def fourier(cls, c0, cos=(), sin=(), L: float = math.pi) -> PotentialSpec:
        """``V(x) = c0 + sum_k cos[k-1] cos(k pi x / L) + sin[k-1] sin(k pi x / L)``."""
        c0 = _sym(as_matrix(np.atleast_2d(c0)), "c0")
        n = c0.shape[0]
        k = max(len(cos), len(sin))
        cs = np.zeros((k, n, n))
        ss = np.zeros((k, n, n))
        for i, c in enumerate(cos):
            cs[i] = _sym(as_matrix(np.atleast_2d(c)), f"cos[{i}]")
        for i, s in enumerate(sin):
            ss[i] = _sym(as_matrix(np.atleast_2d(s)), f"sin[{i}]")
        return cls("fourier", n, float(L), {"c0": c0, "cos": cs, "sin": ss})

    @classmethod
    def sampled(cls, xs, values, L: float = math.pi) -> PotentialSpec:
        """Piecewise-linear interpolation of ``values`` at the grid ``xs``.

        The grid covers one period starting at ``xs[0]``. A repeated abscissa
        encodes a jump (left value first). If ``xs[-1] < xs[0] + 2L`` the
        data wraps continuously to ``values[0]``; a last abscissa equal to
        ``xs[0] + 2L`` carries the left limit at the period end instead.
        """
        xs = np.array(xs, dtype=float)
        vals = np.array(values, dtype=float)
        if xs.size == 0:
            raise ValueError("sampled potential needs a non-empty grid")
        if vals.ndim == 1:
            vals = vals.reshape(-1, 1, 1)
        if vals.shape[0] != xs.size or vals.shape[1] != vals.shape[2]:
            raise ValueError("values must have shape (len(xs), n, n)")
        if np.any(np.diff(xs) < 0):
            raise ValueError("grid must be non-decreasing")
        L = float(L)
        period = 2.0 * L
        if xs[-1] - xs[0] > period * (1 + 1e-12):
            raise ValueError("grid spans more than one period")
        if np.any(np.bincount(np.unique(xs, return_inverse=True)[1]) > 2):
            raise ValueError("an abscissa may appear at most twice")
        vals = np.array([_sym(v, f"sample {i}") for i, v in enumerate(vals)])
        if xs[-1] < xs[0] + period:
            ext_x = np.append(xs, xs[0] + period)
            ext_v = np.concatenate([vals, vals[:1]])
        else:
            ext_x, ext_v = xs.copy(), vals.copy()
        if xs.size == 1:
            ext_x = np.array([xs[0], xs[0] + period])
            ext_v = np.array([vals[0], vals[0]])
        return cls("sampled", vals.shape[1], L,
                   {"xs": xs, "values": vals, "ext_x": ext_x, "ext_v": ext_v})

    @property
    def period(self) -> float:
        return 2.0 * self.L

    def values(self, x, direction=1.0) -> np.ndarray:
        """Vectorised evaluation: shape ``x.shape + (n, n)``.

        ``direction`` (+1 / -1, broadcastable to ``x``) selects the one-sided
        limit at a jump of a sampled potential; other rules ignore it.
        """
        x = np.asarray(x, dtype=float)
        n = self.n
        p = self.params
        if self.rule == "constant":
            return np.broadcast_to(p["matrix"], x.shape + (n, n)).copy()
        if self.rule == "mathieu":
            return (p["amplitude"] * np.cos(p["frequency"] * x))[..., None, None]
        if self.rule == "fourier":
            out = np.broadcast_to(p["c0"], x.shape + (n, n)).copy()
            w = math.pi / self.L
            for k in range(p["cos"].shape[0]):
                arg = (k + 1) * w * x
                out += np.cos(arg)[..., None, None] * p["cos"][k]
                out += np.sin(arg)[..., None, None] * p["sin"][k]
            return out
        return self._sampled(x, np.broadcast_to(direction, x.shape))

    def _sampled(self, x: np.ndarray, direction: np.ndarray) -> np.ndarray:
        ex = self.params["ext_x"]
        ev = self.params["ext_v"]
        x0 = ex[0]
        t = x0 + np.mod(x - x0, self.period)
        # the left limit at the period start lives at the end of the table
        t = np.where((direction < 0) & (t == x0), x0 + self.period, t)
        right = np.searchsorted(ex, t, side="right") - 1
        left = np.searchsorted(ex, t, side="left") - 1
        idx = np.where(direction < 0, left, right)
        idx = np.clip(idx, 0, ex.size - 2)
        width = ex[idx + 1] - ex[idx]
        frac = np.where(width > 0, (t - ex[idx]) / np.where(width > 0, width, 1.0), 0.0)
        frac = np.clip(frac, 0.0, 1.0)[..., None, None]
        return (1.0 - frac) * ev[idx] + frac * ev[idx + 1]

    def __call__(self, x: float, direction: float = 1.0) -> np.ndarray:
        return self.values(np.asarray(float(x)), direction)

    def breakpoints(self, a: float, b: float) -> np.ndarray:
        """Sample abscissae (all periodic images) strictly inside ``(a, b)``."""
        if self.rule != "sampled":
            return np.empty(0)
        lo, hi = min(a, b), max(a, b)
        xs = np.unique(self.params["ext_x"][:-1])
        k0 = math.floor((lo - xs.max()) / self.period)
        k1 = math.ceil((hi - xs.min()) / self.period)
        pts = (xs[None, :] + self.period * np.arange(k0, k1 + 1)[:, None]).ravel()
        return np.unique(pts[(pts > lo) & (pts < hi)])

    def is_continuous_at(self, x: float, tol: float = 1e-9) -> bool:
        left = self(x, -1.0)
        right = self(x, 1.0)
        scale = 1.0 + float(np.linalg.norm(right))
        return float(np.linalg.norm(left - right)) <= tol * scale

    def to_dict(self) -> dict:
        out: dict = {"rule": self.rule, "n": self.n, "L": self.L}
        for key, val in self.params.items():
            if key.startswith("ext_"):
                continue
            out[key] = val.tolist() if isinstance(val, np.ndarray) else val
        return out

    @classmethod
    def from_dict(cls, d: dict) -> PotentialSpec:
        rule, L = d["rule"], d.get("L", math.pi)
        if rule == "constant":
            return cls.constant(d["matrix"], L)
        if rule == "mathieu":
            return cls.mathieu(d.get("amplitude", 3.2), d.get("frequency", 2.0), L)
        if rule == "fourier":
            return cls.fourier(d["c0"], d.get("cos", ()), d.get("sin", ()), L)
        if rule == "sampled":
            return cls.sampled(d["xs"], d["values"], L)
        raise ValueError(f"unknown potential rule {rule!r}")


def eval_potential(spec: PotentialSpec, x: float) -> np.ndarray:
    """``V(x)`` as an ``n x n`` symmetric matrix."""
    return spec(x)


def sup_norm(spec: PotentialSpec, samples: int = SUP_SAMPLES) -> float:
    """Sampled ``sup_x ||V(x)||_2`` over one period."""
    xs = -spec.L + spec.period * np.arange(samples) / samples
    xs = np.concatenate([xs, spec.breakpoints(-spec.L - 1e-12, spec.L)])
    vals = np.concatenate([spec.values(xs, 1.0), spec.values(xs, -1.0)])
    if spec.n == 1:
        return float(np.max(np.abs(vals)))
    return float(np.max(np.linalg.norm(vals, ord=2, axis=(1, 2))))


def lambda_inf_default(spec: PotentialSpec) -> float:
    sup = sup_norm(spec)
    if sup == 0.0:
        return 1.0
    return LAMBDA_MARGIN * sup


def s_min_bound(spec: PotentialSpec, theta: float, lambda_max: float) -> float:
    """Largest ``s0`` for which no ``(theta, s0)``-eigenvalue lies in ``[0, lambda_max]``."""
    if not 0.0 < theta < 2.0 * math.pi:
        raise ValueError("bound undefined for periodic theta; use the theta = 0 pathway")
    width = min(theta, 2.0 * math.pi - theta)
    return 0.5 * width / math.sqrt(sup_norm(spec) + lambda_max)


@dataclass(frozen=True, eq=False)
class HillProblem:
    """Potential plus boundary twist ``theta`` and the scan rectangle."""

    potential: PotentialSpec
    theta: float
    lambda_max: float | None = None
    s_min: float | None = None
    steps: int = DEFAULT_STEPS

    def __post_init__(self):
        if not 0.0 <= self.theta <= 2.0 * math.pi + 1e-12:
            raise ValueError("theta must lie in [0, 2 pi]")
        if self.steps < 2:
            raise ValueError("steps must be at least 2")
        if self.s_min is not None and not 0.0 < self.s_min <= self.potential.L:
            raise ValueError("s_min must lie in (0, L]")
        if self.lambda_max is not None and self.lambda_max <= sup_norm(self.potential):
            raise ValueError("lambda_max must exceed sup ||V||")

    @property
    def n(self) -> int:
        return self.potential.n

    @property
    def L(self) -> float:
        return self.potential.L

    @property
    def periodic(self) -> bool:
        return self.theta < 1e-12 or abs(self.theta - 2.0 * math.pi) < 1e-12

    @property
    def lam_inf(self) -> float:
        if self.lambda_max is not None:
            return self.lambda_max
        return lambda_inf_default(self.potential)

    def default_s0(self) -> float | None:
        """Explicit ``s_min`` or 0.9 x the no-crossing bound; ``None`` if periodic."""
        if self.s_min is not None:
            return self.s_min
        if self.periodic:
            return None
        return S0_FRACTION * s_min_bound(self.potential, self.theta, self.lam_inf)

    def replace(self, **changes) -> HillProblem:
        fields = dict(potential=self.potential, theta=self.theta,
                      lambda_max=self.lambda_max, s_min=self.s_min, steps=self.steps)
        fields.update(changes)
        return HillProblem(**fields)


@dataclass(frozen=True, eq=False)
class Propagator:
    s: float
    lam: float
    m: np.ndarray


@dataclass(frozen=True, eq=False)
class RotationFlow:
    s: float
    theta: float
    x: float
    matrix: np.ndarray


def coefficient_matrix(spec: PotentialSpec, x: float, lam: float) -> np.ndarray:
    n = spec.n
    a = np.zeros((2 * n, 2 * n))
    a[:n, n:] = np.eye(n)
    a[n:, :n] = lam * np.eye(n) - spec(x)
    return a


def _step_count(length: np.ndarray, L: float, steps: int) -> np.ndarray:
    per = steps / (2.0 * L)
    return np.maximum(2, 2 * np.ceil(np.abs(length) * per / 2.0 - 1e-9)).astype(int)


def _nodes(spec: PotentialSpec, a: np.ndarray, b: np.ndarray, steps: int) -> np.ndarray:
    """Integration nodes, shape ``(N + 1, B)``; short columns repeat their end point."""
    counts = _step_count(b - a, spec.L, steps)
    width = int(counts.max())
    frac = np.minimum(np.arange(width + 1)[:, None], counts[None, :]) / counts[None, :]
    nodes = a[None, :] + (b - a)[None, :] * frac
    nodes[frac == 1.0] = np.broadcast_to(b, nodes.shape)[frac == 1.0]
    if spec.rule != "sampled":
        return nodes
    cols = []
    for i, (ai, bi) in enumerate(zip(a, b)):
        col = nodes[:counts[i] + 1, i]
        bp = spec.breakpoints(ai, bi)
        if bp.size:
            col = np.unique(np.concatenate([col, bp]))
            if bi < ai:
                col = col[::-1]
        cols.append(col)
    width = max(c.size for c in cols)
    out = np.empty((width, len(cols)))
    for i, c in enumerate(cols):
        out[:c.size, i] = c
        out[c.size:, i] = c[-1]
    return out


def _stage_values(spec: PotentialSpec, nodes: np.ndarray, shared: bool = False):
    """Step widths ``(N, B)`` and potential stage values ``(N, n, n, B)``.

    One-sided limits point into each step so jumps at nodes are honoured.
    """
    x0 = nodes[:-1]
    x1 = nodes[1:]
    h = np.ascontiguousarray(x1 - x0)
    fwd = np.where(h >= 0, 1.0, -1.0)
    if shared:
        x0, x1, fwd = x0[:, :1], x1[:, :1], fwd[:, :1]
    vals = []
    for x, d in ((x0, fwd), (0.5 * (x0 + x1), fwd), (x1, -fwd)):
        vals.append(np.ascontiguousarray(np.moveaxis(spec.values(x, d), 1, -1)))
    return (h, *vals)


def _rk4_extended(lam, h, v0, vm, v1) -> np.ndarray:
    """RK4 in long double; same layout and result shape as ``_rk4.rk4_batch``.

    Potential samples and step widths stay float64: any symmetric ``V`` keeps
    the system Hamiltonian, so only the roundoff of the stepping matters.
    """
    ld = np.longdouble
    nb = lam.size
    n = v0.shape[1]
    lam = lam.astype(ld)[:, None, None]
    h = h.astype(ld)
    # (N, B|1, n, n)
    v0, vm, v1 = (np.moveaxis(v, -1, 1).astype(ld) for v in (v0, vm, v1))
    y = np.broadcast_to(np.eye(2 * n, dtype=ld), (nb, 2 * n, 2 * n)).copy()

    def f(v, z):
        out = np.empty_like(z)
        out[:, :n] = z[:, n:]
        out[:, n:] = lam * z[:, :n] - v @ z[:, :n]
        return out

    for j in range(h.shape[0]):
        hj = h[j][:, None, None]
        k1 = f(v0[j], y)
        k2 = f(vm[j], y + 0.5 * hj * k1)
        k3 = f(vm[j], y + 0.5 * hj * k2)
        k4 = f(v1[j], y + hj * k3)
        y = y + hj / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
    return y


def transfer_matrices(spec: PotentialSpec, lam, a, b, steps: int = DEFAULT_STEPS,
                      precision: str = "double") -> np.ndarray:
    """Batched fundamental matrices ``Y(b)`` with ``Y(a) = I`` (no verification).

    ``lam``, ``a`` and ``b`` broadcast to a common 1-D shape ``(B,)``; the
    result has shape ``(B, 2n, 2n)``. Each element uses
    ``ceil(|b - a| * steps / 2L)`` (even) RK4 steps plus any potential
    breakpoints inside the interval. ``precision="extended"`` runs the
    stepping in long double (slower, pure numpy) and returns long double.
    """
    if precision not in ("double", "extended"):
        raise ValueError("precision must be 'double' or 'extended'")
    kernel = _rk4.rk4_batch if precision == "double" else _rk4_extended
    lam, a, b = (np.atleast_1d(np.asarray(v, dtype=float)) for v in (lam, a, b))
    lam, a, b = (np.ascontiguousarray(v).ravel() for v in np.broadcast_arrays(lam, a, b))
    nb = lam.size
    n = spec.n
    out = np.empty((nb, 2 * n, 2 * n), dtype=float if precision == "double" else np.longdouble)
    if nb == 0:
        return out
    if np.all(a == a[0]) and np.all(b == b[0]):
        nodes = _nodes(spec, a[:1], b[:1], steps)
        h, v0, vm, v1 = _stage_values(spec, nodes, shared=True)
        h = np.ascontiguousarray(np.broadcast_to(h, (h.shape[0], nb)))
        return kernel(lam, h, v0, vm, v1)
    nodes = _nodes(spec, a, b, steps)
    per_elem = nodes.shape[0] * (3 * n * n + 4) * 8
    chunk = max(1, _CHUNK_BYTES // per_elem)
    for start in range(0, nb, chunk):
        sl = slice(start, start + chunk)
        h, v0, vm, v1 = _stage_values(spec, np.ascontiguousarray(nodes[:, sl]))
        out[sl] = kernel(lam[sl], h, v0, vm, v1)
    return out


def solution_path(spec: PotentialSpec, lam: float, a: float, b: float,
                  steps: int = DEFAULT_STEPS) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and fundamental matrices ``Y(x)``, ``Y(a) = I``, at every node."""
    nodes = _nodes(spec, np.array([float(a)]), np.array([float(b)]), steps)[:, 0]
    keep = np.concatenate([[True], np.diff(nodes) != 0])
    nodes = nodes[keep]
    h, v0, vm, v1 = _stage_values(spec, nodes[:, None])
    return nodes, _rk4.rk4_path(np.array([float(lam)]), h, v0, vm, v1)


def fundamental_matrix(spec: PotentialSpec, lam: float, a: float, b: float,
                       steps: int = DEFAULT_STEPS, verify: bool = True,
                       precision: str = "double") -> np.ndarray:
    """``Y(b)`` for ``Y' = A(x, lam) Y``, ``Y(a) = I``.

    With ``verify`` the integration is repeated at half the step width and a
    relative disagreement above ``1e-6`` raises :class:`ResolutionError`.
    """
    for v in (a, b):
        if abs(v) > spec.L * (1 + 1e-12):
            raise ValueError("integration endpoints must lie in [-L, L]")
    y = transfer_matrices(spec, lam, a, b, steps, precision)[0]
    if verify:
        fine = transfer_matrices(spec, lam, a, b, 2 * steps, precision)[0]
        err = float(np.linalg.norm(fine - y)) / max(1.0, float(np.linalg.norm(y)))
        if err > RICHARDSON_TOL:
            raise ResolutionError(
                f"step halving changed the transfer matrix by {err:.2e} (relative); "
                f"increase steps above {steps}")
    return y


def propagator(spec: PotentialSpec, lam: float, s: float,
               steps: int = DEFAULT_STEPS, verify: bool = True,
               precision: str = "double") -> Propagator:
    """Transfer matrix from ``x = -s`` to ``x = s``."""
    if not 0.0 < s <= spec.L * (1 + 1e-12):
        raise ValueError("s must lie in (0, L]")
    m = fundamental_matrix(spec, lam, -s, s, steps, verify, precision)
    return Propagator(s=float(s), lam=float(lam), m=m)


def realify(m) -> np.ndarray:
    """Real form of a real-coefficient complex matrix in interleaved (Re, Im) order."""
    return kron(m, np.eye(2, dtype=np.asarray(m).dtype))


def planar_rotation(angle: float) -> np.ndarray:
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[c, -s], [s, c]])


def boundary_rotation(theta: float, n: int) -> np.ndarray:
    return kron(np.eye(2 * n), planar_rotation(theta))


def rotation_flow(s: float, theta: float, x: float, n: int, L: float) -> RotationFlow:
    """Fundamental matrix of the rotation system, equal to ``I`` at ``x = -L``."""
    if s <= 0:
        raise ValueError("s must be positive")
    angle = theta * (x + L) / (2.0 * s)
    return RotationFlow(s=float(s), theta=float(theta), x=float(x),
                        matrix=kron(np.eye(2 * n), planar_rotation(angle)))
