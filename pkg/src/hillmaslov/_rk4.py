"""Compiled RK4 kernels for y' = [[0, I], [lam I - V(x), 0]] y.

Potential values at the stage points are evaluated in Python and passed in,
so the kernels know nothing about potential rules. The batch axis is last so
the innermost loops run over independent elements and vectorise; a zero step
width is an exact no-op, which lets elements with fewer steps be padded.

Shapes: h (N, B) step widths; v0, vm, v1 (N, n, n, B or 1) potential at the
left end, midpoint and right end of each step.
"""

import numpy as np
from numba import njit


@njit(cache=True)
def _deriv(lam, v, j, y, out):
    m = y.shape[0]
    n = m // 2
    nb = y.shape[2]
    shared = v.shape[3] == 1
    for r in range(n):
        for c in range(m):
            for b in range(nb):
                out[r, c, b] = y[n + r, c, b]
                out[n + r, c, b] = lam[b] * y[r, c, b]
            for k in range(n):
                if shared:
                    vk = v[j, r, k, 0]
                    for b in range(nb):
                        out[n + r, c, b] -= vk * y[k, c, b]
                else:
                    for b in range(nb):
                        out[n + r, c, b] -= v[j, r, k, b] * y[k, c, b]


@njit(cache=True)
def _axpy(y, h, f, k, out):
    m = y.shape[0]
    nb = y.shape[2]
    for r in range(m):
        for c in range(m):
            for b in range(nb):
                out[r, c, b] = y[r, c, b] + f * h[b] * k[r, c, b]


@njit(cache=True)
def _step(lam, hj, v0, vm, v1, j, y, k1, k2, k3, k4, tmp):
    m = y.shape[0]
    nb = y.shape[2]
    _deriv(lam, v0, j, y, k1)
    _axpy(y, hj, 0.5, k1, tmp)
    _deriv(lam, vm, j, tmp, k2)
    _axpy(y, hj, 0.5, k2, tmp)
    _deriv(lam, vm, j, tmp, k3)
    _axpy(y, hj, 1.0, k3, tmp)
    _deriv(lam, v1, j, tmp, k4)
    for r in range(m):
        for c in range(m):
            for b in range(nb):
                y[r, c, b] += hj[b] / 6.0 * (k1[r, c, b] + 2.0 * k2[r, c, b]
                                             + 2.0 * k3[r, c, b] + k4[r, c, b])


@njit(cache=True)
def _start(m, nb):
    y = np.zeros((m, m, nb))
    for i in range(m):
        y[i, i, :] = 1.0
    return y


@njit(cache=True)
def rk4_batch(lam, h, v0, vm, v1):
    """Transfer matrices, shape (B, 2n, 2n), each starting from the identity."""
    ns, nb = h.shape
    m = 2 * v0.shape[1]
    y = _start(m, nb)
    k1 = np.empty_like(y)
    k2 = np.empty_like(y)
    k3 = np.empty_like(y)
    k4 = np.empty_like(y)
    tmp = np.empty_like(y)
    for j in range(ns):
        _step(lam, h[j], v0, vm, v1, j, y, k1, k2, k3, k4, tmp)
    out = np.empty((nb, m, m))
    for b in range(nb):
        for r in range(m):
            for c in range(m):
                out[b, r, c] = y[r, c, b]
    return out


@njit(cache=True)
def rk4_path(lam, h, v0, vm, v1):
    """Fundamental matrix at every node of a single integration, (N+1, 2n, 2n)."""
    ns = h.shape[0]
    m = 2 * v0.shape[1]
    y = _start(m, 1)
    k1 = np.empty_like(y)
    k2 = np.empty_like(y)
    k3 = np.empty_like(y)
    k4 = np.empty_like(y)
    tmp = np.empty_like(y)
    path = np.empty((ns + 1, m, m))
    path[0] = y[:, :, 0]
    for j in range(ns):
        _step(lam, h[j], v0, vm, v1, j, y, k1, k2, k3, k4, tmp)
        path[j + 1] = y[:, :, 0]
    return path
