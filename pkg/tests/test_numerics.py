from __future__ import annotations

import itertools
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from hillmaslov import numerics as nm

finite = st.floats(-10, 10, allow_nan=False, allow_infinity=False)


def square(max_n=4):
    return st.integers(1, max_n).flatmap(lambda n: arrays(float, (n, n), elements=finite))


def cofactor_det(a):
    # Laplace expansion along the first row; independent of any elimination
    n = len(a)
    if n == 1:
        return a[0][0]
    return sum((-1) ** j * a[0][j] * cofactor_det([row[:j] + row[j + 1:] for row in a[1:]])
               for j in range(n))


def leibniz_det(a):
    n = len(a)
    total = 0.0
    for perm in itertools.permutations(range(n)):
        inv = sum(1 for i in range(n) for j in range(i + 1, n) if perm[i] > perm[j])
        prod = 1.0
        for i, p in enumerate(perm):
            prod *= a[i][p]
        total += (-1) ** inv * prod
    return total


def sturm_eigs(a, lo=-100.3, hi=99.71, tol=1e-11):
    """Eigenvalues of a symmetric matrix by bisection on the inertia count.

    The count of eigenvalues below x is the number of negative pivots of the
    LDL^T factorisation of A - x I (Sylvester), done in exact rationals.
    """
    a = [[Fraction(float(v)) for v in row] for row in np.asarray(a, float)]
    n = len(a)

    def below(x):
        x = Fraction(x)
        m = [[a[i][j] - (x if i == j else 0) for j in range(n)] for i in range(n)]
        cnt = 0
        for k in range(n):
            piv = m[k][k]
            if piv == 0:
                return below(x + Fraction(1, 2**60))
            cnt += piv < 0
            for i in range(k + 1, n):
                f = m[i][k] / piv
                for j in range(k + 1, n):
                    m[i][j] -= f * m[k][j]
        return cnt

    out = []
    for i in range(n):
        a_, b_ = lo, hi
        while b_ - a_ > tol:
            mid = 0.5 * (a_ + b_)
            if below(mid) > i:
                b_ = mid
            else:
                a_ = mid
        out.append(0.5 * (a_ + b_))
    return np.array(out)


def test_determinant_fixed_values():
    assert nm.determinant([[2.0]]) == 2.0
    assert nm.determinant([[1, 2], [3, 4]]) == pytest.approx(-2.0)
    assert nm.determinant([[0, 1], [1, 0]]) == pytest.approx(-1.0)
    assert nm.determinant([[1, 2], [2, 4]]) == 0.0
    assert nm.determinant([[2, 0, 0], [0, 3, 0], [0, 0, 4]]) == pytest.approx(24.0)


@settings(max_examples=60, deadline=None)
@given(square())
def test_determinant_matches_cofactor_expansion(a):
    ref = cofactor_det(a.tolist())
    assert nm.determinant(a) == pytest.approx(ref, rel=1e-9, abs=1e-8 * max(1.0, np.abs(a).max()) ** len(a))


@settings(max_examples=30, deadline=None)
@given(square(3))
def test_cofactor_and_leibniz_agree(a):
    # sanity of the oracle itself
    assert cofactor_det(a.tolist()) == pytest.approx(leibniz_det(a.tolist()), rel=1e-9, abs=1e-6)


def test_determinant_keeps_long_double():
    m = np.array([[1.0, 1e-17], [0.0, 1.0]], dtype=np.longdouble)
    assert nm.as_matrix(m).dtype == np.longdouble
    assert nm.determinant(m) == 1.0


@settings(max_examples=50, deadline=None)
@given(square())
def test_symmetric_eigenvalues_match_bisection(a):
    sym = a + a.T
    got = nm.eig_symmetric(sym).real
    assert np.all(np.diff(got) >= 0)
    np.testing.assert_allclose(got, sturm_eigs(sym), atol=1e-8)


def test_eig_symmetric_rejects_nonsymmetric():
    with pytest.raises(ValueError):
        nm.eig_symmetric([[1.0, 2.0], [0.0, 1.0]])


def test_eig_general_rotation_and_companion():
    th = 0.7
    rot = [[np.cos(th), -np.sin(th)], [np.sin(th), np.cos(th)]]
    w = nm.eig_general(rot).values
    np.testing.assert_allclose(w, [np.exp(-1j * th), np.exp(1j * th)], atol=1e-14)
    # companion matrix of (x-1)(x-2)(x-3) = x^3 - 6x^2 + 11x - 6
    comp = [[6, -11, 6], [1, 0, 0], [0, 1, 0]]
    np.testing.assert_allclose(nm.eig_general(comp).values.real, [1, 2, 3], atol=1e-10)


@settings(max_examples=50, deadline=None)
@given(square(), st.integers(0, 2**31 - 1))
def test_sylvester_law_of_inertia(a, seed):
    sym = a + a.T
    rng = np.random.default_rng(seed)
    s = rng.normal(size=sym.shape) + 3 * np.eye(len(sym))
    tol = 1e-6 * max(1.0, np.abs(sym).max())
    ref = nm.signature(sym, tol)
    w = np.linalg.eigvalsh(sym)
    if np.any(np.abs(w) < 1e3 * tol) and ref[2] == 0:
        return  # too close to singular for a clean comparison
    congr = s.T @ sym @ s
    scale = np.linalg.cond(s) ** 2
    got = nm.signature(congr, tol * scale)
    if ref[2] == 0:
        assert got == ref


def test_signature_examples():
    assert nm.signature(np.diag([3.0, -1.0, 0.0])) == (1, 1, 1)
    assert nm.signature(-np.eye(2)) == (0, 2, 0)


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 5), st.integers(0, 4), st.integers(0, 2**31 - 1))
def test_kernel_basis_of_constructed_rank(cols, deficiency, seed):
    rng = np.random.default_rng(seed)
    r = max(cols - deficiency, 0)
    a = rng.normal(size=(cols + 1, r)) @ rng.normal(size=(r, cols)) if r else np.zeros((cols + 1, cols))
    k = nm.kernel_basis(a)
    assert k.shape == (cols, cols - r)
    np.testing.assert_allclose(k.T @ k, np.eye(cols - r), atol=1e-10)
    assert np.linalg.norm(a @ k) <= 1e-8 * max(1.0, np.linalg.norm(a))
    assert nm.rank(a) == r


def test_kernel_basis_threshold_is_relative():
    assert nm.kernel_basis(np.diag([1e6, 1e-1]), 1e-8).shape == (2, 0)
    # 1e-3 is below 1e-8 * sigma_max = 1e-2
    assert nm.kernel_basis(np.diag([1e6, 1e-3]), 1e-8).shape == (2, 1)
    assert nm.kernel_basis(np.diag([1.0, 1e-10]), 1e-8).shape[1] == 1
    with pytest.raises(ValueError):
        nm.kernel_basis(np.eye(2), 0.0)


def test_kron_and_direct_sum():
    a = np.array([[1.0, 2.0], [3.0, 4.0]])
    b = np.eye(2)
    k = nm.kron(a, b)
    assert k.shape == (4, 4)
    np.testing.assert_array_equal(k[2:, :2], 3 * np.eye(2))
    d = nm.direct_sum(a, [[5.0]])
    np.testing.assert_array_equal(d, [[1, 2, 0], [3, 4, 0], [0, 0, 5]])


def test_as_matrix_rejects_bad_input():
    with pytest.raises(ValueError):
        nm.as_matrix([[np.nan]])
    with pytest.raises(ValueError):
        nm.as_matrix(np.zeros((2, 2, 2)))
    assert nm.as_matrix([1.0, 2.0]).shape == (2, 1)
    assert not nm.is_symmetric([[1.0, 2.0]])
