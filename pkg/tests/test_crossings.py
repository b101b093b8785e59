from __future__ import annotations

import math

import numpy as np
import pytest
from scipy.integrate import trapezoid

from hillmaslov import crossings as cr
from hillmaslov import hill


def constant(nus, theta, **kw):
    return hill.HillProblem(hill.PotentialSpec.constant(np.diag(nus)), theta, **kw)


def analytic_eigs(nus, theta, s, hi):
    vals = [nu - ((theta + 2 * math.pi * k) / (2 * s)) ** 2 for nu in nus for k in range(-30, 31)]
    return sorted(v for v in vals if 0.0 <= v <= hi)


def test_scalar_constant_lambda_crossings():
    p = constant([4.0], 1.0)
    recs = cr.find_crossings_lambda(p, math.pi)
    # 4 - (1/2pi)^2 and 4 - ((1 - 2pi)/2pi)^2
    want = analytic_eigs([4.0], 1.0, math.pi, p.lam_inf)
    assert [r.multiplicity for r in recs] == [1] * len(want)
    np.testing.assert_allclose([r.location for r in recs], want, atol=1e-8)
    for r in recs:
        assert r.form_kind == cr.LAMBDA_FORM
        # the real form doubles the complex dimension
        assert r.signature == (0, 2, 0)
        assert r.indicator < 1e-8


def test_repeated_eigenvalue_has_multiplicity_two():
    p = constant([4.0, 4.0], 1.0)
    recs = cr.find_crossings_lambda(p, math.pi)
    assert [r.multiplicity for r in recs] == [2] * len(recs) and recs
    for r in recs:
        assert r.kernel.shape == (8, 4)
        assert r.signature == (0, 4, 0)


def test_hyperbolic_block_does_not_create_false_kernels():
    # diag(9, -1): the -1 block grows like e^{2 pi sqrt(1 + lam)} but never crosses
    p = constant([9.0, -1.0], math.pi / 2)
    recs = cr.find_crossings_lambda(p, math.pi)
    want = analytic_eigs([9.0], math.pi / 2, math.pi, p.lam_inf)
    np.testing.assert_allclose([r.location for r in recs], want, atol=1e-8)
    assert all(r.multiplicity == 1 for r in recs)


def test_conjugate_points_and_form_sign():
    p = constant([4.0], 1.0)
    recs = cr.find_crossings_s(p, 0.0)
    want = sorted(abs(1.0 + 2 * math.pi * k) / 4.0 for k in range(-5, 5))
    want = [w for w in want if p.default_s0() <= w <= math.pi]
    np.testing.assert_allclose([r.location for r in recs], want, atol=1e-8)
    assert all(r.signature == (2, 0, 0) for r in recs)


def test_endpoint_crossing_flagged():
    # 0.25 - (pi / 2 pi)^2 = 0: lambda = 0 is a theta-eigenvalue at theta = pi
    p = constant([0.25], math.pi)
    recs = cr.find_crossings_lambda(p, math.pi)
    assert recs and recs[0].endpoint == "lower"
    assert abs(recs[0].location) < 1e-6


def test_no_crossing_point_has_zero_multiplicity():
    p = constant([4.0], 1.0)
    k, kern = cr.multiplicity_at(p, 3.5, math.pi)
    assert k == 0 and kern.shape == (4, 0)
    assert cr.crossing_indicator(p, 3.5, math.pi) > 1e-2


def test_indicator_vanishes_at_crossing():
    p = constant([4.0], 1.0)
    lam = 4.0 - (1.0 / (2 * math.pi)) ** 2
    assert cr.crossing_indicator(p, lam, math.pi) < 1e-7
    assert cr.crossing_gap(p, lam, math.pi) < 1e-7
    k, kern = cr.multiplicity_at(p, lam, math.pi)
    assert k == 1
    # kernel data satisfies realify(M) p = R p
    m = hill.propagator(p.potential, lam, math.pi).m
    r = hill.boundary_rotation(1.0, 1)
    assert np.linalg.norm(hill.realify(m) @ kern - r @ kern) < 1e-7


def test_lambda_form_is_minus_l2_norm_for_constant_potential():
    # for constant V the kernel solutions are p(x) = exp(i k x) type with |p|^2 constant
    p = constant([4.0], 1.0)
    rec = cr.find_crossings_lambda(p, math.pi)[0]
    xs, traj = cr.kernel_trajectories(p, rec)
    pos = traj[:, :2, :]
    l2 = trapezoid(np.einsum("xik,xil->xkl", pos, pos), xs, axis=0)
    np.testing.assert_allclose(rec.gram, -l2, rtol=1e-6, atol=1e-12)


@pytest.mark.parametrize("nus,theta", [([4.0, 1.0], 0.7), ([9.0, -1.0], 2.0)])
def test_forms_match_finite_differences(nus, theta):
    p = constant(nus, theta)
    recs = cr.find_crossings_lambda(p, math.pi) + cr.find_crossings_s(p, 0.0)
    assert recs
    for r in recs:
        fd = cr.finite_difference_form(p, r)
        assert np.linalg.norm(fd - r.gram) <= 1e-4 * np.linalg.norm(r.gram)


def test_scan_profile_shapes_and_settings():
    p = constant([4.0], 1.0)
    s = cr.ScanSettings(grid=50)
    xs, ms, gap = cr.scan_profile(p, cr.LAMBDA, math.pi, 0.0, 5.0, s)
    assert xs.shape == (50,) and ms.shape == (50, 2, 2) and gap.shape == (50,)
    assert np.all((gap >= 0) & (gap <= 1))
    with pytest.raises(ValueError):
        cr.ScanSettings(grid=1)
    with pytest.raises(ValueError):
        cr.ScanSettings(threshold=0.0)
    with pytest.raises(ValueError):
        cr.find_crossings_lambda(p, 0.0)
    with pytest.raises(ValueError):
        cr.find_crossings_s(constant([4.0], 0.0), 0.0)


def test_discontinuous_potential_flag():
    L = math.pi
    spec = hill.PotentialSpec.sampled([-L, -1.0, -1.0, 1.0, 1.0], [0.0, 0.0, 4.0, 4.0, 0.0], L)
    p = hill.HillProblem(spec, 1.0)
    recs = cr.find_crossings_s(p, 0.0, 0.05, 1.0)
    flagged = [r for r in recs if "discontinuous_potential" in r.flags]
    assert all(abs(r.location - 1.0) < 1e-6 for r in flagged)
    assert not cr._continuous(p, 1.0)
    assert cr._continuous(p, 0.5)


def test_close_pair_resolved_on_coarse_grid():
    # theta = 0.001 splits each periodic double eigenvalue into two roots ~3e-4 apart
    p = constant([4.0, 1.0], 0.001)
    recs = cr.find_crossings_lambda(p, math.pi, settings=cr.ScanSettings(grid=60))
    want = analytic_eigs([4.0, 1.0], 0.001, math.pi, p.lam_inf)
    assert len(want) == 6
    np.testing.assert_allclose([r.location for r in recs], want, atol=1e-8)


def test_mathieu_double_crossing_on_coarse_grid():
    p = hill.HillProblem(hill.PotentialSpec.mathieu(), math.pi)
    recs = cr.find_crossings_lambda(p, math.pi, settings=cr.ScanSettings(grid=400))
    assert [r.multiplicity for r in recs] == [2]
