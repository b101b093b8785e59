from __future__ import annotations

import math

import numpy as np
import pytest

from hillmaslov import hill, maslov
from hillmaslov.errors import NearSingularError

MATHIEU = hill.PotentialSpec.mathieu()


@pytest.mark.parametrize("theta", [0.0, 0.05, 0.1, 2 * math.pi - 0.05, 2 * math.pi - 0.1])
def test_morse_index_stable_near_periodic_theta(theta):
    rep = maslov.full_report(hill.HillProblem(MATHIEU, theta))
    assert rep.passed, rep.summary()
    assert rep.mor_H_theta == 2


def test_report_structure_and_summary():
    rep = maslov.full_report(hill.HillProblem(MATHIEU, math.pi / 2))
    assert set(rep.curves) == set(maslov.CURVES)
    assert rep.A("G2") == 0 and rep.B("G2") == 0
    assert rep.A("G1") == 0 and rep.B("G1") == 0
    assert sum(rep.A(k) for k in maslov.CURVES) == 0
    text = rep.summary()
    assert "PASS" in text and "FAIL" not in text
    for k in maslov.CURVES:
        assert abs(rep.A(k)) <= rep.B(k)


@pytest.mark.parametrize("nus", [[4.0], [4.0, 1.0], [9.0, -1.0]])
def test_constant_oracle_checks(nus):
    p = hill.HillProblem(hill.PotentialSpec.constant(np.diag(nus)), 1.2)
    rep = maslov.full_report(p)
    maslov.check_constant_oracle(rep, p)
    assert rep.checks["analytic theta-eigenvalues"]
    assert rep.checks["analytic conjugate points"]
    assert rep.passed


def test_corner_crossing_perturbs_theta():
    # V = 4, L = pi, theta = 0: 4 - k^2 = 0 at k = 2, so lambda = 0 is an eigenvalue
    p = hill.HillProblem(hill.PotentialSpec.constant([[4.0]]), 0.0)
    rep = maslov.full_report(p)
    assert rep.theta_used != rep.theta
    assert rep.annotations and "perturbed" in rep.annotations[0]
    assert rep.passed, rep.summary()


def test_periodic_s0_stabilises():
    s0, flags = maslov.periodic_s0(hill.HillProblem(MATHIEU, 0.0))
    assert not flags and 0 < s0 < math.pi / 4
    assert maslov._b1(hill.HillProblem(MATHIEU, 0.0), s0, None) == 1


def test_morse_index_matrix():
    assert maslov.morse_index_matrix(np.diag([3.0, -2.0, 1.0])) == 2
    assert maslov.morse_index_matrix([[3.2]]) == 1
    with pytest.raises(NearSingularError):
        maslov.morse_index_matrix(np.diag([1.0, 0.0]))


def test_constant_analytic_sets():
    eig = maslov.constant_theta_eigenvalues([4.0], math.pi, math.pi, 0.0, 5.0)
    # 4 - (1/2)^2 twice (k = 0, -1) and 4 - (3/2)^2 twice
    assert eig == [(pytest.approx(1.75), 2), (pytest.approx(3.75), 2)]
    conj = maslov.constant_conjugate_points([4.0], 1.0, 0.0, 0.1, 1.0)
    assert [v for v, _ in conj] == [pytest.approx(0.25)]


def test_sweep_theta_table():
    table = maslov.sweep_theta(hill.HillProblem(MATHIEU, 1.0), [0.5, math.pi])
    assert len(table.summary) == 2
    assert all(r["status"] == "ok" for r in table.summary)
    assert [r["mor_H_theta"] for r in table.summary] == [2, 2]
    assert {r["theta"] for r in table.eigenvalues} == {0.5, math.pi}
    with pytest.raises(ValueError):
        maslov.sweep_theta(hill.HillProblem(MATHIEU, 1.0), [7.0])
