"""Maslov indices around the (s, lambda) square and the Morse-index identities.

The square ``[s0, L] x [0, lambda_inf]`` is traversed as four sides::

    G1: s = s0,          lambda 0 -> lambda_inf
    G2: lambda = lam_inf, s s0 -> L
    G3: s = L,           lambda lambda_inf -> 0
    G4: lambda = 0,      s L -> s0

Scans always run in increasing parameter order; a side traversed backwards
contributes with the opposite sign. All counts are in normalized (complex)
units: a crossing with real kernel dimension 2k contributes
``(n_plus - n_minus) / 2`` to A and ``k`` to B, halved at side endpoints.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import crossings as cr
from .errors import NearSingularError, NumericalError
from .numerics import eig_symmetric

CURVES = ("G1", "G2", "G3", "G4")
ORIENTATION = {"G1": 1, "G2": 1, "G3": -1, "G4": -1}
THETA_EPSILON = 1e-3
MAX_HALVINGS = 16
SINGULAR_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class CurveSummary:
    which: str
    orientation: int
    crossings: tuple
    A: float | None
    B: float
    flags: tuple[str, ...] = ()


@dataclass(eq=False)
class MaslovReport:
    theta: float
    theta_used: float
    s0: float
    lam_inf: float
    curves: dict
    mor_H_theta: int | None
    mor_V0: int | None
    residuals: dict = field(default_factory=dict)
    checks: dict = field(default_factory=dict)
    flags: list = field(default_factory=list)
    annotations: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return bool(self.checks) and all(self.checks.values()) and not self.flags

    def A(self, which: str):
        return self.curves[which].A

    def B(self, which: str):
        return self.curves[which].B

    def summary(self) -> str:
        lines = [f"theta = {self.theta!r} (used {self.theta_used!r}), s0 = {self.s0:.6g}, "
                 f"lambda_inf = {self.lam_inf:.6g}"]
        for name in CURVES:
            c = self.curves.get(name)
            if c is None:
                continue
            locs = ", ".join(f"{r.location:.6f}" for r in c.crossings) or "-"
            lines.append(f"  {name}: A = {c.A}, B = {c.B}, crossings at {locs}"
                         + (f" [{'; '.join(c.flags)}]" if c.flags else ""))
        lines.append(f"  Mor(H_theta) = {self.mor_H_theta}, Mor(V(0)) = {self.mor_V0}")
        for key, ok in self.checks.items():
            res = self.residuals.get(key)
            lines.append(f"  {'PASS' if ok else 'FAIL'}  {key}" + ("" if res is None else f"  residual {res}"))
        for note in self.annotations:
            lines.append(f"  note: {note}")
        for fl in self.flags:
            lines.append(f"  flag: {fl}")
        return "\n".join(lines)


def _contribution(rec, orientation: int) -> tuple[float | None, float]:
    weight = 0.5 if rec.endpoint else 1.0
    b = weight * rec.multiplicity
    if rec.signature is None or rec.signature[2]:
        return None, b
    n_plus, n_minus, _ = rec.signature
    return orientation * weight * (n_plus - n_minus) / 2.0, b


def curve_summary(problem, which: str, s0: float, settings: cr.ScanSettings | None = None,
                  lam_inf: float | None = None) -> CurveSummary:
    """Scan one side of the square and accumulate its signed and unsigned counts."""
    if which not in CURVES:
        raise ValueError(f"unknown curve {which!r}")
    lam_inf = problem.lam_inf if lam_inf is None else lam_inf
    L = problem.L
    if which == "G1":
        recs = cr.find_crossings_lambda(problem, s0, 0.0, lam_inf, settings)
    elif which == "G2":
        recs = cr.find_crossings_s(problem, lam_inf, s0, L, settings)
    elif which == "G3":
        recs = cr.find_crossings_lambda(problem, L, 0.0, lam_inf, settings)
    else:
        recs = cr.find_crossings_s(problem, 0.0, s0, L, settings)
    orient = ORIENTATION[which]
    a_total, b_total, flags = 0.0, 0.0, []
    for rec in recs:
        a, b = _contribution(rec, orient)
        b_total += b
        if a is None:
            flags.append(f"non-regular crossing at {rec.location:.9g}")
            a_total = None
        elif a_total is not None:
            a_total += a
        flags.extend(f"{fl} at {rec.location:.9g}" for fl in rec.flags if fl != "degenerate_form")
    return CurveSummary(which=which, orientation=orient, crossings=tuple(recs),
                        A=a_total, B=b_total, flags=tuple(flags))


def morse_index_matrix(v, tol: float = SINGULAR_TOL) -> int:
    """Number of positive eigenvalues of a symmetric matrix; it must be invertible."""
    w = eig_symmetric(v).real
    scale = max(1.0, float(np.abs(w).max()))
    if np.any(np.abs(w) < tol * scale):
        raise NearSingularError("matrix has an eigenvalue at zero")
    return int(np.sum(w > 0))


def morse_index_theta(problem, settings: cr.ScanSettings | None = None) -> int:
    """Number of positive theta-eigenvalues (with multiplicity), i.e. B3.

    Raises :class:`NearSingularError` when 0 is itself a theta-eigenvalue.
    """
    g3 = curve_summary(problem, "G3", problem.L, settings)
    if any(r.endpoint == "lower" for r in g3.crossings):
        raise NearSingularError("lambda = 0 is a theta-eigenvalue")
    return int(round(g3.B))


def _b1(problem, s: float, settings) -> int:
    recs = cr.find_crossings_lambda(problem, s, 0.0, problem.lam_inf, settings, forms=False)
    return sum(r.multiplicity for r in recs)


def periodic_s0(problem, settings: cr.ScanSettings | None = None) -> tuple[float, list[str]]:
    """``s0`` for theta in {0, 2 pi}: halve from ``L / 4`` until B1 is stable.

    Stability means the same count at three consecutive halvings.
    """
    s = problem.L / 4.0
    history = [_b1(problem, s, settings)]
    for _ in range(MAX_HALVINGS):
        s *= 0.5
        history.append(_b1(problem, s, settings))
        if len(history) >= 3 and history[-1] == history[-2] == history[-3]:
            return s, []
    return s, [f"B1 did not stabilise while shrinking s0 (last counts {history[-3:]})"]


def _corner(g3: CurveSummary, g4: CurveSummary) -> bool:
    return (any(r.endpoint == "lower" for r in g3.crossings)
            or any(r.endpoint == "upper" for r in g4.crossings))


def _assemble(problem, s0: float, settings) -> dict:
    return {name: curve_summary(problem, name, s0, settings) for name in CURVES}


def full_report(problem, settings: cr.ScanSettings | None = None,
                epsilon: float = THETA_EPSILON) -> MaslovReport:
    """All four sides, the Morse indices and the identity checks.

    A crossing at the corner ``(L, 0)`` means 0 is a theta-eigenvalue; theta is
    then moved by ``epsilon`` (towards the interior) and the report annotated.
    """
    theta0 = problem.theta
    flags: list[str] = []
    notes: list[str] = []
    curves = None
    for attempt in range(2):
        if problem.periodic and problem.s_min is None:
            s0, more = periodic_s0(problem, settings)
            flags.extend(more)
        else:
            s0 = problem.default_s0()
        try:
            curves = _assemble(problem, s0, settings)
        except NumericalError as exc:
            flags.append(f"numerical failure: {exc}")
            break
        if attempt == 0 and _corner(curves["G3"], curves["G4"]):
            step = epsilon if problem.theta + epsilon <= 2.0 * math.pi else -epsilon
            problem = problem.replace(theta=problem.theta + step)
            notes.append(f"0 is a theta-eigenvalue at theta = {theta0!r}; "
                         f"theta perturbed by {step:+g}")
            continue
        break
    report = MaslovReport(theta=theta0, theta_used=problem.theta, s0=s0, lam_inf=problem.lam_inf,
                          curves=curves or {}, mor_H_theta=None, mor_V0=None,
                          flags=flags, annotations=notes)
    if curves is None:
        return report
    try:
        report.mor_V0 = morse_index_matrix(problem.potential(0.0))
    except NearSingularError:
        if problem.periodic:
            report.flags.append("V(0) is singular")
    for c in curves.values():
        report.flags.extend(f"{c.which}: {fl}" for fl in c.flags)
    if _corner(curves["G3"], curves["G4"]):
        report.flags.append("0 is a theta-eigenvalue")
    else:
        report.mor_H_theta = int(round(curves["G3"].B))
    _checks(report, problem)
    return report


def _checks(report: MaslovReport, problem) -> None:
    c = report.curves
    res, chk = report.residuals, report.checks
    a = {k: c[k].A for k in CURVES}
    b = {k: c[k].B for k in CURVES}
    if any(v is None for v in a.values()):
        report.flags.append("Maslov index undefined on a side with a non-regular crossing")
        return
    res["sum A_i = 0"] = sum(a.values())
    res["A3 = B3"] = a["G3"] - b["G3"]
    res["A1 = -B1"] = a["G1"] + b["G1"]
    res["A2 = B2 = 0"] = abs(a["G2"]) + b["G2"]
    res["A4 = -B4"] = a["G4"] + b["G4"]
    chk["|A_i| <= B_i"] = all(abs(a[k]) <= b[k] for k in CURVES)
    mor = report.mor_H_theta
    if problem.periodic:
        if report.mor_V0 is not None:
            res["B1 = Mor(V(0))"] = b["G1"] - report.mor_V0
            if mor is not None:
                res["Mor(H_theta) = -A4 + Mor(V(0))"] = mor - (-a["G4"] + report.mor_V0)
    else:
        res["B1 = 0"] = b["G1"]
        res["A3 + A4 = 0"] = a["G3"] + a["G4"]
        if mor is not None:
            res["Mor(H_theta) = -A4"] = mor + a["G4"]
    for key, val in res.items():
        chk[key] = val == 0


def _merge_values(vals: list[float], tol: float = 1e-9) -> list[tuple[float, int]]:
    out: list[list] = []
    for v in sorted(vals):
        if out and v - out[-1][0] <= tol:
            out[-1][1] += 1
        else:
            out.append([v, 1])
    return [(v, k) for v, k in out]


def constant_theta_eigenvalues(nus, theta: float, s: float, lo: float,
                               hi: float) -> list[tuple[float, int]]:
    """``nu_j - ((theta + 2 pi k) / (2 s))^2`` inside ``[lo, hi]``, with multiplicities."""
    vals = []
    for nu in np.atleast_1d(nus):
        kmax = int(math.ceil(2.0 * s * math.sqrt(max(nu - lo, 0.0)) / (2.0 * math.pi))) + 1
        for k in range(-kmax - 1, kmax + 1):
            mu = nu - ((theta + 2.0 * math.pi * k) / (2.0 * s)) ** 2
            if lo <= mu <= hi:
                vals.append(float(mu))
    return _merge_values(vals)


def constant_conjugate_points(nus, theta: float, lam: float, lo: float,
                              hi: float) -> list[tuple[float, int]]:
    """``|theta + 2 pi k| / (2 sqrt(nu_j - lam))`` inside ``[lo, hi]``."""
    vals = []
    for nu in np.atleast_1d(nus):
        if nu <= lam:
            continue
        root = math.sqrt(nu - lam)
        kmax = int(math.ceil(2.0 * hi * root / (2.0 * math.pi))) + 1
        for k in range(-kmax - 1, kmax + 1):
            sk = abs(theta + 2.0 * math.pi * k) / (2.0 * root)
            if lo <= sk <= hi and sk > 0:
                vals.append(float(sk))
    return _merge_values(vals)


def _compare(found, expected, tol: float) -> float | None:
    got = [(r.location, r.multiplicity) for r in found]
    if len(got) != len(expected) or any(a[1] != b[1] for a, b in zip(got, expected)):
        return None
    return max((abs(a[0] - b[0]) for a, b in zip(got, expected)), default=0.0)


def check_constant_oracle(report: MaslovReport, problem, tol: float = 1e-6) -> None:
    """Add analytic-oracle checks for a constant potential to ``report``."""
    if problem.potential.rule != "constant" or not report.curves:
        return
    nus = np.linalg.eigvalsh(problem.potential.params["matrix"])
    theta = report.theta_used
    eig = constant_theta_eigenvalues(nus, theta, problem.L, 0.0, report.lam_inf)
    conj = constant_conjugate_points(nus, theta, 0.0, report.s0, problem.L)
    for key, found, expected in (("analytic theta-eigenvalues", report.curves["G3"].crossings, eig),
                                 ("analytic conjugate points", report.curves["G4"].crossings, conj)):
        err = _compare(found, expected, tol)
        report.residuals[key] = err
        report.checks[key] = err is not None and err <= tol


@dataclass(eq=False)
class SweepTable:
    eigenvalues: list = field(default_factory=list)
    conjugate_points: list = field(default_factory=list)
    summary: list = field(default_factory=list)


def sweep_theta(problem, thetas, settings: cr.ScanSettings | None = None) -> SweepTable:
    """Full reports over a theta grid, flattened into three tables of dict rows."""
    table = SweepTable()
    for th in thetas:
        th = float(th)
        if not 0.0 <= th <= 2.0 * math.pi + 1e-12:
            raise ValueError("theta grid must lie in [0, 2 pi]")
        try:
            rep = full_report(problem.replace(theta=min(th, 2.0 * math.pi)), settings)
        except NumericalError as exc:
            table.summary.append({"theta": th, "status": f"error: {exc}"})
            continue
        status = "ok" if rep.passed else "flagged"
        for rec in rep.curves.get("G3", CurveSummary("G3", -1, (), 0, 0)).crossings:
            table.eigenvalues.append({"theta": th, "lambda": rec.location,
                                      "multiplicity": rec.multiplicity, "status": status})
        for rec in rep.curves.get("G4", CurveSummary("G4", -1, (), 0, 0)).crossings:
            w = np.linalg.eigvalsh(rec.gram)
            table.conjugate_points.append({"theta": th, "s": rec.location,
                                           "multiplicity": rec.multiplicity,
                                           "form_min": float(w[0]), "form_max": float(w[-1]),
                                           "status": status})
        row = {"theta": th, "theta_used": rep.theta_used, "s0": rep.s0,
               "B1": _get(rep, "G1", "B"), "B3": _get(rep, "G3", "B"), "B4": _get(rep, "G4", "B"),
               "A1": _get(rep, "G1", "A"), "A2": _get(rep, "G2", "A"),
               "A3": _get(rep, "G3", "A"), "A4": _get(rep, "G4", "A"),
               "mor_H_theta": rep.mor_H_theta, "mor_V0": rep.mor_V0,
               "sum_A": rep.residuals.get("sum A_i = 0"), "status": status}
        table.summary.append(row)
    return table


def _get(rep: MaslovReport, which: str, attr: str):
    c = rep.curves.get(which)
    return None if c is None else getattr(c, attr)
