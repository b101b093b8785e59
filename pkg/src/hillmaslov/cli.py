"""Command-line entry point.

Subcommands::

    scan-lambda   crossing indicator over lambda at fixed s (default s = L)
    scan-s        crossing indicator over s at fixed lambda (default 0)
    sweep-theta   eigenvalue, conjugate-point and crossing-form tables over theta
    verify        full Maslov report with all identity checks

Exit status: 0 pass, 1 identity failure or flag, 2 configuration error,
3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import math
import os
import sys

import numpy as np

from . import crossings as cr
from . import maslov
from .config import RunConfig, load_config, preset
from .errors import ConfigError, NumericalError

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        if not math.isfinite(v):
            return ""
        return f"{float(v):.12g}"
    return str(v)


def write_csv(rows: list[dict], columns: list[str], dest) -> None:
    """Write ``rows`` with a header; ``dest`` is a path or a text stream."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([_cell(row.get(c)) for c in columns])
    if isinstance(dest, str):
        with open(dest, "w", encoding="utf-8", newline="") as fh:
            fh.write(buf.getvalue())
    else:
        dest.write(buf.getvalue())


def _analytic_indicator(ms: np.ndarray, theta: float) -> np.ndarray:
    eye = np.eye(ms.shape[-1])
    return np.linalg.svd(ms - np.exp(1j * theta) * eye, compute_uv=False)[:, -1]


SCAN_COLUMNS = ["indicator", "gap", "is_crossing", "multiplicity", "form_min", "form_max",
                "status"]


def _scan_rows(problem, axis: str, fixed: float, lo: float, hi: float, settings) -> list[dict]:
    xs, ms, gap = cr.scan_profile(problem, axis, fixed, lo, hi, settings)
    ind = _analytic_indicator(ms, problem.theta)
    key = "lambda" if axis == cr.LAMBDA else "s"
    rows = [{key: x, "indicator": i, "gap": g, "is_crossing": False, "multiplicity": 0,
             "status": "grid"} for x, i, g in zip(xs, ind, gap)]
    finder = cr.find_crossings_lambda if axis == cr.LAMBDA else cr.find_crossings_s
    for rec in finder(problem, fixed, lo, hi, settings):
        w = np.linalg.eigvalsh(rec.gram)
        status = "crossing" + (f" ({rec.endpoint} endpoint)" if rec.endpoint else "")
        if rec.flags:
            status += " [" + "; ".join(rec.flags) + "]"
        rows.append({key: rec.location, "indicator": cr.crossing_indicator(problem, rec.lam, rec.s),
                     "gap": rec.indicator, "is_crossing": True,
                     "multiplicity": rec.multiplicity, "form_min": w[0], "form_max": w[-1],
                     "status": status})
    rows.sort(key=lambda r: (r[key], r["is_crossing"]))
    return rows


def _out_stream(path: str | None):
    return path if path else sys.stdout


def cmd_scan_lambda(cfg: RunConfig) -> int:
    problem = cfg.problem()
    s = problem.L if cfg.scan_s is None else cfg.scan_s
    rows = _scan_rows(problem, cr.LAMBDA, s, 0.0, problem.lam_inf, cfg.settings())
    write_csv(rows, ["lambda", *SCAN_COLUMNS], _out_stream(cfg.out))
    return EXIT_OK


def _s_range(problem, settings) -> float:
    s0 = problem.default_s0()
    if s0 is None:
        s0, _ = maslov.periodic_s0(problem, settings)
    return s0


def cmd_scan_s(cfg: RunConfig) -> int:
    problem = cfg.problem()
    settings = cfg.settings()
    s0 = _s_range(problem, settings)
    rows = _scan_rows(problem, cr.S, cfg.scan_lambda, s0, problem.L, settings)
    write_csv(rows, ["s", *SCAN_COLUMNS], _out_stream(cfg.out))
    return EXIT_OK


def cmd_sweep_theta(cfg: RunConfig) -> int:
    problem = cfg.problem()
    thetas = np.linspace(0.0, 2.0 * math.pi, cfg.theta_points)
    table = maslov.sweep_theta(problem, thetas, cfg.settings())
    out = cfg.out or "sweep"
    os.makedirs(out, exist_ok=True)
    write_csv(table.eigenvalues, ["theta", "lambda", "multiplicity", "status"],
              os.path.join(out, "eigenvalues.csv"))
    write_csv(table.conjugate_points, ["theta", "s", "multiplicity", "status"],
              os.path.join(out, "conjugate_points.csv"))
    write_csv(table.conjugate_points, ["theta", "s", "form_min", "form_max", "status"],
              os.path.join(out, "crossing_forms.csv"))
    write_csv(table.summary, ["theta", "theta_used", "s0", "B1", "B3", "B4", "A1", "A2", "A3",
                              "A4", "mor_H_theta", "mor_V0", "sum_A", "status"],
              os.path.join(out, "summary.csv"))
    print(f"wrote {len(table.summary)} theta rows to {out}")
    bad = [r for r in table.summary if r["status"] != "ok"]
    return EXIT_FAIL if bad else EXIT_OK


def cmd_verify(cfg: RunConfig) -> int:
    problem = cfg.problem()
    report = maslov.full_report(problem, cfg.settings())
    if cfg.rule == "constant":
        maslov.check_constant_oracle(report, problem)
    print(report.summary())
    rows = [{"check": k, "passed": v, "residual": report.residuals.get(k)}
            for k, v in report.checks.items()]
    rows += [{"check": f"flag: {f}", "passed": False} for f in report.flags]
    if cfg.out:
        write_csv(rows, ["check", "passed", "residual"], cfg.out)
    if any(f.startswith("numerical failure") for f in report.flags):
        return EXIT_NUMERIC
    return EXIT_OK if report.passed else EXIT_FAIL


COMMANDS = {
    "scan-lambda": cmd_scan_lambda,
    "scan-s": cmd_scan_s,
    "sweep-theta": cmd_sweep_theta,
    "verify": cmd_verify,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="hillmaslov",
                                description="Morse and Maslov counts for matrix Hill equations")
    p.add_argument("command", choices=sorted(COMMANDS))
    src = p.add_mutually_exclusive_group()
    src.add_argument("--config", help="INI run configuration")
    src.add_argument("--preset", help="mathieu, free or constant:<nu1,nu2,...>")
    p.add_argument("--theta", type=float)
    p.add_argument("--lambda-max", type=float, dest="lambda_max")
    p.add_argument("--s0", type=float)
    p.add_argument("--grid", type=int)
    p.add_argument("--steps", type=int)
    p.add_argument("--lambda", type=float, dest="scan_lambda",
                   help="fixed lambda for scan-s (default 0)")
    p.add_argument("--s", type=float, dest="scan_s", help="fixed s for scan-lambda (default L)")
    p.add_argument("--theta-points", type=int, dest="theta_points")
    p.add_argument("--out", help="CSV file (scans, verify) or directory (sweep-theta)")
    return p


def resolve_config(args) -> RunConfig:
    cfg = load_config(args.config) if args.config else preset(args.preset or "mathieu")
    for attr in ("theta", "lambda_max", "s0", "grid", "steps", "scan_lambda", "scan_s",
                 "theta_points", "out"):
        val = getattr(args, attr)
        if val is not None:
            setattr(cfg, attr, val)
    return cfg.validate()


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    try:
        cfg = resolve_config(args)
        return COMMANDS[args.command](cfg)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
