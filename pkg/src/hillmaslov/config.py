"""Run configuration: INI files, presets and conversion to library objects.

Example::

    [problem]
    rule = constant
    L = 3.141592653589793
    matrix = 4 0; 0 1
    theta = 1.5707963267948966

    [integrator]
    steps = 4096

    [scan]
    grid = 2000

Matrices are written row-major with ``;`` between rows; lists of matrices
(Fourier harmonics, sampled values) separate matrices with ``|``. Floats are
written with ``repr`` so a serialise/parse round trip is exact.
"""

from __future__ import annotations

import configparser
import math
import re
from dataclasses import dataclass, field, fields

import numpy as np

from . import crossings as cr
from . import hill
from .errors import ConfigError

SECTIONS = ("problem", "integrator", "scan", "output")
RULES = ("constant", "mathieu", "fourier", "sampled")


@dataclass
class RunConfig:
    rule: str = "mathieu"
    params: dict = field(default_factory=lambda: {"amplitude": 3.2, "frequency": 2.0})
    L: float = math.pi
    theta: float = 0.1
    lambda_max: float | None = None
    s0: float | None = None
    steps: int = hill.DEFAULT_STEPS
    grid: int = 2000
    refine_tol: float = 1e-12
    threshold: float = 0.1
    kernel_tol: float = 1e-8
    scan_s: float | None = None
    scan_lambda: float = 0.0
    theta_points: int = 201
    out: str | None = None

    def potential(self) -> hill.PotentialSpec:
        return hill.PotentialSpec.from_dict({"rule": self.rule, "L": self.L, **self.params})

    def problem(self) -> hill.HillProblem:
        return hill.HillProblem(self.potential(), self.theta, self.lambda_max, self.s0, self.steps)

    def settings(self) -> cr.ScanSettings:
        return cr.ScanSettings(grid=self.grid, refine_tol=self.refine_tol,
                               threshold=self.threshold, kernel_tol=self.kernel_tol)

    def validate(self) -> RunConfig:
        """Build every derived object once so range errors surface as ConfigError."""
        try:
            self.settings()
            self.problem()
        except (ValueError, KeyError, TypeError) as exc:
            raise ConfigError(str(exc)) from exc
        if self.theta_points < 1:
            raise ConfigError("theta_points must be positive")
        return self


def preset(name: str) -> RunConfig:
    """``mathieu``, ``free`` or ``constant:<nu1,nu2,...>`` (diagonal)."""
    if name == "mathieu":
        return RunConfig()
    if name == "free":
        return RunConfig(rule="constant", params={"matrix": [[0.0]]})
    if name.startswith("constant:"):
        try:
            nus = [float(v) for v in name.split(":", 1)[1].split(",") if v.strip()]
        except ValueError as exc:
            raise ConfigError(f"bad constant preset {name!r}") from exc
        if not nus:
            raise ConfigError("constant preset needs at least one value")
        return RunConfig(rule="constant", params={"matrix": np.diag(nus).tolist()})
    raise ConfigError(f"unknown preset {name!r} (mathieu, free, constant:<list>)")


# text <-> values

def _fmt(x) -> str:
    return repr(float(x))


def format_matrix(m) -> str:
    return "; ".join(" ".join(_fmt(v) for v in row) for row in np.atleast_2d(m))


def parse_matrix(text: str) -> list:
    rows = [r for r in text.split(";") if r.strip()]
    mat = [[float(v) for v in re.split(r"[\s,]+", r.strip())] for r in rows]
    if not mat or any(len(r) != len(mat[0]) for r in mat):
        raise ValueError("ragged or empty matrix")
    return mat


def _parse_matrices(text: str) -> list:
    return [parse_matrix(part) for part in text.split("|") if part.strip()]


def _format_matrices(ms) -> str:
    return " | ".join(format_matrix(m) for m in ms)


_PARAM_KEYS = {
    "constant": {"matrix": "matrix"},
    "mathieu": {"amplitude": "float", "frequency": "float"},
    "fourier": {"c0": "matrix", "cos": "matrices", "sin": "matrices"},
    "sampled": {"xs": "vector", "values": "matrices"},
}
_SCALARS = {
    ("problem", "l"): ("L", float),
    ("problem", "theta"): ("theta", float),
    ("problem", "lambda_max"): ("lambda_max", float),
    ("problem", "s0"): ("s0", float),
    ("integrator", "steps"): ("steps", int),
    ("scan", "grid"): ("grid", int),
    ("scan", "refine_tol"): ("refine_tol", float),
    ("scan", "threshold"): ("threshold", float),
    ("scan", "kernel_tol"): ("kernel_tol", float),
    ("scan", "s"): ("scan_s", float),
    ("scan", "lambda"): ("scan_lambda", float),
    ("scan", "theta_points"): ("theta_points", int),
    ("output", "path"): ("out", str),
}


def _line_index(text: str) -> dict:
    where, section = {}, None
    for no, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        m = re.match(r"\[([^\]]+)\]", stripped)
        if m:
            section = m.group(1).strip()
            where[(section, None)] = no
            continue
        m = re.match(r"([^=:#;\s][^=:]*?)\s*[=:]", stripped)
        if m and section is not None:
            where[(section, m.group(1).strip().lower())] = no
    return where


def _parse_param(kind: str, raw: str):
    if kind == "float":
        return float(raw)
    if kind == "matrix":
        return parse_matrix(raw)
    if kind == "matrices":
        return _parse_matrices(raw)
    return [float(v) for v in re.split(r"[\s,]+", raw.strip()) if v]


def parse_config(text: str) -> RunConfig:
    """Parse INI text; errors carry the offending line number when known."""
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#",))
    parser.optionxform = str.lower
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(str(exc).splitlines()[0], getattr(exc, "lineno", None)) from exc
    lines = _line_index(text)
    for sec in parser.sections():
        if sec not in SECTIONS:
            raise ConfigError(f"unknown section [{sec}]", lines.get((sec, None)))
    cfg = RunConfig(params={})
    rule = parser.get("problem", "rule", fallback="mathieu").strip()
    if rule == "free":
        rule, cfg.params = "constant", {"matrix": [[0.0]]}
    if rule not in RULES:
        raise ConfigError(f"unknown rule {rule!r}", lines.get(("problem", "rule")))
    cfg.rule = rule
    param_kinds = _PARAM_KEYS[rule]
    for sec in parser.sections():
        for key, raw in parser.items(sec):
            line = lines.get((sec, key))
            if sec == "problem" and key in ("rule", "n"):
                continue
            try:
                if sec == "problem" and key in param_kinds:
                    cfg.params[key] = _parse_param(param_kinds[key], raw)
                elif (sec, key) in _SCALARS:
                    attr, conv = _SCALARS[(sec, key)]
                    setattr(cfg, attr, conv(raw.strip()) if raw.strip() else None)
                else:
                    raise ConfigError(f"unknown key {key!r} in [{sec}]", line)
            except ValueError as exc:
                raise ConfigError(f"bad value for {key!r}: {exc}", line) from exc
    if rule == "mathieu":
        cfg.params.setdefault("amplitude", 3.2)
        cfg.params.setdefault("frequency", 2.0)
    missing = [k for k in param_kinds if k not in cfg.params and k not in ("cos", "sin")]
    if missing:
        raise ConfigError(f"rule {rule!r} needs {', '.join(missing)}",
                          lines.get(("problem", None)))
    try:
        cfg.validate()
    except ConfigError as exc:
        raise ConfigError(str(exc), lines.get(("problem", None))) from exc
    return cfg


def load_config(path: str) -> RunConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    return parse_config(text)


def serialize_config(cfg: RunConfig) -> str:
    out = ["[problem]", f"rule = {cfg.rule}", f"L = {_fmt(cfg.L)}", f"theta = {_fmt(cfg.theta)}"]
    for key, kind in _PARAM_KEYS[cfg.rule].items():
        if key not in cfg.params:
            continue
        val = cfg.params[key]
        if kind == "float":
            out.append(f"{key} = {_fmt(val)}")
        elif kind == "matrix":
            out.append(f"{key} = {format_matrix(val)}")
        elif kind == "matrices":
            out.append(f"{key} = {_format_matrices(val)}")
        else:
            out.append(f"{key} = {' '.join(_fmt(v) for v in val)}")
    by_section: dict = {}
    for (sec, key), (attr, _) in _SCALARS.items():
        if sec == "problem" and key in ("l", "theta"):
            continue
        val = getattr(cfg, attr)
        if val is None:
            continue
        text = _fmt(val) if isinstance(val, float) else str(val)
        by_section.setdefault(sec, []).append(f"{key} = {text}")
    out.extend(by_section.pop("problem", []))
    for sec in ("integrator", "scan", "output"):
        if sec in by_section:
            out.extend(["", f"[{sec}]", *by_section[sec]])
    return "\n".join(out) + "\n"


def config_dict(cfg: RunConfig) -> dict:
    return {f.name: getattr(cfg, f.name) for f in fields(cfg)}
