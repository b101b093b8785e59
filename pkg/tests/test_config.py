from __future__ import annotations

import math

import pytest

from hillmaslov import config
from hillmaslov.errors import ConfigError

SAMPLE = """\
[problem]
rule = constant
L = 3.141592653589793
matrix = 4 0; 0 1
theta = 1.5707963267948966

[integrator]
steps = 2048

[scan]
grid = 500
"""


def test_parse_sample():
    cfg = config.parse_config(SAMPLE)
    assert cfg.rule == "constant"
    assert cfg.params["matrix"] == [[4.0, 0.0], [0.0, 1.0]]
    assert cfg.theta == pytest.approx(math.pi / 2)
    assert cfg.steps == 2048 and cfg.grid == 500
    p = cfg.problem()
    assert p.n == 2 and p.steps == 2048


@pytest.mark.parametrize("cfg", [
    config.RunConfig(),
    config.preset("free"),
    config.preset("constant:4,1,-1"),
    config.RunConfig(rule="fourier", params={"c0": [[1.0]], "cos": [[[0.1]]], "sin": [[[0.3]]]},
                     theta=0.1 + 1e-13, lambda_max=7.25, s0=0.01, out="x.csv"),
    config.RunConfig(rule="sampled", params={"xs": [-1.0, 0.0, 0.0, 2.0],
                                             "values": [[[0.0]], [[1.0]], [[2.0]], [[0.5]]]}),
])
def test_serialize_round_trip(cfg):
    text = config.serialize_config(cfg)
    back = config.parse_config(text)
    assert config.config_dict(back) == config.config_dict(cfg)
    assert config.serialize_config(back) == text


@pytest.mark.parametrize("text,line", [
    ("[problem]\nrule = mathieu\ntheta = abc\n", 3),
    ("[problem]\nrule = banana\n", 2),
    ("[problem]\nrule = mathieu\n\n[scan]\ngrid = 10\nwhat = 1\n", 6),
    ("[problem]\nrule = mathieu\n[extra]\nk = 1\n", 3),
    ("[problem]\nrule = constant\n", 1),
    ("[problem]\nrule = mathieu\ntheta = 9\n", 1),
])
def test_errors_carry_line_numbers(text, line):
    with pytest.raises(ConfigError) as info:
        config.parse_config(text)
    assert info.value.line == line
    assert str(info.value).startswith(f"line {line}: ")


def test_presets():
    assert config.preset("mathieu").params["amplitude"] == 3.2
    assert config.preset("constant:4,1").params["matrix"] == [[4.0, 0.0], [0.0, 1.0]]
    for bad in ("nope", "constant:", "constant:a"):
        with pytest.raises(ConfigError):
            config.preset(bad)


def test_load_missing_file(tmp_path):
    with pytest.raises(ConfigError):
        config.load_config(str(tmp_path / "none.ini"))
    f = tmp_path / "run.ini"
    f.write_text(SAMPLE)
    assert config.load_config(str(f)).grid == 500
