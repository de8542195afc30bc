import math

import pytest

from ruinkit.config import ConfigError, load_config, parse_config

BASE = """
[ruinkit]
version = 1

[model]
c = 1.5
sigma = 1.0
claims = exponential
lam = 1
mu = 1
"""


def test_minimal_config():
    cfg = parse_config(BASE)
    assert cfg.model.c == 1.5 and cfg.model.measure.kind == "compound_poisson_exponential"
    assert cfg.q == (1.0,) and cfg.out_format == "csv"


def test_full_config(tmp_path):
    text = BASE + """
[grid]
cells = 4096

[query]
q = 0.5, 1   ; two rates
x = 0, 2
penalty = capped_deficit:2+capped_increment:2
target = kappa
paths = 500
seed = 18446744073709551615
t_max = 50
bridge_correction = no

[output]
format = json
path = out/res.json
"""
    p = tmp_path / "exp.ini"
    p.write_text(text)
    cfg = load_config(p)
    assert cfg.q == (0.5, 1.0) and cfg.x == (0.0, 2.0)
    assert cfg.grid.cells == 4096
    assert cfg.seed == 2**64 - 1 and cfg.bridge_correction is False
    assert cfg.out_path == str(tmp_path / "out" / "res.json")


def test_tabulated_claims(tmp_path):
    (tmp_path / "tail.csv").write_text("y,tail\n0,1\n1,0.5\n2,0.2\n4,0\n")
    p = tmp_path / "t.ini"
    p.write_text(BASE.replace("claims = exponential\nlam = 1\nmu = 1", "claims = tabulated\ntail_file = tail.csv"))
    cfg = load_config(p)
    assert cfg.model.measure.kind == "tabulated"


@pytest.mark.parametrize("edit, field", [
    (lambda t: t.replace("mu = 1\n", ""), "[model] mu"),
    (lambda t: t.replace("version = 1", "version = 2"), "[ruinkit] version"),
    (lambda t: t.replace("[ruinkit]\nversion = 1\n", ""), "[ruinkit] version"),
    (lambda t: t + "colour = red\n", "[model] colour"),
    (lambda t: t + "\n[query]\nq = 1, nan\n", "[query] q"),
    (lambda t: t + "\n[query]\nx = -1\n", "[query] x"),
    (lambda t: t + "\n[query]\nseed = -3\n", "[query] seed"),
    (lambda t: t + "\n[query]\npaths = many\n", "[query] paths"),
    (lambda t: t + "\n[grid]\ndelta = 0.1\n", "[grid] delta"),
    (lambda t: t + "\n[output]\nformat = xml\n", "[output] format"),
    (lambda t: t + "\n[extra]\na = 1\n", "[extra]"),
    (lambda t: t.replace("c = 1.5", "c = 0.5"), "[model]"),
    (lambda t: t.replace("claims = exponential", "claims = pareto"), "[model] claims"),
])
def test_errors_name_the_field(edit, field):
    with pytest.raises(ConfigError) as exc:
        parse_config(edit(BASE))
    assert field in str(exc.value)


def test_overrides_skip_none():
    cfg = parse_config(BASE).with_overrides(q=(2.0,), seed=None)
    assert cfg.q == (2.0,) and cfg.seed == 0


def test_numbers_are_finite():
    with pytest.raises(ConfigError):
        parse_config(BASE.replace("c = 1.5", "c = inf"))
    assert math.isfinite(parse_config(BASE).model.sigma)
