import csv
import io
import json

import jsonschema
import pytest

from ruinkit.cli import load_schema, main, render_csv

CONFIG = """
[ruinkit]
version = 1

[model]
c = 1.5
sigma = {sigma}
claims = exponential
lam = 1
mu = 1

[query]
q = 1
x = {x}
paths = 2000
seed = 7
penalty = capped_deficit:2+capped_increment:2
target = edvci
"""


@pytest.fixture
def config(tmp_path):
    def make(sigma=1.0, x="0.5, 1"):
        p = tmp_path / "exp.ini"
        p.write_text(CONFIG.format(sigma=sigma, x=x))
        return str(p)

    return make


@pytest.mark.parametrize("command", ["phi", "ruin", "scale", "edpf", "edvci", "simulate"])
def test_json_output_matches_schema(config, tmp_path, command):
    out = tmp_path / f"{command}.json"
    assert main([command, "--config", config(), "--format", "json", "--out", str(out)]) == 0
    doc = json.loads(out.read_text())
    jsonschema.validate(doc, load_schema(command))
    assert doc["command"] == command and doc["rows"]


def test_csv_output(config, tmp_path):
    out = tmp_path / "ruin.csv"
    assert main(["ruin", "--config", config(sigma=0.0, x="0, 1"), "--out", str(out)]) == 0
    raw = out.read_bytes()
    assert b"\r" not in raw
    rows = list(csv.DictReader(io.StringIO(raw.decode())))
    assert float(rows[0]["ruin_probability"]) == pytest.approx(2 / 3, abs=1e-6)


def test_flags_override_config(config, tmp_path):
    out = tmp_path / "phi.csv"
    assert main(["phi", "--config", config(sigma=0.0), "--q", "0,1", "--out", str(out)]) == 0
    rows = list(csv.DictReader(io.StringIO(out.read_text())))
    assert [float(r["phi"]) for r in rows] == pytest.approx([0.0, 1.0], abs=1e-12)


def test_simulation_output_is_byte_identical(config, tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    cfg = config()
    main(["simulate", "--config", cfg, "--out", str(a)])
    main(["simulate", "--config", cfg, "--out", str(b)])
    assert a.read_bytes() == b.read_bytes()


def test_record_count_law_rows(config, tmp_path):
    out = tmp_path / "n.json"
    assert main(["simulate", "--config", config(), "--target", "n_law", "--q", "0.5", "--x", "1",
                 "--format", "json", "--out", str(out)]) == 0
    rows = json.loads(out.read_text())["rows"]
    assert rows[0]["target"] == "n_law[0]" and rows[-1]["target"].endswith("+]")


def test_bad_config_exits_1(tmp_path, capsys):
    p = tmp_path / "bad.ini"
    p.write_text(CONFIG.format(sigma=1, x=1).replace("mu = 1\n", ""))
    assert main(["edvci", "--config", str(p)]) == 1
    assert "[model] mu" in capsys.readouterr().err


@pytest.mark.parametrize("argv", [
    ["edvci"],
    ["edpf", "--penalty", "mystery"],
    ["simulate", "--target", "nothing"],
    ["phi", "--seed", str(2**64)],
])
def test_usage_errors_exit_1(config, argv):
    if argv != ["edvci"]:
        argv = [argv[0], "--config", config(), *argv[1:]]
    assert main(argv) == 1


def test_validate_subset(tmp_path, capsys):
    out = tmp_path / "v.json"
    assert main(["validate", "--criteria", "1,6", "--paths", "100", "--format", "json", "--out", str(out)]) == 0
    doc = json.loads(out.read_text())
    jsonschema.validate(doc, load_schema("validate"))
    assert [r["criterion"] for r in doc["rows"]] == [1, 6]
    assert "summary: 2/2" in capsys.readouterr().out


def test_validate_unknown_criterion():
    assert main(["validate", "--criteria", "11"]) == 1


def test_render_csv_formats_values():
    text = render_csv([{"a": 0.1, "b": None, "c": True, "d": 3}])
    assert text == "a,b,c,d\n0.1,,true,3\n"
