import json

import pytest

from probmra.cli import parse_xi, run
from fractions import Fraction


def _run(capsys, *argv):
    code = run(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_parse_xi():
    assert parse_xi("1/3") == Fraction(1, 3)
    with pytest.raises(ValueError):
        parse_xi("abc")


def test_validate_json(capsys):
    code, out, _ = _run(capsys, "validate", "--filter", "haar")
    doc = json.loads(out)
    assert code == 0 and doc["validation"]["passed"]
    assert doc["config"]["command"] == "validate"


def test_table_csv(capsys):
    code, out, _ = _run(capsys, "table", "--filter", "shannon", "--xi", "1/5", "--N-max", "2",
                        "--format", "csv")
    lines = out.strip().splitlines()
    assert code == 0 and lines[0] == "k,mass" and "0,1.0" in lines


def test_verdict_report_shape(capsys, tmp_path):
    path = tmp_path / "r.json"
    code, _, _ = _run(capsys, "verdict", "--filter", "shannon", "--grid", "8", "--N-max", "4",
                      "--K", "31", "--out", str(path))
    doc = json.loads(path.read_text())
    assert code == 0
    assert set(doc) == {"filter", "config", "per_xi", "aggregate"}
    assert doc["aggregate"]["verdict"] == "yes"


def test_output_dir_env(capsys, tmp_path, monkeypatch):
    monkeypatch.setenv("PROBMRA_OUTPUT_DIR", str(tmp_path))
    assert run(["digits", "--matrix", "[[2]]"]) == 0
    doc = json.loads((tmp_path / "digits.json").read_text())
    assert doc["count"] == 4


def test_plot_data(capsys, tmp_path):
    code, out, _ = _run(capsys, "plot-data", "--filter", "haar", "--grid", "4", "--N-max", "3",
                        "--K", "7", "--out", str(tmp_path))
    assert code == 0
    assert (tmp_path / "tail_curves.csv").read_text().startswith("xi,n,tail_sup_finite,tail_limit")
    assert (tmp_path / "phi_hat.csv").exists() and (tmp_path / "tile_points.csv").exists()


def test_expand_and_md(capsys):
    code, out, _ = _run(capsys, "expand", "--matrix", "[[1,1],[-1,1]]", "--k", "[3,4]")
    assert code == 0 and json.loads(out)["reconstructed"] == [3, 4]
    code, out, _ = _run(capsys, "md-qmf", "--matrix", "[[1,1],[-1,1]]")
    assert code == 0 and json.loads(out)["validation"]["passed"]


@pytest.mark.parametrize("argv,code", [
    (["validate", "--filter", "nope"], 2),
    (["digits", "--matrix", "[[1,2],[2,4]]"], 2),
    (["digits", "--matrix", "[[2,0],[0,3]]"], 2),
    (["table", "--filter", "haar", "--xi", "0", "--N-max", "99"], 3),
    (["tile", "--matrix", "[[1,1],[-1,1]]", "--mode", "exhaustive", "--depth", "30"], 3),
    (["bogus"], 2),
])
def test_exit_codes(capsys, argv, code):
    assert run(argv) == code
