import csv
import json

import pytest

from symcalc import cli
from symcalc.sweeps import COLUMNS, EXPERIMENTS

SMALL = {
    "verify-convexity": ["--samples", "2000", "--p", "4", "--epsilon", "0.25", "--phi", "0,1"],
    "bakry": ["--samples", "100", "--r", "1.5,3"],
    "bilinear": ["--samples", "3", "--p", "4", "--epsilon", "0.25", "--phi", "0.5", "--n", "5"],
    "monotonicity": ["--samples", "3", "--p", "4", "--epsilon", "0.25", "--phi", "1"],
    "prop-p4": ["--samples", "20", "--p", "4", "--epsilon", "0.25", "--phi", "-1"],
    "laplace-type": ["--samples", "5", "--p", "3"],
    "imaginary-powers": ["--p", "3", "--n", "3", "--s-max", "4", "--s-points", "5"],
    "repr-formula": ["--n", "3"],
    "hormander": ["--J", "1"],
}


def _run(tmp_path, name, extra=(), sub="out"):
    out = tmp_path / sub
    code = cli.main([name, *SMALL[name], *extra, "--out", str(out)])
    return code, out


def _rows(path):
    with open(path) as fh:
        return list(csv.DictReader(fh))


@pytest.mark.parametrize("name", EXPERIMENTS)
def test_each_subcommand_passes(name, tmp_path, capsys):
    code, out = _run(tmp_path, name)
    assert code == 0
    rows = _rows(out / f"{name}.csv")
    assert rows and list(rows[0]) == list(COLUMNS)
    assert all(r["passed"] == "true" for r in rows)
    summary = json.loads((out / "summary.json").read_text())
    assert summary["passed"] and summary["experiments"][name]["failed"] == 0
    assert "runtime_seconds" not in summary["experiments"][name]
    assert capsys.readouterr().out.startswith(f"PASS {name}")


def test_same_seed_is_byte_identical(tmp_path):
    _run(tmp_path, "prop-p4", ["--seed", "7"], "a")
    _run(tmp_path, "prop-p4", ["--seed", "7"], "b")
    _run(tmp_path, "prop-p4", ["--seed", "8"], "c")
    a = (tmp_path / "a" / "prop-p4.csv").read_bytes()
    assert a == (tmp_path / "b" / "prop-p4.csv").read_bytes()
    assert a != (tmp_path / "c" / "prop-p4.csv").read_bytes()
    assert (tmp_path / "a" / "summary.json").read_bytes() == (tmp_path / "b" / "summary.json").read_bytes()


def test_timing_is_opt_in(tmp_path):
    _run(tmp_path, "bakry", ["--timing"])
    summary = json.loads((tmp_path / "out" / "summary.json").read_text())
    assert summary["experiments"]["bakry"]["runtime_seconds"] >= 0


def test_bakry_r2_row_fails(tmp_path):
    out = tmp_path / "r2"
    code = cli.main(["bakry", "--samples", "50", "--r", "2", "--out", str(out)])
    assert code == 1
    rows = _rows(out / "bakry.csv")
    failed = [r for r in rows if r["passed"] == "false"]
    assert failed and all(r["quantity"].endswith("_undefined") for r in failed)


@pytest.mark.parametrize("argv", [
    ["verify-convexity", "--p", "1.5"],
    ["verify-convexity", "--epsilon", "0.7"],
    ["prop-p4", "--phi", "1.5"],
    ["bakry", "--r", "0.5"],
    ["laplace-type", "--samples", "0"],
])
def test_configuration_errors_exit_2(argv, tmp_path, capsys):
    assert cli.main([*argv, "--out", str(tmp_path)]) == 2
    assert "configuration error" in capsys.readouterr().err


def test_unknown_subcommand():
    with pytest.raises(SystemExit):
        cli.main(["nope"])


def test_ini_config_and_override(tmp_path):
    ini = tmp_path / "run.ini"
    ini.write_text("[DEFAULT]\nseed = 3\nsamples = 10\n\n"
                   "[prop-p4]\np = 4, 8\nepsilon = 0.25\nphi = 0\n")
    out = tmp_path / "res"
    assert cli.main(["prop-p4", "--config", str(ini), "--p", "8", "--out", str(out)]) == 0
    rows = _rows(out / "prop-p4.csv")
    assert {r["p"] for r in rows} == {"8.0"}
    assert {r["seed"] for r in rows} == {"3"} and {r["n"] for r in rows} == {"10"}


def test_ini_unknown_key(tmp_path):
    ini = tmp_path / "bad.ini"
    ini.write_text("[DEFAULT]\ncolour = blue\n")
    assert cli.main(["bakry", "--config", str(ini), "--out", str(tmp_path)]) == 2


def test_hormander_manifest(tmp_path):
    man = tmp_path / "m.json"
    man.write_text(json.dumps([{"name": "heat", "expression": "exp", "J": 1.0},
                               {"name": "res", "expression": "resolvent", "J": 1.0}]))
    out = tmp_path / "h"
    assert cli.main(["hormander", "--manifest", str(man), "--out", str(out)]) == 0
    cells = {r["cell"] for r in _rows(out / "hormander.csv")}
    assert len(cells) == 2
