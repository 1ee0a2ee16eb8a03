"""Command line entry points: outputs, manifests and exit codes."""

import csv
import json

import pytest

from blenders.cli import EXIT_ERROR, EXIT_OK, EXIT_UNRESOLVED, run


def read_json(path):
    return json.loads(path.read_text())


def test_tuple_command(tmp_path, capsys):
    code = run(["tuple", "--S", "0.5", "--T", "0.8", "--zeta-tilde", "9", "--sigma", "1.2",
                "--lambda-t", "0.05", "--out", str(tmp_path)])
    assert code == EXIT_OK
    res = read_json(tmp_path / "tuple.json")
    assert res["tuple"]["sigma_t"] == pytest.approx(3.0)
    assert res["region"]["ok"]
    man = read_json(tmp_path / "manifest.json")
    assert man["command"] == "tuple" and "tuple.json" in man["outputs"]
    assert set(man["versions"]) >= {"blenders", "numpy", "mpmath"}


def test_tuple_outside_region_is_error(tmp_path):
    assert run(["tuple", "--S", "0.2", "--T", "0.5", "--out", str(tmp_path)]) == EXIT_ERROR


def test_region_st_grid(tmp_path):
    code = run(["region-st", "--grid", "200", "--out", str(tmp_path)])
    assert code == EXIT_OK
    res = read_json(tmp_path / "region_st.json")
    assert res["area"] == pytest.approx(res["exact_area"], abs=2e-3)


def test_region_st_seed_in_manifest(tmp_path):
    run(["region-st", "--samples", "1000", "--seed", "7", "--out", str(tmp_path)])
    assert read_json(tmp_path / "manifest.json")["seed"] == 7


def test_neutral_command(tmp_path, capsys):
    code = run(["neutral", "--lambda", "0.1", "--zeta-tilde", "9", "--xi", "1.185",
                "--eps", "0.02", "--nmax", "50", "--out", str(tmp_path)])
    assert code == EXIT_OK
    rows = list(csv.DictReader((tmp_path / "neutral.csv").open()))
    assert [(r["n"], r["m"]) for r in rows] == [("40", "42")]
    assert "40,42," in capsys.readouterr().out
    assert read_json(tmp_path / "neutral.json")["all_verified"]


def test_neutral_empty_is_unresolved(tmp_path):
    code = run(["neutral", "--lambda", "0.1", "--zeta-tilde", "10", "--xi", "1.185",
                "--eps", "0.01", "--nmax", "50", "--out", str(tmp_path)])
    assert code == EXIT_UNRESOLVED


def test_scan_o_small_grid(tmp_path):
    code = run(["scan-o", "--mu-points", "4", "--kappa-points", "1", "--xi-points", "1",
                "--out", str(tmp_path)])
    assert code == EXIT_OK
    rows = list(csv.DictReader((tmp_path / "scan_o.csv").open()))
    assert len(rows) == 4
    summary = read_json(tmp_path / "scan_o_summary.json")
    assert summary["i_plus_passed"] + summary["i_plus_failed"] == 4


def test_certify_far_parameter_is_unresolved(tmp_path):
    code = run(["certify", "--mu", "-5", "--depth", "6", "--out", str(tmp_path)])
    assert code == EXIT_UNRESOLVED
    assert read_json(tmp_path / "certificate.json")["overall"] == "FAILED"


def test_bad_config_file(tmp_path):
    bad = tmp_path / "cfg.json"
    bad.write_text('{"colour": 1}')
    code = run(["renorm", "--config", str(bad), "--out", str(tmp_path / "o")])
    assert code == EXIT_ERROR
    missing = run(["renorm", "--config", str(tmp_path / "nope.json"), "--out", str(tmp_path / "o")])
    assert missing == EXIT_ERROR


def test_bad_precision_env(tmp_path, monkeypatch):
    monkeypatch.setenv("BLENDERS_PRECISION", "lots")
    code = run(["renorm", "--count", "1", "--out", str(tmp_path)])
    assert code == EXIT_ERROR


def test_renorm_single_pair(tmp_path):
    code = run(["renorm", "--count", "1", "--grid-k", "3", "--grid-i", "3", "--order", "1",
                "--out", str(tmp_path)])
    assert code == EXIT_OK
    assert (tmp_path / "renorm.csv").read_text().startswith("m,n,err,d0,d1,d2")


def test_connect_single_pair(tmp_path):
    code = run(["connect", "--count", "1", "--points", "5", "--out", str(tmp_path)])
    assert code == EXIT_OK
    rows = list(csv.DictReader((tmp_path / "connect.csv").open()))
    assert float(rows[0]["ratio"]) <= 10
