import csv
import json

import numpy as np
import pytest

from incontext.cli import main
from incontext.fixtures import random_measure
from incontext.formats import dump_measure, load_algebra, load_stack
from incontext.report import ConfigError, ExperimentConfig


def _report(out):
    return json.loads((out / "report.json").read_text())


def _strip_timing(rep):
    rep.pop("timing")
    for c in rep["checks"]:
        c.pop("seconds", None)
    return rep


def test_config_field_errors_name_the_field():
    with pytest.raises(ConfigError, match="fit.ridge"):
        cfg = ExperimentConfig.from_mapping({"fit.ridge": "-1"})
        cfg.validate()
    with pytest.raises(ConfigError, match="fixtures.d"):
        ExperimentConfig.from_mapping({"fixtures.d": "two"})
    with pytest.raises(ConfigError, match="unknown"):
        ExperimentConfig.from_mapping({"fit.nonsense": "1"})
    with pytest.raises(ConfigError, match="tol"):
        ExperimentConfig(tol=0.0).validate()


def test_usage_errors_exit_2(tmp_path, capsys):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("fixtures.sigma = 2\n")
    assert main(["probe", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 2
    assert "fixtures.sigma" in capsys.readouterr().err
    assert main(["ot", "--out", str(tmp_path / "o")]) == 2
    with pytest.raises(SystemExit) as info:
        main(["frobnicate"])
    assert info.value.code == 2


def test_ot_mode_prints_distances(tmp_path, capsys):
    rng = np.random.default_rng(0)
    (tmp_path / "mu.txt").write_text(dump_measure(random_measure(rng, 4, 2)))
    (tmp_path / "nu.txt").write_text(dump_measure(random_measure(rng, 3, 2, uniform=False)))
    cfg = tmp_path / "ot.cfg"
    cfg.write_text(f"ot.mu = {tmp_path / 'mu.txt'}\not.nu = {tmp_path / 'nu.txt'}\n")
    assert main(["ot", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 0
    out = capsys.readouterr().out
    assert "W_1 =" in out and "W_2 =" in out and "plan 4x3" in out
    rep = _report(tmp_path / "o")
    assert rep["results"]["W1"] <= rep["results"]["W2"] + 1e-12
    assert set(rep["fixture_digests"]) == {"mu", "nu"}


def test_realize_mode_and_failure_exit(tmp_path):
    assert main(["realize", "--out", str(tmp_path / "a"), "--quiet"]) == 0
    rep = _report(tmp_path / "a")
    assert rep["results"]["max_gap"] <= rep["results"]["error_bound"]
    load_stack((tmp_path / "a" / "stack.txt").read_text())
    load_algebra((tmp_path / "a" / "algebra.txt").read_text())


def test_fit_mode_writes_algebra_and_curve(tmp_path):
    cfg = tmp_path / "fit.cfg"
    cfg.write_text("fit.target = x+mean\nfit.n_grid = 1,2\nfit.samples = 150\nfit.pool_size = 128\n")
    assert main(["fit", "--config", str(cfg), "--out", str(tmp_path / "f"), "--quiet"]) == 0
    rep = _report(tmp_path / "f")
    assert rep["results"]["final_heldout_error"] <= 1e-6
    assert load_algebra((tmp_path / "f" / "algebra.txt").read_text()).dim == 2
    rows = list(csv.DictReader((tmp_path / "f" / "error_vs_N.csv").open()))
    assert [r["N"] for r in rows] == ["1", "2"]
    # an impossible tolerance fails the held-out check but still writes the report
    assert main(["fit", "--config", str(cfg), "--out", str(tmp_path / "g"), "--tol", "1e-30", "--quiet"]) == 1
    assert not _report(tmp_path / "g")["summary"]["all_passed"]


def test_probe_is_reproducible(tmp_path):
    for name in ("p1", "p2"):
        assert main(["probe", "--seed", "4", "--out", str(tmp_path / "p"), "--quiet"]) == 0
        (tmp_path / "p" / "report.json").rename(tmp_path / f"{name}.json")
    a, b = (json.loads((tmp_path / f"{n}.json").read_text()) for n in ("p1", "p2"))
    assert _strip_timing(a) == _strip_timing(b)


def test_report_pass_flags_recomputable(tmp_path):
    cfg = tmp_path / "v.cfg"
    cfg.write_text("verify.criteria = 1,3,5\nverify.supporting = false\n")
    assert main(["verify", "--config", str(cfg), "--out", str(tmp_path / "v"), "--quiet"]) == 0
    rep = _report(tmp_path / "v")
    assert rep["library"]["name"] == "incontext" and rep["config"]["seed"] == 1
    for c in rep["checks"]:
        ok = c["residual"] <= c["threshold"] if c["relation"] == "<=" else c["residual"] >= c["threshold"]
        assert c["passed"] == ok
    assert {c["criterion"] for c in rep["checks"]} == {1, 3, 5}
