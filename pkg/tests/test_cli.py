import csv
import json
import subprocess
import sys
from pathlib import Path

import pytest

from pbrays.cli import main
from pbrays.config import load_config, parse_config
from pbrays.errors import ConfigError
from pbrays.report import strip_timestamp

CONFIGS = Path(__file__).resolve().parents[1] / "configs"

BASE = """
rng_seed = 0
[system]
name = "decoupled-pendulum"
params = {{ N = {n}, T = 1.0, eps = {eps} }}
[sphere]
name = "{sphere}"
params = {sparams}
[discretization]
K = 8
oracle_grid = {grid}
[budget]
seeds = {seeds}
[rays]
side = "{side}"
n_boundary = 256
n_angles = 4
"""


def write_cfg(tmp_path, name="run.toml", n=2, eps=0.1, sphere="unit-sphere", side="inward",
              grid=12, seeds=48, sparams=None, extra=""):
    sp = sparams if sparams is not None else ("{ N = %d }" % n if sphere == "unit-sphere" else "{}")
    p = tmp_path / name
    p.write_text(BASE.format(n=n, eps=eps, sphere=sphere, side=side, grid=grid, seeds=seeds,
                             sparams=sp) + extra)
    return p


def run(cmd, cfg, out):
    return main([cmd, str(cfg), "--out", str(out)])


def load(out, name):
    return json.loads((out / name).read_text())


def test_schema_defaults_and_strictness():
    cfg = parse_config({"system": {"name": "decoupled-pendulum"}, "sphere": {"name": "unit-sphere"}})
    assert cfg.discretization.K == 16 and cfg.rays.n_boundary == 1000
    with pytest.raises(ConfigError, match="bogus"):
        parse_config({"system": {"name": "x"}, "sphere": {"name": "y"}, "bogus": 1})
    with pytest.raises(ConfigError, match="tolerances.newton"):
        parse_config({"system": {"name": "x"}, "sphere": {"name": "y"}, "tolerances": {"newton": -1}})
    with pytest.raises(ConfigError):
        parse_config({"system": {"name": "x"}, "sphere": {"name": "y"}, "rays": {"side": "up"}})


def test_shipped_configs_parse():
    for p in CONFIGS.glob("*.toml"):
        load_config(p)


@pytest.mark.parametrize("side, code", [("inward", 0), ("outward", 1)])
def test_check_rays_exit_codes(tmp_path, side, code):
    out = tmp_path / "out"
    assert run("check-rays", write_cfg(tmp_path, side=side), out) == code
    doc = load(out, "rays.json")
    assert doc["status"] == code and doc["report"]["side"] == side
    with (out / "rays_samples.csv").open() as fh:
        rows = list(csv.reader(fh))
    assert rows[0][-1] == "margin" and len(rows) == 1 + 256 * 4


def test_usage_errors_exit_3(tmp_path, capsys):
    assert main(["check-rays", str(tmp_path / "missing.toml")]) == 3
    bad = write_cfg(tmp_path, extra="\n[output]\ndir = 'x'\ncolour = 'blue'\n")
    assert main(["check-rays", str(bad)]) == 3
    assert "colour" in capsys.readouterr().err
    broken = tmp_path / "broken.toml"
    broken.write_text((CONFIGS / "broken.toml").read_text())
    assert main(["check-rays", str(broken), "--out", str(tmp_path / "o")]) == 3
    assert "not admissible" in capsys.readouterr().err
    assert main(["no-such-command"]) == 3
    (tmp_path / "garbled.toml").write_text("[system\nname=")
    assert main(["basket", str(tmp_path / "garbled.toml")]) == 3


def test_find_orbits_pendulum(tmp_path):
    out = tmp_path / "o"
    assert run("find-orbits", write_cfg(tmp_path), out) == 0
    rep = load(out, "census.json")["report"]
    assert rep["n_classes"] == 4
    assert rep["verdict"]["meets_cl"] and rep["verdict"]["meets_sb"]
    with (out / "orbits.csv").open() as fh:
        assert len(list(csv.reader(fh))) == 5


def test_find_orbits_one_dimensional(tmp_path):
    out = tmp_path / "o"
    assert run("find-orbits", write_cfg(tmp_path, n=1, seeds=16), out) == 0
    assert load(out, "census.json")["report"]["n_classes"] == 2


def test_find_orbits_degenerate_family(tmp_path):
    out = tmp_path / "o"
    run("find-orbits", write_cfg(tmp_path, eps=0.0, seeds=16), out)
    rep = load(out, "census.json")["report"]
    assert rep["degenerate_family"] is True
    assert rep["verdict"]["meets_sb"] is None


def test_certify_outward_skips_census(tmp_path):
    out = tmp_path / "o"
    assert run("certify", write_cfg(tmp_path, side="outward"), out) == 1
    rep = load(out, "certificate.json")["report"]
    assert rep["verdict"] is False
    assert rep["census"]["skipped"] is True
    assert rep["stage_status"]["rays"] == 1


def test_certify_star(tmp_path):
    out = tmp_path / "o"
    assert run("certify", write_cfg(tmp_path, sphere="star-3-lobe"), out) == 0
    rep = load(out, "certificate.json")["report"]
    assert rep["rays"]["verdict"] and rep["rays"]["min_margin"] > 0
    assert {v["degree"] for v in rep["degree"]["values"]} == {1}
    assert rep["census"]["n_classes"] >= 3 and rep["census"]["oracle_agreement"]


def test_basket_command(tmp_path):
    out = tmp_path / "o"
    assert run("basket", write_cfg(tmp_path, sphere="star-3-lobe"), out) == 0
    assert load(out, "basket.json")["report"]["axioms"]["passed"]
    with (out / "basket_grid.csv").open() as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["y1", "y2", "h"] and len(rows) == 1 + 101 * 101
    bad = write_cfg(tmp_path, "bad.toml", sphere="star-3-lobe", extra="\n[basket]\ndefect_r0 = 1.5\n")
    assert run("basket", bad, tmp_path / "b") == 1
    rep = load(tmp_path / "b", "basket.json")["report"]
    assert rep["witness_level"] == pytest.approx(1.5, rel=1e-3)


def test_certify_is_deterministic(tmp_path, monkeypatch):
    cfg = write_cfg(tmp_path)
    assert run("certify", cfg, tmp_path / "a") == 0
    monkeypatch.setenv("PBRAYS_MAX_WORKERS", "1")
    assert run("certify", cfg, tmp_path / "b") == 0
    a, b = load(tmp_path / "a", "certificate.json"), load(tmp_path / "b", "certificate.json")
    assert strip_timestamp(a) == strip_timestamp(b)
    assert (tmp_path / "a" / "orbits.csv").read_bytes() == (tmp_path / "b" / "orbits.csv").read_bytes()


def test_module_entry_point(tmp_path):
    cfg = write_cfg(tmp_path)
    proc = subprocess.run([sys.executable, "-m", "pbrays", "check-rays", str(cfg), "--out",
                           str(tmp_path / "o")], capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
