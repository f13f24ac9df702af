import json
import subprocess
import sys

import pytest

from hypertess.cli import main
from hypertess.io import read_configuration


def run(argv):
    return main([str(a) for a in argv])


def test_sample_json_roundtrip(tmp_path):
    out = tmp_path / "s.json"
    assert run(["sample", "--seed", 3, "--window", 3, "--out", out]) == 0
    doc = json.loads(out.read_text())
    assert doc["run_config"]["seed"] == 3 and doc["n_points"] == len(doc["configuration"]["points"])
    cfg = read_configuration(out)
    assert cfg.d == 2 and cfg.window_radius == 3.0


@pytest.mark.parametrize("process,extra", [
    ("uniform", ["--n", 30]),
    ("lattice", ["--window", 2.5]),
    ("berezin", ["--window", 2, "--n-seeds", 300]),
])
def test_sample_processes(tmp_path, process, extra):
    out = tmp_path / f"{process}.json"
    assert run(["sample", "--process", process, "--seed", 1, "--window", 3, *extra, "--out", out]) == 0
    assert json.loads(out.read_text())["run_config"]["overrides"]["process"] == process


def test_tessellate_csv(tmp_path):
    cfg = tmp_path / "c.json"
    run(["sample", "--seed", 2, "--window", 3, "--out", cfg])
    e, s, o = tmp_path / "e.csv", tmp_path / "s.csv", tmp_path / "t.json"
    assert run(["tessellate", "--input", cfg, "--edges-csv", e, "--simplices-csv", s, "--out", o]) == 0
    assert e.read_text().splitlines()[0] == "i,j"
    assert s.read_text().splitlines()[0] == "v0,v1,v2"
    doc = json.loads(o.read_text())
    assert len(doc["edges"]) == len(e.read_text().splitlines()) - 1


def test_kernel_outputs(tmp_path):
    o, c = tmp_path / "k.json", tmp_path / "k.csv"
    assert run(["kernel", "--s", 3, "--series-M", 20, "--sweep", "1,2,3", "--csv", c, "--out", o]) == 0
    doc = json.loads(o.read_text())
    assert doc["conjectured_norm"] == pytest.approx(0.7853981633974483)
    assert doc["reproducing_constant"]["exact"] == pytest.approx(1.0)
    assert c.read_text().splitlines()[0] == "s,d,upper,beta_upper,lower,beta_lower,conjectured"
    assert len(c.read_text().splitlines()) == 4


def test_audit_small(tmp_path):
    o, c = tmp_path / "a.json", tmp_path / "a.csv"
    argv = ["audit", "--seed", 1, "--window", 5, "--M", 1, "--animals", 9, "--max-size", 5,
            "--scan-size", 30, "--scan-trials", 2, "--csv", c, "--out", o]
    assert run(argv) == 0
    doc = json.loads(o.read_text())
    assert doc["run_config"]["overrides"]["M"] == 1
    assert c.read_text().splitlines()[0] == "size,density_ratio,vacancy_ratio,p_density,q_vacancy,boundary_ratio,seed"


def test_walk_small(tmp_path):
    o, c = tmp_path / "w.json", tmp_path / "w.csv"
    assert run(["walk", "--seed", 4, "--window", 6, "--walks", 5, "--steps", 50, "--csv", c, "--out", o]) == 0
    doc = json.loads(o.read_text())
    assert doc["speed"]["n_walks"] == 5
    assert c.read_text().splitlines()[0] == "walk,step,vertex,hyperbolic_displacement,graph_distance"


def test_render_from_input(tmp_path):
    cfg, svg = tmp_path / "c.json", tmp_path / "p.svg"
    run(["sample", "--seed", 2, "--window", 2.5, "--lambda", 5, "--out", cfg])
    assert run(["render", "--input", cfg, "--out", svg]) == 0
    assert svg.read_text().startswith('<?xml version="1.0"')


def test_exit_codes(tmp_path, capsys):
    with pytest.raises(SystemExit) as exc:
        run(["sample", "--seed", 1, "--window", -1])
    assert exc.value.code == 2
    with pytest.raises(SystemExit) as exc:
        run(["sample", "--window", 2])
    assert exc.value.code == 2
    with pytest.raises(SystemExit) as exc:
        run(["sample", "--seed", 1, "--thin", 2])
    assert exc.value.code == 2
    assert run(["tessellate", "--input", tmp_path / "missing.json"]) == 1
    assert "error" in capsys.readouterr().err
    assert run(["audit", "--seed", 1, "--window", 5, "--animals", 2, "--scan-trials", 1]) == 1


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "hypertess", "--version"], capture_output=True, text=True)
    assert res.returncode == 0 and res.stdout.startswith("hypertess")


@pytest.mark.parametrize("argv", [
    ["sample", "--seed", 5, "--window", 3],
    ["sample", "--process", "lattice", "--seed", 5, "--window", 2.5],
    ["tessellate", "--seed", 5, "--window", 3, "--edges-csv", "{d}/e.csv"],
    ["kernel", "--s", 2, "--estimate", "--seed", 5, "--n-seeds", 300, "--sweep", "1,2", "--csv", "{d}/k.csv"],
    ["walk", "--seed", 5, "--window", 6, "--walks", 4, "--steps", 30, "--csv", "{d}/w.csv"],
])
def test_byte_determinism(tmp_path, argv):
    argv = [str(a).replace("{d}", str(tmp_path)) for a in argv] + ["--out", str(tmp_path / "o.json")]
    files = [tmp_path / "o.json"] + [tmp_path / a.split("/")[-1] for a in argv if a.endswith(".csv")]
    assert run(argv) == 0
    first = [f.read_bytes() for f in files]
    assert run(argv) == 0
    assert [f.read_bytes() for f in files] == first
