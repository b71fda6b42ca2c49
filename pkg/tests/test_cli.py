import json
import subprocess
import sys

import numpy as np
import pytest

from affspace import serialization as io
from affspace.cli import ConfigError, PipelineConfig, main


def run(*argv):
    return main([str(a) for a in argv])


def manifest(d):
    return json.loads((d / "manifest.json").read_text())


def test_config_validation():
    PipelineConfig().validate()
    for kw, fieldname in (({"resolution": 17}, "resolution"), ({"tol": 0.0}, "tol"), ({"L": -1}, "L"),
                          ({"shape": "torus"}, "shape")):
        with pytest.raises(ConfigError) as e:
            PipelineConfig(**kw).validate()
        assert e.value.field == fieldname


def test_sphere_solve_example(tmp_path):
    out = tmp_path / "sphere" / "omega.csv"
    assert run("sphere", "solve", "--shape", "disk", "--n", 65, "--out", out) == 0
    f = io.read_grid_function(out)
    k = np.argmin(np.linalg.norm(f.domain.nodes, axis=1))
    assert abs(f.values[k] + 1) < 5e-3
    m = manifest(out.parent)
    for key in ("inputs", "versions", "tolerances", "timings", "outputs"):
        assert key in m
    for p, h in m["outputs"].items():
        assert io.sha256_file(p) == h
    assert (out.parent / "omega.log.jsonl").exists()


def test_verify_fenchel_example(tmp_path, capsys):
    assert run("verify", "fenchel", "--n", 33, "--out", tmp_path) == 0
    rep = json.loads((tmp_path / "verify_fenchel.json").read_text())
    assert rep["pass"]


def test_deform_domain_coboundary_example(tmp_path):
    assert run("deform", "domain", "--cocycle", "coboundary", "--V", "0,0,1", "--X0", "0,0,1", "--out", tmp_path) == 0
    f = io.read_grid_function(tmp_path / "s_minus.csv")
    assert np.abs(f.values - (-1.0)).max() <= 1e-3
    assert "halfspaces.json" in " ".join(manifest(tmp_path)["outputs"])


def test_pipeline_chain(tmp_path):
    om = tmp_path / "omega.csv"
    assert run("sphere", "solve", "--n", 65, "--out", om) == 0
    pts = tmp_path / "pts.csv"
    io.write_rows(pts, ["x1", "x2", "lambda"], [(0, 0, 2), (0.5, 0, 1.25)])
    chart = tmp_path / "field" / "chart.csv"
    assert run("cosmo", "field", "--n", 65, "--omega", om, "--points", pts, "--out", chart) == 0
    _, data = io.read_rows(chart)
    assert np.abs(data[:, 3] - [2, np.sqrt(1.25 ** 2 - 0.25)]).max() < 2e-2
    assert run("cosmo", "foliate", "--n", 65, "--omega", "exact", "--t", "0.5,1", "--out", tmp_path / "fol") == 0
    assert (tmp_path / "fol" / "level_t0.5.csv").exists()
    assert run("lf", "transform", "--n", 65, "--input", om, "--out", tmp_path / "lf" / "conj.csv") == 0
    assert run("deform", "orbit", "--L", 2, "--out", tmp_path / "o" / "orbit.csv") == 0
    assert run("deform", "gtau", "--cocycle", "bend", "--L", 3, "--out", tmp_path / "g" / "gtau.csv") == 0
    assert run("bend", "--s", 0.3, "--out", tmp_path / "b" / "cocycle.json", "--bulge-out", tmp_path / "b" / "g.json") == 0
    assert run("deform", "gtau", "--cocycle", tmp_path / "b" / "cocycle.json", "--L", 2,
               "--out", tmp_path / "g2" / "gtau.csv") == 0


def test_exit_codes(tmp_path):
    assert run("sphere", "solve", "--n", 17, "--out", tmp_path / "a.csv") == 1
    assert run("cosmo", "field", "--points", tmp_path / "missing.csv", "--omega", "exact", "--out", tmp_path / "c.csv") == 1
    pts = tmp_path / "outside.csv"
    io.write_rows(pts, ["x1", "x2", "lambda"], [(1.0, 0.0, 0.5)])
    assert run("cosmo", "field", "--points", pts, "--omega", "exact", "--out", tmp_path / "c.csv") == 1
    assert run("deform", "orbit", "--L", 9, "--out", tmp_path / "o.csv") == 1
    assert run("sphere", "solve", "--n", 65, "--max-iter", 1, "--tol", 1e-14, "--out", tmp_path / "s.csv") == 2
    assert run("verify", "nosuch") == 1


def test_out_root_environment(tmp_path, monkeypatch):
    monkeypatch.setenv("AFFSPACE_OUT_ROOT", str(tmp_path))
    assert run("bend", "--s", 0.1, "--out", "rel/cocycle.json") == 0
    assert (tmp_path / "rel" / "cocycle.json").exists()


def test_determinism(tmp_path):
    hashes = []
    for k in range(2):
        d = tmp_path / f"run{k}"
        assert run("deform", "domain", "--cocycle", "bend", "--L", 3, "--out", d) == 0
        hashes.append({p.replace(str(d), ""): h for p, h in manifest(d)["outputs"].items()})
    assert hashes[0] == hashes[1]


def test_console_script(tmp_path):
    r = subprocess.run([sys.executable, "-m", "affspace.cli", "--version"], capture_output=True, text=True)
    assert r.returncode == 0 and r.stdout.strip()
