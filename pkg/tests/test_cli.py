import json
import subprocess
import sys

import numpy as np
import pytest

from aggdiff.cli import ConfigError, dumps, main, parse_config
from aggdiff.model import LineGrid, RadialGrid, line_from_function, read_density_csv, uniform_ball, write_density_csv

LINE = {"params": {"N": 1, "k": -0.5, "m": 1.8, "chi": 1.0}, "grid": {"L": 0.79, "n": 128}}
RADIAL = {"params": {"N": 3, "k": -1.0, "m": 2.0, "chi": 1.0}, "grid": {"r_max": 4.0, "n": 128}}


def write_config(path, doc, out):
    doc = json.loads(json.dumps(doc))
    doc.setdefault("io", {})["output_dir"] = str(out)
    path.write_text(json.dumps(doc))
    return str(path)


@pytest.fixture
def line_cfg(tmp_path):
    return write_config(tmp_path / "c.json", LINE, tmp_path / "out")


@pytest.fixture
def line_density(tmp_path):
    path = tmp_path / "d.csv"
    write_density_csv(path, line_from_function(lambda x: (np.abs(x) <= 0.3).astype(float), LineGrid(0.79, 128)))
    return str(path)


# ------------------------------------------------------------- config


def test_parse_config_line_and_radial():
    a = parse_config(LINE)
    assert isinstance(a.grid, LineGrid) and a.params.N == 1
    b = parse_config(RADIAL)
    assert isinstance(b.grid, RadialGrid) and b.grid.n == 128


@pytest.mark.parametrize(
    "patch",
    [
        {"extra": 1},
        {"params": {"N": 1, "k": -0.5, "m": 1.8}},
        {"params": {"N": 1, "k": -0.5, "m": 1.8, "chi": 1.0, "x": 0}},
        {"grid": {"n": 64}},
        {"grid": {"L": 1.0, "r_max": 1.0, "n": 64}},
        {"solver": {"omega": 0.5, "speed": 3}},
        {"solver": {"omega": 2.0}},
        {"evolution": {"t_end": 1.0, "foo": 1}},
        {"evolution": {"L": 2.0}},
        {"io": {"precision": 8}},
    ],
)
def test_parse_config_rejects(patch):
    doc = {**LINE, **patch}
    with pytest.raises(ValueError):
        parse_config(doc)


def test_line_grid_needs_line_params():
    with pytest.raises(ConfigError, match="N = 1"):
        parse_config({**RADIAL, "grid": {"L": 1.0, "n": 64}})


def test_dumps_full_precision_and_nan():
    text = dumps({"a": 0.1, "b": float("nan"), "c": [1, True, None], "d": np.float64(1 / 3)})
    doc = json.loads(text)
    assert doc["a"] == 0.1 and doc["b"] is None and doc["d"] == 1 / 3
    assert "0.10000000000000001" in text


# ------------------------------------------------------------- exit codes


def test_invalid_k_exit_1(tmp_path, capsys):
    doc = {"params": {"N": 3, "k": -5.0, "m": 2.0, "chi": 1.0}, "grid": {"r_max": 4.0, "n": 64}}
    rc = main(["stationary", "--config", write_config(tmp_path / "c.json", doc, tmp_path)])
    assert rc == 1
    assert "k must lie in (-N, 0)" in capsys.readouterr().err


def test_unknown_subcommand_exit_1(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["bogus"])
    assert exc.value.code == 1
    assert "usage" in capsys.readouterr().err


def test_missing_file_exit_1(tmp_path):
    assert main(["stationary", "--config", str(tmp_path / "nope.json")]) == 1


def test_bad_json_exit_1(tmp_path):
    p = tmp_path / "c.json"
    p.write_text("{not json")
    assert main(["stationary", "--config", str(p)]) == 1


def test_numerical_failure_exit_2(tmp_path, capsys):
    doc = {**LINE, "solver": {"max_iter": 2}}
    rc = main(["stationary", "--config", write_config(tmp_path / "c.json", doc, tmp_path)])
    assert rc == 2
    assert "numerical failure" in capsys.readouterr().err


def test_module_entry_point():
    out = subprocess.run([sys.executable, "-m", "aggdiff", "verify", "--suite", "nope"], capture_output=True, text=True)
    assert out.returncode == 1


# ------------------------------------------------------------- subcommands


def test_verify_hypergeom(capsys):
    assert main(["verify", "--suite", "hypergeom"]) == 0
    out = capsys.readouterr().out
    assert out.count("PASS") == 3 and "FAIL" not in out


def test_stationary_outputs_and_energy_round_trip(line_cfg, tmp_path, capsys):
    assert main(["stationary", "--config", line_cfg]) == 0
    out = tmp_path / "out"
    report = json.loads((out / "report.json").read_text())
    assert report["converged"] and report["el_residual"] < 1e-6
    assert not list(out.glob(".tmp-*"))
    rho = read_density_csv(out / "profile.csv", N=1)
    assert rho.grid.n == 128 and rho.grid.L == pytest.approx(0.79, rel=1e-15)

    assert main(["energy", "--config", line_cfg, "--density", str(out / "profile.csv")]) == 0
    energy = json.loads(capsys.readouterr().out)
    assert set(energy) == {"Hm", "Wk", "F", "D", "hls_ratio"}
    assert abs(energy["F"] - report["F"]) <= 1e-12 * abs(report["F"])


def test_stationary_with_initial(line_cfg, line_density, tmp_path):
    assert main(["stationary", "--config", line_cfg, "--initial", line_density]) == 0
    report = json.loads((tmp_path / "out" / "report.json").read_text())
    assert report["converged"]


def test_stationary_deterministic(line_cfg, tmp_path):
    out = tmp_path / "out"
    main(["stationary", "--config", line_cfg])
    first = [(out / f).read_bytes() for f in ("profile.csv", "report.json")]
    main(["stationary", "--config", line_cfg])
    assert first == [(out / f).read_bytes() for f in ("profile.csv", "report.json")]


def test_evolve_outputs(tmp_path, line_density):
    doc = {**LINE, "evolution": {"t_end": 0.05, "output_stride": 20}, "io": {"dump_profiles": True}}
    cfg = write_config(tmp_path / "c.json", doc, tmp_path / "out")
    assert main(["evolve", "--config", cfg, "--initial", line_density]) == 0
    out = tmp_path / "out"
    rows = (out / "trace.csv").read_text().splitlines()
    assert rows[0] == "t,mass,Hm,Wk,F"
    data = np.array([[float(x) for x in r.split(",")] for r in rows[1:]])
    assert np.all(np.abs(data[:, 1] - 1) < 1e-12)
    assert np.all(np.diff(data[:, 4]) <= 1e-10)
    assert (out / "final.csv").exists()
    assert len(list(out.glob("profile_*.csv"))) == len(data)


def test_evolve_needs_line_density(tmp_path):
    cfg = write_config(tmp_path / "c.json", RADIAL, tmp_path)
    d = tmp_path / "r.csv"
    write_density_csv(d, uniform_ball(RadialGrid(4.0, 64), 3))
    assert main(["evolve", "--config", cfg, "--initial", str(d)]) == 1


def test_potential_line(tmp_path, line_cfg, line_density):
    assert main(["potential", "--config", line_cfg, "--density", line_density]) == 0
    rows = (tmp_path / "out" / "potential.csv").read_text().splitlines()
    assert rows[0] == "x,raw_riesz,S_k"
    x, raw, S = (float(v) for v in rows[64].split(","))
    assert raw == pytest.approx(-0.5 * S, rel=1e-15)


def test_potential_radial(tmp_path):
    cfg = write_config(tmp_path / "c.json", RADIAL, tmp_path)
    d = tmp_path / "r.csv"
    write_density_csv(d, uniform_ball(RadialGrid(4.0, 128), 3))
    assert main(["potential", "--config", cfg, "--density", str(d)]) == 0
    rows = (tmp_path / "potential.csv").read_text().splitlines()
    assert rows[0] == "r,raw_riesz,S_k"
    r, raw, S = (float(v) for v in rows[-1].split(","))
    assert raw == pytest.approx(1 / r, rel=1e-8)


def test_dimension_mismatch(tmp_path, line_density):
    cfg = write_config(tmp_path / "c.json", RADIAL, tmp_path)
    assert main(["energy", "--config", cfg, "--density", line_density]) == 1


def test_uniqueness_subcommand(line_cfg, tmp_path, capsys):
    assert main(["uniqueness", "--config", line_cfg]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["asserted"] is True
    assert doc["max_distance"] < 1e-4
    assert json.loads((tmp_path / "out" / "uniqueness.json").read_text()) == doc
