import json

import numpy as np
import pytest

from natmap.cli import EXIT_CONFIG, EXIT_FAILED, EXIT_OK, load_config, main
from natmap.errors import ConfigError
from natmap.geometry import Space, random_boundary_point
from natmap.io import write_map_csv, write_measure_csv
from natmap.measures import BoundaryMeasure, cross_polytope_measure, identity_boundary_map, random_measure


def run(tmp_path, command, config=None, *extra):
    argv = [command]
    if config is not None:
        path = tmp_path / "config.json"
        path.write_text(json.dumps(config))
        argv += ["--config", str(path)]
    out = tmp_path / "report.json"
    code = main(argv + ["--out", str(out)] + list(extra))
    report = json.loads(out.read_text()) if out.exists() else None
    return code, report


def strip(report):
    report = dict(report)
    report.pop("timings")
    return report


def test_busemann_check_default(tmp_path):
    code, report = run(tmp_path, "busemann-check")
    assert code == EXIT_OK
    assert report["passed"] and report["schema_version"] == 1
    assert all(p["passed"] for p in report["results"]["properties"].values())
    assert report["config"]["busemann"]["samples"] == 100


def test_busemann_check_quaternionic(tmp_path):
    code, report = run(tmp_path, "busemann-check", {"space": {"kind": "quaternionic", "p": 2},
                                                    "busemann": {"samples": 20}})
    assert code == EXIT_OK
    assert report["results"]["properties"]["hessian_spectrum"]["residual"] < 1e-8


@pytest.mark.parametrize("config", [
    {"spce": {}},
    {"space": {"kind": "complex", "p": 1}},
    {"space": {"kind": "complex", "p": 3}, "target": {"m": 2}},
    {"space": {"kind": "complex", "p": 2}, "target": {"kind": "quaternionic", "m": 3}},
    {"schema_version": 2},
    {"busemann": {"samples": 0}},
    {"busemann": {"sample": 5}},
    {"seed": -1},
])
def test_malformed_configs_exit_64(tmp_path, config, capsys):
    code, _ = run(tmp_path, "busemann-check", config)
    assert code == EXIT_CONFIG
    assert "config error" in capsys.readouterr().err


def test_unreadable_config(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text("{not json")
    assert main(["busemann-check", "--config", str(path)]) == EXIT_CONFIG


def test_reports_are_deterministic(tmp_path):
    a = tmp_path / "a"
    b = tmp_path / "b"
    a.mkdir()
    b.mkdir()
    cfg = {"seed": 99, "target": {"m": 3}, "natmap": {"mode": "random", "points": 3}}
    _, ra = run(a, "natmap", cfg)
    _, rb = run(b, "natmap", cfg)
    ra["config"].pop("output_path")
    rb["config"].pop("output_path")
    assert strip(ra) == strip(rb)
    _, rc = run(a, "natmap", cfg, "--seed", "100")
    assert rc["config"]["seed"] == 100
    assert rc["results"] != ra["results"]


def test_threads_do_not_change_results(tmp_path):
    cfg = {"seed": 5, "natmap": {"mode": "isometric", "points": 4}}
    _, one = run(tmp_path, "natmap", cfg)
    _, four = run(tmp_path, "natmap", cfg, "--threads", "4")
    assert one["results"] == four["results"]


def test_barycenter_files(tmp_path):
    space = Space.complex(2)
    sym = tmp_path / "sym.csv"
    write_measure_csv(cross_polytope_measure(space.origin()), sym)
    code, report = run(tmp_path, "barycenter", {"barycenter": {"measure_file": "sym.csv"}})
    assert code == EXIT_OK
    loc = np.array(report["results"]["location"])
    assert np.linalg.norm(loc - space.origin().rep) < 1e-8

    rng = np.random.default_rng(0)
    thetas = np.array([random_boundary_point(space, rng).rep for _ in range(3)])
    heavy = tmp_path / "heavy.csv"
    write_measure_csv(BoundaryMeasure(space, thetas, [0.6, 0.2, 0.2]), heavy)
    code, report = run(tmp_path, "barycenter", {"barycenter": {"measure_file": "heavy.csv"}})
    assert code == EXIT_OK and report["results"]["regime"] == "AtomDominated"

    pair = tmp_path / "pair.csv"
    write_measure_csv(BoundaryMeasure(space, thetas[:2], [1.0, 1.0]), pair)
    code, report = run(tmp_path, "barycenter", {"barycenter": {"measure_file": "pair.csv"}})
    assert code == EXIT_FAILED
    assert report["results"]["error"] == "ExcludedMeasure"


def test_barycenter_random_measure_with_equivariance(tmp_path):
    code, report = run(tmp_path, "barycenter", {"space": {"kind": "quaternionic", "p": 2}})
    assert code == EXIT_OK
    assert report["results"]["equivariance"]["max_distance"] < 1e-8


def test_natmap_symmetric_gives_unit_jacobian(tmp_path):
    code, report = run(tmp_path, "natmap", {"target": {"m": 3}, "natmap": {"points": 4}})
    assert code == EXIT_OK
    for row in report["results"]["per_point"]:
        assert abs(row["jac"] - 1) < 1e-6


def test_natmap_collapse_is_flagged(tmp_path):
    code, report = run(tmp_path, "natmap", {"natmap": {"mode": "collapse"}})
    summary = report["results"]["summary"]
    assert code == EXIT_OK
    assert summary["near_elementary"]
    assert summary["max_jac"] < 0.1
    code, _ = run(tmp_path, "natmap", {"natmap": {"mode": "collapse"}}, "--strict")
    assert code == EXIT_FAILED


def test_natmap_from_files(tmp_path):
    src, tgt = Space.complex(2), Space.complex(3)
    beta = random_measure(src, 4, 7)
    write_measure_csv(beta, tmp_path / "seed.csv")
    write_map_csv(identity_boundary_map(beta, tgt), tmp_path / "map.csv")
    (tmp_path / "points.json").write_text(json.dumps([src.origin().rep.tolist()]))
    cfg = {"target": {"m": 3}, "natmap": {"mode": "files", "measure_file": "seed.csv",
                                          "map_file": "map.csv", "points_file": "points.json"}}
    code, report = run(tmp_path, "natmap", cfg)
    assert code == EXIT_OK
    assert report["results"]["summary"]["points"] == 1
    assert report["results"]["per_point"][0]["jac"] <= 1 + 1e-6


def test_files_mode_needs_files(tmp_path):
    code, _ = run(tmp_path, "natmap", {"natmap": {"mode": "files"}})
    assert code == EXIT_CONFIG


def test_spectrum_rejects_impossible_dimensions(tmp_path):
    code, _ = run(tmp_path, "spectrum", {"spectrum": {"k": 6, "d": 4}})
    assert code == EXIT_CONFIG


def test_spectrum_small_case(tmp_path):
    code, report = run(tmp_path, "spectrum", {"spectrum": {"restarts": 4, "samples": 500}})
    assert code == EXIT_OK
    checks = report["results"]["checks"]
    assert checks["maximum_value"]["passed"] and checks["vertex"]["ratio"] <= 0.549


@pytest.mark.parametrize("schedule", ["identity", "loxodromic", "mixed"])
def test_rigidity_demo(tmp_path, schedule):
    code, report = run(tmp_path, "rigidity-demo", {"target": {"m": 3}, "rigidity": {"schedule": schedule}})
    assert code == EXIT_OK
    records = report["results"]["records"]
    assert len(records) == 8
    if schedule == "identity":
        assert all(r["distance_unnormalized"] < 1e-14 for r in records)


def test_figures_written(tmp_path):
    figs = tmp_path / "figs"
    code, report = run(tmp_path, "rigidity-demo", {"rigidity": {"steps": 6}}, "--figures", str(figs))
    assert code == EXIT_OK
    assert (figs / "rigidity_demo.csv").exists()
    header = (figs / "rigidity_demo.csv").read_text().splitlines()[0]
    assert header == "n,drift,distance_unnormalized,distance_normalized"
    assert any(p.endswith(".png") for p in report["figures"])


def test_load_config_defaults():
    cfg = load_config("rigidity-demo")
    assert cfg["rigidity"]["schedule"] == "loxodromic"
    assert cfg["target"] == {"kind": "complex", "m": 2}
    with pytest.raises(ConfigError):
        load_config("rigidity-demo", {"rigidity": {"schedule": "spiral"}})
    with pytest.raises(ConfigError):
        load_config("rigidity-demo", {"command": "spectrum"})


def test_stdout_report(capsys):
    assert main(["busemann-check", "--config", "/dev/null"]) == EXIT_CONFIG
    assert main(["rigidity-demo"]) == EXIT_OK
    assert json.loads(capsys.readouterr().out)["command"] == "rigidity-demo"
