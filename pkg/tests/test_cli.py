import json

import numpy as np
import pytest

from spectra.cli import (
    ConfigError,
    ExperimentConfig,
    compare_truncations,
    cover_for,
    main,
)
from spectra.intervals import normalize, read_cover, write_cover
from spectra.s2 import diagonal_operator, free_laplacian_z


def _run(tmp_path, *argv):
    code = main(["--out", str(tmp_path), *argv])
    return code


def _load(path):
    return json.loads(path.read_text())


def test_amo_size_report(tmp_path):
    assert _run(tmp_path, "amo", "--lambda", "0.5", "--alpha", "golden", "--tol", "1e-3",
                "--metrics", "measure,components,capacity") == 0
    rep = _load(tmp_path / "amo.json")
    assert rep["measure"] >= 2.0 and rep["capacity"] >= 1.0
    assert rep["parameters"]["params"]["lambda"] == 0.5 and "version" in rep
    cover = read_cover(tmp_path / "amo.cover")
    assert len(cover) == rep["components"] and cover.error == rep["cover_error"]


def test_penrose_graph_export(tmp_path):
    assert _run(tmp_path, "penrose", "--model", "t1", "--level", "2", "--export-graph") == 0
    rep = _load(tmp_path / "penrose-t1-L2.json")
    assert (rep["nodes"], rep["edges"], rep["tiles"]) == (130, 185, 130)
    head = (tmp_path / "penrose-t1-L2.edges").read_text().splitlines()[0]
    assert head == "130 185 T1 2"


def test_penrose_desk_limit(tmp_path):
    assert _run(tmp_path, "penrose", "--level", "7") == 2


def test_synthetic_cantor_boxdim(tmp_path):
    assert _run(tmp_path, "synthetic-cantor", "--depth", "10", "--boxdim") == 0
    rep = _load(tmp_path / "synthetic-cantor.json")
    assert abs(rep["boxdim"]["slope"] - np.log(2) / np.log(3)) <= 0.01
    assert rep["measure"] == (2 / 3) ** 10 or abs(rep["measure"] - (2 / 3) ** 10) < 1e-15
    assert rep["components"] == 1024
    assert (tmp_path / "synthetic-cantor.scaling").exists()


def test_synthetic_cantor_towers(tmp_path):
    assert _run(tmp_path, "synthetic-cantor", "--depth", "10", "--n1", "10", "--n2", "10") == 0
    rep = _load(tmp_path / "synthetic-cantor.json")
    assert rep["towers"] == {"measure_zero": 1, "finitely_many_components": 0}


def test_diagonal_drill_route(tmp_path):
    assert _run(tmp_path, "diagonal", "--entries", "0,1", "--route", "s2", "--n2", "10") == 0
    c = read_cover(tmp_path / "diagonal.cover")
    assert c.contains([0.0, 1.0]).all()
    assert c.issubset(normalize([(-0.2, 0.2), (0.8, 1.2)]))


def test_diagonal_certified_route(tmp_path):
    assert _run(tmp_path, "diagonal", "--entries", "1,0,1", "--route", "s1") == 0
    c = read_cover(tmp_path / "diagonal.cover")
    assert c.bounds.tolist() == [[0.0, 0.0], [1.0, 1.0]]


def test_reports_are_deterministic(tmp_path):
    argv = ["--out", str(tmp_path), "--seed", "7", "boxdim", "--model", "synthetic-cantor",
            "--depth", "8", "--k-lo", "2", "--k-hi", "9", "--trials", "20"]
    outputs = []
    for _ in range(2):
        assert main(argv) == 0
        outputs.append(((tmp_path / "synthetic-cantor.json").read_bytes(),
                        (tmp_path / "synthetic-cantor.scaling").read_bytes()))
    assert outputs[0] == outputs[1]


def test_cover_files_round_trip(tmp_path):
    assert _run(tmp_path, "fibonacci", "--lambda", "1.25", "--k", "8") == 0
    c = read_cover(tmp_path / "fibonacci.cover")
    cfg = ExperimentConfig("fibonacci", params={"lambda": 1.25, "k": 8})
    assert c == cover_for(cfg)


def test_capacity_and_gaps_commands(tmp_path):
    p = write_cover(normalize([(0, 1), (2, 3), (5, 6)]), tmp_path / "c.cover")
    assert _run(tmp_path, "capacity", "--cover", str(p)) == 0
    assert _load(tmp_path / "capacity.json")["capacity"] > 1.0
    assert _run(tmp_path, "gaps", "--cover", str(p), "--thresholds", "0.4,0.75") == 0
    assert _load(tmp_path / "gaps.json")["gaps"]["counts"] == [1, 2]


def test_numerical_failure_exit_code(tmp_path):
    p = write_cover(normalize([(-2.0, -1.0), (0.0, 1e-20)]), tmp_path / "thin.cover")
    assert _run(tmp_path, "capacity", "--cover", str(p)) == 3


def test_config_errors(tmp_path):
    assert _run(tmp_path, "diagonal", "--entries", "0,1", "--route", "s3") == 2
    assert _run(tmp_path, "amo") == 2
    assert _run(tmp_path, "run", "--config", str(tmp_path / "missing.json")) == 2
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"model": "penrose-t1", "route": "s1"}))
    assert _run(tmp_path, "run", "--config", str(bad)) == 2
    bad.write_text(json.dumps({"model": "amo", "metrics": ["volume"]}))
    assert _run(tmp_path, "run", "--config", str(bad)) == 2
    with pytest.raises(ConfigError):
        ExperimentConfig("opmat", route="s1")


def test_run_from_config(tmp_path):
    cfg = tmp_path / "exp.json"
    cfg.write_text(json.dumps({"model": "fibonacci", "params": {"lambda": 0.75, "k": 8}, "metrics": ["measure", "components"]}))
    assert _run(tmp_path, "run", "--config", str(cfg)) == 0
    rep = _load(tmp_path / "fibonacci.json")
    assert rep["components"] == 26


def test_compare_truncations_diagonal_methods_agree():
    op = diagonal_operator([0.0, 1.0, 2.5, 2.5], 200)
    rows = compare_truncations(op, [20, 40], (-1.0, 3.0), 0.05)
    for r in rows:
        errs = [r[m]["max_error"] for m in ("finite_section", "finite_tiling", "compspec")]
        assert max(errs) < 1e-6


def test_compare_truncations_free_laplacian_no_outside_pollution():
    op = free_laplacian_z(1201)
    rows = compare_truncations(op, [100, 200], (-3.0, 3.0), 0.05)
    for r in rows:
        # eigenvalues of the finite section stay inside [-2, 2], so the error
        # is only the reference floor of Phi
        floor = r["compspec"]["max_error"]
        assert r["finite_section"]["max_error"] <= floor + 1e-4
        assert r["compspec"]["delta_star"] <= 0.1


def test_compare_truncations_cli(tmp_path):
    code = _run(tmp_path, "compare-truncations", "--model", "diagonal", "--entries", "0,1",
                "--sizes", "20,40", "--window=-1:2", "--spacing", "0.05")
    assert code == 0
    rows = _load(tmp_path / "compare.json")["rows"]
    assert [r["n"] for r in rows] == [20, 40]
