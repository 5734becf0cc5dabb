import csv
import json
import subprocess
import sys

import pytest

from rda.cli import config_from_args, main, read_config
from rda.experiments import ConfigError, ExperimentConfig, dof_ratio, parse_h
from rda.mesh import bundled_mesh_path
from rda.report import ConvergenceReport, read_csv


def rows(path):
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


def test_parse_h():
    assert parse_h("1/10") == 0.1
    assert parse_h(0.25) == 0.25
    for bad in ("x", "0", "-1/4", "1/0"):
        with pytest.raises(ConfigError):
            parse_h(bad)


def test_defaults_resolved():
    cfg = ExperimentConfig().resolved()
    assert cfg.problem == "example1" and cfg.ms == [1, 2, 3, 4]
    assert cfg.hs == [0.1, 0.05, 0.025, 0.0125]
    assert cfg.thresholds == {1: 8, 2: 10, 3: 15, 4: 21}
    assert cfg.mu == 15.0 and cfg.tol == 1e-8 and cfg.restart == 100
    cfg3 = ExperimentConfig(experiment="precond-bench", dim=3).resolved()
    assert cfg3.problem == "example7" and cfg3.thresholds == {1: 10, 2: 19, 3: 38}
    assert cfg3.thetas == [-1, 1]


def test_polygon_defaults():
    cfg = ExperimentConfig(mesh_files=[bundled_mesh_path("voronoi_64")], ms=[1, 2]).resolved()
    assert cfg.problem == "example5" and cfg.thresholds == {1: 8, 2: 15} and cfg.hs == []


@pytest.mark.parametrize("kw", [
    dict(experiment="bogus"), dict(dim=4), dict(hs=["1/20", "1/10"]), dict(hs=["0.3"]),
    dict(ms=[5]), dict(dim=3, ms=[4]), dict(ms=[0]), dict(thetas=[0]), dict(mu=0),
    dict(preconds=["amg"]), dict(problem="nope"), dict(mesh_files=["/no/such.poly"]),
    dict(restart=0), dict(tol=2.0), dict(mg_coarse="x"), dict(dim=3, problem="example1"),
    dict(dim=3, mesh_files=["x.poly"]), dict(domain=((0, 1),)),
])
def test_validation(kw):
    with pytest.raises(ConfigError):
        ExperimentConfig(**kw).resolved()


def test_config_file_and_override(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text("# sample\nexperiment = condition\nm = 1,2\nh = 1/2, 1/4\n"
                    "theta = -1\npatch_threshold = 1:9, 2:12\nmu = 20   # penalty\n"
                    "problem = example4\n")
    assert read_config(path)["mu"] == "20"
    cfg = config_from_args(["--config", str(path), "--mu", "30", "--out", str(tmp_path)])
    assert cfg.experiment == "condition" and cfg.ms == [1, 2] and cfg.hs == [0.5, 0.25]
    assert cfg.mu == 30.0 and cfg.thresholds == {1: 9, 2: 12}
    cfg = config_from_args(["--config", str(path), "--patch-threshold", "14"])
    assert cfg.thresholds == {1: 14, 2: 14}


def test_negative_list_values():
    cfg = config_from_args(["--theta", "-1,1", "--domain", "-1,1,-1,1", "--h", "1/2"])
    assert cfg.thetas == [-1, 1] and cfg.domain == ((-1.0, 1.0), (-1.0, 1.0))
    assert config_from_args(["--theta", "-1", "--h", "1/2"]).thetas == [-1]


def test_config_file_errors(tmp_path):
    path = tmp_path / "bad.cfg"
    path.write_text("colour = blue\n")
    with pytest.raises(ConfigError, match="bad.cfg:1"):
        read_config(path)
    path.write_text("m = one\n")
    with pytest.raises(ConfigError):
        config_from_args(["--config", str(path)])


def test_main_reports_config_errors(capsys):
    assert main(["--m", "9"]) == 2
    assert "rda: error" in capsys.readouterr().err
    assert main(["--config", "/no/such/file"]) == 2


def test_main_reports_unisolvence(tmp_path, capsys):
    args = ["--h", "1/2,1/4", "--m", "1", "--patch-threshold", "1", "--out", str(tmp_path)]
    assert main(args) == 1
    assert "not unisolvent" in capsys.readouterr().err
    with pytest.warns(UserWarning):
        assert main(args + ["--allow-fallback"]) == 0


def small_convergence(out, extra=()):
    return main(["--experiment", "convergence", "--h", "1/2,1/4,1/8", "--m", "1,2",
                 "--out", str(out), "--deterministic", *extra])


def test_convergence_outputs_deterministic(tmp_path, capsys):
    a, b = tmp_path / "a", tmp_path / "b"
    assert small_convergence(a, ["--svg"]) == 0
    assert small_convergence(b) == 0
    assert "m=1:" in capsys.readouterr().out
    for name in ("convergence_m1.csv", "convergence_m2.csv", "orders.csv"):
        assert (a / name).read_bytes() == (b / name).read_bytes()
    rep = read_csv(a / "convergence_m2.csv")
    assert [r.n_e for r in rep.rows] == [32, 128, 512]
    assert all(r.seconds == 0.0 for r in rep.rows)
    assert (a / "convergence.svg").exists()
    manifest = json.loads((a / "manifest_convergence.json").read_text())
    assert manifest["config"]["ms"] == [1, 2]
    assert "grid spacing" in manifest["mesh_convention"] and manifest["version"]


def test_manufactured_is_reproduced(tmp_path):
    cfg = ExperimentConfig(problem="manufactured:2", hs=["1/4", "1/8", "1/16"], ms=[2, 3],
                           out=str(tmp_path))
    from rda.experiments import run_convergence

    reports = run_convergence(cfg)
    for rep in reports.values():
        assert rep.column("l2").max() <= 1e-8
        assert rep.column("energy").max() <= 1e-8


def test_iterative_path_matches_direct(tmp_path):
    from rda.experiments import run_convergence

    base = dict(problem="example4", hs=["1/4", "1/8"], ms=[2], out=str(tmp_path))
    direct = run_convergence(ExperimentConfig(**base))[2]
    iterative = run_convergence(ExperimentConfig(direct_limit=10, **base))[2]
    assert all(r.iters > 0 for r in iterative.rows)
    for a, b in zip(direct.rows, iterative.rows):
        assert b.l2 == pytest.approx(a.l2, rel=1e-6)


def test_polygonal_convergence(tmp_path):
    files = ",".join(bundled_mesh_path(f"voronoi_{n}") for n in (64, 256, 1024))
    assert main(["--mesh-file", files, "--m", "1,2", "--out", str(tmp_path)]) == 0
    rep = read_csv(tmp_path / "convergence_m1.csv")
    assert [r.n_e for r in rep.rows] == [64, 256, 1024]
    assert rep.rows[-1].l2 < rep.rows[0].l2 / 4


def test_condition_table(tmp_path):
    assert main(["--experiment", "condition", "--h", "1/4,1/8", "--m", "0,1", "--out",
                 str(tmp_path), "--theta", "-1,1"]) == 0
    table = rows(tmp_path / "condition.csv")
    assert len(table) == 8
    for r in table:
        if r["m"] == "0":
            assert float(r["kappa_pre"]) == pytest.approx(1.0, abs=1e-9)
    fine = [r for r in table if r["m"] == "1" and r["theta"] == "-1" and r["h"] == "0.125"][0]
    assert 2.5 <= float(fine["ratio"]) <= 6


def test_condition_size_guard(tmp_path):
    with pytest.raises(ConfigError, match="dense_cond_limit"):
        from rda.experiments import run_condition

        run_condition(ExperimentConfig(experiment="condition", hs=["1/4"], ms=[1],
                                       dense_cond_limit=10, out=str(tmp_path)))


def test_precond_bench_records_failures(tmp_path):
    assert main(["--experiment", "precond-bench", "--h", "1/4,1/8", "--m", "1",
                 "--precond", "a0-mg,jacobi,none", "--maxit", "40", "--out", str(tmp_path),
                 "--deterministic", "--dump-matrix"]) == 0
    bench = rows(tmp_path / "precond_bench.csv")
    assert len(bench) == 12
    mg = [r for r in bench if r["precond"] == "a0-mg"]
    assert all(r["converged"] == "True" for r in mg)
    assert any(r["converged"] == "False" for r in bench if r["precond"] == "none")
    table = rows(tmp_path / "precond_table.csv")
    assert table[0]["m"] == "1" and "theta=-1 1/h=4" in table[0]
    assert list(tmp_path.glob("matrix_*.mtx"))


def test_precond_bench_polygonal_uses_direct(tmp_path):
    assert main(["--experiment", "precond-bench", "--mesh-file", bundled_mesh_path("voronoi_64"),
                 "--m", "1", "--precond", "a0-mg", "--out", str(tmp_path)]) == 0
    bench = rows(tmp_path / "precond_bench.csv")
    assert {r["used"] for r in bench} == {"a0-direct"}


def test_dg_compare_small(tmp_path):
    from rda.experiments import run_dg_compare

    res = run_dg_compare(ExperimentConfig(experiment="dg-compare", hs=["1/2", "1/4", "1/8"],
                                          ms=[1, 2], out=str(tmp_path), ))
    for m, (rda, dg, ratio) in res.items():
        assert all(d.dofs == r.dofs * (3 if m == 1 else 6) for r, d in zip(rda.rows, dg.rows))
        assert 0 < ratio < 10
    assert (tmp_path / "dof_ratio.csv").exists()


def test_dof_ratio_oracle():
    # DG error e = dofs^-1, RDA error e = (2 dofs)^-1: RDA needs half the dofs
    rda, dg = ConvergenceReport(), ConvergenceReport()
    for n in (100, 400, 1600):
        dg.add(h=1.0, n_e=n, dofs=n, l2=1 / n, energy=0, energy_tilde=0)
        rda.add(h=1.0, n_e=n, dofs=n, l2=1 / (2 * n), energy=0, energy_tilde=0)
    assert dof_ratio(rda, dg) == pytest.approx(0.5, rel=1e-12)


def test_module_entry_point(tmp_path):
    out = subprocess.run([sys.executable, "-m", "rda", "--help"], capture_output=True, text=True)
    assert out.returncode == 0 and "--experiment" in out.stdout
