import json
import subprocess
import sys
from dataclasses import asdict
from pathlib import Path

import pytest

from regnoise.cli import (RunConfig, dump_config, load_config, main,
                          parse_sparse_vector, run)


def write_config(tmp_path: Path, name="run.ini", **overrides) -> Path:
    cfg = RunConfig(**overrides)
    path = tmp_path / name
    path.write_text(dump_config(cfg), encoding="utf8")
    return path


def quick_common(samples=64):
    return dict(modes=8, samples=samples, dt=2.0**-6, t_end=0.5, store_every=8,
                seed=11)


def run_dir_of(capsys) -> Path:
    return Path(capsys.readouterr().out.strip().splitlines()[-1])


def test_config_round_trip(tmp_path):
    cfg = RunConfig(modes=17, gamma=0.25, dt=2.0**-9, stab_eps="0.5,0.25",
                    window_override=True, ll_oracle=False)
    path = tmp_path / "cfg.ini"
    path.write_text(dump_config(cfg), encoding="utf8")
    again = load_config(path)
    assert asdict(again) == asdict(cfg)


def test_sparse_vector_parsing():
    v = parse_sparse_vector("1:0.5,3:-2.0", 4)
    assert v.tolist() == [0.5, 0.0, -2.0, 0.0]
    with pytest.raises(Exception):
        parse_sparse_vector("5:1.0", 4)
    with pytest.raises(Exception):
        parse_sparse_vector("a:b", 4)


def test_missing_config_exits_2(tmp_path):
    assert main(["basis", "--config", str(tmp_path / "nope.ini")]) == 2


def test_unknown_key_exits_2(tmp_path):
    path = tmp_path / "bad.ini"
    path.write_text("[basis]\nwibble = 3\n", encoding="utf8")
    assert main(["basis", "--config", str(path)]) == 2


def test_bad_value_exits_2(tmp_path):
    path = tmp_path / "bad.ini"
    path.write_text("[basis]\nmodes = many\n", encoding="utf8")
    assert main(["basis", "--config", str(path)]) == 2


def test_window_violation_exits_3_and_override_runs(tmp_path, capsys):
    # d=2 requires gamma > 0
    path = write_config(tmp_path, dimension=2, gamma=0.0, modes=256,
                        trace_cutoffs="16,32,64,128,256",
                        output_dir=str(tmp_path / "runs"))
    assert main(["trace-check", "--config", str(path)]) == 3
    capsys.readouterr()
    code = main(["trace-check", "--config", str(path), "--override-window"])
    assert code == 0  # analytic 'diverges' corroborated numerically
    summary = json.loads((run_dir_of(capsys) / "summary.json").read_text())
    assert summary["fitted"]["analytic_verdict"] == "diverges"
    assert summary["admissible"] is False


def test_trace_check_converging_case(tmp_path, capsys):
    path = write_config(tmp_path, modes=1000, trace_cutoffs="10,50,100,500,1000",
                        output_dir=str(tmp_path / "runs"))
    assert main(["trace-check", "--config", str(path)]) == 0
    run_dir = run_dir_of(capsys)
    summary = json.loads((run_dir / "summary.json").read_text())
    assert summary["fitted"]["analytic_verdict"] == "converges"
    assert summary["passed"] is True
    assert (run_dir / "trace.csv").exists()
    assert (run_dir / "run.log").exists()
    assert (run_dir / "config.ini").exists()
    reloaded = load_config(run_dir / "config.ini")
    assert reloaded.trace_cutoffs == "10,50,100,500,1000"


def test_basis_run_writes_eigenvalue_table(tmp_path, capsys):
    path = write_config(tmp_path, modes=6, output_dir=str(tmp_path / "runs"))
    assert main(["basis", "--config", str(path)]) == 0
    run_dir = run_dir_of(capsys)
    lines = (run_dir / "eigenvalues.csv").read_text().splitlines()
    assert lines[0] == "index,eigenvalue,label"
    assert len(lines) == 7


def test_simulate_reruns_are_byte_identical(tmp_path, capsys, monkeypatch):
    path = write_config(tmp_path, **quick_common(samples=3), drift_kind="zero",
                        sim_dump_max=4, output_dir=str(tmp_path / "runs"))
    assert main(["simulate", "--config", str(path)]) == 0
    first = run_dir_of(capsys)
    assert main(["simulate", "--config", str(path)]) == 0
    second = run_dir_of(capsys)
    for name in ("summary.csv", "trajectory.csv"):
        assert (first / name).read_bytes() == (second / name).read_bytes()
    monkeypatch.setenv("REGNOISE_THREADS", "4")
    assert main(["simulate", "--config", str(path)]) == 0
    third = run_dir_of(capsys)
    assert (first / "summary.csv").read_bytes() == (third / "summary.csv").read_bytes()


def test_simulate_free_case_passes_decomposition(tmp_path, capsys):
    path = write_config(tmp_path, **quick_common(), drift_kind="zero",
                        output_dir=str(tmp_path / "runs"))
    assert main(["simulate", "--config", str(path)]) == 0
    summary = json.loads((run_dir_of(capsys) / "summary.json").read_text())
    names = {v["name"] for v in summary["verdicts"]}
    assert "free-decomposition" in names
    assert all(v["passed"] for v in summary["verdicts"])


def test_stability_identical_starts_gives_zero_ratio(tmp_path, capsys):
    path = write_config(tmp_path, **quick_common(), stab_eps="0",
                        output_dir=str(tmp_path / "runs"))
    assert main(["stability", "--config", str(path)]) == 0
    run_dir = run_dir_of(capsys)
    rows = (run_dir / "stability.csv").read_text().splitlines()
    assert rows[0] == "eps,sup_lm_distance,ratio"
    assert [float(x) for x in rows[1].split(",")] == [0.0, 0.0, 0.0]


def test_stability_family_run(tmp_path, capsys):
    path = write_config(tmp_path, modes=8, samples=192, dt=2.0**-7, t_end=0.5,
                        store_every=8, seed=5, stab_eps="0.1,0.01,0.001",
                        output_dir=str(tmp_path / "runs"))
    code = main(["stability", "--config", str(path)])
    summary = json.loads((run_dir_of(capsys) / "summary.json").read_text())
    assert "slope" in summary["fitted"]
    assert code == 0


def test_picard_run(tmp_path, capsys):
    path = write_config(tmp_path, modes=8, samples=96, dt=2.0**-7, t_end=0.25,
                        seed=6, store_every=4, pic_iterations=4, pic_t_prime="0.25",
                        pic_check_from=2, pic_check_to=3,
                        output_dir=str(tmp_path / "runs"))
    assert main(["picard", "--config", str(path)]) == 0
    summary = json.loads((run_dir_of(capsys) / "summary.json").read_text())
    assert summary["fitted"]["t_prime"] == 0.25


def test_averaging_run_and_numerical_failure(tmp_path, capsys):
    # interval of length pi (lambda_k = k^2): its relaxation time covers the
    # probed t-grid, so the estimate tracks the rate envelope
    eig = tmp_path / "eigs.txt"
    eig.write_text("".join(f"{k * k}.0\n" for k in range(1, 9)), encoding="utf8")
    good = write_config(tmp_path, "good.ini", modes=8, boundary="custom",
                        custom_eigenvalues=str(eig), samples=4000, seed=7,
                        avg_t_exp_min=-5, avg_t_exp_max=-2,
                        output_dir=str(tmp_path / "runs"))
    assert main(["averaging", "--config", str(good)]) == 0
    summary = json.loads((run_dir_of(capsys) / "summary.json").read_text())
    assert summary["fitted"]["slope"] >= summary["fitted"]["theory_slope"] - 0.15
    # identical shifts make every estimate exactly zero: the log-log fit
    # cannot run and the runner reports a numerical failure
    bad = write_config(tmp_path, "bad.ini", modes=8, samples=100, avg_h1="1:0.5",
                       avg_h2="1:0.5", output_dir=str(tmp_path / "runs"))
    assert main(["averaging", "--config", str(bad)]) == 4


def test_sewing_run(tmp_path, capsys):
    path = write_config(tmp_path, modes=4, samples=48, seed=8,
                        sew_levels="0.5,0.25,0.125,0.0625", sew_inner=16,
                        sew_cond=32, sew_boot=100, sew_t_end=0.75,
                        output_dir=str(tmp_path / "runs"))
    assert main(["sewing-rates", "--config", str(path)]) == 0
    run_dir = run_dir_of(capsys)
    rows = (run_dir / "sewing.csv").read_text().splitlines()
    assert rows[0] == "level,defect_lm,defect_stderr,cond_lm,cond_stderr"
    summary = json.loads((run_dir / "summary.json").read_text())
    assert summary["fitted"]["defect_slope"] > 0.5


def test_lasry_lions_run(tmp_path, capsys):
    path = write_config(tmp_path, ll_points=16, ll_pairs=50, seed=9,
                        output_dir=str(tmp_path / "runs"))
    assert main(["lasry-lions", "--config", str(path)]) == 0
    summary = json.loads((run_dir_of(capsys) / "summary.json").read_text())
    names = {v["name"] for v in summary["verdicts"]}
    assert "oracle-quarter" in names


def test_dpf_check_rank_one(tmp_path, capsys):
    path = write_config(tmp_path, modes=2048, dpf_cutoffs="64,256,1024,2048",
                        dpf_pairs=500, output_dir=str(tmp_path / "runs"))
    assert main(["dpf-check", "--config", str(path)]) == 0
    summary = json.loads((run_dir_of(capsys) / "summary.json").read_text())
    assert any(v["name"] == "cauchy-tail" for v in summary["verdicts"])


def test_dpf_check_diagonal_divergence(tmp_path, capsys):
    path = write_config(tmp_path, dimension=3, gamma=0.75, alpha=0.9, modes=8192,
                        drift_kind="diagonal", drift_beta=0.14,
                        dpf_cutoffs="128,256,512,1024,2048,4096,8192",
                        dpf_pairs=2000, output_dir=str(tmp_path / "runs"))
    assert main(["dpf-check", "--config", str(path)]) == 0
    summary = json.loads((run_dir_of(capsys) / "summary.json").read_text())
    assert abs(summary["fitted"]["growth_exponent"]
               - summary["fitted"]["growth_target"]) <= 0.1


def test_summary_validates_against_shipped_schema(tmp_path, capsys):
    import jsonschema
    from regnoise.cli import _summary_schema
    path = write_config(tmp_path, modes=6, output_dir=str(tmp_path / "runs"))
    assert main(["basis", "--config", str(path)]) == 0
    summary = json.loads((run_dir_of(capsys) / "summary.json").read_text())
    jsonschema.validate(summary, _summary_schema())
    assert summary["version"].startswith("regnoise-")


def test_cli_flags_override_config(tmp_path, capsys):
    path = write_config(tmp_path, modes=6, seed=1, output_dir=str(tmp_path / "a"))
    assert main(["basis", "--config", str(path), "--seed", "99",
                 "--out", str(tmp_path / "b")]) == 0
    run_dir = run_dir_of(capsys)
    assert run_dir.parent == tmp_path / "b"
    summary = json.loads((run_dir / "summary.json").read_text())
    assert summary["seed"] == 99


def test_module_entry_point(tmp_path):
    path = write_config(tmp_path, modes=4, output_dir=str(tmp_path / "runs"))
    proc = subprocess.run([sys.executable, "-m", "regnoise.cli", "basis",
                           "--config", str(path)], capture_output=True, text=True)
    assert proc.returncode == 0
    assert Path(proc.stdout.strip()).exists()


def test_failing_verdict_exits_1(tmp_path, capsys):
    # an unreachable Cauchy tolerance makes the dpf verdict fail (the
    # constant drift keeps mass on the last mode, so the tail is nonzero)
    path = write_config(tmp_path, modes=512, dpf_cutoffs="64,128,256,512",
                        dpf_cauchy_tol=1e-30, dpf_pairs=100,
                        drift_constant="1:1.0,512:0.5", drift_kind="constant",
                        output_dir=str(tmp_path / "runs"))
    assert main(["dpf-check", "--config", str(path)]) == 1
    summary = json.loads((run_dir_of(capsys) / "summary.json").read_text())
    assert summary["passed"] is False
    assert any(not v["passed"] for v in summary["verdicts"])


def test_run_rejects_unknown_experiment():
    cfg = RunConfig(experiment="frobnicate")
    assert run(cfg)[0] == 2
