import json
import subprocess
import sys

import pytest

from facloc.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_gen_then_radii(tmp_path, capsys):
    pts = tmp_path / "p.csv"
    rad = tmp_path / "r.csv"
    code, _, err = run(capsys, "gen", "--n", "100", "--seed", "42", "--out", str(pts))
    assert code == 0 and "seed: 42" in err
    assert len(pts.read_text().splitlines()) == 101
    code, out, _ = run(capsys, "radii", "--in", str(pts), "--out", str(rad))
    assert code == 0
    lines = rad.read_text().splitlines()
    assert len(lines) == 101 and lines[0] == "index,x,y,r"
    summary = json.loads(out)
    assert summary["n"] == 100
    total = sum(float(line.split(",")[3]) for line in lines[1:])
    assert summary["sum_r"] == pytest.approx(total, rel=1e-12)


def test_radii_to_stdout_is_plain_csv(tmp_path, capsys):
    pts = tmp_path / "p.csv"
    run(capsys, "gen", "--n", "100", "--seed", "42", "--out", str(pts))
    code, out, err = run(capsys, "radii", "--in", str(pts))
    lines = out.splitlines()
    assert code == 0 and len(lines) == 101
    assert all(0 < float(line.split(",")[3]) <= 1 for line in lines[1:])
    assert '"sum_r"' in err


def test_gen_is_seed_reproducible(capsys):
    _, a, _ = run(capsys, "gen", "--n", "5", "--seed", "9")
    _, b, _ = run(capsys, "gen", "--n", "5", "--seed", "9")
    assert a == b and a.startswith("x,y\n")


def test_solve_exact_pair(tmp_path, capsys):
    pts = tmp_path / "pair.csv"
    pts.write_text("x,y\n0,0\n0.5,0\n")
    code, out, _ = run(capsys, "solve", "--solver", "exact", "--in", str(pts))
    assert code == 0
    sol = json.loads(out)
    assert sol["total_cost"] == pytest.approx(1.5, abs=1e-9)
    assert sol["facilities"] == [[0.25, 0.0]]


@pytest.mark.parametrize("solver", ["restricted", "greedy", "grid"])
def test_solve_other_solvers(tmp_path, capsys, solver):
    pts = tmp_path / "p.csv"
    run(capsys, "gen", "--n", "12", "--out", str(pts))
    code, out, _ = run(capsys, "solve", "--solver", solver, "--in", str(pts))
    assert code == 0 and json.loads(out)["solver"] == solver


def test_exit_1_on_size_limit(tmp_path, capsys):
    pts = tmp_path / "p.csv"
    run(capsys, "gen", "--n", "11", "--out", str(pts))
    code, _, err = run(capsys, "solve", "--solver", "exact", "--in", str(pts))
    assert code == 1 and "error" in err


def test_exit_1_on_bad_csv(tmp_path, capsys):
    pts = tmp_path / "p.csv"
    pts.write_text("x,y\n0.1,0.1\n2,0.5\n")
    code, _, err = run(capsys, "radii", "--in", str(pts))
    assert code == 1 and "line 3" in err


def test_exit_1_on_missing_file(capsys):
    code, _, _ = run(capsys, "radii", "--in", "/nonexistent/p.csv")
    assert code == 1


def test_exit_2_on_usage_errors(tmp_path, capsys):
    assert run(capsys, "gen", "--bogus")[0] == 2
    assert run(capsys, "frobnicate")[0] == 2
    assert run(capsys, "radii")[0] == 2
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"nope": 1}))
    assert run(capsys, "gen", "--config", str(cfg))[0] == 2
    assert run(capsys, "experiment", "scaling", "--n", "64,32", "--trials", "2")[0] == 2


def test_exit_3_when_verify_fails(capsys):
    code, out, _ = run(capsys, "verify", "--groups", "radii", "--instances", "3", "--inject-fault")
    assert code == 3
    assert "FAIL ball_count" in out
    assert "counterexample for ball_count" in out


def test_verify_passes(tmp_path, capsys):
    report = tmp_path / "rep.json"
    code, out, _ = run(
        capsys, "verify", "--instances", "10", "--exact-instances", "5", "--increment-instances", "5",
        "--report", str(report),
    )
    assert code == 0
    assert all(line.startswith("PASS") for line in out.splitlines())
    assert json.loads(report.read_text())["passed"] is True


def test_config_precedence(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"n": 7, "seed": 3}))
    _, out, err = run(capsys, "gen", "--config", str(cfg))
    assert len(out.splitlines()) == 8 and "seed: 3" in err
    # a flag beats the config file
    _, out, err = run(capsys, "gen", "--config", str(cfg), "--n", "2", "--seed", "4")
    assert len(out.splitlines()) == 3 and "seed: 4" in err
    _, out2, _ = run(capsys, "gen", "--n", "2", "--seed", "4")
    assert out == out2
    # defaults when neither is given
    _, out, err = run(capsys, "gen")
    assert len(out.splitlines()) == 101 and "seed: 0" in err


def test_experiment_scaling_outputs(tmp_path, capsys):
    out_path = tmp_path / "s.json"
    code, _, err = run(
        capsys, "experiment", "scaling", "--n", "32,64", "--trials", "2", "--workers", "1",
        "--out", str(out_path), "--csv", str(tmp_path / "s.csv"), "--plot-dir", str(tmp_path / "plots"),
    )
    assert code == 0 and "mean exponent" in err
    data = json.loads(out_path.read_text())
    assert data["kind"] == "scaling" and data["config"]["n_list"] == [32, 64]
    assert (tmp_path / "s.json.timing.json").exists()
    assert len((tmp_path / "s.csv").read_text().splitlines()) == 5
    assert (tmp_path / "plots").is_dir()


def test_experiment_concentration_and_increment(capsys):
    code, out, err = run(capsys, "experiment", "concentration", "--n", "16,32", "--trials", "3", "--workers", "1")
    assert code == 0 and "low confidence" in err
    assert json.loads(out)["low_confidence"] is True
    code, out, _ = run(capsys, "experiment", "increment", "--n-max", "64", "--m-min", "1", "--trials", "3", "--workers", "1")
    assert code == 0 and json.loads(out)["kind"] == "increment"


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "facloc", "gen", "--n", "3"], capture_output=True, text=True)
    assert res.returncode == 0 and len(res.stdout.splitlines()) == 4


@pytest.mark.slow
def test_experiment_scaling_exponent_from_cli(tmp_path, capsys):
    out_path = tmp_path / "s.json"
    code, _, _ = run(
        capsys, "experiment", "scaling", "--statistic", "cost_greedy", "--n", "1024,4096,16384,65536",
        "--trials", "30", "--seed", "7", "--out", str(out_path),
    )
    assert code == 0
    assert 0.60 <= json.loads(out_path.read_text())["fits"]["cost_greedy"]["exponent"] <= 0.73
