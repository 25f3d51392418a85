"""End-to-end command-line checks through cli_dispatch."""

import json

import numpy as np
import pytest

from compnull.cli import cli_dispatch, main
from compnull.latin3 import cyclic_latin, square_to_json
from compnull.mediation import MediationDataset, product_method_stats
from compnull.regions import deserialize
from compnull.statmath import std_normal_quantile


def _run(capsys, *argv):
    code = cli_dispatch(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def test_help_exits_zero(capsys):
    assert cli_dispatch(["--help"]) == 0
    assert "compnull" in capsys.readouterr().out


def test_unknown_command(capsys):
    code, _, err = _run(capsys, "frobnicate")
    assert code == 1
    assert "invalid choice" in err


def test_missing_required_argument(capsys):
    code, _, err = _run(capsys, "test", "--zx", "1.0")
    assert code == 1
    assert "--zy" in err


def test_decision_worked_example(capsys):
    zx = str(std_normal_quantile(4.0 / 5.0))
    zy = str(std_normal_quantile(5.0 / 7.0))
    code, out, _ = _run(capsys, "test", "--zx", zx, "--zy", zy,
                        "--alpha", str(1.0 / 3.0))
    assert code == 0
    doc = json.loads(out)
    assert doc["method"] == "minimax"
    assert doc["reject"] is True
    assert doc["rejection_probability"] == 1.0

    code, out, _ = _run(capsys, "test", "--zx", zx, "--zy", zy, "--alpha", "0.5")
    assert code == 0
    assert json.loads(out)["reject"] is False


def test_decision_needs_alpha_or_region(capsys):
    code, _, err = _run(capsys, "test", "--zx", "1", "--zy", "1")
    assert code == 1
    assert "--alpha" in err


def test_js_decision(capsys):
    code, out, _ = _run(capsys, "test", "--zx", "3", "--zy", "3",
                        "--alpha", "0.05", "--method", "js")
    assert code == 0
    doc = json.loads(out)
    assert doc["reject"] is True
    assert doc["p_value"] == pytest.approx(0.0026997960632601891, rel=1e-12)


def test_region_round_trip_matches_direct_decision(tmp_path, capsys):
    path = str(tmp_path / "mm.region.json")
    assert _run(capsys, "region", "build", "--alpha", "0.2", "--out", path)[0] == 0
    assert deserialize(open(path).read()).kind == "minimax"

    direct = _run(capsys, "test", "--zx", "0.9", "--zy", "1.1", "--alpha", "0.2")
    via_file = _run(capsys, "test", "--zx", "0.9", "--zy", "1.1", "--region", path)
    assert direct[0] == via_file[0] == 0
    assert direct[1] == via_file[1]


def test_region_file_errors(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    code, _, err = _run(capsys, "test", "--region", str(bad),
                        "--zx", "1", "--zy", "1")
    assert code == 2
    assert "error" in err

    code, _, err = _run(capsys, "test", "--region", str(tmp_path / "gone.json"),
                        "--zx", "1", "--zy", "1")
    assert code == 2


def test_three_factor_decision(capsys):
    third = str(1.0 / 3.0)
    code, out, _ = _run(capsys, "test3", "--z", "0.7,0.2,1.5", "--alpha", third)
    assert code == 0
    doc = json.loads(out)
    assert doc["reject"] is True
    assert doc["order"] == 3
    assert doc["z"] == [0.7, 0.2, 1.5]

    code, out, _ = _run(capsys, "test3", "--z", "0.7,0.2,0.7", "--alpha", third)
    assert code == 0
    assert json.loads(out)["reject"] is False


def test_three_factor_square_file(tmp_path, capsys):
    path = tmp_path / "sq.json"
    path.write_text(square_to_json(cyclic_latin(2)))
    code, out, _ = _run(capsys, "test3", "--z", "0.2,0.2,0.2", "--alpha", "0.5",
                        "--square", str(path))
    assert code == 0
    doc = json.loads(out)
    assert doc["reject"] is True and doc["order"] == 2


def test_three_factor_usage_errors(capsys):
    code, _, err = _run(capsys, "test3", "--z", "1,2", "--alpha", "0.5")
    assert code == 1
    assert "Z1,Z2,Z3" in err
    # alpha not matching the square order is a value problem
    code, _, err = _run(capsys, "test3", "--z", "1,2,3", "--alpha", "0.4")
    assert code == 1


def test_pvalue_command(capsys):
    code, out, _ = _run(capsys, "pvalue", "--zx", "2.5", "--zy", "1.0",
                        "--resolution", "10000")
    assert code == 0
    doc = json.loads(out)
    assert doc["p"] == 0.3173
    assert doc["resolution"] == 10000
    assert doc["method"] == "extended_minimax"


def test_adjust_golden(tmp_path, capsys):
    pvals = [0.001, 0.008, 0.039, 0.041, 0.042, 0.06, 0.074, 0.205, 0.212, 0.216]
    path = tmp_path / "p.csv"
    path.write_text("p\n" + "".join(f"{p}\n" for p in pvals))

    code, out, _ = _run(capsys, "adjust", "bh", "--q", "0.05", "--in", str(path))
    assert code == 0
    lines = out.strip().split("\n")
    assert lines[0] == "p,reject"
    assert lines[1] == "0.001,true"
    assert lines[2] == "0.008,true"
    assert lines[3] == "0.039,false"
    assert all(ln.endswith("false") for ln in lines[3:])

    code, out, _ = _run(capsys, "adjust", "bonferroni", "--q", "0.05",
                        "--in", str(path))
    assert code == 0
    lines = out.strip().split("\n")
    assert lines[1] == "0.001,true"
    assert all(ln.endswith("false") for ln in lines[2:])


def test_adjust_input_errors(tmp_path, capsys):
    bad = tmp_path / "bad.csv"
    bad.write_text("pval\n0.3\n")
    code, _, err = _run(capsys, "adjust", "bh", "--q", "0.05", "--in", str(bad))
    assert code == 2
    assert "header 'p'" in err
    assert _run(capsys, "adjust", "bh", "--q", "0.05",
                "--in", str(tmp_path / "gone.csv"))[0] == 2


def _write_fit_csv(path, n=40, seed=23):
    rng = np.random.Generator(np.random.Philox(seed))
    a = rng.standard_normal(n)
    m = 0.4 + 0.6 * a + rng.standard_normal(n)
    y = 1.0 + 0.5 * a + 0.8 * m + rng.standard_normal(n)
    path.write_text("y,a,m\n" + "".join(
        f"{float(yv)!r},{float(av)!r},{float(mv)!r}\n"
        for yv, av, mv in zip(y, a, m)))
    return MediationDataset(y, a, m, np.empty((n, 0)))


def test_fit_main_effects(tmp_path, capsys):
    data = _write_fit_csv(tmp_path / "d.csv")
    code, out, _ = _run(capsys, "fit", "--data", str(tmp_path / "d.csv"),
                        "--y", "y", "--a", "a", "--m", "m")
    assert code == 0
    doc = json.loads(out)
    fit, pair = product_method_stats(data)
    assert doc["model"] == "main_effects"
    assert doc["a_prime"] is None
    assert doc["n"] == 40
    assert doc["delta_x_hat"] == pytest.approx(fit.delta_x_hat, rel=1e-12)
    assert doc["zx"] == pytest.approx(pair.zx, rel=1e-12)
    assert doc["zy"] == pytest.approx(pair.zy, rel=1e-12)


def test_fit_interaction(tmp_path, capsys):
    data = _write_fit_csv(tmp_path / "d.csv")
    code, out, _ = _run(capsys, "fit", "--data", str(tmp_path / "d.csv"),
                        "--y", "y", "--a", "a", "--m", "m",
                        "--interaction", "--a-prime", "1.3", "--a-dblprime", "0.2")
    assert code == 0
    doc = json.loads(out)
    fit, _ = product_method_stats(data, "interaction", 1.3, 0.2)
    assert doc["model"] == "interaction"
    assert doc["a_prime"] == 1.3
    assert doc["delta_y_hat"] == pytest.approx(fit.delta_y_hat, rel=1e-12)


def test_fit_errors(tmp_path, capsys):
    _write_fit_csv(tmp_path / "d.csv")
    code, _, err = _run(capsys, "fit", "--data", str(tmp_path / "d.csv"),
                        "--y", "y", "--a", "a", "--m", "m",
                        "--interaction", "--a-prime", "1", "--a-dblprime", "1")
    assert code == 1
    assert "distinct" in err

    bad = tmp_path / "bad.csv"
    bad.write_text("y,a,m\n1,NA,3\n")
    code, _, err = _run(capsys, "fit", "--data", str(bad),
                        "--y", "y", "--a", "a", "--m", "m")
    assert code == 2
    assert "row 1" in err


def test_simulate_power_outputs_are_stable(tmp_path, capsys):
    argv = ["simulate", "power", "--methods", "minimax,js", "--deltas",
            "0,0;0.3,0.3", "--n", "20", "--reps", "3000", "--seed", "11"]
    f1, f2 = str(tmp_path / "a.csv"), str(tmp_path / "b.csv")
    assert cli_dispatch(argv + ["--out", f1]) == 0
    assert cli_dispatch(argv + ["--out", f2]) == 0
    assert capsys.readouterr().out == ""
    text = open(f1).read()
    assert text == open(f2).read()
    assert text.startswith("delta_x,delta_y,method,alpha,n,reps,reject_rate,mc_se,seed\n")
    assert len(text.strip().split("\n")) == 1 + 2 * 2


def test_simulate_power_bad_method(capsys):
    code, _, err = _run(capsys, "simulate", "power", "--methods", "wald",
                        "--reps", "10", "--seed", "1")
    assert code == 1
    assert "unknown method" in err


def test_simulate_ecdf_command(capsys):
    code, out, _ = _run(capsys, "simulate", "ecdf", "--reps", "40",
                        "--resolution", "100", "--seed", "2")
    assert code == 0
    lines = out.strip().split("\n")
    assert lines[0] == "method,p_value,ecdf"
    assert len(lines) == 1 + 80


def test_simulate_sobel_density_command(capsys):
    code, out, _ = _run(capsys, "simulate", "sobel-density", "--delta-x", "0,0.3",
                        "--n", "30", "--reps", "20", "--seed", "3")
    assert code == 0
    lines = out.strip().split("\n")
    assert lines[0] == "delta_x,sample"
    assert len(lines) == 1 + 40
    code, _, err = _run(capsys, "simulate", "sobel-density", "--delta-x", "zz",
                        "--reps", "5")
    assert code == 1


def test_bayes_solve_and_reuse(tmp_path, capsys):
    path = str(tmp_path / "bayes.region.json")
    code, _, _ = _run(capsys, "bayes", "solve", "--alpha", "0.05", "--m", "8",
                      "--out", path)
    assert code == 0
    region = deserialize(open(path).read())
    assert region.kind == "bayes"

    # far outside the box both coordinates clear the outside rule
    code, out, _ = _run(capsys, "test", "--region", path, "--zx", "4", "--zy", "4")
    assert code == 0
    doc = json.loads(out)
    assert doc["method"] == "bayes"
    assert doc["rejection_probability"] == 1.0 and doc["reject"] is True

    code, _, _ = _run(capsys, "simulate", "power", "--methods", "bayes",
                      "--bayes-region", path, "--reps", "2000", "--seed", "3")
    assert code == 0


def test_bayes_solve_usage_error(capsys):
    code, _, err = _run(capsys, "bayes", "solve", "--alpha", "0.05", "--m", "2")
    assert code == 1
    assert "m must be" in err


def test_main_alias(capsys):
    assert main(["--help"]) == 0
    capsys.readouterr()
