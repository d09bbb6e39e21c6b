import csv
import io
import subprocess
import sys

import pytest

from quenchlab.cli import main


def run(capsys, *argv):
    try:
        code = main(list(argv))
    except SystemExit as exc:  # argparse usage errors
        code = exc.code
    out, err = capsys.readouterr()
    return code, out, err


def test_check_conditions(capsys):
    code, out, _ = run(capsys, "check-conditions", "--alpha", "2", "--p", "9", "--eta", "2", "--mu", "1", "--lambda", "0.25")
    assert code == 0
    assert "wip=true" in out and "almost_sure=false" in out
    assert "wip_threshold_p=8" in out and "almost_sure_threshold_p=12" in out
    code, out, _ = run(capsys, "check-conditions", "--alpha", "1.8", "--eta", "2", "--mu", "1", "--lambda", "0.25", "--tau", "2.5", "--env", "stable")
    assert code == 0 and "wip=true" in out


def test_inclusion_three_by_three(capsys):
    code, out, err = run(capsys, "inclusion", "--scheme", "uprr", "--N", "3", "--M", "3")
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert len(rows) == 9
    center = next(r for r in rows if (r["i"], r["j"]) == ("2", "2"))
    assert (center["p_num"], center["p_den"]) == ("2", "3")
    assert float(center["p_float"]) == pytest.approx(2 / 3)
    assert err.strip().startswith("L,")


def test_inclusion_other_schemes(capsys):
    code, out, _ = run(capsys, "inclusion", "--scheme", "subset", "--n", "5", "--m", "2")
    assert code == 0 and out.count("\n") == 6
    code, out, _ = run(capsys, "inclusion", "--scheme", "through", "--N", "4", "--waypoint", "2,3")
    rows = list(csv.DictReader(io.StringIO(out)))
    assert next(r for r in rows if (r["i"], r["j"]) == ("2", "3"))["p_num"] == "1"
    assert run(capsys, "inclusion", "--scheme", "subset", "--n", "5")[0] == 2


def test_inclusion_infeasible(capsys):
    code, _, err = run(capsys, "inclusion", "--scheme", "through", "--N", "6", "--waypoint", "2,5", "--waypoint", "5,2")
    assert code == 3 and "infeasible" in err
    assert run(capsys, "inclusion", "--scheme", "avoid", "--N", "10", "--beta", "0.95")[0] == 3


def test_usage_errors(capsys):
    assert run(capsys, "simulate", "--config", "/nonexistent/x.ini")[0] == 2
    assert run(capsys, "simulate")[0] == 2
    assert run(capsys, "frobnicate")[0] == 2
    assert run(capsys, "check-conditions", "--alpha", "2", "--bogus", "1")[0] == 2
    assert run(capsys, "simulate", "--preset", "no-such-preset")[0] == 2


def test_bounds(capsys):
    code, out, _ = run(capsys, "bounds", "--lemma", "26", "--t", "0.5,2")
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert [r["valid"] for r in rows] == ["false", "true"]
    assert float(rows[1]["tail_raw"]) == pytest.approx(2**-1.8)
    code, out, _ = run(capsys, "bounds", "--lemma", "22", "--case", "1", "--s", "1", "--t", "1")
    row = next(csv.DictReader(io.StringIO(out)))
    assert float(row["threshold"]) == 3.0 and row["tail"] == "1.0"
    code, out, _ = run(capsys, "bounds", "--lemma", "23", "--kind", "SEC", "--t", "0.5:1.5:3")
    assert code == 0 and out.count("\n") == 4
    assert run(capsys, "bounds", "--lemma", "22", "--case", "2", "--p", "1")[0] == 2


def test_presets(capsys):
    code, out, _ = run(capsys, "presets")
    assert code == 0 and "thm12" in out.split()
    code, out, _ = run(capsys, "presets", "thm15-hoeffding")
    assert code == 0 and "[scheme]" in out and "kind = perm" in out


def test_simulate_and_rate(tmp_path, capsys):
    cfg = tmp_path / "c.ini"
    cfg.write_text("[experiment]\npreset = thm12\nsizes = 4, 6, 8\nn_env = 3\nn_sel = 100\n")
    out_file = tmp_path / "res.csv"
    code, _, err = run(capsys, "simulate", "--config", str(cfg), "--output", str(out_file), "--threads", "2")
    assert code == 0 and "wrote" in err
    assert out_file.read_text().splitlines()[0] == "N,rep,metric,value"
    assert (tmp_path / "res.summary.json").exists()
    code, out, _ = run(capsys, "rate", "--input", str(out_file), "--metric", "ks")
    assert code == 0 and out.startswith("slope=")
    assert run(capsys, "rate", "--input", str(out_file), "--metric", "tv")[0] == 2
    code, out, _ = run(capsys, "simulate", "--preset", "thm15-hoeffding", "--sizes", "4,8,16", "--n-env", "2", "--n-sel", "50", "--format", "json")
    assert code == 0 and '"columns"' in out


def test_module_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "quenchlab.cli", "check-conditions", "--alpha", "2", "--p", "5", "--eta", "2", "--mu", "1", "--lambda", "0"],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0
    assert "wip=true" in proc.stdout and "almost_sure=false" in proc.stdout
