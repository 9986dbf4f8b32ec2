import io
import json
import subprocess
import sys

import mpmath as mp
import pytest

from sgue.cli import main


def run(*argv):
    out = io.StringIO()
    code = main(list(argv), out=out)
    return code, out.getvalue()


def test_partition_n2():
    code, text = run("--prec", "128", "--no-cache", "partition", "--n", "2", "--z", "1", "--t", "0")
    assert code == 0
    d = json.loads(text)
    assert d["E_N"].startswith("0.27067056647")
    with mp.workprec(128):
        assert abs(mp.mpf(d["E_N"]) - 2 * mp.exp(-2)) < mp.mpf("1e-18")


def test_flags_after_subcommand(tmp_path):
    code, text = run("bn", "--n", "2", "--prec", "96", "--cache-dir", str(tmp_path))
    assert code == 0
    assert json.loads(text)["B_N"].startswith("0.41502622597")
    assert any(tmp_path.iterdir())


def test_equilibrium_v2_1():
    code, text = run("--prec", "128", "equilibrium", "--v2", "1")
    assert code == 0
    lam = json.loads(text)["equilibrium"]["lambda"]
    assert abs(float(lam[1]) - 0.621063) < 1e-6
    assert abs(float(lam[2]) - 2.246693) < 1e-6


def test_verify_gfun_exit_zero():
    code, text = run("--prec", "128", "verify", "--suite", "gfun", "--v2", "1")
    assert code == 0
    assert json.loads(text)["pass"] is True


def test_verify_smallv2():
    code, text = run("--prec", "128", "verify", "--suite", "smallv2")
    assert code == 0 and json.loads(text)["smallv2"]["pass"] is True


@pytest.mark.parametrize(
    "argv",
    [
        ["partition", "--bogus"],
        ["--prec", "32", "bn", "--n", "2"],
        ["--format", "csv", "bn", "--n", "2"],
        ["partition", "--n", "0"],
        ["mc", "--n", "2", "--z", "0", "--samples", "2000"],
        ["verify", "--suite", "nope"],
    ],
)
def test_usage_errors_exit_two(argv, capsys):
    assert main(argv, out=io.StringIO()) == 2


def test_mc_json_roundtrip():
    code, text = run("mc", "--n", "2", "--z", "1", "--samples", "20000", "--seed", "3")
    assert code == 0
    d = json.loads(text)
    assert json.loads(json.dumps(d)) == d
    assert abs(float(d["mean"]) - 0.2706705664) < 4 * float(d["std_error"])
    assert d["samples"] == 20000


def test_compare_csv():
    code, text = run("--prec", "192", "--no-cache", "--format", "csv", "compare", "--n-list", "8,4", "--t", "0.2")
    assert code == 0
    lines = text.strip().splitlines()
    assert lines[0] == "N,z,t,exact,prediction,ratio,abs_ratio_minus_1"
    assert [ln.split(",")[0] for ln in lines[1:]] == ["4", "8"]


def test_console_script_module():
    r = subprocess.run(
        [sys.executable, "-m", "sgue.cli", "--prec", "96", "--no-cache", "qmoment", "--n", "4", "--m", "2"],
        capture_output=True,
        text=True,
    )
    assert r.returncode == 0
    assert json.loads(r.stdout)["M"].startswith("0.5")
