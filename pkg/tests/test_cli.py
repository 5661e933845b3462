import json
import subprocess
import sys

import pytest

from nlsgrowth import __version__
from nlsgrowth.cli import RUNS_ENV, main
from nlsgrowth.runs import read_series

PLANE = """
[grid]
dim = 2
n = 16

[params]
p = 3
dt = 0.01
t_end = 2.0

[init]
kind = "plane_wave"
amplitude = 0.6
k0 = [1, 1]
"""

SMOOTH = """
[grid]
dim = 2
n = 32

[params]
p = 3
dt = 0.00125
t_end = 0.1

[init]
kind = "random_sobolev"
s = 2.0
seed = 1
kmax = 3
"""


@pytest.fixture
def cfgs(tmp_path, monkeypatch):
    monkeypatch.setenv(RUNS_ENV, str(tmp_path / "runs"))
    (tmp_path / "plane.toml").write_text(PLANE)
    (tmp_path / "smooth.toml").write_text(SMOOTH)
    return tmp_path


def test_simulate_then_fit_plane_wave(cfgs, capsys):
    assert main(["simulate", "--config", str(cfgs / "plane.toml"), "--cadence", "5"]) == 0
    run = cfgs / "runs" / "plane"
    assert len(read_series(run)) == 41
    capsys.readouterr()
    assert main(["fit", "--run", str(run), "--model", "polynomial"]) == 0
    out = capsys.readouterr().out
    fit = json.loads(out.splitlines()[1])
    assert abs(fit["exponent_or_rate"]) < 1e-9
    assert "exponent" in out.splitlines()[0]


def test_simulate_overrides_and_output_dir(cfgs):
    out = cfgs / "custom"
    assert main(["simulate", "--config", str(cfgs / "plane.toml"), "--output-dir", str(out), "--t-end", "0.5", "--cadence", "10"]) == 0
    assert [r.step for r in read_series(out)] == [0, 10, 20, 30, 40, 50]


def test_ensemble(cfgs, capsys):
    args = ["simulate", "--config", str(cfgs / "smooth.toml"), "--t-end", "0.01", "--ensemble", "2", "--jobs", "2"]
    assert main(args) == 0
    members = sorted((cfgs / "runs" / "smooth").glob("member-*"))
    assert [m.name for m in members] == ["member-0000", "member-0001"]
    a, b = (json.loads((m / "manifest.json").read_text())["config"]["init"]["seed"] for m in members)
    assert (a, b) == (1, 2)


def test_report_is_byte_identical(cfgs, capsys):
    main(["simulate", "--config", str(cfgs / "plane.toml"), "--cadence", "5"])
    run = cfgs / "runs" / "plane"
    assert main(["report", "--run", str(run), "--format", "json"]) == 0
    first = (run / "report.json").read_bytes()
    svg = (run / "plots" / "norms.svg").read_bytes()
    assert main(["report", "--run", str(run)]) == 0
    assert (run / "report.json").read_bytes() == first
    assert (run / "plots" / "norms.svg").read_bytes() == svg
    rep = json.loads(first)
    assert rep["conservation"]["h1_bound"]["holds"]
    assert rep["findings"] == []
    assert "H2" in capsys.readouterr().out


def test_verify_example(cfgs, capsys):
    out = cfgs / "identity.json"
    args = ["verify", "--config", str(cfgs / "smooth.toml"), "--energy", "even", "--k", "1", "--p", "3",
            "--widths", "0.02,0.01,0.005", "--output", str(out)]
    assert main(args) == 0
    text = capsys.readouterr().out
    assert "fitted order" in text and "width" in text
    rep = json.loads(out.read_text())
    assert rep["order"] == pytest.approx(2.0, abs=0.3)


def test_verify_rejects_incommensurate_width(cfgs, capsys):
    args = ["verify", "--config", str(cfgs / "smooth.toml"), "--energy", "even", "--widths", "0.0031,0.01"]
    assert main(args) == 1
    assert "widths" in capsys.readouterr().err


def test_probe(cfgs, capsys):
    out = cfgs / "probe.json"
    assert main(["probe", "--n", "32", "--ensemble", "3", "--output", str(out)]) == 0
    assert len(json.loads(out.read_text())["ratios"]) == 3


def test_missing_config_exit_1(cfgs, capsys):
    assert main(["simulate", "--config", str(cfgs / "absent.toml")]) == 1
    assert "absent.toml" in capsys.readouterr().err


def test_bad_field_exit_1(cfgs, capsys):
    (cfgs / "bad.toml").write_text(PLANE.replace("dt = 0.01", "dtt = 0.01"))
    assert main(["simulate", "--config", str(cfgs / "bad.toml")]) == 1
    assert "params.dtt" in capsys.readouterr().err


def test_missing_run_exit_1(cfgs, capsys):
    assert main(["fit", "--run", str(cfgs / "nowhere")]) == 1
    assert "nowhere" in capsys.readouterr().err


def test_blow_up_exit_2(cfgs, capsys):
    text = PLANE.replace("amplitude = 0.6", "amplitude = 1e60").replace("t_end = 2.0", 't_end = 2.0\nintegrator = "rk4"')
    (cfgs / "boom.toml").write_text(text)
    assert main(["simulate", "--config", str(cfgs / "boom.toml"), "--cadence", "1"]) == 2
    err = capsys.readouterr().err
    assert "diagnostic" in err and "diagnostic.json" in err


def test_usage_error_exit_1(capsys):
    assert main(["simulate"]) == 1
    assert main(["frobnicate"]) == 1


def test_help_lists_flags(capsys):
    assert main(["simulate", "--help"]) == 0
    out = capsys.readouterr().out
    for flag in ("--config", "--output-dir", "--t-end", "--dt", "--seed", "--ensemble", "--jobs", "--no-resume"):
        assert flag in out


def test_version_via_module():
    r = subprocess.run([sys.executable, "-m", "nlsgrowth", "--version"], capture_output=True, text=True)
    assert r.returncode == 0
    assert r.stdout.startswith(f"nlsgrowth {__version__}")
