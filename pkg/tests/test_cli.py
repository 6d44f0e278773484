import json
import os
import subprocess
import sys

import numpy as np
import pytest

from vblwaves import cli
from vblwaves.profile import WaveProfile


def write_model(path, f, g, name="m"):
    path.write_text(json.dumps({"name": name, "f": f, "g": g}))
    return str(path)


@pytest.fixture(scope="module")
def hopf_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("wave")
    assert cli.main(["wave", "burgers-fisher", "--epsilon", "0.005", "--out", str(out)]) == 0
    return out


def test_check_exit_codes(tmp_path, capsys):
    assert cli.main(["check", "burgers-fisher"]) == 0
    rep = json.loads(capsys.readouterr().out)
    assert rep["status"] == "holds"
    bad = write_model(tmp_path / "bad.json", ["mul", 0.5, ["pow", "u", 2]], ["add", ["neg", "u"], ["pow", "u", 2]])
    assert cli.main(["check", bad]) == 2
    rat = write_model(tmp_path / "rat.json", ["mul", 0.5, ["pow", "u", 2]],
                      ["div", ["add", "u", ["neg", ["pow", "u", 2]]], ["add", 1, ["pow", "u", 2]]])
    assert cli.main(["check", rat]) == 3


def test_parse_errors(tmp_path, capsys):
    p = tmp_path / "broken.json"
    p.write_text('{"f": ["mul", 0.5,\n "u" "u"], "g": "u"}')
    assert cli.main(["check", str(p)]) == 1
    err = capsys.readouterr().err
    assert "line 2" in err
    assert cli.main(["check", str(tmp_path / "missing.json")]) == 1
    assert cli.main(["check", "no-such-builtin"]) == 1


def test_solver_failure_exit_code(tmp_path):
    assert cli.main(["wave", "burgers-fisher", "--epsilon", "0.3", "--out", str(tmp_path)]) == 4


def test_wave_outputs(hopf_run):
    js = hopf_run / "wave_hopf_eps0p005.json"
    w = WaveProfile.load(js)
    assert w.c == 0.005 and w.family == "hopf"
    man = json.loads((hopf_run / "manifest.json").read_text())
    assert man["command"] == "wave"
    assert "wave_hopf_eps0p005.csv" in man["outputs"]


def test_spectrum_and_evolve(hopf_run, tmp_path):
    wave = str(hopf_run / "wave_hopf_eps0p005.json")
    out = tmp_path / "spectrum"
    assert cli.main(["spectrum", "burgers-fisher", wave, "--theta-grid", "8", "--out", str(out)]) == 0
    cert = json.loads((out / "certificate.json").read_text())
    assert cert["real"] and abs(cert["re_lambda"] - 1) < 0.5
    lines = (out / "spectrum.csv").read_text().splitlines()
    assert lines[0] == "theta,re_lambda,im_lambda,converged_flag,branch_id"

    out = tmp_path / "ev"
    assert cli.main(["evolve", "burgers-fisher", wave, "--delta", "1e-6", "5e-7", "--out", str(out)]) == 0
    rep = json.loads((out / "experiment.json").read_text())
    assert all(abs(r - 1) < 0.1 for r in rep["ratios"])
    assert rep["escape_shift"] == pytest.approx(rep["escape_shift_predicted"], rel=0.15)
    assert (out / "trace_delta1em06.csv").exists()


def test_evolve_control_only(hopf_run, tmp_path):
    wave = str(hopf_run / "wave_hopf_eps0p005.json")
    assert cli.main(["evolve", "burgers-fisher", wave, "--delta", "0", "--T", "2", "--out", str(tmp_path)]) == 0
    rep = json.loads((tmp_path / "experiment.json").read_text())
    assert rep["runs"][0]["max_distance"] < 1e-6


def test_evolve_window_too_short(hopf_run, tmp_path):
    wave = str(hopf_run / "wave_hopf_eps0p005.json")
    assert cli.main(["evolve", "burgers-fisher", wave, "--delta", "1e-6", "--T", "1",
                     "--out", str(tmp_path)]) == 6


def test_spectrum_not_unstable(tmp_path):
    # the constant state u = 1 is linearly stable for Burgers-Fisher
    M, L = 16, 5.0
    w = WaveProfile(np.arange(M) * L / M, np.ones(M), np.zeros(M), L, 0.2, 0.0, "hopf", "burgers-fisher")
    js, _ = w.save(tmp_path / "flat")
    assert cli.main(["spectrum", "burgers-fisher", str(js), "--theta-grid", "2", "--N", "8",
                     "--out", str(tmp_path / "o")]) == 5


def test_rerun_reproduces(hopf_run):
    man = hopf_run / "manifest.json"
    assert cli.main(["rerun", str(man)]) == 0
    # a manifest whose recorded hash disagrees is reported
    data = json.loads(man.read_text())
    name = next(n for n in data["outputs"] if n.endswith(".csv"))
    data["outputs"][name] = "0" * 64
    man.write_text(json.dumps(data))
    try:
        assert cli.main(["rerun", str(man)]) == 2
    finally:
        # restore for other tests
        assert cli.main(["wave", "burgers-fisher", "--epsilon", "0.005", "--out", str(hopf_run)]) == 0


def test_fig1_files(tmp_path):
    out = tmp_path / "f1"
    assert cli.main(["reproduce-fig1", "--out", str(out)]) == 0
    for name in ("fig1_profile.csv", "fig1_neighbours.csv", "fig1_wave.json", "fig1.png", "manifest.json"):
        assert (out / name).exists(), name
    prof = np.loadtxt(out / "fig1_profile.csv", delimiter=",", skiprows=1)
    assert prof.shape[1] == 3 and abs(prof[:, 1]).max() < 0.2
    out2 = tmp_path / "f1b"
    assert cli.main(["reproduce-fig1", "--no-plot", "--out", str(out2)]) == 0
    assert not (out2 / "fig1.png").exists()
    assert (out2 / "fig1_profile.csv").read_bytes() == (out / "fig1_profile.csv").read_bytes()


def test_console_entry_point():
    env = dict(os.environ, VBL_THREADS="1")
    r = subprocess.run([sys.executable, "-m", "vblwaves.cli", "check", "logistic-buckley-leverett"],
                       capture_output=True, text=True, env=env, timeout=120)
    assert r.returncode == 0, r.stderr
    assert json.loads(r.stdout)["status"] == "holds"
