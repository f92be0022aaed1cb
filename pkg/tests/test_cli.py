import csv
import json
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from qbox import cli
from qbox.galerkin import NormDriftError

DRIVEN = "scenario=driven\nL0=10\na=3\nomega0=0.5\nepsilon=0.1\nomega=0.05\nT=200\n"
SHORT = "scenario=driven\nL0=10\na=3\nomega0=0.5\nepsilon=0.1\nomega=0.05\nT=2\nN=16\n"


def write(tmp_path, text, name="run.cfg"):
    p = tmp_path / name
    p.write_text(text)
    return p


def read_csv(path):
    with open(path) as fh:
        rows = list(csv.reader(fh))
    return rows[0], np.array(rows[1:], dtype=float)


@pytest.fixture(scope="module")
def driven_output(tmp_path_factory):
    base = tmp_path_factory.mktemp("driven")
    cfg = write(base, DRIVEN)
    assert cli.main(["run", str(cfg), "--out-dir", str(base / "a")]) == 0
    assert cli.main(["run", str(cfg), "--out-dir", str(base / "b")]) == 0
    return base


def test_driven_schema(driven_output):
    header, data = read_csv(driven_output / "a" / "timeseries.csv")
    assert header == ["t", "L", "norm", "E_k", "F", "d"]
    assert data.shape == (4001, 6)
    assert data[0, 0] == 0 and data[-1, 0] == 200
    assert np.max(np.abs(data[:, 2] - 1)) < 1e-6
    assert np.all(data[:, 3] >= 0) and np.all(data[:, 5] <= 0) and np.all(data[:, 5] >= -data[:, 1])


def test_driven_deterministic(driven_output):
    a = (driven_output / "a" / "timeseries.csv").read_bytes()
    b = (driven_output / "b" / "timeseries.csv").read_bytes()
    assert a == b


def test_full_precision_floats(driven_output):
    line = (driven_output / "a" / "timeseries.csv").read_text().splitlines()[2]
    # the second sample time is not exactly representable; 17 digits keep it exact
    assert float(line.split(",")[0]) == np.linspace(0, 200, 4001)[1]
    assert "%.17g" % float(line.split(",")[3]) == line.split(",")[3]


def test_config_error_exit_code(tmp_path, capsys):
    cfg = write(tmp_path, "a=-1\n")
    assert cli.main(["run", str(cfg), "--out-dir", str(tmp_path)]) == 2
    err = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
    assert err["error"] == "config" and err["field"] == "a" and err["line"] == 1
    assert not (tmp_path / "timeseries.csv").exists()


def test_unknown_key_and_missing_file(tmp_path, capsys):
    assert cli.main(["run", str(write(tmp_path, "omgea=1\n"))]) == 2
    assert json.loads(capsys.readouterr().err)["field"] == "omgea"
    assert cli.main(["run", str(tmp_path / "absent.cfg")]) == 2


def test_bad_override(tmp_path, capsys):
    cfg = write(tmp_path, SHORT)
    assert cli.main(["run", str(cfg), "--override", "N=1"]) == 2
    assert json.loads(capsys.readouterr().err)["field"] == "N"


def test_solver_failure_exit_code(tmp_path, monkeypatch, capsys):
    def fail(*args, **kwargs):
        raise NormDriftError("norm drift 1e-3 exceeds 1e-06")
    monkeypatch.setattr(cli, "propagate", fail)
    assert cli.main(["run", str(write(tmp_path, SHORT)), "--out-dir", str(tmp_path)]) == 3
    err = json.loads(capsys.readouterr().err)
    assert err["error"] == "solver" and err["type"] == "NormDriftError"


def test_eigen_failure_exit_code(tmp_path, capsys):
    # a very deep inverted well pushes the levels out of their brackets
    text = "scenario=exact\nwall=sqrt_quadratic\nbeta=40\ngamma=100\npotential=none\nT=1\n"
    assert cli.main(["run", str(write(tmp_path, text)), "--out-dir", str(tmp_path)]) == 3
    assert json.loads(capsys.readouterr().err)["error"] == "solver"


def test_static_config_energy_constant(tmp_path):
    cfg = write(tmp_path, "a=0\nepsilon=0\nT=50\nN=16\n")
    assert cli.main(["run", str(cfg), "--out-dir", str(tmp_path)]) == 0
    _, data = read_csv(tmp_path / "timeseries.csv")
    assert np.ptp(data[:, 3]) < 1e-8
    assert data[0, 3] == pytest.approx(np.pi ** 2 / 200, rel=1e-12)


def test_exact_scenario(tmp_path):
    text = ("scenario=exact\nwall=sqrt_quadratic\nalpha=0\nbeta=2\ngamma=100\npotential=none\n"
            "modes=1,2\namplitudes=0.6,0.8j\nT=2\nsample_dt=0.5\n")
    assert cli.main(["run", str(write(tmp_path, text)), "--out-dir", str(tmp_path)]) == 0
    _, data = read_csv(tmp_path / "timeseries.csv")
    assert data.shape == (5, 6)
    assert np.max(np.abs(data[:, 2] - 1)) < 1e-10


def test_out_dir_from_environment(tmp_path, monkeypatch):
    monkeypatch.setenv("QBOX_OUT", str(tmp_path / "env"))
    assert cli.main(["run", str(write(tmp_path, SHORT))]) == 0
    assert (tmp_path / "env" / "timeseries.csv").exists()


def test_out_dir_flag_beats_config(tmp_path, monkeypatch):
    monkeypatch.setenv("QBOX_OUT", str(tmp_path / "env"))
    cfg = write(tmp_path, SHORT + f"out_dir={tmp_path / 'cfg'}\n")
    assert cli.main(["run", str(cfg)]) == 0
    assert (tmp_path / "cfg" / "timeseries.csv").exists()
    assert cli.main(["run", str(cfg), "--out-dir", str(tmp_path / "flag")]) == 0
    assert (tmp_path / "flag" / "timeseries.csv").exists()


def test_sweep(tmp_path):
    cfg = write(tmp_path, SHORT)
    rc = cli.main(["run", str(cfg), "--out-dir", str(tmp_path), "--sweep", "epsilon=0.05,0.1,0.2",
                   "--jobs", "2"])
    assert rc == 0
    finals = []
    for v in ("0.05", "0.1", "0.2"):
        _, data = read_csv(tmp_path / f"epsilon={v}" / "timeseries.csv")
        finals.append(data[-1, 5])
    assert len(set(finals)) == 3
    # a sweep member matches the same run done alone
    assert cli.main(["run", str(cfg), "--out-dir", str(tmp_path / "solo"), "--override", "epsilon=0.1"]) == 0
    assert (tmp_path / "solo" / "timeseries.csv").read_bytes() == \
        (tmp_path / "epsilon=0.1" / "timeseries.csv").read_bytes()


def test_bad_sweep(tmp_path):
    assert cli.main(["run", str(write(tmp_path, SHORT)), "--sweep", "epsilon"]) == 2


def test_python_backend_matches(tmp_path):
    cfg = write(tmp_path, SHORT)
    assert cli.main(["run", str(cfg), "--out-dir", str(tmp_path / "c"), "--backend", "compiled"]) == 0
    assert cli.main(["run", str(cfg), "--out-dir", str(tmp_path / "p"), "--backend", "python"]) == 0
    _, a = read_csv(tmp_path / "c" / "timeseries.csv")
    _, b = read_csv(tmp_path / "p" / "timeseries.csv")
    assert np.allclose(a, b, rtol=1e-12, atol=1e-14)


def test_spectrum_run(tmp_path):
    text = DRIVEN.replace("omega=0.05", "omega=1") + "spectrum=true\n"
    assert cli.main(["run", str(write(tmp_path, text)), "--out-dir", str(tmp_path)]) == 0
    header, spec = read_csv(tmp_path / "spectrum.csv")
    assert header == ["harmonic_order", "nu", "intensity"]
    assert spec[0, 0] == 0 and spec[-1, 0] == pytest.approx(40)
    assert spec.shape[0] == 40 * 8 + 1
    assert np.all(spec[:, 2] >= 0)
    _, ts = read_csv(tmp_path / "timeseries.csv")
    assert ts.shape == (4001, 6)
    # zero frequency is the squared time-mean of the (finer) dipole series
    mean = np.trapezoid(ts[:, 5], ts[:, 0]) / 200
    assert spec[0, 2] == pytest.approx(mean ** 2, rel=1e-6)


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "qbox", "run", str(write(tmp_path, "N=1\n"))],
                          capture_output=True, text=True)
    assert proc.returncode == 2
    assert json.loads(proc.stderr)["field"] == "N"
