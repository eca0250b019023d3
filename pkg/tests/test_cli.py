import json
import subprocess
import sys

import numpy as np
import pytest

from ulam_float.bodyfile import write_body
from ulam_float.cli import main
from ulam_float.profile import ProfileBody

FAST_VERIFY = ["--directions", "16", "--slopes", "10", "--cpt-directions", "2",
               "--center-angles", "8", "--oracle-samples", "5"]


@pytest.fixture(scope="module")
def ball_file(tmp_path_factory):
    p = tmp_path_factory.mktemp("cli") / "ball.json"
    assert main(["construct", "--dim", "3", "--amplitude", "0", "--out", str(p)]) == 0
    return p


def test_construct_ball_record(ball_file):
    rec = json.loads(ball_file.read_text())
    assert rec["dim"] == 3 and rec["amplitude"] == 0.0
    prov = rec["provenance"]
    assert prov["generator"] == "ball"
    assert prov["parameters"]["amplitude_mode"] == "fixed"
    assert np.allclose(np.asarray(rec["radial"])[:, 1], 1.0)


def test_construct_is_byte_reproducible(tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    for p in (a, b):
        assert main(["construct", "--dim", "4", "--amplitude", "0", "--out", str(p)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_verify_ball(ball_file, tmp_path, capsys):
    prefix = tmp_path / "ball"
    assert main(["verify", str(ball_file), "--out-prefix", str(prefix)] + FAST_VERIFY) == 0
    summary = json.loads((tmp_path / "ball_summary.json").read_text())
    assert summary["pass"] and summary["equilibrium_sweep"] == "run"
    assert summary["checks"]["max_tilt"]["value"] < 1e-9
    assert "asymmetry_certificate" not in summary["checks"]
    csv = (tmp_path / "ball_equilibrium.csv").read_text().splitlines()
    assert csv[0] == "beta,t,vol_residual,tilt,I1,Iperp,centroid_offset" and len(csv) == 17
    out = json.loads(capsys.readouterr().out)
    assert out["pass"] and out["failed"] == []


def test_verify_non_half_volume_skips_sweep(ball_file, tmp_path):
    prefix = tmp_path / "b03"
    assert main(["verify", str(ball_file), "--delta", "0.3", "--out-prefix", str(prefix)] + FAST_VERIFY) == 0
    summary = json.loads((tmp_path / "b03_summary.json").read_text())
    assert summary["equilibrium_sweep"] == "skipped"
    assert "max_tilt" not in summary["checks"]
    assert summary["checks"]["characteristic_point_converse"]["pass"]
    assert not (tmp_path / "b03_equilibrium.csv").exists()


def test_verify_failure_exit_code(tmp_path, capsys):
    w = -np.cos(np.linspace(0, np.pi, 401))
    w[0], w[-1] = -1.0, 1.0
    p = tmp_path / "egg.json"
    write_body(p, ProfileBody(3, w, 1.0 + 0.02 * w + 0.01 * w**2))
    assert main(["verify", str(p), "--out-prefix", str(tmp_path / "egg")] + FAST_VERIFY) == 4
    err = json.loads(capsys.readouterr().err)
    assert err["error"] == "VerificationError" and "max_tilt" in err["message"]


def test_parameter_errors(tmp_path, capsys):
    assert main(["construct", "--dim", "2", "--amplitude", "0", "--out", str(tmp_path / "x.json")]) == 2
    err = json.loads(capsys.readouterr().err)
    assert err["error"] == "ParameterError" and err["stage"] == "parameters"
    assert main(["construct", "--dim", "3", "--tau", "0.3", "--out", str(tmp_path / "x.json")]) == 2
    assert main(["verify", str(tmp_path / "missing.json")]) == 2
    with pytest.raises(SystemExit) as exc:
        main(["construct", "--dim", "3", "--amplitude", "-1", "--out", "x.json"])
    assert exc.value.code == 2


def test_construction_failure_exit_code(tmp_path, capsys):
    code = main(["construct", "--dim", "4", "--amplitude", "0.01", "--out", str(tmp_path / "x.json")])
    assert code == 3
    err = json.loads(capsys.readouterr().err)
    assert err["stage"] in ("march", "smallness", "construction", "return_to_circle")
    assert not (tmp_path / "x.json").exists()


def test_export_mesh(ball_file, tmp_path):
    out = tmp_path / "m.obj"
    assert main(["export-mesh", str(ball_file), "--resolution", "8", "--out", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert sum(x.startswith("v ") for x in lines) == 2 + 7 * 8
    assert main(["export-mesh", str(ball_file), "--resolution", "3", "--out", str(out)]) == 2


def test_sweep_csv(ball_file, tmp_path):
    out = tmp_path / "s.csv"
    assert main(["sweep", str(ball_file), "--samples", "11", "--out", str(out)]) == 0
    rows = out.read_text().splitlines()
    assert rows[0] == "s,volume_residual,centroid_residual" and len(rows) == 12
    assert max(float(v) for r in rows[1:] for v in r.split(",")[1:]) < 1e-10
    assert main(["sweep", str(ball_file), "--s-min", "2", "--s-max", "1", "--out", str(out)]) == 2


def test_console_entry_point_and_threads(ball_file, tmp_path):
    env_run = subprocess.run(
        [sys.executable, "-m", "ulam_float.cli", "sweep", str(ball_file), "--samples", "3",
         "--threads", "2"],
        capture_output=True, text=True, check=False,
    )
    assert env_run.returncode == 0
    assert env_run.stdout.startswith("s,volume_residual")


def test_threads_env_variable(monkeypatch):
    from ulam_float.verify import default_threads

    monkeypatch.setenv("ULAM_FLOAT_THREADS", "3")
    assert default_threads() == 3
