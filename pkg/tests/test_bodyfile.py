import json

import numpy as np
import pytest

from ulam_float.bodyfile import dumps, mesh_to_obj, read_body, revolve_mesh, write_body
from ulam_float.errors import ParameterError
from ulam_float.profile import ProfileBody


def test_dumps_is_deterministic_and_valid_json():
    obj = {"b": 1, "a": [0.1, 2.0], "m": np.array([[1.0, 1 / 3], [2.0, 3.0]]), "s": "x", "n": None}
    text = dumps(obj)
    assert text == dumps(obj)
    back = json.loads(text)
    assert list(back) == ["b", "a", "m", "s", "n"]
    assert back["m"][0][1] == 1 / 3


def test_dumps_rejects_nan():
    with pytest.raises(ParameterError):
        dumps({"x": float("nan")})


def test_round_trip_is_lossless(tmp_path, ball3):
    p = tmp_path / "b.json"
    write_body(p, ball3)
    body, bump, rec = read_body(p)
    assert np.array_equal(body.w_nodes, ball3.w_nodes)
    assert np.array_equal(body.rho_nodes, ball3.rho_nodes)
    assert bump.amplitude == 0.0
    assert rec["provenance"]["content_hash"].startswith("sha256:")


def test_written_bytes_repeat(tmp_path, ball4):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    write_body(a, ball4, parameters={"dim": 4})
    write_body(b, ball4, parameters={"dim": 4})
    assert a.read_bytes() == b.read_bytes()


def test_tampered_file_is_rejected(tmp_path, ball3):
    p = tmp_path / "b.json"
    write_body(p, ball3)
    rec = json.loads(p.read_text())
    rec["radial"][5][1] = 1.001
    p.write_text(json.dumps(rec))
    with pytest.raises(ParameterError, match="hash"):
        read_body(p)


def test_missing_fields_and_bad_files(tmp_path):
    p = tmp_path / "b.json"
    p.write_text("{}")
    with pytest.raises(ParameterError):
        read_body(p)
    p.write_text("not json")
    with pytest.raises(ParameterError):
        read_body(p)
    with pytest.raises(ParameterError):
        read_body(tmp_path / "absent.json")


def _signed_volume(v, f):
    a, b, c = v[f[:, 0]], v[f[:, 1]], v[f[:, 2]]
    return float(np.sum(np.einsum("ij,ij->i", a, np.cross(b, c)))) / 6.0


def test_ball_mesh_is_closed_outward_genus_zero(ball3):
    v, f = revolve_mesh(ball3, 64, 64)
    edges = set()
    for a, b, c in f:
        for e in ((a, b), (b, c), (c, a)):
            edges.add(tuple(sorted(e)))
    assert len(v) - len(edges) + len(f) == 2
    # every directed edge appears once, so the surface is closed and consistently oriented
    directed = [e for a, b, c in f for e in ((a, b), (b, c), (c, a))]
    assert len(set(directed)) == len(directed)
    vol = _signed_volume(v, f)
    assert 0 < vol < 4 * np.pi / 3 and vol == pytest.approx(4 * np.pi / 3, rel=5e-3)
    assert np.max(np.abs(np.linalg.norm(v, axis=1) - 1.0)) < 1e-12


def test_mesh_follows_radial_function():
    w = -np.cos(np.linspace(0, np.pi, 401))
    w[0], w[-1] = -1.0, 1.0
    body = ProfileBody(3, w, 1.0 + 0.01 * w**2)
    v, _ = revolve_mesh(body, 16, 12)
    r = np.linalg.norm(v, axis=1)
    assert np.allclose(r, body.rho(v[:, 0] / r), atol=1e-14)


def test_degenerate_resolution_rejected(ball3):
    with pytest.raises(ParameterError):
        revolve_mesh(ball3, 3, 64)


def test_obj_text(ball3):
    v, f = revolve_mesh(ball3, 4, 4)
    text = mesh_to_obj(v, f)
    lines = text.splitlines()
    assert sum(x.startswith("v ") for x in lines) == len(v)
    assert sum(x.startswith("f ") for x in lines) == len(f)
    assert min(int(t) for x in lines if x.startswith("f ") for t in x.split()[1:]) == 1
