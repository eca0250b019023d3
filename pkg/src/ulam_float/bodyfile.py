"""JSON body files and OBJ meshes.

Files are written with a fixed key order and every float printed with 17
significant digits, so identical inputs give byte-identical files.  The
``radial`` block stores the interpolation nodes of the radial function; a
body read back from it is identical to the one written.
"""

from __future__ import annotations

import hashlib
import json
import math

import numpy as np

from .errors import ParameterError
from .profile import ProfileBody, chart_from_profile, make_bump, zero_bump

FORMAT_VERSION = 1
_KEYS = ("dim", "tau", "amplitude", "profile", "slope_chart", "polar_chart", "radial")


def _num(x):
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    if not math.isfinite(x):
        raise ParameterError("non-finite value in body file")
    return format(x, ".17g")


def _dump(obj, indent=0):
    pad = "  " * indent
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f'{pad}  {json.dumps(str(k))}: {_dump(v, indent + 1)}' for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    if isinstance(obj, np.ndarray):
        obj = obj.tolist()
    if isinstance(obj, (list, tuple)):
        if obj and isinstance(obj[0], (list, tuple, np.ndarray)):
            rows = ["[" + ", ".join(_num(v) for v in row) + "]" for row in obj]
            return "[\n" + ",\n".join(pad + "  " + r for r in rows) + "\n" + pad + "]"
        return "[" + ", ".join(_dump(v, indent + 1) for v in obj) + "]"
    if isinstance(obj, str):
        return json.dumps(obj)
    if obj is None:
        return "null"
    return _num(obj)


def dumps(obj):
    """Deterministic JSON text (17 significant digits, insertion key order)."""
    return _dump(obj) + "\n"


def bump_of(meta):
    tau = float(meta.get("tau", 0.05))
    amp = float(meta.get("amplitude", 0.0))
    order = int(meta.get("order", 6))
    return make_bump(tau, amp, order) if amp > 0 else zero_bump(tau, order)


def default_slope_grid(tau):
    """Slopes covering the perturbed band and its surroundings."""
    return np.linspace(max(0.0, 1.0 - 4.0 * tau), 1.0, 201)


def default_alpha_grid(n=201):
    return 0.5 * np.pi * (1.0 - np.cos(0.5 * np.pi * np.arange(n) / (n - 1)))


def body_record(body, chart=None, parameters=None, code_version="0"):
    """Assemble the body file content as an ordered dict."""
    meta = body.meta
    tau = float(meta.get("tau", 0.05))
    amp = float(meta.get("amplitude", 0.0))
    bump = bump_of(meta)
    if chart is None:
        chart = chart_from_profile(body, bump, default_slope_grid(tau))
    t, f = body.profile_points()
    alpha = default_alpha_grid()
    c = np.cos(alpha)
    polar = np.column_stack([alpha, body.rho(c), body.rho(-c)])
    rec = {
        "format_version": FORMAT_VERSION,
        "dim": int(body.dim),
        "tau": tau,
        "amplitude": amp,
        "profile": np.column_stack([t, f]),
        "slope_chart": chart.as_rows(),
        "polar_chart": polar,
        "radial": np.column_stack([body.w_nodes, body.rho_nodes]),
    }
    content = dumps({k: rec[k] for k in _KEYS})
    prov = {
        "generator": str(meta.get("generator", "ball")),
        "code_version": str(code_version),
        "parameters": dict(parameters or {}),
        "content_hash": "sha256:" + hashlib.sha256(content.encode()).hexdigest(),
    }
    rec["provenance"] = prov
    return rec


def write_body(path, body, chart=None, parameters=None, code_version="0"):
    text = dumps(body_record(body, chart, parameters, code_version))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
    return text


def read_body(path):
    """Load a body file; returns ``(body, bump, record)``.

    Raises :class:`ParameterError` on schema problems or a content hash that
    does not match the data.
    """
    try:
        with open(path, encoding="utf-8") as fh:
            rec = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ParameterError(f"cannot read body file {path}: {exc}") from exc
    missing = [k for k in _KEYS + ("provenance",) if k not in rec]
    if missing:
        raise ParameterError(f"body file lacks fields {missing}")
    content = dumps({k: rec[k] for k in _KEYS})
    digest = "sha256:" + hashlib.sha256(content.encode()).hexdigest()
    if rec["provenance"].get("content_hash") != digest:
        raise ParameterError("body file content hash mismatch")
    radial = np.asarray(rec["radial"], dtype=float)
    if radial.ndim != 2 or radial.shape[1] != 2:
        raise ParameterError("radial block must be a list of [w, rho] pairs")
    meta = {
        "generator": rec["provenance"].get("generator", "ball"),
        "dim": int(rec["dim"]),
        "tau": float(rec["tau"]),
        "amplitude": float(rec["amplitude"]),
    }
    meta.update({k: v for k, v in rec["provenance"].get("parameters", {}).items()
                 if k in ("order", "n_intervals")})
    body = ProfileBody(int(rec["dim"]), radial[:, 0], radial[:, 1], meta=meta)
    return body, bump_of(meta), rec


# ---------------------------------------------------------------------------
# meshes


def revolve_mesh(body, n_polar=64, n_azimuth=64):
    """Triangulated surface of the 3D body with the same profile.

    Vertices: the two tips and ``n_polar - 1`` rings of ``n_azimuth`` points
    at polar angles ``k pi / n_polar``.  Faces are outward oriented.
    """
    n_polar, n_azimuth = int(n_polar), int(n_azimuth)
    if n_polar < 4 or n_azimuth < 4:
        raise ParameterError("mesh resolution must be at least 4 in each direction")
    phi = np.pi * np.arange(1, n_polar) / n_polar
    th = 2.0 * np.pi * np.arange(n_azimuth) / n_azimuth
    r = body.rho(np.cos(phi))
    ring = np.stack([
        np.repeat(r * np.cos(phi), n_azimuth),
        np.outer(r * np.sin(phi), np.cos(th)).ravel(),
        np.outer(r * np.sin(phi), np.sin(th)).ravel(),
    ], axis=1)
    top = np.array([[body.R2, 0.0, 0.0]])
    bottom = np.array([[-body.R1, 0.0, 0.0]])
    verts = np.vstack([top, ring, bottom])
    faces = []
    m, nr = n_azimuth, n_polar - 1

    def vid(i, j):
        return 1 + i * m + (j % m)

    for j in range(m):
        faces.append((0, vid(0, j), vid(0, j + 1)))
    for i in range(nr - 1):
        for j in range(m):
            a, b, c, d = vid(i, j), vid(i, j + 1), vid(i + 1, j), vid(i + 1, j + 1)
            faces.append((a, c, d))
            faces.append((a, d, b))
    last = len(verts) - 1
    for j in range(m):
        faces.append((last, vid(nr - 1, j + 1), vid(nr - 1, j)))
    return verts, np.array(faces, dtype=int)


def mesh_to_obj(verts, faces):
    lines = [f"v {_num(x)} {_num(y)} {_num(z)}" for x, y, z in verts]
    lines += [f"f {a + 1} {b + 1} {c + 1}" for a, b, c in faces]
    return "\n".join(lines) + "\n"
