"""End-to-end acceptance checks; each prints one PASS/FAIL line."""

import math
import time

import numpy as np
import pytest

from ulam_float.cli import main
from ulam_float.even_construct import build_even_body
from ulam_float.hydrostatics import body_volume
from ulam_float.profile import ProfileBody, ball_state, zero_bump
from ulam_float.radon import ZonalFunction, forward_in_c, radon_zonal_forward, radon_zonal_inverse
from ulam_float.verify import (
    asymmetry_certificate,
    central_section_residuals,
    characteristic_point_check,
    equilibrium_sweep,
    oracle_equivalence,
    random_section_lines,
    slope_family_residuals,
    surface_of_centers_check,
)

import oracles

TAU = 0.05


@pytest.fixture
def report(capsys):
    def emit(n, title, checks, elapsed, limit):
        checks = dict(checks)
        checks["runtime"] = (elapsed, limit)
        ok = all(v < lim for v, lim in checks.values())
        detail = "; ".join(f"{k}={v:.3g} (<{lim:g})" for k, (v, lim) in checks.items())
        with capsys.disabled():
            print(f"\ncriterion {n} [{title}]: {'PASS' if ok else 'FAIL'} :: {detail}")
        failed = [k for k, (v, lim) in checks.items() if not v < lim]
        assert not failed, f"criterion {n} failed: {failed}"
    return emit


def test_criterion_1_ball_baseline(report):
    t0 = time.perf_counter()
    checks = {}
    for d in (3, 4):
        ball = ProfileBody.unit_ball(d)
        rep = equilibrium_sweep(ball, 64)
        tab = slope_family_residuals(ball, zero_bump(TAU), np.linspace(0.0, 10.0, 50))
        checks[f"d{d}_max_tilt"] = (rep.max_tilt, 1e-9)
        checks[f"d{d}_slope_residual"] = (tab["max"], 1e-10)
    from ulam_float.verify import ball_section_constant

    checks["d4_constant_vs_16/15"] = (abs(ball_section_constant(4) - oracles.SECTION_CONSTANT[4]), 1e-14)
    report(1, "ball baseline", checks, time.perf_counter() - t0, 10.0)


def test_criterion_2_even_counterexample(even_build, report):
    body, info = even_build
    t0 = time.perf_counter()
    bump = info["bump"]
    tab = slope_family_residuals(body, bump, np.linspace(0.0, 10.0, 50))
    rep = equilibrium_sweep(body, 128, bump=bump)
    half_body, half_info = build_even_body(4, TAU, 0.5 * bump.amplitude)
    asym_ratio = rep.asymmetry / asymmetry_certificate(half_body, half_info["bump"])
    s = info["state"].s
    dev = np.max(np.abs(info["state"].Z[:2] - ball_state(s)[:2]))
    dev_half = np.max(np.abs(half_info["state"].Z[:2] - ball_state(s)[:2]))
    checks = {
        "a_slope_residual": (tab["max"], 1e-7),
        "b_return_to_circle": (info["return_to_circle"]["deviation"], 1e-8),
        "c_max_tilt": (rep.max_tilt, 1e-6),
        "d_asymmetry_positive": (-rep.asymmetry, 0.0),
        "d_asymmetry_halving_ratio_error": (abs(asym_ratio / 2.0 - 1.0), 0.2),
        "d_deviation_halving_ratio_error": (abs(dev / dev_half / 2.0 - 1.0), 0.2),
        "e_concavity_margin_floor": (1e-6 - info["concavity_margin"], 0.0),
    }
    elapsed = info["elapsed"] + time.perf_counter() - t0
    report(2, "even d=4", checks, elapsed, 300.0)


def test_criterion_3_odd_counterexample(odd_build, report):
    body, info = odd_build
    t0 = time.perf_counter()
    rep = equilibrium_sweep(body, 128, bump=info["bump"])
    dR, dr = info["slope_at_axis"]
    cs = central_section_residuals(body, np.linspace(0.0, 0.5 * math.pi, 401))
    checks = {
        "a_plus_r_residual": (info["plus_r_residual"], 1e-8),
        "b_overlap": (info["overlap"], 1e-7),
        "c_max_tilt": (rep.max_tilt, 1e-5),
        "d_R_slope_at_axis": (abs(dR), 1e-6),
        "d_r_slope_at_axis": (abs(dr), 1e-6),
        "e_central_first": (float(cs["first"].max()), 1e-6),
        "e_central_axial": (float(cs["axial"].max()), 1e-6),
        "e_central_transverse": (float(cs["transverse"].max()), 1e-6),
        "e_central_mixed": (float(cs["mixed"].max()), 1e-6),
    }
    elapsed = info["elapsed"] + time.perf_counter() - t0
    report(3, "odd d=3", checks, elapsed, 900.0)


def test_criterion_4_oracle_equivalence(even_build, odd_build, report):
    t0 = time.perf_counter()
    bodies = {"ball3": ProfileBody.unit_ball(3), "ball4": ProfileBody.unit_ball(4),
              "even4": even_build[0], "odd3": odd_build[0]}
    lines = random_section_lines(20, seed=11)
    checks = {f"{k}_rel_error": (oracle_equivalence(b, lines), 1e-8) for k, b in bodies.items()}
    report(4, f"oracle equivalence, {20 * len(bodies)} pairs", checks, time.perf_counter() - t0, 60.0)


def test_criterion_5_characteristic_points(even_build, report):
    body, _ = even_build
    t0 = time.perf_counter()
    vol = body_volume(body)
    checks = {}
    for frac in (0.3, 0.5):
        out = characteristic_point_check(body, frac * vol, directions=8, n_volume=9)
        checks[f"forward_{frac}"] = (out["forward_max"], 1e-6)
        checks[f"converse_rel_{frac}"] = (out["converse_max_rel"], 1e-9)
    report(5, "characteristic points", checks, time.perf_counter() - t0, 120.0)


def test_criterion_6_surface_of_centers(even_build, report):
    body, _ = even_build
    t0 = time.perf_counter()
    out = surface_of_centers_check(body, thetas=np.linspace(0, 2 * np.pi, 32, endpoint=False))
    checks = {
        "tangency": (out["tangency_max"], 1e-6),
        "derivative_identity": (out["fl1_max"], 1e-5),
        "circularity": (out["circularity"], 1e-6),
        "midpoint": (out["midpoint_max"], 1e-8),
        "convex": (0.0 if out["convex"] else 1.0, 0.5),
    }
    report(6, "surface of centers", checks, time.perf_counter() - t0, 120.0)


def test_criterion_7_radon(report):
    t0 = time.perf_counter()
    one = ZonalFunction(lambda v: np.ones_like(v), 3)
    alphas = np.linspace(0.0, 0.5 * math.pi, 13)
    checks = {"constant_is_2pi": (float(np.max(np.abs(radon_zonal_forward(one, alphas) - 2 * math.pi))), 1e-10)}
    v = np.linspace(0.0, 1.0, 101)
    for name, func in (("cos2_cos4", lambda x: x**2 + 0.1 * x**4), ("gaussian", lambda x: np.exp(-2 * x * x))):
        g = ZonalFunction(func, 3)
        target = ZonalFunction(lambda c, g=g: forward_in_c(g, c), 3)
        inv = radon_zonal_inverse(target, degree=48)
        back = forward_in_c(ZonalFunction(inv.func, 3, poly=inv.poly), v)
        checks[f"{name}_inverse"] = (float(np.max(np.abs(inv.at(v) - func(v)))), 1e-7)
        checks[f"{name}_round_trip"] = (float(np.max(np.abs(back - target.func(v)))), 1e-7)
    report(7, "radon d=3", checks, time.perf_counter() - t0, 30.0)


def test_criterion_8_reproducibility(tmp_path, report):
    t0 = time.perf_counter()
    paths = [tmp_path / "run1.json", tmp_path / "run2.json"]
    codes = [main(["construct", "--dim", "4", "--tau", "0.05", "--amplitude", "auto", "--out", str(p)])
             for p in paths]
    same = paths[0].read_bytes() == paths[1].read_bytes()
    checks = {"exit_codes": (float(max(codes)), 0.5), "byte_mismatch": (0.0 if same else 1.0, 0.5)}
    report(8, "reproducibility", checks, time.perf_counter() - t0, float("inf"))
