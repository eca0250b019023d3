import math

import numpy as np
import pytest

from ulam_float.hydrostatics import body_volume
from ulam_float.profile import ProfileBody, make_bump, zero_bump
from ulam_float.verify import (
    CSV_HEADER,
    asymmetry_certificate,
    ball_section_constant,
    central_section_residuals,
    characteristic_point_check,
    equilibrium_sweep,
    residual_table_csv,
    slope_family_residuals,
    surface_of_centers_check,
)

import oracles


def shifted_ball(dim, shift, n=801):
    w = -np.cos(np.linspace(0.0, np.pi, n))
    w[0], w[-1] = -1.0, 1.0
    return ProfileBody(dim, w, shift * w + np.sqrt(1.0 - shift**2 * (1.0 - w * w)))


def comparator(body, center=0.72, width=0.03):
    """Body of revolution with a bump of the same size that is not built to float."""
    dev = float(np.max(np.abs(body.rho_nodes - 1.0)))
    w = body.w_nodes
    return ProfileBody(body.dim, w, 1.0 + dev * np.exp(-(((w - center) / width) ** 2)))


@pytest.mark.parametrize("d", [3, 4])
def test_ball_sweep(d):
    rep = equilibrium_sweep(ProfileBody.unit_ball(d), 64)
    assert rep.max_tilt < 1e-9
    assert rep.moment_spread < 1e-12
    offsets = rep.rows[:, 6]
    assert np.allclose(offsets, oracles.HALF_BALL_CENTROID[d], rtol=1e-12)


def test_translated_ball_sweep():
    rep = equilibrium_sweep(shifted_ball(4, 0.1), 32, threads=2)
    assert rep.max_tilt < 1e-9
    assert rep.max_volume_residual < 1e-10 * rep.volume


def test_sweep_is_independent_of_thread_count(ball3):
    a = equilibrium_sweep(ball3, 16, threads=1).rows
    b = equilibrium_sweep(ball3, 16, threads=4).rows
    assert np.array_equal(a, b)


def test_csv_layout(ball3):
    text = equilibrium_sweep(ball3, 8).to_csv()
    lines = text.strip().split("\n")
    assert lines[0] == CSV_HEADER
    assert len(lines) == 9 and all(len(x.split(",")) == 7 for x in lines[1:])


@pytest.mark.parametrize("d", [3, 4, 5])
def test_section_constants(d):
    assert ball_section_constant(d) == pytest.approx(oracles.SECTION_CONSTANT[d], rel=1e-14)


@pytest.mark.parametrize("d", [3, 4])
def test_ball_slope_family(d):
    tab = slope_family_residuals(ProfileBody.unit_ball(d), zero_bump(), np.linspace(0, 10, 50))
    assert tab["max"] < 1e-10
    csv = residual_table_csv(tab)
    assert csv.startswith("s,volume_residual,centroid_residual\n") and csv.count("\n") == 51


def test_asymmetry_certificate():
    ball = ProfileBody.unit_ball(4)
    assert asymmetry_certificate(ball, zero_bump()) == 0.0
    vals = []
    for amp in (1e-6, 5e-7):
        b = make_bump(0.05, amp)
        s = np.linspace(*b.support, 2001)
        val = asymmetry_certificate(ball, b)
        assert val >= 0.5 * np.max(np.abs(b.d1(s)))
        vals.append(val)
    assert vals[0] / vals[1] == pytest.approx(2.0, rel=1e-12)


def test_ball_characteristic_points(ball3):
    out = characteristic_point_check(ball3, directions=4, n_volume=5)
    assert out["forward_max"] < 1e-7 and out["converse_max_rel"] < 1e-12


def test_ball_surface_of_centers(ball3):
    out = surface_of_centers_check(ball3, thetas=np.linspace(0, 2 * np.pi, 12, endpoint=False))
    assert out["radius_mean"] == pytest.approx(3 / 8, rel=1e-12)
    assert out["circularity"] < 1e-12 and out["midpoint_max"] < 1e-12
    assert out["tangency_max"] < 1e-9 and out["fl1_max"] < 1e-8 and out["convex"]


def test_surface_of_centers_non_half(ball3):
    out = surface_of_centers_check(ball3, 0.3 * body_volume(ball3),
                                   thetas=np.linspace(0, 2 * np.pi, 8, endpoint=False))
    assert "circularity" not in out
    assert out["tangency_max"] < 1e-6 and out["fl1_max"] < 1e-5


@pytest.mark.parametrize("d", [3, 5])
def test_ball_central_sections(d):
    cs = central_section_residuals(ProfileBody.unit_ball(d), np.linspace(0, math.pi / 2, 9))
    assert cs["max"] < 1e-12


def test_constructed_even_body_separates_from_comparator(even_build):
    body, info = even_build
    rep = equilibrium_sweep(body, 32)
    ref = equilibrium_sweep(comparator(body), 32)
    assert rep.max_tilt < 1e-3 * ref.max_tilt
    assert rep.moment_spread < 1e-3 * ref.moment_spread
    s = np.linspace(1 - 4 * 0.05, 1.0, 41)
    own = slope_family_residuals(body, info["bump"], s)["max"]
    other = slope_family_residuals(comparator(body), zero_bump(), s)["max"]
    assert own < 1e-3 * other


def test_constructed_odd_body_separates_from_comparator(odd_build):
    body, info = odd_build
    rep = equilibrium_sweep(body, 32)
    ref = equilibrium_sweep(comparator(body), 32)
    assert rep.max_tilt < 1e-3 * ref.max_tilt


def test_even_body_at_non_half_volume(even_build):
    body, _ = even_build
    vol = body_volume(body)
    cp = characteristic_point_check(body, 0.3 * vol, directions=4, n_volume=5)
    assert cp["forward_max"] < 1e-6 and cp["converse_max_rel"] < 1e-9
