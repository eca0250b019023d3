import numpy as np
import pytest

from ulam_float.errors import ConstructionError, MarchingError, ParameterError
from ulam_float.even_construct import (
    assemble_even_system,
    build_even_body,
    check_return_to_circle,
    expected_sign_pattern,
    jacobian_A,
    march_backward,
)
from ulam_float.marching import StateZ, descending_grid
from ulam_float.profile import ball_state, make_bump, x_ball, zero_bump
from ulam_float.verify import slope_family_residuals

TAU = 0.05


def test_sign_pattern_at_ball_n2():
    sys = assemble_even_system(4, zero_bump(TAU))
    x = y = 2**-0.5
    J = jacobian_A(sys, 1.0, x, y)
    assert np.array_equal(J["signs"], np.array([[1, 1], [1, -1]]))
    assert np.array_equal(J["signs"], expected_sign_pattern(2))
    assert abs(J["det"]) > 1e-3


def test_jacobian_matches_finite_difference_of_rows():
    sys = assemble_even_system(4, make_bump(TAU, 1e-6))
    s, x, y = 0.93, 0.73, 0.74
    A = sys.jacobian_A(s, x, y)
    e = 1e-3
    for j in range(2):
        dp = np.zeros(2)
        dp[j] = e
        r_plus = sys.local(0, s, x, y, -0.3 + dp[0], -0.35 + dp[1], 0.0)
        r_minus = sys.local(0, s, x, y, -0.3 - dp[0], -0.35 - dp[1], 0.0)
        assert np.allclose((r_plus - r_minus) / (2 * e), A[:, j], rtol=1e-9)


def test_determinant_degenerates_towards_zero_slope():
    sys = assemble_even_system(4, zero_bump(TAU))
    dets = []
    for s in (0.1, 0.01, 0.001):
        x = x_ball(s)[0]
        dets.append(abs(np.linalg.det(sys.jacobian_A(s, x, x))))
    assert dets[0] > dets[1] > dets[2]
    with pytest.raises(MarchingError):
        jacobian_A(sys, 1e-4, 1.0, 1.0)


def test_ball_state_solves_unperturbed_system():
    sys = assemble_even_system(4, zero_bump(TAU))
    for s in np.linspace(0.5, 0.99, 8):
        r = sys.continuous_residual(s, ball_state)
        assert np.max(np.abs(r)) < 1e-9


def test_rhs_at_one_is_derivative_of_constant_term():
    sys = assemble_even_system(4, zero_bump(TAU))
    # with an empty Volterra interval only the fixed and right-hand terms remain
    r = sys.continuous_residual(1.0, ball_state)
    assert np.max(np.abs(r)) < 1e-10


def test_zero_bump_marches_to_ball():
    sys = assemble_even_system(4, zero_bump(TAU))
    s = descending_grid(1 - 3 * TAU, 128)
    state, _ = march_backward(sys, s)
    assert np.max(np.abs(state.Z - ball_state(s))) < 1e-10
    rep = check_return_to_circle(state, TAU, 2)
    assert rep["deviation"] == 0.0 or rep["deviation"] < 1e-14


def test_return_to_circle_failure_is_reported():
    s = descending_grid(1 - 3 * TAU, 64)
    Z = ball_state(s)
    Z[0] += 1e-6
    with pytest.raises(ConstructionError) as exc:
        check_return_to_circle(StateZ(s, Z), TAU)
    assert exc.value.stage == "return_to_circle"


def test_odd_moment_zero_forces_equal_ends():
    s = descending_grid(1 - 3 * TAU, 32)
    rep = check_return_to_circle(StateZ(s, ball_state(s)), TAU, 2)
    assert rep["odd_moment_residual"] < 1e-15 and rep["even_moment_residual"] < 1e-15


def test_deviation_scales_linearly_with_amplitude():
    s = descending_grid(1 - 3 * TAU, 256)
    devs = []
    for amp in (2e-12, 1e-12):
        state, _ = march_backward(assemble_even_system(4, make_bump(TAU, amp)), s)
        devs.append(np.max(np.abs(state.Z[:2] - ball_state(s)[:2])))
    assert devs[1] > 0
    assert devs[0] / devs[1] == pytest.approx(2.0, rel=0.2)


def test_amplitude_zero_gives_ball():
    body, info = build_even_body(4, TAU, 0.0, n_intervals=128)
    t = np.linspace(-0.999, 0.999, 301)
    assert np.max(np.abs(body.f(t) - np.sqrt(1 - t * t))) < 1e-10


def test_rejects_odd_dimension():
    with pytest.raises(ParameterError):
        build_even_body(5, TAU, 1e-12)


def test_built_body_properties(even_build):
    body, info = even_build
    bump = info["bump"]
    # perturbed only on the two bands around +-1/sqrt2
    e1, e2, e3 = (x_ball(1 - k * TAU)[0] for k in (1, 2, 3))
    t = np.linspace(-0.999, 0.999, 4001)
    off = ~(((t > -e3) & (t < -e1)) | ((t > e1) & (t < e3)))
    assert np.max(np.abs(body.f(t[off]) - np.sqrt(1 - t[off] ** 2))) < 1e-12
    assert np.max(np.abs(body.f(t[~off]) - np.sqrt(1 - t[~off] ** 2))) > 0
    # moment identity at s = 1 - 3 tau
    assert info["moment_ladder"][1] < 1e-9
    # sign pattern at every node
    st = info["state"]
    for k in range(0, st.s.size, 64):
        J = jacobian_A(info["system"], st.s[k], st.x[k], st.y[k])
        assert np.array_equal(J["signs"], expected_sign_pattern(2))
    # undifferentiated conditions at random slopes
    rng = np.random.default_rng(1)
    tab = slope_family_residuals(body, bump, rng.uniform(1 - 3 * TAU, 1.0, 10))
    assert tab["max"] < 1e-8
