import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from ulam_float.jets import Jet
from ulam_float.quadrature import gauss_chebyshev01, knot_rule, piecewise_rule, smoothstep_rule


def test_jet_derivatives_of_composition():
    x = Jet.variable(0.3, 5)
    f = (-(x * x)).exp() * (x + 2.0).sqrt()
    # reference: derivatives by complex-step-free finite differences of high order
    ref = [math.exp(-0.09) * math.sqrt(2.3)]
    assert f.deriv(0) == pytest.approx(ref[0], rel=1e-15)
    g = lambda s: math.exp(-s * s) * math.sqrt(s + 2.0)
    e = 1e-4
    fd2 = (g(0.3 + e) - 2 * g(0.3) + g(0.3 - e)) / e**2
    assert f.deriv(2) == pytest.approx(fd2, rel=1e-6)


@given(st.floats(0.1, 3.0), st.integers(1, 6), st.integers(1, 7))
def test_jet_power_matches_closed_form(s0, n, k):
    x = Jet.variable(s0, 7)
    p = x.ipow(n)
    expect = math.perm(n, k) * s0 ** (n - k) if k <= n else 0.0
    assert p.deriv(k) == pytest.approx(expect, rel=1e-12, abs=1e-12)


def test_jet_reciprocal_and_fractional_power():
    x = Jet.variable(1.7, 4)
    r = x.reciprocal()
    assert r.deriv(3) == pytest.approx(-6 / 1.7**4, rel=1e-13)
    p = x**2.5
    assert p.deriv(2) == pytest.approx(2.5 * 1.5 * 1.7**0.5, rel=1e-13)


def test_jet_differentiate_and_batch():
    s = np.linspace(0.1, 1, 5)
    x = Jet.variable(s, 4)
    f = x * x * x
    d = f.differentiate(1)
    assert np.allclose(d.value, 3 * s * s)
    assert np.allclose(f.deriv(3), 6.0)


def test_smoothstep_rule_removes_root_singularity():
    x, w = smoothstep_rule(4, 16)
    assert np.dot(w, np.sqrt(x * (1 - x))) == pytest.approx(math.pi / 8, abs=1e-13)


def test_piecewise_rule_polynomial():
    x, w = piecewise_rule([0.0, 0.3, 1.0, 2.0])
    assert np.dot(w, x**5) == pytest.approx(64 / 6, rel=1e-14)


def test_knot_rule_with_kink():
    x, w = knot_rule([-1.0, 0.2, 1.0])
    assert np.dot(w, np.abs(x - 0.2)) == pytest.approx(0.5 * 1.2**2 + 0.5 * 0.8**2, rel=1e-14)


def test_knot_rule_graded_end():
    x, w = knot_rule([0.0, 0.5, 1.0], graded=(1.0,))
    # only the graded panel holds the singularity; compare it on its own
    on = x > 0.5
    assert np.dot(w[on], np.sqrt(1 - x[on])) == pytest.approx(2 / 3 * 0.5**1.5, rel=1e-13)


def test_gauss_chebyshev():
    x, w = gauss_chebyshev01(10)
    assert np.dot(w, np.ones_like(x)) == pytest.approx(math.pi)
    assert np.dot(w, x**3) == pytest.approx(5 * math.pi / 16, rel=1e-14)
