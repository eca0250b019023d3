"""Bodies of revolution and the three charts used to describe them.

A body of revolution about the ``x1`` axis is stored through its radial
function as a function of ``w1 = cos(phi)``, the first coordinate of the unit
direction.  Any smooth rotation-invariant body has a radial function that is a
smooth function of ``w1`` on ``[-1, 1]`` (including the two tips), so a cubic
spline of the deviation ``rho - 1`` in ``w1`` is a C2 representation without
square-root artifacts at the profile tips.

The profile ``f(t)``, the slope chart ``(x(s), y(s))`` and the polar chart
``(R(alpha), r(alpha))`` are all derived views of that one representation.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import e as EULER

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.optimize import brentq

from .errors import ConstructionError, GeometryError, ParameterError
from .jets import Jet

ROOT_TOL = 1e-13


# ---------------------------------------------------------------------------
# perturbation bump


@dataclass(frozen=True)
class PerturbationBump:
    """Mollifier ``A e exp(-1/(1-u^2))`` supported on ``[1-2 tau, 1-tau]``.

    The factor ``e`` makes the peak value (at the midpoint) equal ``amplitude``.
    Derivatives of every order come from Taylor jets of the closed form.
    """

    tau: float
    amplitude: float
    order: int = 6

    @property
    def support(self):
        return (1.0 - 2.0 * self.tau, 1.0 - self.tau)

    @property
    def midpoint(self):
        return 1.0 - 1.5 * self.tau

    @property
    def halfwidth(self):
        return 0.5 * self.tau

    def jet(self, s, order=None):
        """Taylor jet of ``h`` at the points ``s`` (exact zero off support)."""
        order = self.order if order is None else order
        s = np.asarray(s, dtype=float)
        c = np.zeros((order + 1,) + s.shape)
        if self.amplitude == 0.0:
            return Jet(c)
        u = (s - self.midpoint) / self.halfwidth
        inside = np.abs(u) < 1.0
        if np.any(inside):
            uj = (Jet.variable(s[inside], order) - self.midpoint) / self.halfwidth
            w = 1.0 - uj * uj
            g = (-w.reciprocal()).exp() * (self.amplitude * EULER)
            c[(slice(None), inside)] = g.c
        return Jet(c)

    def derivatives(self, s, k=None):
        """List ``[h, h', ..., h^(k)]`` evaluated at ``s``."""
        return self.jet(s, self.order if k is None else k).derivatives()

    def __call__(self, s):
        return self.jet(s, 0).value

    def d1(self, s):
        return self.jet(s, 1).deriv(1)

    def c_norm(self, k=None, n=4001):
        """``||h||_{C^k}`` sampled on a fine grid over the support."""
        k = self.order if k is None else k
        s = np.linspace(*self.support, n)
        return float(sum(np.max(np.abs(d)) for d in self.derivatives(s, k)))


def make_bump(tau, amplitude, order=6):
    if not (0.0 < tau < 0.25):
        raise ParameterError(f"tau must lie in (0, 1/4), got {tau}")
    if not amplitude >= 0.0:
        raise ParameterError(f"amplitude must be non-negative, got {amplitude}")
    if order < 1:
        raise ParameterError("bump order must be at least 1")
    return PerturbationBump(float(tau), float(amplitude), int(order))


def zero_bump(tau=0.05, order=6):
    return PerturbationBump(float(tau), 0.0, int(order))


# ---------------------------------------------------------------------------
# the unit ball


def x_ball(s):
    """``x_o(s) = y_o(s) = 1/sqrt(1+s^2)`` and its derivative."""
    s = np.asarray(s, dtype=float)
    v = 1.0 / np.sqrt(1.0 + s * s)
    return v, -s * v**3


def ball_state(s):
    """``Z_o(s) = (x_o, y_o, x_o', y_o')`` stacked as shape ``(4, len(s))``."""
    v, dv = x_ball(s)
    return np.array([v, v, dv, dv])


# ---------------------------------------------------------------------------
# body of revolution


class ProfileBody:
    """Body ``{x2^2 + ... + xd^2 <= f(x1)^2}`` given by its radial function.

    Parameters
    ----------
    dim : int
        Ambient dimension ``d >= 3``.
    w_nodes, rho_nodes : array_like
        Strictly increasing ``w1`` nodes in ``[-1, 1]`` (both ends included)
        and radial values there.
    meta : dict, optional
        Free-form construction record (tau, amplitude, generator, ...).
    """

    def __init__(self, dim, w_nodes, rho_nodes, meta=None):
        if int(dim) < 3:
            raise ParameterError(f"dimension must be at least 3, got {dim}")
        w = np.asarray(w_nodes, dtype=float)
        rho = np.asarray(rho_nodes, dtype=float)
        if w.ndim != 1 or w.shape != rho.shape or w.size < 4:
            raise ParameterError("radial nodes must be matching 1D arrays")
        if np.any(np.diff(w) <= 0) or w[0] != -1.0 or w[-1] != 1.0:
            raise ParameterError("w nodes must increase strictly from -1 to 1")
        if np.any(rho <= 0):
            raise GeometryError("radial function must be positive")
        self.dim = int(dim)
        self.w_nodes = w
        self.rho_nodes = rho
        self.meta = dict(meta or {})
        self._spline = CubicSpline(w, rho - 1.0)
        self._dspline = self._spline.derivative()
        self._d2spline = self._spline.derivative(2)
        self._cache = {}

    # construction helpers -------------------------------------------------

    @classmethod
    def unit_ball(cls, dim, n=801, meta=None):
        w = -np.cos(np.linspace(0.0, np.pi, n))
        w[0], w[-1] = -1.0, 1.0
        return cls(dim, w, np.ones_like(w), meta=meta)

    @classmethod
    def from_profile_points(cls, dim, t, f, meta=None):
        """Build from profile samples ``(t, f(t))`` including both tips."""
        t = np.asarray(t, dtype=float)
        f = np.asarray(f, dtype=float)
        rho = np.hypot(t, f)
        w = t / rho
        order = np.argsort(w)
        w, rho = w[order], rho[order]
        w[0], w[-1] = -1.0, 1.0
        return cls(dim, w, rho, meta=meta)

    # radial function ------------------------------------------------------

    def rho(self, w):
        return 1.0 + self._spline(np.clip(w, -1.0, 1.0))

    def drho(self, w):
        return self._dspline(np.clip(w, -1.0, 1.0))

    def d2rho(self, w):
        return self._d2spline(np.clip(w, -1.0, 1.0))

    def rho_phi(self, phi):
        """Radial function in the meridian plane at polar angle ``phi``."""
        return self.rho(np.cos(phi))

    @property
    def R1(self):
        return float(self.rho(-1.0))

    @property
    def R2(self):
        return float(self.rho(1.0))

    @property
    def phi_knots(self):
        """Polar angles of the spline knots, ascending in ``[0, pi]``."""
        if "phi_knots" not in self._cache:
            self._cache["phi_knots"] = np.arccos(np.clip(self.w_nodes[::-1], -1.0, 1.0))
        return self._cache["phi_knots"]

    @property
    def t_knots(self):
        """Axis abscissae of the spline knots, ascending."""
        if "t_knots" not in self._cache:
            self._cache["t_knots"] = self.rho_nodes * self.w_nodes
        return self._cache["t_knots"]

    @property
    def rmax(self):
        return float(np.max(self.rho_nodes))

    # profile --------------------------------------------------------------

    def w_of_t(self, t):
        """Invert ``t = rho(w) w`` (monotone for near-spherical bodies)."""
        t = np.asarray(t, dtype=float)
        w = np.clip(t, -1.0, 1.0)
        for _ in range(60):
            g = self.rho(w) * w - t
            dg = self.rho(w) + self.drho(w) * w
            step = g / dg
            w = np.clip(w - step, -1.0, 1.0)
            if np.all(np.abs(step) < 1e-16):
                break
        return w

    def f2(self, t):
        """Squared profile ``f(t)^2``; smooth in ``t`` up to the tips."""
        w = self.w_of_t(t)
        r = self.rho(w)
        return np.maximum(r * r * (1.0 - w * w), 0.0)

    def f(self, t):
        return np.sqrt(self.f2(t))

    def df(self, t):
        w = self.w_of_t(t)
        r, dr = self.rho(w), self.drho(w)
        sq = np.sqrt(np.maximum(1.0 - w * w, 1e-300))
        return (dr * sq - r * w / sq) / (r + dr * w)

    def profile_points(self):
        """``(t, f)`` at the body's radial nodes."""
        w, r = self.w_nodes, self.rho_nodes
        return r * w, r * np.sqrt(np.maximum(1.0 - w * w, 0.0))

    def d2f_of_w(self, w):
        """``f''`` at the profile point with direction cosine ``w`` (``|w| < 1``)."""
        w = np.asarray(w, dtype=float)
        r, dr, d2r = self.rho(w), self.drho(w), self.d2rho(w)
        S = np.sqrt(1.0 - w * w)
        tw = r + dr * w
        tww = 2.0 * dr + d2r * w
        Fw = dr * S - r * w / S
        Fww = d2r * S - dr * w / S - (dr * w + r) / S - r * w * w / S**3
        return (Fww * tw - Fw * tww) / tw**3

    def concavity_margin(self):
        """Smallest ``-f''``: over second divided differences of every node
        triple, and over the interpolant's analytic ``f''`` at all nodes and
        midpoints away from the tips."""
        t, fv = self.profile_points()
        dd = 2.0 * (
            (fv[2:] - fv[1:-1]) / (t[2:] - t[1:-1]) - (fv[1:-1] - fv[:-2]) / (t[1:-1] - t[:-2])
        ) / (t[2:] - t[:-2])
        i = int(np.argmax(dd))
        node_margin = float(-dd[i])
        triple = (float(t[i]), float(t[i + 1]), float(t[i + 2]))
        w = self.w_nodes
        ws = np.concatenate([w, 0.5 * (w[1:] + w[:-1])])
        ws = ws[np.abs(ws) < 1.0 - 1e-8]
        d2 = self.d2f_of_w(ws)
        j = int(np.argmax(d2))
        if -d2[j] < node_margin:
            tj = float(self.rho(ws[j]) * ws[j])
            return float(-d2[j]), (tj, tj, tj)
        return node_margin, triple

    def check_concavity(self, eps0=1e-6):
        margin, triple = self.concavity_margin()
        if not margin > eps0:
            raise ConstructionError(
                f"profile not strictly concave: margin {margin:.3e} at nodes {triple}",
                node=list(triple),
                stage="assembly",
            )
        return margin

    # meridian-plane geometry ---------------------------------------------

    def line_chord(self, s, h):
        """Abscissae ``t_L < t_R`` where ``x_d = s x1 + h`` meets the boundary."""
        s, h = float(s), float(h)
        phi0 = np.arctan(s)
        scale = np.sqrt(1.0 + s * s)

        def g(psi):
            phi = phi0 + psi
            return self.rho_phi(phi) * scale * np.sin(psi) - h

        half = 0.5 * np.pi
        try:
            psi_r = brentq(g, -half, half, xtol=ROOT_TOL * 1e-2, rtol=1e-15)
            psi_l = brentq(g, half, 3.0 * half, xtol=ROOT_TOL * 1e-2, rtol=1e-15)
        except ValueError as exc:
            raise GeometryError(f"line of slope {s} misses the body") from exc
        tr = float(self.rho_phi(phi0 + psi_r) * np.cos(phi0 + psi_r))
        tl = float(self.rho_phi(phi0 + psi_l) * np.cos(phi0 + psi_l))
        return tl, tr

    def __repr__(self):
        return f"ProfileBody(dim={self.dim}, nodes={self.w_nodes.size}, R1={self.R1:.6f}, R2={self.R2:.6f})"


# ---------------------------------------------------------------------------
# charts


@dataclass(frozen=True)
class SlopeChart:
    s: np.ndarray
    x: np.ndarray
    y: np.ndarray
    xp: np.ndarray
    yp: np.ndarray

    def residual(self, body, bump):
        """Max violation of ``f(y) = s y + h`` and ``f(-x) = s x - h``."""
        h = bump(self.s)
        ry = body.f(self.y) - (self.s * self.y + h)
        rx = body.f(-self.x) - (self.s * self.x - h)
        return float(max(np.max(np.abs(ry)), np.max(np.abs(rx))))

    def as_rows(self):
        return np.column_stack([self.s, self.x, self.y, self.xp, self.yp])

    def boundary_points(self, bump):
        """Meridian points ``(y, s y + h)`` and ``(-x, s x - h)``."""
        h = bump(self.s)
        right = np.column_stack([self.y, self.s * self.y + h])
        left = np.column_stack([-self.x, self.s * self.x - h])
        return right, left


@dataclass(frozen=True)
class PolarChart:
    alpha: np.ndarray
    R: np.ndarray
    r: np.ndarray

    def as_rows(self):
        return np.column_stack([self.alpha, self.R, self.r])


def chart_from_profile(body, bump, s_grid):
    """Slope chart of ``body`` for the line family ``x_d = s x1 + h(s)``."""
    s_grid = np.asarray(s_grid, dtype=float)
    hs = bump.derivatives(s_grid, 1)
    x = np.empty_like(s_grid)
    y = np.empty_like(s_grid)
    for i, (s, h) in enumerate(zip(s_grid, hs[0])):
        tl, tr = body.line_chord(s, h)
        x[i], y[i] = -tl, tr
    dh = hs[1]
    denom_y = body.df(y) - s_grid
    denom_x = body.df(-x) + s_grid
    if np.any(np.abs(denom_y) < 1e-12) or np.any(np.abs(denom_x) < 1e-12):
        i = int(np.argmin(np.minimum(np.abs(denom_x), np.abs(denom_y))))
        raise GeometryError(f"line tangent to the profile at slope {s_grid[i]}")
    yp = (y + dh) / denom_y
    xp = -(x - dh) / denom_x
    return SlopeChart(s_grid, x, y, xp, yp)


def ball_chart(s_grid):
    s_grid = np.asarray(s_grid, dtype=float)
    v, dv = x_ball(s_grid)
    return SlopeChart(s_grid, v, v.copy(), dv, dv.copy())


def polar_from_points(points):
    """Polar angle from the axis and radius for meridian points ``(t, f)``."""
    t, fv = points[:, 0], points[:, 1]
    return np.arctan2(fv, np.abs(t)), np.hypot(t, fv)


def _base_w_grid(n):
    w = -np.cos(np.linspace(0.0, np.pi, n))
    w[0], w[-1] = -1.0, 1.0
    return w


def profile_from_charts(chart, polar, dim, bump=None, n_base=1601, eps0=1e-6, meta=None):
    """Assemble a body from a slope chart, a polar chart, or both.

    Chart-induced meridian points replace the unit circle over the angular
    range they cover, and the circle is kept elsewhere.  A polar chart is read
    off directly (``w1 = +cos(alpha)`` for ``R``, ``-cos(alpha)`` for ``r``).
    When both are given they must cover disjoint angular ranges.
    """
    w_base = _base_w_grid(n_base)
    rho_base = np.ones_like(w_base)
    pieces_w, pieces_r = [], []
    if polar is not None:
        c = np.cos(polar.alpha)
        pieces_w += [c, -c]
        pieces_r += [polar.R, polar.r]
    if chart is not None:
        if bump is None:
            raise ParameterError("assembling from a slope chart needs the bump")
        right, left = chart.boundary_points(bump)
        for pts, sign in ((right, 1.0), (left, -1.0)):
            ang, rad = polar_from_points(pts)
            pieces_w.append(sign * np.cos(ang))
            pieces_r.append(rad)
    if pieces_w:
        wp = np.concatenate(pieces_w)
        rp = np.concatenate(pieces_r)
        # drop base nodes inside each covered interval
        keep = np.ones_like(w_base, dtype=bool)
        for pw in pieces_w:
            lo, hi = np.min(pw), np.max(pw)
            keep &= ~((w_base >= lo) & (w_base <= hi))
        w = np.concatenate([w_base[keep], wp])
        rho = np.concatenate([rho_base[keep], rp])
        order = np.argsort(w, kind="stable")
        w, rho = w[order], rho[order]
        uniq = np.concatenate([[True], np.diff(w) > 1e-14])
        w, rho = w[uniq], rho[uniq]
        w[0], w[-1] = -1.0, 1.0
    else:
        w, rho = w_base, rho_base
    body = ProfileBody(dim, w, rho, meta=meta)
    if eps0 is not None:
        body.check_concavity(eps0)
    return body
