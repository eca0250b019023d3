"""Hyperplane cuts of bodies of revolution.

Every quantity reduces to one-dimensional integrals in the meridian plane
spanned by the rotation axis ``e1`` and the unit vector ``e_z`` along the part
of the cutting direction orthogonal to the axis.  A slice ``x1 = tau`` of the
body is a ``(d-1)``-ball of radius ``f(tau)``; the halfspace cuts it at height
``a(tau)`` along ``e_z``, and the truncated-ball volume and first moment are
closed form (regularized incomplete beta).  Slice integrals are taken in the
polar angle of the meridian curve so that the profile tips are regular.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import gamma as Gamma, pi

import numpy as np
from scipy.optimize import brentq
from scipy.special import betainc

from .errors import GeometryError, NumericalError, ParameterError
from .quadrature import gauss_legendre01, knot_rule


# ---------------------------------------------------------------------------
# constants


def ball_volume(m):
    """Volume ``kappa_m`` of the unit ``m``-ball (``kappa_0 = 1``)."""
    return pi ** (m / 2.0) / Gamma(m / 2.0 + 1.0)


def sphere_area(m):
    """Surface measure ``|S^m|`` of the unit ``m``-sphere (``|S^0| = 2``)."""
    return 2.0 * pi ** ((m + 1) / 2.0) / Gamma((m + 1) / 2.0)


def second_moment_const(m):
    """``gamma_m = int_{B^m} p_1^2 dp = kappa_m / (m + 2)``."""
    return ball_volume(m) / (m + 2.0)


# ---------------------------------------------------------------------------
# planes


@dataclass(frozen=True)
class CutPlane:
    """Hyperplane ``{p . xi = t}``; the lower halfspace is ``p . xi <= t``.

    ``slope_form`` is ``(s, h)`` with ``x_z = s x1 + h`` in the meridian plane
    containing ``xi`` (``None`` when ``xi`` is parallel to the axis).
    """

    xi: np.ndarray
    t: float
    slope_form: tuple | None = None

    @classmethod
    def make(cls, xi, t):
        xi = np.asarray(xi, dtype=float)
        n = np.linalg.norm(xi)
        if xi.ndim != 1 or xi.size < 2 or not n > 0:
            raise ParameterError("cut direction must be a nonzero vector")
        xi = xi / n
        nperp = float(np.linalg.norm(xi[1:]))
        slope = None
        if nperp > 1e-15:
            slope = (-float(xi[0]) / nperp, float(t) / nperp)
        return cls(xi, float(t), slope)

    @classmethod
    def from_slope(cls, s, h, dim):
        """Plane ``x_d = s x1 + h`` with upward normal, lower side below it."""
        xi = np.zeros(int(dim))
        xi[0], xi[-1] = -s, 1.0
        scale = np.sqrt(1.0 + s * s)
        return cls(xi / scale, float(h) / scale, (float(s), float(h)))

    def flipped(self):
        return CutPlane.make(-self.xi, -self.t)


def _meridian(xi):
    """Axis component, transverse norm and transverse unit vector of ``xi``."""
    xi = np.asarray(xi, dtype=float)
    nperp = float(np.linalg.norm(xi[1:]))
    ez = np.zeros_like(xi)
    if nperp > 1e-15:
        ez[1:] = xi[1:] / nperp
    else:
        nperp = 0.0
        ez[-1] = 1.0
    return float(xi[0]), nperp, ez


# ---------------------------------------------------------------------------
# meridian quadrature


def _phi_of_t(body, t):
    return float(np.arccos(np.clip(body.w_of_t(np.asarray(t, dtype=float)), -1.0, 1.0)))


def _nodes(body, kinks):
    knots = body.phi_knots
    for k in kinks:
        # clear knots within two local gaps of a crossing (root singularity)
        i = int(np.clip(np.searchsorted(knots, k), 1, knots.size - 1))
        gap = knots[i] - knots[i - 1]
        knots = knots[(np.abs(knots - k) >= 2.0 * gap) | (knots == 0.0) | (knots == np.pi)]
    breaks = np.concatenate([knots, kinks])
    phi, wq = knot_rule(breaks, graded=kinks)
    w = np.cos(phi)
    rho = body.rho(w)
    drho = body.drho(w)
    sphi = np.sin(phi)
    tau = rho * w
    f = rho * sphi
    jac = sphi * (rho + drho * w)  # -d tau / d phi
    return tau, f, wq * jac


def _kinks(body, xi1, nperp, t):
    """Polar angles where the cutting plane crosses the meridian curve."""
    if nperp == 0.0:
        if xi1 == 0.0:
            return []
        tk = t / xi1
        if -body.R1 < tk < body.R2:
            return [_phi_of_t(body, tk)]
        return []
    s, h = -xi1 / nperp, t / nperp
    try:
        tl, tr = body.line_chord(s, h)
    except GeometryError:
        return []
    return [_phi_of_t(body, tl), _phi_of_t(body, tr)]


def _support(body, direction2, n=4001):
    """Support value of the meridian curve (both sheets) along ``(c1, c2)``."""
    phi = np.linspace(0.0, np.pi, n)
    rho = body.rho_phi(phi)
    c1, c2 = direction2
    return float(np.max(rho * (c1 * np.cos(phi) + abs(c2) * np.sin(phi))))


def _slab_integrals(body, plane, need_moments=True):
    """Volume, axis moment and transverse moment of ``K`` below ``plane``."""
    xi1, nperp, _ = _meridian(plane.xi)
    t = plane.t
    m = body.dim - 1
    kappa_m = ball_volume(m)
    kappa_m1 = ball_volume(m - 1)
    tau, f, wq = _nodes(body, _kinks(body, xi1, nperp, t))
    if nperp == 0.0:
        inside = (xi1 * tau <= t).astype(float)
        sl = kappa_m * f**m * inside
        mz = np.zeros_like(f)
    else:
        a = (t - xi1 * tau) / nperp
        with np.errstate(divide="ignore", invalid="ignore"):
            z = np.where(f > 0, a / np.where(f > 0, f, 1.0), np.sign(a))
        z = np.clip(z, -1.0, 1.0)
        frac = 0.5 + 0.5 * np.sign(z) * betainc(0.5, 0.5 * (m + 1), z * z)
        sl = kappa_m * f**m * frac
        mz = -kappa_m1 * np.maximum(f * f - a * a, 0.0) ** (0.5 * (m + 1)) / (m + 1)
    vol = float(np.dot(wq, sl))
    if not need_moments:
        return vol, 0.0, 0.0
    return vol, float(np.dot(wq, tau * sl)), float(np.dot(wq, mz))


# ---------------------------------------------------------------------------
# whole-body quantities


def body_volume(body):
    """``|S^{d-2}| / d * int_0^pi rho^d sin^{d-2} phi dphi``."""
    key = "volume"
    if key not in body._cache:
        d = body.dim
        phi, wq = knot_rule(body.phi_knots)
        rho = body.rho_phi(phi)
        body._cache[key] = sphere_area(d - 2) / d * float(np.dot(wq, rho**d * np.sin(phi) ** (d - 2)))
    return body._cache[key]


def body_centroid(body):
    """Centroid ``C(K)``; only the axis coordinate can be nonzero."""
    key = "centroid"
    if key not in body._cache:
        d = body.dim
        phi, wq = knot_rule(body.phi_knots)
        rho = body.rho_phi(phi)
        m1 = sphere_area(d - 2) / (d + 1) * float(
            np.dot(wq, rho ** (d + 1) * np.cos(phi) * np.sin(phi) ** (d - 2))
        )
        c = np.zeros(d)
        c[0] = m1 / body_volume(body)
        body._cache[key] = c
    return body._cache[key].copy()


# ---------------------------------------------------------------------------
# cuts


def volume_below(body, plane):
    """``vol_d(K ∩ {p . xi <= t})``; 0 or the full volume if the plane misses."""
    return _slab_integrals(body, plane, need_moments=False)[0]


def section_area(body, plane):
    """``vol_{d-1}(K ∩ H)``, the derivative of :func:`volume_below` in ``t``."""
    xi1, nperp, _ = _meridian(plane.xi)
    # near-axial planes: the chord form loses digits like 1/nperp, while the
    # disc value is off only by O(nperp^2) (area is even in the tilt)
    if nperp < 1e-6:
        if xi1 == 0.0:
            return 0.0
        tk = plane.t / xi1
        if not -body.R1 < tk < body.R2:
            return 0.0
        return ball_volume(body.dim - 1) * float(body.f(tk)) ** (body.dim - 1) / abs(xi1)
    s, h = plane.slope_form if plane.slope_form else (-xi1 / nperp, plane.t / nperp)
    try:
        tl, tr = body.line_chord(s, h)
    except GeometryError:
        return 0.0
    tt, wt = chord_rule(body, tl, tr)
    g = np.maximum(body.f2(tt) - (s * tt + h) ** 2, 0.0)
    m = body.dim - 2
    return ball_volume(m) * float(np.dot(wt, g ** (0.5 * m))) / nperp


def cut_at_volume(body, xi, delta, tol=1e-11):
    """Plane with unit normal ``xi`` cutting off volume ``delta`` below it."""
    vol = body_volume(body)
    if not 0.0 < delta < vol:
        raise ParameterError(f"delta must lie in (0, {vol}), got {delta}")
    xi = np.asarray(xi, dtype=float)
    xi = xi / np.linalg.norm(xi)
    xi1, nperp, _ = _meridian(xi)
    hi = _support(body, (xi1, nperp)) + 1e-3
    lo = -_support(body, (-xi1, nperp)) - 1e-3

    def F(t):
        return volume_below(body, CutPlane.make(xi, t)) - delta

    t = brentq(F, lo, hi, xtol=1e-15, rtol=1e-15, maxiter=200)
    # Newton polish with the section area as derivative
    plane = CutPlane.make(xi, t)
    r = F(t)
    area = section_area(body, plane)
    if area > 0:
        t_new = t - r / area
        r_new = F(t_new)
        if abs(r_new) < abs(r):
            t, r = t_new, r_new
    if abs(r) > tol * vol:
        raise NumericalError(f"volume cut residual {abs(r):.3e} exceeds tolerance")
    return CutPlane.make(xi, t)


def submerged_centroid(body, plane):
    """Centroid of ``K`` below ``plane``."""
    vol, m1, mz = _slab_integrals(body, plane)
    if not vol > 1e-14 * body_volume(body):
        raise GeometryError("submerged part is degenerate")
    _, _, ez = _meridian(plane.xi)
    c = np.zeros(body.dim)
    c[0] = m1 / vol
    return c + (mz / vol) * ez


# ---------------------------------------------------------------------------
# sections by lines of the meridian plane


@dataclass(frozen=True)
class SectionMoments:
    """Moments of the section ``K ∩ H(L_s)``.

    ``I1`` is about the in-plane axis through the centroid orthogonal to the
    meridian trace, ``Iperp`` about each axis lying along the meridian trace
    direction inside the section (any of the ``d-2`` rotational directions).
    """

    I1: float
    Iperp: float
    centroid_first_coord: float
    area: float
    kappa: float
    gamma: float

    def centroid(self, s, h, dim):
        p = np.zeros(int(dim))
        p[0] = self.centroid_first_coord
        p[-1] = s * self.centroid_first_coord + h
        return p


def chord_rule(body, tl, tr):
    """Rule on ``[tl, tr]`` split at the body's knots, graded at both ends."""
    inner = _chord_knots(body, tl, tr)
    return knot_rule(np.concatenate([[tl, tr], inner]), graded=(tl, tr))


def _chord_knots(body, tl, tr):
    """Body knots inside ``(tl, tr)`` that may bound plain Gauss panels.

    The chord-end root singularity must stay at least two knot gaps away from
    the first ungraded panel; short chords with fewer than three knots get
    none (one graded panel, or two halves in the oracle).
    """
    tk = body.t_knots
    inner = tk[(tk > tl) & (tk < tr)]
    if inner.size < 3:
        return inner[:0]
    gl = inner[1] - inner[0]
    gr = inner[-1] - inner[-2]
    return inner[(inner >= tl + 2.0 * gl) & (inner <= tr - 2.0 * gr)]


def section_centroid_and_moments(body, s, h):
    """Section centroid and moments of inertia for the line ``x_d = s x1 + h``."""
    d = body.dim
    try:
        tl, tr = body.line_chord(s, h)
    except GeometryError as exc:
        raise GeometryError(f"empty section for slope {s}") from exc
    if not tr > tl:
        raise GeometryError(f"empty section for slope {s}")
    tt, wt = chord_rule(body, tl, tr)
    q = np.maximum(body.f2(tt) - (s * tt + h) ** 2, 0.0)
    g = q ** (0.5 * (d - 2))
    kap = ball_volume(d - 2)
    gam = second_moment_const(d - 2)
    scale = np.sqrt(1.0 + s * s)
    mass = float(np.dot(wt, g))
    if not mass > 0:
        raise GeometryError(f"empty section for slope {s}")
    c1 = float(np.dot(wt, tt * g)) / mass
    I1 = kap * scale**3 * float(np.dot(wt, (tt - c1) ** 2 * g))
    Iperp = gam * scale * float(np.dot(wt, q ** (0.5 * d)))
    return SectionMoments(I1, Iperp, c1, kap * scale * mass, kap, gam)


def section_oracle(body, s, h, nt=7, nr=None):
    """Independent tensor-product quadrature of section centroid and moments.

    The section is parameterized by the axis coordinate ``t`` and the radius
    ``r`` of the ``(d-2)``-ball slice.  In ``t`` the chord is split at the
    body's knots, the two end pieces use a one-sided quadratic map (removing
    the square-root behaviour at the chord ends) and the interior pieces
    plain ``nt``-point Gauss-Legendre; ``r`` uses Gauss-Legendre on
    ``[0, sqrt(f^2 - L^2)]``.  All moments come from the 2D sum directly.
    """
    d = body.dim
    tl, tr = body.line_chord(s, h)
    inner = _chord_knots(body, tl, tr)
    if inner.size == 0:
        inner = np.array([0.5 * (tl + tr)])
    br = np.unique(np.concatenate([[tl, tr], inner]))
    xg, wg = gauss_legendre01(nt)
    xe, we = gauss_legendre01(4 * nt)
    a, b = br[:-1], br[1:]
    ts = [(a[1:-1, None] + (b - a)[1:-1, None] * xg).ravel()]
    ws = [((b - a)[1:-1, None] * wg).ravel()]
    # left end: t = a + (b - a) u^2 ; right end: t = b - (b - a) u^2
    ts.append(a[0] + (b[0] - a[0]) * xe**2)
    ws.append((b[0] - a[0]) * 2.0 * xe * we)
    ts.append(b[-1] - (b[-1] - a[-1]) * xe**2)
    ws.append((b[-1] - a[-1]) * 2.0 * xe * we)
    tt, wt = np.concatenate(ts), np.concatenate(ws)
    rad = np.sqrt(np.maximum(body.f2(tt) - (s * tt + h) ** 2, 0.0))
    nr = nr or (d + 4)
    xr, wr = gauss_legendre01(nr)
    r = rad[:, None] * xr[None, :]
    wr2 = rad[:, None] * wr[None, :]
    shell = sphere_area(d - 3) * r ** (d - 3)
    scale = np.sqrt(1.0 + s * s)
    W = wt[:, None] * wr2 * shell * scale
    area = float(np.sum(W))
    c1 = float(np.sum(W * tt[:, None])) / area
    I1 = float(np.sum(W * ((tt[:, None] - c1) * scale) ** 2))
    Iperp = float(np.sum(W * r * r)) / (d - 2)
    return {"area": area, "centroid_first_coord": c1, "I1": I1, "Iperp": Iperp}


# ---------------------------------------------------------------------------
# characteristic points


def characteristic_point(bump, s, dim=3):
    """Limit point of ``H(L_s) ∩ H(L_{s+ds})``: ``(-h', 0, .., -s h' + h)``."""
    h, dh = (float(v[0]) for v in bump.derivatives(np.array([float(s)]), 1))
    p = np.zeros(int(dim))
    p[0] = -dh
    p[-1] = -s * dh + h
    return p


def _rotation_partner(xi, axis=None):
    xi = np.asarray(xi, dtype=float)
    xi = xi / np.linalg.norm(xi)
    cand = [axis] if axis is not None else []
    e1 = np.zeros_like(xi)
    e1[0] = 1.0
    ed = np.zeros_like(xi)
    ed[-1] = 1.0
    cand += [e1, ed]
    for c in cand:
        c = np.asarray(c, dtype=float)
        e = c - np.dot(c, xi) * xi
        n = np.linalg.norm(e)
        if n > 1e-8:
            return xi, e / n
    raise ParameterError("cannot pick a rotation plane for this direction")


def characteristic_point_estimate(body, xi, delta, dtheta=1e-3, axis=None, tol=1e-7):
    """Characteristic point from half-volume planes of nearby directions.

    The two planes for ``xi`` rotated by ``+-dtheta`` in the plane
    ``span(xi, e)`` meet in a ``(d-2)``-flat; its point in that 2-plane has
    second-order error in ``dtheta``, removed by Richardson extrapolation
    with ``dtheta/2``.
    """
    xi, e = _rotation_partner(xi, axis)

    def point(th):
        c, sn = np.cos(th), np.sin(th)
        tp = cut_at_volume(body, c * xi + sn * e, delta).t
        tm = cut_at_volume(body, c * xi - sn * e, delta).t
        return (tp + tm) / (2.0 * c) * xi + (tp - tm) / (2.0 * sn) * e

    p1 = point(dtheta)
    p2 = point(0.5 * dtheta)
    limit = (4.0 * p2 - p1) / 3.0
    err = float(np.max(np.abs(limit - p2)))
    # p2 itself is within O(dtheta^2); the extrapolated value must be closer
    if err > max(tol, 10.0 * dtheta**2):
        raise NumericalError(f"characteristic point extrapolation did not settle ({err:.2e})")
    return limit
