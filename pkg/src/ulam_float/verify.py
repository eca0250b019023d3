"""Independent checks of floating equilibrium and the conditions behind it.

All routines read a :class:`~ulam_float.profile.ProfileBody` and never modify
it.  Directions are sampled in the ``x1 x_d`` plane, which covers every
orientation up to the body's rotational symmetry:
``xi(beta) = (cos beta, 0, ..., 0, sin beta)``.
"""

from __future__ import annotations

import io
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp
from scipy.spatial.distance import pdist
from scipy.special import beta as beta_fn

from .errors import GeometryError, NumericalError, ParameterError
from .hydrostatics import (
    CutPlane,
    _meridian,
    body_centroid,
    body_volume,
    chord_rule,
    characteristic_point_estimate,
    cut_at_volume,
    second_moment_const,
    section_centroid_and_moments,
    sphere_area,
    submerged_centroid,
    volume_below,
)
from .quadrature import knot_rule

CSV_HEADER = "beta,t,vol_residual,tilt,I1,Iperp,centroid_offset"
TILT_TOL_EVEN = 1e-6
TILT_TOL_ODD = 1e-5


def default_threads():
    """Worker cap from ``ULAM_FLOAT_THREADS`` (default 1)."""
    raw = os.environ.get("ULAM_FLOAT_THREADS", "1")
    try:
        n = int(raw)
    except ValueError as exc:
        raise ParameterError(f"ULAM_FLOAT_THREADS must be an integer, got {raw!r}") from exc
    if n < 1:
        raise ParameterError("ULAM_FLOAT_THREADS must be positive")
    return n


def _ordered_map(func, items, threads):
    threads = default_threads() if threads is None else int(threads)
    if threads <= 1:
        return [func(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(func, items))


def direction(beta, dim):
    xi = np.zeros(int(dim))
    xi[0], xi[-1] = np.cos(beta), np.sin(beta)
    return xi


def direction_angles(n):
    if int(n) < 1:
        raise ParameterError("need at least one direction")
    return 2.0 * np.pi * np.arange(int(n)) / int(n)


# ---------------------------------------------------------------------------
# sections of an arbitrary cut


def _prime(body):
    # cached whole-body values must exist before worker threads start
    body_volume(body)
    body_centroid(body)


def section_of_plane(body, plane):
    """Centroid (a ``d``-vector) and moments ``(I1, Iperp)`` of ``K ∩ H``.

    ``I1`` is taken about the ``(d-2)``-flat orthogonal to the meridian trace
    of ``H``; ``Iperp`` about one orthogonal to a rotational direction.
    """
    d = body.dim
    xi1, nperp, ez = _meridian(plane.xi)
    if nperp == 0.0:
        t0 = plane.t / xi1
        if not -body.R1 < t0 < body.R2:
            raise GeometryError("plane misses the body")
        c = np.zeros(d)
        c[0] = t0
        I = second_moment_const(d - 1) * float(body.f(t0)) ** (d + 1)
        return c, I, I
    s, h = plane.slope_form
    sm = section_centroid_and_moments(body, s, h)
    c = np.zeros(d)
    c[0] = sm.centroid_first_coord
    c += (s * sm.centroid_first_coord + h) * ez
    return c, sm.I1, sm.Iperp


# ---------------------------------------------------------------------------
# direct equilibrium


@dataclass
class EquilibriumReport:
    """Per-direction rows and summary of an equilibrium sweep.

    ``rows`` columns follow :data:`CSV_HEADER`.  ``tilt`` is the angle in
    radians between the line through the body centroid and the buoyancy
    centroid, and the direction ``xi``.
    """

    dim: int
    delta: float
    volume: float
    rows: np.ndarray
    asymmetry: float | None = None
    extra: dict = field(default_factory=dict)

    @property
    def beta(self):
        return self.rows[:, 0]

    @property
    def max_tilt(self):
        return float(np.max(self.rows[:, 3]))

    @property
    def max_volume_residual(self):
        return float(np.max(self.rows[:, 2]))

    @property
    def moment_spread(self):
        m = self.rows[:, 4:6].ravel()
        return float((m.max() - m.min()) / m.mean())

    def spread(self, column):
        m = self.rows[:, {"I1": 4, "Iperp": 5}[column]]
        return float((m.max() - m.min()) / m.mean())

    def to_csv(self):
        buf = io.StringIO()
        buf.write(CSV_HEADER + "\n")
        for row in self.rows:
            buf.write(",".join(format(float(v), ".17g") for v in row) + "\n")
        return buf.getvalue()

    def summary(self):
        out = {
            "directions": int(self.rows.shape[0]),
            "delta": self.delta,
            "volume": self.volume,
            "max_tilt": self.max_tilt,
            "mean_tilt": float(np.mean(self.rows[:, 3])),
            "max_vol_residual": self.max_volume_residual,
            "moment_spread": self.moment_spread,
            "I1_spread": self.spread("I1"),
            "Iperp_spread": self.spread("Iperp"),
        }
        if self.asymmetry is not None:
            out["asymmetry_certificate"] = self.asymmetry
        out.update(self.extra)
        return out


def tilt_angle(body, plane):
    """Angle between ``C_delta(xi) - C(K)`` (as a line) and ``xi``."""
    v = submerged_centroid(body, plane) - body_centroid(body)
    along = float(np.dot(v, plane.xi))
    perp = float(np.linalg.norm(v - along * plane.xi))
    if perp == 0.0 and along == 0.0:
        raise GeometryError("buoyancy centroid coincides with the body centroid")
    return float(np.arctan2(perp, abs(along))), float(np.linalg.norm(v))


def equilibrium_sweep(body, n_directions=128, delta=None, threads=None, bump=None):
    """Cut at volume ``delta`` (default half) in ``n_directions`` directions.

    Parameters
    ----------
    body : ProfileBody
    n_directions : int
        Number of equally spaced angles ``beta`` in ``[0, 2 pi)``.
    delta : float, optional
        Submerged volume; half the body volume when omitted.
    threads : int, optional
        Worker cap (``ULAM_FLOAT_THREADS`` when omitted).
    bump : PerturbationBump, optional
        When given, the report also carries the asymmetry certificate.

    Returns
    -------
    EquilibriumReport
    """
    _prime(body)
    vol = body_volume(body)
    delta = 0.5 * vol if delta is None else float(delta)
    betas = direction_angles(n_directions)

    def row(beta):
        plane = cut_at_volume(body, direction(beta, body.dim), delta)
        vres = abs(volume_below(body, plane) - delta)
        tilt, offset = tilt_angle(body, plane)
        _, I1, Ip = section_of_plane(body, plane)
        return [beta, plane.t, vres, tilt, I1, Ip, offset]

    rows = np.array(_ordered_map(row, betas, threads), dtype=float)
    if np.any(rows[:, 2] >= 1e-10 * vol):
        raise NumericalError("half-volume cut residual above 1e-10 of the volume")
    asym = asymmetry_certificate(body, bump) if bump is not None else None
    return EquilibriumReport(body.dim, delta, vol, rows, asym)


def tilt_tolerance(dim):
    return TILT_TOL_EVEN if int(dim) % 2 == 0 else TILT_TOL_ODD


# ---------------------------------------------------------------------------
# integral conditions over the slope family


def ball_section_constant(dim):
    """``int_{-1}^{1} (1 - u^2)^{d/2} du``."""
    return float(beta_fn(0.5, 0.5 * dim + 1.0))


def slope_family_residuals(body, bump, s_samples):
    """Residuals of the two integral conditions along ``x_d = s x1 + h(s)``.

    For each slope ``s`` with chord ``[-x(s), y(s)]`` and ``q = f^2 - L^2``
    (``L = s t + h(s)``), reports ``|int q^{d/2} - C / sqrt(1 + s^2)|`` with
    ``C`` from :func:`ball_section_constant`, and ``|int q^{d/2-1} (t + h'(s))|``.
    """
    s_samples = np.atleast_1d(np.asarray(s_samples, dtype=float))
    n = 0.5 * body.dim
    const = ball_section_constant(body.dim)
    hs = bump.derivatives(s_samples, 1)
    vol_res = np.empty_like(s_samples)
    mass_res = np.empty_like(s_samples)
    for i, (s, h, dh) in enumerate(zip(s_samples, hs[0], hs[1])):
        tl, tr = body.line_chord(s, h)
        tt, wt = chord_rule(body, tl, tr)
        q = np.maximum(body.f2(tt) - (s * tt + h) ** 2, 0.0)
        vol_res[i] = abs(float(np.dot(wt, q**n)) - const / np.sqrt(1.0 + s * s))
        mass_res[i] = abs(float(np.dot(wt, q ** (n - 1.0) * (tt + dh))))
    return {"s": s_samples, "volume": vol_res, "centroid": mass_res,
            "max": float(max(vol_res.max(), mass_res.max()))}


def residual_table_csv(table):
    buf = io.StringIO()
    buf.write("s,volume_residual,centroid_residual\n")
    for s, a, b in zip(table["s"], table["volume"], table["centroid"]):
        buf.write(f"{s:.17g},{a:.17g},{b:.17g}\n")
    return buf.getvalue()


# ---------------------------------------------------------------------------
# asymmetry


def asymmetry_certificate(body, bump, n=1001):
    """Diameter of the half-volume characteristic points ``(-h', -s h' + h)``.

    Outside the bump support every point is the origin, so the origin is
    included.  A positive value shows that the half-volume sections do not
    share a common point.
    """
    del body  # the points depend on the bump alone
    lo, hi = bump.support
    s = np.linspace(lo, hi, n)
    h, dh = bump.derivatives(s, 1)
    pts = np.column_stack([-dh, -s * dh + h])
    pts = np.vstack([pts, [0.0, 0.0]])
    return float(np.max(pdist(pts)))


# ---------------------------------------------------------------------------
# characteristic points of constant-volume families


def _family_plane(beta, t, dim):
    return CutPlane.make(direction(beta, dim), t)


def characteristic_point_check(body, delta=None, directions=16, dtheta=1e-3, beta_span=np.pi, n_volume=17):
    """Section centroids versus characteristic points, both ways.

    Forward: for the constant-volume family, the characteristic point of the
    rotating plane (finite differences in the angle) is the section centroid.

    Converse: a plane family whose characteristic point is always the
    section centroid, generated by ``t'(beta) = c(beta) . xi'(beta)`` from one
    cut, keeps the cut volume constant.
    """
    _prime(body)
    vol = body_volume(body)
    delta = 0.5 * vol if delta is None else float(delta)
    d = body.dim
    betas = np.linspace(0.0, 2.0 * np.pi, int(directions), endpoint=False) + 0.1
    fwd = []
    for b in betas:
        xi = direction(b, d)
        plane = cut_at_volume(body, xi, delta)
        c, _, _ = section_of_plane(body, plane)
        e = np.zeros(d)
        e[0], e[-1] = -np.sin(b), np.cos(b)
        p = characteristic_point_estimate(body, xi, delta, dtheta=dtheta, axis=e)
        # compare within the rotation plane; the estimate has no rotational part
        fwd.append(float(np.linalg.norm(p - c)))

    b0 = 0.05
    t0 = cut_at_volume(body, direction(b0, d), delta).t

    def rhs(beta, t):
        c, _, _ = section_of_plane(body, _family_plane(beta, t[0], d))
        dxi = np.zeros(d)
        dxi[0], dxi[-1] = -np.sin(beta), np.cos(beta)
        return [float(np.dot(c, dxi))]

    sol = solve_ivp(rhs, (b0, b0 + beta_span), [t0], method="DOP853", rtol=1e-12,
                    atol=1e-14, dense_output=True)
    if not sol.success:
        raise NumericalError(f"plane family integration failed: {sol.message}")
    check = np.linspace(b0, b0 + beta_span, int(n_volume))
    vols = np.array([volume_below(body, _family_plane(b, float(sol.sol(b)[0]), d)) for b in check])
    return {
        "delta": delta,
        "forward_max": float(max(fwd)),
        "forward": fwd,
        "converse_max_rel": float(np.max(np.abs(vols - delta)) / delta),
        "converse_volumes": vols.tolist(),
    }


# ---------------------------------------------------------------------------
# surface of centers


def _centers(body, delta, thetas):
    d = body.dim
    return np.array([submerged_centroid(body, cut_at_volume(body, direction(t, d), delta))
                     for t in thetas])


def surface_of_centers_check(body, delta=None, thetas=None, step=1e-3):
    """Tangency, derivative identity and shape of the surface of centers.

    ``thetas`` parameterize ``xi(theta)`` in the ``x1 x_d`` plane.  The
    derivative of the buoyancy centroid ``rho(theta)`` comes from central
    differences with Richardson extrapolation (steps ``step`` and ``step/2``).

    Checks: ``rho' . xi = 0`` (tangency); ``rho' + (I1 / delta) xi' = 0``;
    convexity of the closed curve traced by ``rho``; for half volume the
    curve's radius variation about ``C(K)`` and the midpoint identity
    ``(rho(theta) + rho(theta + pi)) / 2 = C(K)``.
    """
    _prime(body)
    vol = body_volume(body)
    delta = 0.5 * vol if delta is None else float(delta)
    if thetas is None:
        thetas = direction_angles(64)
    thetas = np.asarray(thetas, dtype=float)
    d = body.dim
    rho = _centers(body, delta, thetas)

    def deriv(h):
        return (_centers(body, delta, thetas + h) - _centers(body, delta, thetas - h)) / (2.0 * h)

    d1, d2 = deriv(step), deriv(0.5 * step)
    drho = (4.0 * d2 - d1) / 3.0
    xi = np.array([direction(t, d) for t in thetas])
    dxi = np.zeros_like(xi)
    dxi[:, 0], dxi[:, -1] = -np.sin(thetas), np.cos(thetas)
    tangency = np.abs(np.sum(drho * xi, axis=1))
    I1 = np.array([section_of_plane(body, cut_at_volume(body, x, delta))[1] for x in xi])
    fl1 = np.linalg.norm(drho + (I1 / delta)[:, None] * dxi, axis=1)
    # convexity of the projected curve (rotation plane coordinates)
    order = np.argsort(thetas)
    P = rho[order][:, [0, -1]]
    e1 = np.roll(P, -1, axis=0) - P
    e2 = np.roll(e1, -1, axis=0)
    cross = e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0]
    convex = bool(np.all(cross > 0) or np.all(cross < 0))
    out = {
        "delta": delta,
        "tangency_max": float(tangency.max()),
        "fl1_max": float(fl1.max()),
        "convex": convex,
    }
    if abs(delta - 0.5 * vol) < 1e-12 * vol:
        center = body_centroid(body)
        radii = np.linalg.norm(rho - center, axis=1)
        out["radius_mean"] = float(radii.mean())
        out["circularity"] = float((radii.max() - radii.min()) / radii.mean())
        opposite = _centers(body, delta, thetas + np.pi)
        out["midpoint_max"] = float(np.max(np.linalg.norm(0.5 * (rho + opposite) - center, axis=1)))
    return out


# ---------------------------------------------------------------------------
# central-section moment conditions on the sphere


def _great_circle_rule(body, c):
    """Nodes in ``theta in [0, pi]`` split where ``c cos(theta)`` hits a knot."""
    w = body.w_nodes
    inner = w[np.abs(w) < c]
    brk = np.linspace(0.0, np.pi, 17)
    if c > 0:
        brk = np.concatenate([brk, np.arccos(inner / c)])
    return knot_rule(brk, npts=6)


def central_section_residuals(body, alphas):
    """Zonal moment conditions of central sections ``K ∩ xi^perp``.

    ``xi = (sin a, 0, ..., 0, -cos a)``.  A point of the great subsphere is
    ``cos(theta) iota + sin(theta) u`` with ``iota = cos a e1 + sin a e_d``
    and ``u`` a unit vector of the rotational directions, so ``w1 = cos a
    cos(theta)`` and the ``u`` integral is done in closed form.  Residuals:

    - ``first``: ``R(w1 rho^d)``, zero when the section centroid is the origin;
    - ``axial``: ``R(w1^2 rho^{d+1}) - C cos^2 a``;
    - ``transverse``: ``R(w2^2 rho^{d+1}) - C``;
    - ``mixed``: ``R(w1 w2 rho^{d+1})``, which vanishes because the ``u``
      integrand is odd under ``u -> -u`` (evaluated on the pair ``+-u``);

    with ``C = |S^{d-2}| / (d - 1)``, the unit-ball value.
    """
    d = body.dim
    S3 = sphere_area(d - 3)
    C = sphere_area(d - 2) / (d - 1)
    alphas = np.atleast_1d(np.asarray(alphas, dtype=float))
    res = {k: np.empty_like(alphas) for k in ("first", "axial", "transverse", "mixed")}
    for i, a in enumerate(alphas):
        c = float(np.cos(a))
        th, wq = _great_circle_rule(body, c)
        w1 = c * np.cos(th)
        r = body.rho(w1)
        jac = wq * np.sin(th) ** (d - 3)
        rd1 = r ** (d + 1)
        res["first"][i] = abs(S3 * np.dot(jac, w1 * r**d))
        res["axial"][i] = abs(S3 * np.dot(jac, w1 * w1 * rd1) - C * c * c)
        res["transverse"][i] = abs(S3 / (d - 2) * np.dot(jac, np.sin(th) ** 2 * rd1) - C)
        pair = sum(np.dot(jac, w1 * np.sin(th) * sign * rd1) for sign in (1.0, -1.0))
        res["mixed"][i] = abs(0.5 * S3 * pair)
    res["alpha"] = alphas
    res["max"] = float(max(res[k].max() for k in ("first", "axial", "transverse", "mixed")))
    return res


def default_threshold_flags(dim, report=None, **values):
    """Pass/fail flags for the summary JSON."""
    flags = {}
    if report is not None:
        flags["equilibrium"] = report.max_tilt < tilt_tolerance(dim)
        flags["moments"] = report.moment_spread < 1e-6
    for key, (val, tol) in values.items():
        flags[key] = bool(val < tol)
    return flags


# ---------------------------------------------------------------------------
# 1D section formulas against the tensor-product oracle


def random_section_lines(n, seed=0, max_slope=3.0, depth=0.8):
    """``n`` random lines ``x_d = s x1 + h`` that cut a near-unit body."""
    rng = np.random.default_rng(seed)
    s = rng.uniform(-max_slope, max_slope, int(n))
    h = rng.uniform(-depth, depth, int(n)) * np.sqrt(1.0 + s * s)
    return np.column_stack([s, h])


def oracle_equivalence(body, lines):
    """Largest relative gap between the 1D section formulas and the oracle."""
    from .hydrostatics import section_oracle

    worst = 0.0
    for s, h in lines:
        fast = section_centroid_and_moments(body, s, h)
        ref = section_oracle(body, s, h)
        pairs = ((fast.area, ref["area"]), (fast.I1, ref["I1"]), (fast.Iperp, ref["Iperp"]))
        for a, b in pairs:
            worst = max(worst, abs(a - b) / abs(b))
        scale = max(1.0, abs(ref["centroid_first_coord"]))
        worst = max(worst, abs(fast.centroid_first_coord - ref["centroid_first_coord"]) / scale)
    return worst
