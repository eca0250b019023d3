"""Counterexample bodies in odd dimension ``d = 2q + 1``.

With half-integer exponent ``p = q + 1/2`` the two chart conditions are

    int_{-x}^{y} (f^2 - L^2)^p dt = const / sqrt(1 + s^2),
    int_{-x}^{y} (f^2 - L^2)^(p-1) dL/ds dt = 0.

After ``q+1`` and ``q`` derivatives in ``s`` the outer parts of the integrals
carry the weakly singular factor ``1 / sqrt(sigma - s)``, giving a first kind
Abel-type system.  It is turned into a second kind system by applying the
Abel operator and differentiating once, then marched backward from ``s = 1``
exactly like the even case.  The chart is fixed on ``[1-3 tau, 1]``; the rest
of the body comes from the zonal Radon step in :mod:`ulam_float.radon`.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import comb, factorial

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.special import beta as beta_fn

from .errors import ConstructionError, MarchingError, ParameterError, SmallnessBudgetError
from .jets import Jet, falling
from .marching import VolterraProblem, descending_grid, march
from .profile import SlopeChart, ball_state, make_bump, polar_from_points, profile_from_charts, zero_bump
from .quadrature import gauss_chebyshev01, gauss_legendre, gauss_legendre01
from .radon import compute_phi_psi, radon_zonal_inverse, scale_zonal, solve_Rr

SQRT_HALF = np.sqrt(0.5)
ABEL_C = np.pi


def double_factorial(n):
    out = 1
    while n > 1:
        out *= n
        n -= 2
    return out


def ball_constant(q):
    """``int_{-1}^{1} (1 - u^2)^(q+1/2) du``."""
    return float(beta_fn(0.5, q + 1.5))


def divided_difference_jet(bump, s, sigma, order, near=2e-3, n_near=12):
    """Jet in ``s`` of ``H(s, sigma) = (h(sigma) - h(s)) / (sigma - s)``.

    Far from the diagonal the quotient of jets is used; closer than ``near``
    the derivatives come from ``d^k/ds^k H = int_0^1 (1-u)^k h^(k+1)(s + (sigma-s)u) du``.
    """
    s = np.asarray(s, dtype=float)
    sigma = np.broadcast_to(np.asarray(sigma, dtype=float), s.shape)
    c = np.zeros((order + 1,) + s.shape)
    if bump.amplitude == 0.0:
        return Jet(c)
    gap = sigma - s
    far = np.abs(gap) >= near
    if np.any(far):
        sf = s[far]
        hj = bump.jet(sf, order)
        den = Jet.variable(sf, order) * (-1.0) + sigma[far]
        c[(slice(None), far)] = ((hj * (-1.0) + bump(sigma[far])) / den).c
    if np.any(~far):
        sn, gn = s[~far], gap[~far]
        u, wu = gauss_legendre01(n_near)
        pts = sn[:, None] + gn[:, None] * u[None, :]
        d = bump.derivatives(pts, order + 1)
        for k in range(order + 1):
            c[(k, ~far)] = (d[k + 1] * ((1.0 - u) ** k * wu)[None, :]).sum(axis=1) / factorial(k)
    return Jet(c)


@dataclass
class AbelSystem(VolterraProblem):
    """The second kind system for ``d = 2q + 1`` with a fixed bump.

    Parameters
    ----------
    dim : int
        Odd dimension ``>= 3``.
    bump : PerturbationBump
    n_cheb : int
        Gauss-Chebyshev nodes for the averaged kernel.
    """

    dim: int
    bump: object
    n_cheb: int = 48
    n_t: int = 64
    n_fine: int = 8001
    q: int = field(init=False)
    const: float = field(init=False)

    def __post_init__(self):
        if self.dim < 3 or self.dim % 2 == 0:
            raise ParameterError(f"odd construction needs an odd dimension >= 3, got {self.dim}")
        self.q = (self.dim - 1) // 2
        self.const = ball_constant(self.q)
        self._tq = None
        self._corr = None

    # kernels -------------------------------------------------------------

    def kernel_pair(self, s, sigma, t):
        """``K1, dK1/ds, K2, dK2/ds`` at batches ``(s, sigma, t)``.

        ``K1 = sqrt(sigma-s) d^{q+1}/ds^{q+1} (L(sigma,t)^2 - L(s,t)^2)^(q+1/2)``
        and ``K2 = sqrt(sigma-s) d^q/ds^q [(L(sigma,t)^2 - L(s,t)^2)^(q-1/2) dL/ds]``
        with the square root factored out of the power analytically.
        """
        q = self.q
        s = np.asarray(s, dtype=float)
        sigma = np.asarray(sigma, dtype=float)
        t = np.asarray(t, dtype=float)
        order = q + 2
        hj = self.bump.jet(s, order)
        Lj = hj + Jet.variable(s, order) * t
        Lsig = sigma * t + self.bump(sigma)
        H = divided_difference_jet(self.bump, s, sigma, order)
        W = (H + t) * (Lj + Lsig)
        if not np.all(W.c[0] > 0.0):
            raise SmallnessBudgetError("kernel positivity (t + H)(L(sigma,t) + L(s,t)) > 0 violated")
        gap = Jet(np.stack([sigma - s, -np.ones_like(s)] + [np.zeros_like(s)] * (order - 1)))
        gpow = [Jet.constant(np.ones_like(s), order)]
        for _ in range(q + 1):
            gpow.append(gpow[-1] * gap)
        p1 = q + 0.5
        Wp = W ** p1
        K1 = None
        for j in range(q + 2):
            coef = comb(q + 1, j) * (-1.0) ** j * falling(p1, j)
            term = gpow[q + 1 - j].truncate(1) * Wp.differentiate(q + 1 - j).truncate(1) * coef
            K1 = term if K1 is None else K1 + term
        p2 = q - 0.5
        Wp2 = (W.truncate(q + 1)) ** p2
        Ls = Lj.differentiate(1)
        K2 = None
        for i in range(q + 1):
            inner = None
            for j in range(i + 1):
                coef = comb(i, j) * (-1.0) ** j * falling(p2, j)
                term = gpow[q - j].truncate(1) * Wp2.differentiate(i - j).truncate(1) * coef
                inner = term if inner is None else inner + term
            term = Ls.differentiate(q - i).truncate(1) * inner * comb(q, i)
            K2 = term if K2 is None else K2 + term
        return K1.c[0], K1.c[1], K2.c[0], K2.c[1]

    def diagonal_kernels(self, s, t):
        """``K1(s, s, t)`` and ``K2(s, s, t)`` in closed form."""
        q = self.q
        hj = self.bump.jet(np.asarray(s, dtype=float), 1)
        L = s * t + hj.c[0]
        Ls = t + hj.c[1]
        P = L * Ls
        if not np.all(P > 0.0):
            raise SmallnessBudgetError("kernel positivity violated on the diagonal")
        root = np.sqrt(2.0 * P)
        K1 = double_factorial(2 * q + 1) * (-P) ** (q + 1) / root
        K2 = double_factorial(2 * q - 1) * (-P) ** q * Ls / root
        return K1, K2

    def jacobian_A(self, s, x, y):
        """``pi`` times the diagonal kernel matrix (coefficient of ``z'``)."""
        K1, K2 = self.diagonal_kernels(s, np.array([-x, y]))
        return ABEL_C * np.array([K1, K2])

    # right-hand side correction -------------------------------------------

    def _t_rule(self):
        if self._tq is None:
            tq, wq = gauss_legendre(self.n_t)
            self._tq = (SQRT_HALF * tq, SQRT_HALF * wq)
        return self._tq

    def fixed_interval_terms(self, s, bump=None, extra=0):
        """``E1, E2`` (or their ``extra``-th derivatives) at points ``s``.

        Integrals over ``[-1/sqrt2, 1/sqrt2]`` with ``f = f_o``; only defined
        for ``s < 1``.
        """
        bump = self.bump if bump is None else bump
        q = self.q
        s = np.atleast_1d(np.asarray(s, dtype=float))
        t, w = self._t_rule()
        order = q + 1 + extra
        S = np.repeat(s[:, None], t.size, axis=1)
        T = np.broadcast_to(t[None, :], S.shape)
        L = bump.jet(S, order) + Jet.variable(S, order) * T
        U = (L * L) * (-1.0) + (1.0 - T * T)
        if not np.all(U.c[0] > 0.0):
            raise SmallnessBudgetError("fixed-interval integrand left its domain (s too close to 1)")
        e1 = (U ** (q + 0.5)).deriv(q + 1 + extra)
        e2 = ((U.truncate(q + extra) ** (q - 0.5)) * L.differentiate(1)).deriv(q + extra)
        return e1 @ w, e2 @ w

    def rhs_correction_spline(self):
        """Splines of ``dQ/ds - dQ_o/ds`` over the bump support."""
        if self._corr is None:
            lo, hi = self.bump.support
            sg = np.linspace(lo, hi, self.n_fine)
            if self.bump.amplitude == 0.0:
                d1 = d2 = np.zeros_like(sg)
            else:
                ref = zero_bump(self.bump.tau)
                a1, a2 = self.fixed_interval_terms(sg, extra=1)
                b1, b2 = self.fixed_interval_terms(sg, bump=ref, extra=1)
                d1, d2 = -(a1 - b1), -(a2 - b2)
            self._corr = (lo, hi, CubicSpline(sg, d1), CubicSpline(sg, d2))
        return self._corr

    def rhs_correction(self, s, panels=200, npts=8):
        """``d/ds int_s^1 dQ(s') / sqrt(s'-s) ds'`` for ``dQ = Q - Q_o``.

        ``dQ`` is supported inside ``[1-2tau, 1-tau]``, so with ``s' = s + u^2``
        this is ``2 int dQ'(s + u^2) du`` over a bounded smooth range.
        """
        lo, hi, sp1, sp2 = self.rhs_correction_spline()
        s = float(s)
        if s >= hi or self.bump.amplitude == 0.0:
            return np.zeros(2)
        ua, ub = np.sqrt(max(lo - s, 0.0)), np.sqrt(hi - s)
        x, wx = gauss_legendre01(npts)
        edges = np.linspace(ua, ub, panels + 1)
        u = (edges[:-1, None] + np.diff(edges)[:, None] * x[None, :]).ravel()
        wu = (np.diff(edges)[:, None] * wx[None, :]).ravel()
        sig = np.clip(s + u * u, lo, hi)
        return 2.0 * np.array([wu @ sp1(sig), wu @ sp2(sig)])

    # Volterra interface -----------------------------------------------------

    def local(self, k, s, x, y, xp, yp, w_diag):
        t = np.array([-x, y])
        K1, K2 = self.diagonal_kernels(s, t)
        _, dK1, _, dK2 = self.kernel_pair(np.array([s, s]), np.array([s, s]), t)
        zp = np.array([xp, yp])
        # -G2(s,s) = pi (K1 . z'), K = -(K1 . z')
        g = ABEL_C * np.array([K1 @ zp, K2 @ zp])
        diag = -0.5 * ABEL_C * w_diag * np.array([dK1 @ zp, dK2 @ zp])
        return g + diag - self._correction(s)

    def _correction(self, s):
        cache = getattr(self, "_corr_cache", None)
        if cache is None:
            cache = self._corr_cache = {}
        v = cache.get(float(s))
        if v is None:
            v = cache[float(s)] = self.rhs_correction(s)
        return v

    def history(self, k, s, S, Z, w):
        tau, wt = gauss_chebyshev01(self.n_cheb)
        m = S.size
        sig = np.repeat(S, tau.size)
        tt = np.tile(tau, m)
        ww = np.repeat(w, tau.size) * np.tile(wt * (1.0 - tau), m)
        se = s + tt * (sig - s)
        x = np.repeat(Z[0], tau.size)
        y = np.repeat(Z[1], tau.size)
        xp = np.repeat(Z[2], tau.size) * ww
        yp = np.repeat(Z[3], tau.size) * ww
        _, dK1, _, dK2 = self.kernel_pair(np.concatenate([se, se]), np.concatenate([sig, sig]),
                                          np.concatenate([-x, y]))
        der = np.concatenate([xp, yp])
        return -np.array([dK1 @ der, dK2 @ der])

    # checks -------------------------------------------------------------

    def abel_residual(self, s, zfunc, n_u=64):
        """First kind residual ``int_s^1 K / sqrt(sigma - s) - Q(s)``.

        ``zfunc(sigma) -> (4, m)`` gives the state; the singular factor is
        removed with ``sigma = s + u^2``.
        """
        s = float(s)
        xg, wg = gauss_legendre01(n_u)
        panels = 16
        edges = np.linspace(0.0, np.sqrt(1.0 - s), panels + 1)
        u = (edges[:-1, None] + np.diff(edges)[:, None] * xg[None, :]).ravel()
        wu = (np.diff(edges)[:, None] * wg[None, :]).ravel()
        sig = s + u * u
        Zq = np.asarray(zfunc(sig))
        K1, _, K2, _ = self.kernel_pair(np.full(2 * sig.size, s), np.concatenate([sig, sig]),
                                        np.concatenate([-Zq[0], Zq[1]]))
        der = np.concatenate([Zq[2], Zq[3]]) * np.concatenate([wu, wu]) * 2.0
        lhs = -np.array([K1 @ der, K2 @ der])
        e1, e2 = self.fixed_interval_terms(np.array([s]))
        v = Jet.variable(s, self.q + 1)
        rhs1 = float(((v * v + 1.0) ** -0.5).deriv(self.q + 1)) * self.const
        return lhs - np.array([-e1[0] + rhs1, -e2[0]])


def assemble_abel_system(dim, bump, **kw):
    return AbelSystem(int(dim), bump, **kw)


def expected_sign_pattern(q):
    """Sign pattern of the diagonal matrix: equal first row, opposite second."""
    a = (-1) ** (q + 1)
    b = (-1) ** q
    return np.array([[a, a], [-b, b]])


def march_backward_abel(system, s_grid, pin=True):
    """March the odd system down ``s_grid`` (descending from 1).

    Nodes with ``s >= 1 - tau`` are pinned to the ball (the bump vanishes on
    ``[1-tau, 1]``, so the exact solution is the ball's there).
    """
    s_grid = np.asarray(s_grid, dtype=float)
    ref = AbelSystem(system.dim, zero_bump(system.bump.tau), n_cheb=system.n_cheb)
    Z_ref = ball_state(s_grid)
    state, diag = march(system, ref, s_grid, Z_ref,
                        pinned=(s_grid >= 1.0 - system.bump.tau) if pin else None)
    pattern = expected_sign_pattern(system.q)
    for k in range(s_grid.size):
        A = system.jacobian_A(s_grid[k], state.x[k], state.y[k])
        if not np.array_equal(np.sign(A).astype(int), pattern):
            raise MarchingError("diagonal kernel sign pattern broken", node=float(s_grid[k]))
    if np.any(state.xp >= 0) or np.any(state.yp >= 0):
        raise MarchingError("chart stopped decreasing", node=float(s_grid[np.argmax(state.xp)]))
    return state, diag


def _chart_from_state(state):
    return SlopeChart(state.s[::-1].copy(), state.x[::-1].copy(), state.y[::-1].copy(),
                      state.xp[::-1].copy(), state.yp[::-1].copy())


def extension_angles(tau, n_ext, end_gap):
    """Angles on ``[0, arctan(1-3tau) - end_gap]``, clustered at the axis.

    ``end_gap`` (about one chart step) keeps the last node clear of the first
    marched point so the two pieces join without near-duplicate nodes.
    """
    a_end = float(np.arctan(1.0 - 3.0 * tau)) - end_gap
    k = np.arange(n_ext + 1)
    return a_end * (1.0 - np.cos(0.5 * np.pi * k / n_ext))


def _build_cap(dim, bump, n_intervals, n_cheb):
    system = assemble_abel_system(dim, bump, n_cheb=n_cheb)
    s_grid = descending_grid(1.0 - 3.0 * bump.tau, n_intervals)
    state, diag = march_backward_abel(system, s_grid)
    return system, state, diag


def build_odd_body(dim, tau, amplitude, n_intervals=512, n_cheb=24, refine_tol=1e-8, eps0=1e-6,
                   order=6, n_ext=801, inv_degree=128, overlap_tol=1e-7):
    """Full odd-dimensional pipeline for one amplitude.

    The march fixes the chart for slopes in ``[1-3tau, 1]``; the moment
    functions of that cap are extended by their ball values and inverted,
    and ``(R, r)`` is solved for the remaining directions.

    Returns
    -------
    body : ProfileBody
    info : dict
    """
    dim = int(dim)
    if dim < 3 or dim % 2 == 0:
        raise ParameterError(f"odd construction needs an odd dimension >= 3, got {dim}")
    bump = make_bump(tau, amplitude, order)
    system, state, diag = _build_cap(dim, bump, n_intervals, n_cheb)
    refinement = 0.0
    if refine_tol is not None and amplitude > 0:
        _, fine, _ = _build_cap(dim, bump, 2 * n_intervals, n_cheb)
        refinement = float(np.max(np.abs(fine.Z[:2, ::2] - state.Z[:2])))
        if not refinement < refine_tol:
            raise ConstructionError(f"grid doubling changed the chart by {refinement:.2e}",
                                    stage="refinement")
    chart = _chart_from_state(state)
    cap = profile_from_charts(chart, None, dim, bump=bump, eps0=None)
    phi, psi, seam = compute_phi_psi(cap, tau)
    Phi = scale_zonal(radon_zonal_inverse(phi, dim, degree=inv_degree), 2.0)
    Psi = scale_zonal(radon_zonal_inverse(psi, dim, degree=inv_degree), 2.0)
    gap = float(np.arctan(chart.s[1]) - np.arctan(chart.s[0]))
    ext = solve_Rr(Phi, Psi, dim, extension_angles(tau, n_ext, gap))
    # overlap with the marched cap
    right, left = chart.boundary_points(bump)
    ang_r, rad_r = polar_from_points(right)
    ang_l, rad_l = polar_from_points(left)
    over_r = solve_Rr(Phi, Psi, dim, ang_r)
    over_l = solve_Rr(Phi, Psi, dim, ang_l)
    overlap = max(float(np.max(np.abs(over_r.R - rad_r))), float(np.max(np.abs(over_l.r - rad_l))))
    if not overlap < overlap_tol:
        raise ConstructionError(f"(R, r) disagrees with the marched chart by {overlap:.2e}",
                                stage="overlap")
    d = dim
    plus_r = max(float(np.max(np.abs(ext.R ** (d + 1) + ext.r ** (d + 1) - _quot(Phi, ext.alpha, 2)))),
                 float(np.max(np.abs(ext.R**d - ext.r**d - _quot(Psi, ext.alpha, 1)))))
    slope0 = solve_Rr(Phi, Psi, dim, np.array([0.0, 1e-4]))
    dR0 = float((slope0.R[1] - slope0.R[0]) / 1e-4)
    dr0 = float((slope0.r[1] - slope0.r[0]) / 1e-4)
    meta = {"generator": "odd", "dim": dim, "tau": float(tau), "amplitude": float(amplitude),
            "order": int(order), "n_intervals": int(n_intervals)}
    body = profile_from_charts(chart, ext, dim, bump=bump, eps0=eps0, meta=meta)
    margin, _ = body.concavity_margin()
    info = {
        "bump": bump,
        "system": system,
        "state": state,
        "chart": chart,
        "polar": ext,
        "march": diag,
        "refinement": refinement,
        "seam": seam,
        "overlap": overlap,
        "plus_r_residual": plus_r,
        "slope_at_axis": (dR0, dr0),
        "concavity_margin": margin,
        "Phi": Phi,
        "Psi": Psi,
    }
    return body, info


def _quot(Z, alpha, power):
    v = np.maximum(np.cos(alpha), 1e-8)
    return Z.at(v) / v**power


def default_start_amplitude(dim, tau, order=6):
    """Amplitude at which the unit-shape bump's ``(q+2)``-th derivative is 1e-2.

    Larger bumps push the zonal inversion round trip past its tolerance well
    before any concavity limit, so the search starts low.
    """
    q = (int(dim) - 1) // 2
    unit = make_bump(tau, 1.0, max(order, q + 3))
    s = np.linspace(*unit.support, 20001)
    return 1e-2 / float(np.max(np.abs(unit.derivatives(s, q + 2)[q + 2])))


def build_odd_auto(dim, tau, start_amplitude=None, max_halvings=20, probe_intervals=256, **kw):
    """Back-off loop for the amplitude (see :func:`build_even_auto`)."""
    amp = float(start_amplitude or default_start_amplitude(dim, tau))
    eps0 = kw.get("eps0", 1e-6)
    attempts = []
    for _ in range(max_halvings + 1):
        try:
            _, probe = build_odd_body(dim, tau, amp, n_intervals=probe_intervals, refine_tol=None,
                                      eps0=eps0)
            attempts.append({"amplitude": amp, "ok": True, "margin": probe["concavity_margin"]})
            break
        except ConstructionError as exc:
            attempts.append({"amplitude": amp, "ok": False, "stage": exc.stage, "message": str(exc)})
            amp *= 0.5
    else:
        raise SmallnessBudgetError(f"no admissible amplitude after {max_halvings} halvings", node=amp)
    body, info = build_odd_body(dim, tau, 0.5 * amp, **kw)
    info["attempts"] = attempts
    info["doubled_amplitude_margin"] = attempts[-1]["margin"]
    return body, info
