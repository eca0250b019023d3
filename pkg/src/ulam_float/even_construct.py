"""Counterexample bodies in even dimension ``d = 2n``.

The two integral conditions on the slope chart

    int_{-x}^{y} (f^2 - L^2)^n dt = const / sqrt(1 + s^2),
    int_{-x}^{y} (f^2 - L^2)^(n-1) dL/ds dt = 0,       L(s, t) = s t + h(s),

are differentiated ``n+1`` and ``n`` times in ``s``.  After substituting
``t = -x(sigma)`` and ``t = y(sigma)`` in the outer parts of the integrals
they become a Volterra system of the second kind for ``(x, y, x', y')``,
which is marched backward from ``s = 1`` where the chart is the unit ball's.
High-order ``s``-derivatives of the integrands are taken with Taylor jets.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import factorial

import numpy as np

from .errors import ConstructionError, MarchingError, ParameterError, SmallnessBudgetError
from .jets import Jet
from .marching import VolterraProblem, descending_grid, march
from .profile import (
    SlopeChart,
    ball_state,
    make_bump,
    profile_from_charts,
    x_ball,
    zero_bump,
)
from .quadrature import gauss_legendre, piecewise_rule

SQRT_HALF = np.sqrt(0.5)


def ball_constant(n):
    """``int_{-1}^{1} (1 - u^2)^n du`` (exact rational for integer ``n``)."""
    # 2 * 4^n (n!)^2 / (2n+1)!
    return 2.0 * 4.0**n * factorial(n) ** 2 / factorial(2 * n + 1)


def _line_jet(hjet, s, t):
    """Jet in ``s`` of ``L(s, t) = s t + h(s)`` for a batch of ``t``."""
    t = np.asarray(t, dtype=float)
    c = np.repeat(hjet.c[:, None], t.size, axis=1).reshape((hjet.c.shape[0],) + t.shape)
    c[0] = c[0] + s * t
    if c.shape[0] > 1:
        c[1] = c[1] + t
    return Jet(c)


@dataclass
class EvenSystem(VolterraProblem):
    """The differentiated system for ``d = 2n`` with a fixed bump."""

    dim: int
    bump: object
    n: int = field(init=False)
    const: float = field(init=False)

    def __post_init__(self):
        if self.dim < 4 or self.dim % 2:
            raise ParameterError(f"even construction needs an even dimension >= 4, got {self.dim}")
        self.n = self.dim // 2
        self.const = ball_constant(self.n)
        tq, wq = gauss_legendre(2 * self.n + 4)
        self._xi_t = SQRT_HALF * tq
        self._xi_w = SQRT_HALF * wq
        self._node_cache = {}

    # kernels -----------------------------------------------------------

    def _consts(self, s):
        """Per-node constants: bump jet, fixed-interval terms, right side."""
        s = float(s)
        hit = self._node_cache.get(s)
        if hit is None:
            hj = self.bump.jet(s, self.n + 1)
            self._node_cache[s] = (hj, None, None)
            xi = self._xi_terms_uncached(s)
            hit = (hj, xi, self._rhs_uncached(s))
            self._node_cache[s] = hit
        return hit

    def kernels(self, s, C, t):
        """``(k1, k2)`` for levels ``C = L(sigma, t)^2`` at abscissae ``t``.

        ``k1 = d^{n+1}/ds^{n+1} (C - L(s,t)^2)^n`` and
        ``k2 = d^n/ds^n [(C - L(s,t)^2)^{n-1} dL/ds(s,t)]``.
        """
        n = self.n
        hj = self._consts(s)[0]
        L = _line_jet(hj, s, t)
        P = (L * L) * (-1.0) + np.asarray(C, dtype=float)
        k1 = P.ipow(n).deriv(n + 1)
        Ls = L.differentiate(1)
        k2 = (P.truncate(n).ipow(n - 1) * Ls).deriv(n)
        return k1, k2

    def xi_terms(self, s):
        """Fixed-interval integrals over ``[-x_o(1), y_o(1)]`` with ``f = f_o``."""
        return self._consts(s)[1]

    def rhs(self, s):
        """``(d/ds)^{n+1} const / sqrt(1 + s^2)``."""
        return self._consts(s)[2]

    def _xi_terms_uncached(self, s):
        t = self._xi_t
        k1, k2 = self.kernels(s, 1.0 - t * t, t)
        return float(np.dot(self._xi_w, k1)), float(np.dot(self._xi_w, k2))

    def _rhs_uncached(self, s):
        v = Jet.variable(float(s), self.n + 1)
        return float(((v * v + 1.0) ** -0.5).deriv(self.n + 1) * self.const)

    def jacobian_A(self, s, x, y):
        """Coefficient matrix of ``(x', y')`` in the two differentiated rows."""
        n = self.n
        hj = self._consts(s)[0]
        h, dh = float(hj.c[0]), float(hj.c[1])
        c1 = (-2.0) ** n * factorial(n)
        c2 = (-2.0) ** (n - 1) * factorial(n - 1)
        out = np.empty((2, 2))
        for j, t in enumerate((-x, y)):
            L = s * t + h
            Ls = t + dh
            out[0, j] = c1 * (L * Ls) ** n
            out[1, j] = c2 * (L * Ls) ** (n - 1) * Ls
        return out

    def level(self, sigma, t):
        """``L(sigma, t)^2 = f(t)^2`` on the chart."""
        sigma = np.asarray(sigma, dtype=float)
        return (sigma * t + self.bump(sigma)) ** 2

    # Volterra interface -------------------------------------------------

    def local(self, k, s, x, y, xp, yp, w_diag):
        A = self.jacobian_A(s, x, y)
        t = np.array([-x, y])
        k1, k2 = self.kernels(s, self.level(np.array([s, s]), t), t)
        xi1, xi2 = self.xi_terms(s)
        r3 = A[0, 0] * xp + A[0, 1] * yp - w_diag * (k1[0] * xp + k1[1] * yp) + xi1 - self.rhs(s)
        r4 = A[1, 0] * xp + A[1, 1] * yp - w_diag * (k2[0] * xp + k2[1] * yp) + xi2
        return np.array([r3, r4])

    def history(self, k, s, S, Z, w):
        t = np.concatenate([-Z[0], Z[1]])
        sig = np.concatenate([S, S])
        der = np.concatenate([Z[2], Z[3]]) * np.concatenate([w, w])
        k1, k2 = self.kernels(s, self.level(sig, t), t)
        return -np.array([np.dot(k1, der), np.dot(k2, der)])

    # continuous residual -----------------------------------------------

    def continuous_residual(self, s, zfunc, nquad=48):
        """Rows 3, 4 of the system for a state function ``zfunc(s) -> (4, m)``.

        The Volterra integrals use Gauss-Legendre on ``[s, 1]``; used to
        check that the unit-ball chart solves the ``h = 0`` system.
        """
        xg, wg = gauss_legendre(nquad)
        sig = s + (1.0 - s) * 0.5 * (xg + 1.0)
        wq = 0.5 * (1.0 - s) * wg
        Zs = np.asarray(zfunc(np.array([s])))[:, 0]
        Zq = np.asarray(zfunc(sig))
        A = self.jacobian_A(s, Zs[0], Zs[1])
        t = np.concatenate([-Zq[0], Zq[1]])
        sig2 = np.concatenate([sig, sig])
        der = np.concatenate([Zq[2], Zq[3]]) * np.concatenate([wq, wq])
        k1, k2 = self.kernels(s, self.level(sig2, t), t)
        xi1, xi2 = self.xi_terms(s)
        r3 = A[0] @ Zs[2:] - np.dot(k1, der) + xi1 - self.rhs(s)
        r4 = A[1] @ Zs[2:] - np.dot(k2, der) + xi2
        return np.array([r3, r4])


def assemble_even_system(dim, bump):
    return EvenSystem(int(dim), bump)


def jacobian_A(system, s, x, y):
    """Boundary matrix with determinant and sign pattern.

    Raises
    ------
    MarchingError
        If ``|det A| < 1e-10``.
    """
    A = system.jacobian_A(s, x, y)
    det = float(np.linalg.det(A))
    if not abs(det) >= 1e-10:
        raise MarchingError(f"boundary Jacobian singular at s={s}", node=float(s))
    return {"A": A, "det": det, "signs": np.sign(A).astype(int)}


def expected_sign_pattern(n):
    base = np.array([[1, 1], [1, -1]])
    return base if n % 2 == 0 else -base


def march_backward(system, s_grid):
    """March the even system down ``s_grid`` (descending from 1)."""
    s_grid = np.asarray(s_grid, dtype=float)
    ref = EvenSystem(system.dim, zero_bump(system.bump.tau))
    state, diag = march(system, ref, s_grid, ball_state(s_grid))
    if np.any(state.xp >= 0) or np.any(state.yp >= 0):
        raise MarchingError("chart stopped decreasing", node=float(s_grid[np.argmax(state.xp)]))
    return state, diag


def check_return_to_circle(state, tau, n=None, tol=1e-8):
    """Deviation of the marched chart from the ball on ``[1-3tau, 1-2tau]``.

    Also evaluates the moment identities that force the return: equal
    ``t^{2n}`` moments and vanishing ``t^{2n-1}`` moments over ``[-x, y]``.
    """
    s = state.s
    band = (s >= 1.0 - 3.0 * tau - 1e-14) & (s <= 1.0 - 2.0 * tau + 1e-14)
    xo, _ = x_ball(s[band])
    x, y = state.x[band], state.y[band]
    dev = float(max(np.max(np.abs(x - xo)), np.max(np.abs(y - xo))))
    report = {"deviation": dev, "tol": tol, "ok": dev < tol}
    if n is not None:
        even = (y ** (2 * n + 1) + x ** (2 * n + 1)) / (2 * n + 1)
        even_o = 2.0 * xo ** (2 * n + 1) / (2 * n + 1)
        odd = (y ** (2 * n) - x ** (2 * n)) / (2 * n)
        report["even_moment_residual"] = float(np.max(np.abs(even - even_o)))
        report["odd_moment_residual"] = float(np.max(np.abs(odd)))
    if not report["ok"]:
        raise ConstructionError(
            f"chart does not return to the circle (deviation {dev:.2e})",
            node=float(s[band][np.argmax(np.abs(x - xo))]),
            stage="return_to_circle",
        )
    return report


def integrate_over_chord(body, a, b, func, breaks=(), panels=8, npts=24):
    """``int_a^b func(t, f(t)^2) dt`` with graded rules between breakpoints."""
    pts = [a, b] + [p for p in breaks if a < p < b]
    t, w = piecewise_rule(sorted(pts), panels, npts)
    return float(np.dot(w, func(t, body.f2(t))))


def moment_ladder(body, tau, n):
    """Moment identities ``int f^{2j} t^{2(n-1-j)+1}`` vs the ball at ``s = 1-3tau``.

    Returns the absolute differences for ``j = 1..n-1``.
    """
    s0 = 1.0 - 3.0 * tau
    xo, _ = x_ball(s0)
    a, b = -float(xo), float(xo)
    edges = _band_edges(tau)
    out = {}
    for j in range(1, n):
        p = 2 * (n - 1 - j) + 1
        lhs = integrate_over_chord(body, a, b, lambda t, f2: f2**j * t**p, edges)
        rhs = integrate_over_chord(body, a, b, lambda t, f2: (1.0 - t * t) ** j * t**p, edges)
        out[j] = abs(lhs - rhs)
    return out


def _band_edges(tau):
    e = [float(x_ball(1.0 - k * tau)[0]) for k in (1, 2, 3)]
    return sorted([-v for v in e] + e)


def _build_once(dim, bump, n_intervals):
    system = assemble_even_system(dim, bump)
    s_grid = descending_grid(1.0 - 3.0 * bump.tau, n_intervals)
    state, diag = march_backward(system, s_grid)
    return system, state, diag


def build_even_body(dim, tau, amplitude, n_intervals=2048, refine_tol=1e-9, eps0=1e-6, order=6):
    """Full even-dimensional pipeline for one amplitude.

    Returns
    -------
    body : ProfileBody
    info : dict
        Chart, marched state, and the construction diagnostics.
    """
    dim = int(dim)
    if dim < 4 or dim % 2:
        raise ParameterError(f"even construction needs an even dimension >= 4, got {dim}")
    bump = make_bump(tau, amplitude, order)
    n = dim // 2
    system, state, diag = _build_once(dim, bump, n_intervals)
    # grid refinement check on the common nodes
    refinement = 0.0
    if refine_tol is not None and amplitude > 0:
        _, fine, _ = _build_once(dim, bump, 2 * n_intervals)
        refinement = float(np.max(np.abs(fine.Z[:, ::2] - state.Z)))
        if not refinement < refine_tol:
            raise ConstructionError(
                f"grid doubling changed the chart by {refinement:.2e}", stage="refinement"
            )
    ret = check_return_to_circle(state, tau, n)
    chart = SlopeChart(state.s[::-1].copy(), state.x[::-1].copy(), state.y[::-1].copy(),
                       state.xp[::-1].copy(), state.yp[::-1].copy())
    meta = {"generator": "even", "dim": dim, "tau": float(tau), "amplitude": float(amplitude),
            "order": int(order), "n_intervals": int(n_intervals)}
    body = profile_from_charts(chart, None, dim, bump=bump, eps0=eps0, meta=meta)
    margin, _ = body.concavity_margin()
    ladder = moment_ladder(body, tau, n)
    info = {
        "bump": bump,
        "system": system,
        "state": state,
        "chart": chart,
        "march": diag,
        "refinement": refinement,
        "return_to_circle": ret,
        "concavity_margin": margin,
        "moment_ladder": ladder,
    }
    return body, info


def default_start_amplitude(dim, tau, order=6):
    """Amplitude at which the unit-shape bump's ``(n+2)``-th derivative is 8.

    The curvature of the constructed profile responds to ``h^(n+2)``, so this
    is the scale where the back-off loop starts."""
    n = int(dim) // 2
    unit = make_bump(tau, 1.0, max(order, n + 2))
    s = np.linspace(*unit.support, 20001)
    return 8.0 / float(np.max(np.abs(unit.derivatives(s, n + 2)[n + 2])))


def build_even_auto(dim, tau, start_amplitude=None, max_halvings=20, probe_intervals=512, **kw):
    """Back-off loop for the amplitude.

    Halve from ``start_amplitude`` until a coarse build (``probe_intervals``)
    succeeds with concavity margin above ``eps0``; the working amplitude is
    half of that, so that doubling it stays admissible.  The final body is
    built at full resolution with the refinement check.
    """
    amp = float(start_amplitude or default_start_amplitude(dim, tau))
    eps0 = kw.get("eps0", 1e-6)
    attempts = []
    for _ in range(max_halvings + 1):
        try:
            _, probe = build_even_body(dim, tau, amp, n_intervals=probe_intervals, refine_tol=None, eps0=eps0)
            attempts.append({"amplitude": amp, "ok": True, "margin": probe["concavity_margin"]})
            break
        except ConstructionError as exc:
            attempts.append({"amplitude": amp, "ok": False, "stage": exc.stage, "message": str(exc)})
            amp *= 0.5
    else:
        raise SmallnessBudgetError(f"no admissible amplitude after {max_halvings} halvings", node=amp)
    body, info = build_even_body(dim, tau, 0.5 * amp, **kw)
    info["attempts"] = attempts
    info["doubled_amplitude_margin"] = attempts[-1]["margin"]
    return body, info
