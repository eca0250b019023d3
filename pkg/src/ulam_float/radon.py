"""Spherical Radon transform of zonal (rotation invariant) functions.

For a function on ``S^{d-1}`` that depends only on ``v = |w_1|`` the
transform over the great subsphere orthogonal to ``xi`` depends only on
``c = sqrt(1 - xi_1^2)``:

    Rg(c) = 2 |S^{d-3}| int_0^{pi/2} g(c cos theta) sin^{d-3} theta d theta.

With ``y = c^2`` and ``G(x) = g(sqrt x) / (2 sqrt x)`` this is the
Riemann-Liouville integral

    c^{d-3} Rg(c) / (2 |S^{d-3}|) = F(y) = int_0^y G(x) (y - x)^{(d-4)/2} dx,

which is inverted in closed form: ``G = D^q I^{1/2} F / Gamma(q - 1/2)`` for
``d = 2q + 1``.  The inverse is only used in odd dimensions, where the
exponent is a half integer.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import gamma as Gamma, pi, sqrt

import numpy as np
from numpy.polynomial import chebyshev as C
from scipy.special import beta as beta_fn

from .errors import ConstructionError, ParameterError, SmallnessBudgetError
from .hydrostatics import sphere_area
from .profile import PolarChart
from .quadrature import gauss_legendre01, knot_rule


@dataclass
class ZonalFunction:
    """Zonal function ``g(v) = func(v) + sum_p coef_p v^p`` of ``v = |w_1|``.

    ``func`` is taken as zero outside ``support``; ``poly`` holds an exact
    even polynomial part (``{power: coefficient}``), which the transform maps
    monomial by monomial.  ``breaks`` lists points where ``func`` is only
    piecewise smooth.
    """

    func: object
    dim: int
    breaks: tuple = ()
    support: tuple = (0.0, 1.0)
    poly: dict = field(default_factory=dict)

    def at(self, v):
        v = np.asarray(v, dtype=float)
        lo, hi = self.support
        out = np.zeros(v.shape)
        inside = (v >= lo) & (v <= hi)
        if self.func is not None and np.any(inside):
            out[inside] = self.func(v[inside])
        for p, a in self.poly.items():
            out = out + a * v**p
        return out

    def __call__(self, alpha):
        """Value at the direction making angle ``alpha`` with the axis."""
        return self.at(np.abs(np.cos(np.asarray(alpha, dtype=float))))


def monomial_eigenvalue(p, dim):
    """``R[v^p] = lambda * c^p`` for the zonal transform in dimension ``dim``."""
    if dim == 2:
        raise ParameterError("zonal transform needs dim >= 3")
    return sphere_area(dim - 3) * float(beta_fn((p + 1) / 2.0, (dim - 2) / 2.0))


def moment_constant(dim):
    """Unit-ball constant with ``R[w_1^2](xi) = const (d+1)(1 - xi_1^2)``."""
    return monomial_eigenvalue(2, dim) / (dim + 1.0)


def _theta_rule(c, breaks, npts=8, panels=8):
    kinks = [np.arccos(b / c) for b in breaks if 0.0 < b < c]
    edges = list(np.linspace(0.0, 0.5 * pi, panels + 1)) + kinks
    return knot_rule(edges, npts=npts)


def radon_zonal_forward(g, xi_angle):
    """``Rg(xi)`` for ``xi_1 = sin(xi_angle)`` (array-valued in ``xi_angle``)."""
    c = np.abs(np.cos(np.atleast_1d(np.asarray(xi_angle, dtype=float))))
    return forward_in_c(g, c)


def forward_in_c(g, c):
    """``Rg`` as a function of ``c = |cos(xi_angle)|``."""
    c = np.atleast_1d(np.asarray(c, dtype=float))
    d = g.dim
    if d < 3:
        raise ParameterError("zonal transform needs dim >= 3")
    out = np.zeros(c.shape)
    for p, a in g.poly.items():
        out += a * monomial_eigenvalue(p, d) * c**p
    if g.func is None:
        return out
    lo, hi = g.support
    S = sphere_area(d - 3)
    brk = sorted(set(list(g.breaks) + [lo, hi]))
    for i, ci in enumerate(c):
        if ci <= lo:
            continue
        th, w = _theta_rule(ci, brk)
        v = ci * np.cos(th)
        inside = (v >= lo) & (v <= hi)
        vals = np.zeros_like(v)
        vals[inside] = g.func(v[inside])
        out[i] += 2.0 * S * np.dot(w, vals * np.sin(th) ** (d - 3))
    return out


def _boundary_terms(Fk, y0, x, v, q, kmin=0):
    """``sum_k F^(k)(y0) v (x - y0)^(k - q + 1/2) / Gamma(k - q + 3/2)``, ``k >= kmin``."""
    out = np.zeros_like(x)
    for k in range(kmin, q):
        a = float(Fk[k](y0))
        e = k - q + 0.5
        term = np.zeros_like(x)
        if y0 == 0.0:
            # only k = q-1 is used here: v x^(-1/2) = 1
            term[:] = 1.0
        else:
            pos = x > y0
            term[pos] = v[pos] * (x[pos] - y0) ** e
        out += a * term / Gamma(e + 1.0)
    return out


def radon_zonal_inverse(target, dim=None, degree=96, check=True, tol=1e-7):
    """Zonal ``g`` with ``Rg = target`` (odd dimensions).

    ``target`` is a :class:`ZonalFunction` in ``c``.  Its polynomial part is
    inverted exactly; ``func`` (zero outside ``support = [c_a, c_b]``) is
    interpolated by a Chebyshev series in ``y = c^2`` on ``[c_a^2, c_b^2]`` and
    inverted by the fractional-derivative formula.  The inverse is a zonal
    function of ``v`` on all of ``[0, 1]``.

    Transforms of smooth zonal functions satisfy ``F(y) = y^(q-1) * smooth``,
    so with ``c_a = 0`` only the ``F^(q-1)(0)`` boundary term survives.  With
    ``c_a > 0`` the target is taken to vanish to all orders at ``c_a`` (a
    perturbation switched on smoothly) and no boundary term is used there.
    The cut at ``c_b < 1`` is a genuine truncation and keeps its terms.

    Raises
    ------
    ConstructionError
        If the round trip misses the target by more than ``tol``.
    """
    d = int(dim or target.dim)
    if d < 3 or d % 2 == 0:
        raise ParameterError(f"zonal inversion is implemented for odd dim >= 3, got {d}")
    q = (d - 1) // 2
    poly = {p: a / monomial_eigenvalue(p, d) for p, a in target.poly.items()}
    if target.func is None:
        return ZonalFunction(None, d, poly=poly)
    ca, cb = target.support
    ya, yb = ca * ca, cb * cb
    S = sphere_area(d - 3)

    def F(y):
        c = np.sqrt(y)
        vals = np.zeros_like(c)
        inside = (c >= ca) & (c <= cb)
        vals[inside] = target.func(c[inside])
        return c ** (d - 3) * vals / (2.0 * S)

    cheb = C.Chebyshev.interpolate(F, degree, domain=[ya, yb])
    Fk = [cheb.deriv(k) if k else cheb for k in range(q + 1)]
    xg, wg = gauss_legendre01(degree + 2)
    norm = 2.0 / Gamma(q - 0.5)

    def g(v):
        v = np.asarray(v, dtype=float)
        x = v * v
        out = np.zeros_like(x)
        act = x > ya
        if np.any(act):
            xa = x[act]
            u0 = np.sqrt(np.clip(xa - yb, 0.0, None))
            u1 = np.sqrt(xa - ya)
            u = u0[:, None] + (u1 - u0)[:, None] * xg[None, :]
            y = np.clip(xa[:, None] - u * u, ya, yb)
            integ = 2.0 / sqrt(pi) * (Fk[q](y) @ wg) * (u1 - u0)
            out[act] = v[act] * integ
        if ya == 0.0:
            out += _boundary_terms(Fk, 0.0, x, v, q, kmin=q - 1)
        if yb < 1.0:
            out -= _boundary_terms(Fk, yb, x, v, q)
        return norm * out

    result = ZonalFunction(g, d, breaks=(ca, cb), support=(0.0, 1.0), poly=poly)
    if check:
        cs = np.linspace(ca, cb, 41)[1:-1] if cb > ca else np.array([ca])
        back = forward_in_c(ZonalFunction(g, d, breaks=(ca, cb)), cs)
        want = target.func(cs)
        err = float(np.max(np.abs(back - want)))
        result.roundtrip_error = err
        if not err < tol * max(1.0, float(np.max(np.abs(want)))):
            raise ConstructionError(f"zonal inversion round trip off by {err:.2e}", stage="radon_inverse")
    return result


# ---------------------------------------------------------------------------
# the two moment functions


def band_cosines(tau):
    """``cos(arctan(1 - k tau))`` for ``k = 1, 2, 3``."""
    return tuple(float(np.cos(np.arctan(1.0 - k * tau))) for k in (1, 2, 3))


def moment_integrands(body):
    """Perturbation parts of the even zonal integrands of ``body``.

    Returns ``(dA, dB)`` with ``dA(v) = v^2 (rho(v)^{d+1} + rho(-v)^{d+1} - 2) / 2``
    and ``dB(v) = v (rho(v)^d - rho(-v)^d) / 2``, the even parts of
    ``w_1^2 rho^{d+1} - w_1^2`` and ``w_1 rho^d``.
    """
    d = body.dim

    def dA(v):
        rp, rm = body.rho(v), body.rho(-v)
        e = (np.expm1((d + 1) * np.log(rp)) + np.expm1((d + 1) * np.log(rm)))
        return 0.5 * v * v * e

    def dB(v):
        rp, rm = body.rho(v), body.rho(-v)
        return 0.5 * v * (np.expm1(d * np.log(rp)) - np.expm1(d * np.log(rm)))

    return dA, dB


def compute_phi_psi(body, tau, seam_tol=1e-7):
    """``phi_h = R(w_1^2 rho^{d+1})`` and ``psi_h = R(w_1 rho^d)``, extended.

    ``body`` carries the marched cap (directions with ``tan alpha >= 1-3tau``)
    and is the ball elsewhere.  On the cap both transforms are computed; for
    ``tan alpha <= 1-2tau`` they are replaced by their ball values, which must
    agree with the computed ones on the overlap band.

    Returns
    -------
    phi, psi : ZonalFunction
        Functions of ``c = |cos(xi_angle)|``; ``phi`` has the exact ball part
        ``const (d+1) c^2`` in its polynomial term.
    info : dict
        Seam mismatch on the overlap band.
    """
    d = body.dim
    c1, c2, c3 = band_cosines(tau)
    dA, dB = moment_integrands(body)
    knots = np.abs(body.w_nodes)
    knots = tuple(np.unique(knots[(knots > c1) & (knots < c3)]))
    gA = ZonalFunction(dA, d, breaks=knots, support=(c1, c3))
    gB = ZonalFunction(dB, d, breaks=knots, support=(c1, c3))
    band = np.linspace(c2, c3, 25)
    seam = max(float(np.max(np.abs(forward_in_c(gA, band)))),
               float(np.max(np.abs(forward_in_c(gB, band)))))
    if not seam < seam_tol:
        raise ConstructionError(f"cap transforms do not match the ball on the seam band ({seam:.2e})",
                                stage="seam")
    phi = ZonalFunction(lambda c: forward_in_c(gA, c), d, support=(c1, c2),
                        poly={2: monomial_eigenvalue(2, d)})
    psi = ZonalFunction(lambda c: forward_in_c(gB, c), d, support=(c1, c2))
    return phi, psi, {"seam_mismatch": seam, "band": (c1, c2, c3)}


def solve_Rr(Phi, Psi, dim, alpha, tol=1e-14, max_iter=50):
    """Solve ``R^{d+1} + r^{d+1} = Phi / cos^2``, ``R^d - r^d = Psi / cos``.

    ``Phi`` and ``Psi`` are zonal functions of ``v = cos(alpha)``.  Near
    ``alpha = pi/2`` the quotients are taken at ``v = 1e-8`` (one-sided
    limit), the grid itself may include the endpoint.
    """
    d = int(dim)
    alpha = np.asarray(alpha, dtype=float)
    v = np.maximum(np.cos(alpha), 1e-8)
    P1 = np.zeros_like(v)
    for p, a in Phi.poly.items():
        P1 += a * v ** (p - 2)
    if Phi.func is not None:
        P1 += ZonalFunction(Phi.func, d, support=Phi.support).at(v) / (v * v)
    P2 = np.zeros_like(v)
    for p, a in Psi.poly.items():
        P2 += a * v ** (p - 1)
    if Psi.func is not None:
        P2 += ZonalFunction(Psi.func, d, support=Psi.support).at(v) / v
    R = np.ones_like(v)
    r = np.ones_like(v)
    for _ in range(max_iter):
        f1 = R ** (d + 1) + r ** (d + 1) - P1
        f2 = R**d - r**d - P2
        if np.max(np.abs(f1)) < tol and np.max(np.abs(f2)) < tol:
            break
        a11, a12 = (d + 1) * R**d, (d + 1) * r**d
        a21, a22 = d * R ** (d - 1), -d * r ** (d - 1)
        det = a11 * a22 - a12 * a21
        dR = (-f1 * a22 + f2 * a12) / det
        dr = (-a11 * f2 + a21 * f1) / det
        R, r = R + dR, r + dr
        if np.any(~np.isfinite(R)) or np.any(R <= 0) or np.any(r <= 0):
            raise SmallnessBudgetError("(R, r) solve left the positive quadrant")
    else:
        raise SmallnessBudgetError("(R, r) Newton did not converge")
    return PolarChart(alpha, R, r)


def scale_zonal(g, factor):
    """``factor * g``."""
    f = g.func
    return ZonalFunction(None if f is None else (lambda v: factor * f(v)), g.dim, g.breaks,
                         g.support, {p: factor * a for p, a in g.poly.items()})
