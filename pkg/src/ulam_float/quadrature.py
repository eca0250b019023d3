"""Fixed-rule composite Gauss quadrature used throughout.

Integrands met here have half-integer power behaviour ``(b - x)^(k/2)`` at
the ends of their intervals (profile tips, plane/boundary crossings).  The
cubic smoothstep map ``x = a + (b - a)(3u^2 - 2u^3)`` has ``x - a ~ u^2`` at
both ends, so such terms become polynomial in ``u`` and Gauss-Legendre
converges spectrally again.
"""

from functools import lru_cache

import numpy as np


@lru_cache(maxsize=64)
def gauss_legendre(n):
    x, w = np.polynomial.legendre.leggauss(n)
    return x, w


@lru_cache(maxsize=64)
def gauss_legendre01(n):
    x, w = gauss_legendre(n)
    return 0.5 * (x + 1.0), 0.5 * w


@lru_cache(maxsize=64)
def gauss_chebyshev01(n):
    """Nodes/weights for ``int_0^1 g(t) dt / sqrt(t (1 - t))``."""
    k = np.arange(1, n + 1)
    x = np.cos((2 * k - 1) * np.pi / (2 * n))
    return 0.5 * (1.0 + x), np.full(n, np.pi / n)


@lru_cache(maxsize=256)
def smoothstep_rule(panels, npts):
    """Nodes/weights on ``[0, 1]`` after the smoothstep map, ``panels`` panels."""
    xg, wg = gauss_legendre01(npts)
    edges = np.linspace(0.0, 1.0, panels + 1)
    u = (edges[:-1, None] + np.diff(edges)[:, None] * xg[None, :]).ravel()
    wu = (np.diff(edges)[:, None] * wg[None, :]).ravel()
    x = u * u * (3.0 - 2.0 * u)
    w = wu * 6.0 * u * (1.0 - u)
    return x, w


def piecewise_rule(breaks, panels=8, npts=24):
    """Nodes and weights covering ``[breaks[0], breaks[-1]]``.

    Each interval between consecutive (sorted, deduplicated) breakpoints gets
    its own smoothstep-mapped composite Gauss rule.
    """
    breaks = np.unique(np.asarray(breaks, dtype=float))
    x01, w01 = smoothstep_rule(panels, npts)
    xs, ws = [], []
    for a, b in zip(breaks[:-1], breaks[1:]):
        if b - a <= 0:
            continue
        xs.append(a + (b - a) * x01)
        ws.append((b - a) * w01)
    if not xs:
        return np.zeros(0), np.zeros(0)
    return np.concatenate(xs), np.concatenate(ws)


def knot_rule(breaks, graded=(), npts=6, graded_panels=4, graded_npts=16):
    """Composite rule aligned with the knots of a piecewise-smooth integrand.

    Intervals between consecutive ``breaks`` get ``npts``-point
    Gauss-Legendre; intervals touching one of the ``graded`` points (where the
    integrand has a half-integer power singularity) get the smoothstep rule.
    """
    breaks = np.unique(np.asarray(breaks, dtype=float))
    a, b = breaks[:-1], breaks[1:]
    keep = b > a
    a, b = a[keep], b[keep]
    g = np.asarray(sorted(graded), dtype=float)
    if g.size:
        near = np.isin(a, g) | np.isin(b, g)
    else:
        near = np.zeros(a.shape, dtype=bool)
    xs, ws = [], []
    if np.any(~near):
        xg, wg = gauss_legendre01(npts)
        pa, pb = a[~near], b[~near]
        xs.append((pa[:, None] + (pb - pa)[:, None] * xg[None, :]).ravel())
        ws.append(((pb - pa)[:, None] * wg[None, :]).ravel())
    if np.any(near):
        x01, w01 = smoothstep_rule(graded_panels, graded_npts)
        pa, pb = a[near], b[near]
        xs.append((pa[:, None] + (pb - pa)[:, None] * x01[None, :]).ravel())
        ws.append(((pb - pa)[:, None] * w01[None, :]).ravel())
    if not xs:
        return np.zeros(0), np.zeros(0)
    return np.concatenate(xs), np.concatenate(ws)
