"""Backward node-by-node marching for the 4-component Volterra systems.

Both constructions solve systems of the shape

    x(s) = x(1) - int_s^1 x',      y(s) = y(1) - int_s^1 y',
    N(s, Z(s)) + int_s^1 k(s, sigma, Z(sigma)) d sigma = 0   (two rows)

for ``Z = (x, y, x', y')`` on a descending grid starting at ``s = 1``.  All
integrals use the trapezoid rule on the grid nodes.  The discrete equations
are solved with *deferred correction*: the discrete residual of the known
unit-ball solution ``Z_o`` of the ``h = 0`` system is subtracted, so ``h = 0``
reproduces ``Z_o`` to rounding and the remaining discretization error is
proportional to the size of the perturbation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import MarchingError


@dataclass(frozen=True)
class StateZ:
    """Marched state ``Z = (x, y, x', y')`` on a grid descending from 1."""

    s: np.ndarray
    Z: np.ndarray

    @property
    def x(self):
        return self.Z[0]

    @property
    def y(self):
        return self.Z[1]

    @property
    def xp(self):
        return self.Z[2]

    @property
    def yp(self):
        return self.Z[3]

    def deviation(self, Z_ref):
        return np.max(np.abs(self.Z - Z_ref), axis=1)


def descending_grid(lo, n_intervals):
    """Uniform grid from 1 down to ``lo`` with ``n_intervals`` steps."""
    s = np.linspace(1.0, lo, int(n_intervals) + 1)
    s[0], s[-1] = 1.0, lo
    return s


def trapezoid_weights(s, k):
    """Weights on nodes ``0..k`` for ``int_{s_k}^{s_0}`` (grid descending)."""
    w = np.zeros(k + 1)
    if k == 0:
        return w
    d = s[:k] - s[1 : k + 1]
    w[:k] += 0.5 * d
    w[1 : k + 1] += 0.5 * d
    return w


class VolterraProblem:
    """Interface implemented by the even and odd systems.

    ``local(k, s, x, y, xp, yp, w_diag)`` returns the two integral-equation
    rows evaluated with the node's own contribution (quadrature weight
    ``w_diag``) and without the history; ``history(k, s, S, Z, w)`` returns
    the weighted sum of kernel values over earlier nodes ``S`` with states
    ``Z`` (shape ``(4, k)``).
    """

    def local(self, k, s, x, y, xp, yp, w_diag):  # pragma: no cover - interface
        raise NotImplementedError

    def history(self, k, s, S, Z, w):  # pragma: no cover - interface
        raise NotImplementedError

    def jacobian_A(self, s, x, y):  # pragma: no cover - interface
        raise NotImplementedError


def node_residuals(problem, s, Z, skip=None):
    """Discrete residual rows at every node for a given full state ``Z``.

    Nodes flagged in ``skip`` are left at zero.
    """
    n = s.size
    out = np.zeros((2, n))
    for k in range(n):
        if skip is not None and skip[k]:
            continue
        w = trapezoid_weights(s, k)
        hist = problem.history(k, s[k], s[:k], Z[:, :k], w[:k]) if k else np.zeros(2)
        out[:, k] = problem.local(k, s[k], *Z[:, k], w[k]) + hist
    return out


def _newton2(fun, v0, tol, max_iter, node):
    v = np.array(v0, dtype=float)
    r = fun(v)
    for _ in range(max_iter):
        if np.max(np.abs(r)) < 0.1 * tol:
            break
        J = np.empty((2, 2))
        for i in range(2):
            hstep = 1e-7 * max(1.0, abs(v[i]))
            e = np.zeros(2)
            e[i] = hstep
            J[:, i] = (fun(v + e) - fun(v - e)) / (2.0 * hstep)
        try:
            step = np.linalg.solve(J, -r)
        except np.linalg.LinAlgError as exc:
            raise MarchingError("singular Newton matrix", node=node) from exc
        v = v + step
        r = fun(v)
        if np.max(np.abs(step)) < 1e-16 * max(1.0, np.max(np.abs(v))):
            break
    if not np.all(np.isfinite(r)) or np.max(np.abs(r)) > tol:
        raise MarchingError(
            f"Newton did not converge at s={node:.6f} (residual {np.max(np.abs(r)):.2e})", node=node
        )
    return v, float(np.max(np.abs(r)))


def march(problem, reference, s, Z_ref, newton_tol=1e-12, max_iter=40, det_tol=1e-10, pinned=None):
    """March ``problem`` down the grid ``s`` with deferred correction.

    Parameters
    ----------
    problem : VolterraProblem
        System with the perturbation.
    reference : VolterraProblem
        Same system with ``h = 0``; ``Z_ref`` is its exact solution.
    s : ndarray
        Descending grid starting at 1.
    Z_ref : ndarray, shape (4, len(s))
        Unit-ball state on the grid; ``Z(1) = Z_ref(1)``.
    pinned : ndarray of bool, optional
        Nodes where the solution is known to equal ``Z_ref`` (copied, not
        solved).

    Returns
    -------
    StateZ, dict
        The marched state and diagnostics (max Newton residual, max
        discretization defect of the reference, determinant extremes).
    """
    s = np.asarray(s, dtype=float)
    n = s.size
    if s[0] != 1.0 or np.any(np.diff(s) >= 0):
        raise MarchingError("grid must descend from s = 1", node=float(s[0]))
    pinned = np.zeros(n, dtype=bool) if pinned is None else np.asarray(pinned, dtype=bool)
    defect = node_residuals(reference, s, Z_ref, skip=pinned)
    Z = np.zeros((4, n))
    Z[:, 0] = Z_ref[:, 0]
    res_max = 0.0
    dets = []
    for k in range(1, n):
        if pinned[k]:
            Z[:, k] = Z_ref[:, k]
            continue
        dlt = s[k - 1] - s[k]
        # trapezoid defect of the reference for the x, y rows
        cx = Z_ref[0, k] - (Z_ref[0, k - 1] - 0.5 * dlt * (Z_ref[2, k - 1] + Z_ref[2, k]))
        cy = Z_ref[1, k] - (Z_ref[1, k - 1] - 0.5 * dlt * (Z_ref[3, k - 1] + Z_ref[3, k]))
        w = trapezoid_weights(s, k)
        hist = problem.history(k, s[k], s[:k], Z[:, :k], w[:k])
        target = defect[:, k]
        xprev, yprev, xpprev, ypprev = Z[:, k - 1]

        def fun(v):
            x = xprev - 0.5 * dlt * (xpprev + v[0]) + cx
            y = yprev - 0.5 * dlt * (ypprev + v[1]) + cy
            return problem.local(k, s[k], x, y, v[0], v[1], w[k]) + hist - target

        guess = Z_ref[2:, k] + (Z[2:, k - 1] - Z_ref[2:, k - 1])
        v, r = _newton2(fun, guess, newton_tol, max_iter, float(s[k]))
        res_max = max(res_max, r)
        Z[2:, k] = v
        Z[0, k] = xprev - 0.5 * dlt * (xpprev + v[0]) + cx
        Z[1, k] = yprev - 0.5 * dlt * (ypprev + v[1]) + cy
        det = float(np.linalg.det(problem.jacobian_A(s[k], Z[0, k], Z[1, k])))
        if not abs(det) > det_tol:
            raise MarchingError(f"boundary Jacobian singular at s={s[k]:.6f}", node=float(s[k]))
        dets.append(det)
    diag = {
        "newton_residual_max": res_max,
        "reference_defect_max": float(np.max(np.abs(defect))),
        "det_min_abs": float(np.min(np.abs(dets))) if dets else None,
    }
    return StateZ(s, Z), diag
