"""Truncated Taylor series ("jets") for forward-mode differentiation.

A :class:`Jet` of order ``K`` stores the normalized Taylor coefficients
``c[k] = f^(k)(s0) / k!`` for ``k = 0..K`` of some function of one scalar
variable ``s`` about a base point.  Coefficients carry an arbitrary trailing
batch shape so whole grids are differentiated in one pass.
"""

from __future__ import annotations

from math import factorial

import numpy as np


class Jet:
    __slots__ = ("c",)
    __array_priority__ = 100

    def __init__(self, coeffs):
        self.c = np.asarray(coeffs, dtype=float)

    @classmethod
    def variable(cls, s0, order):
        """Jet of the identity map ``s -> s`` about ``s0``."""
        s0 = np.asarray(s0, dtype=float)
        c = np.zeros((order + 1,) + s0.shape)
        c[0] = s0
        if order >= 1:
            c[1] = 1.0
        return cls(c)

    @classmethod
    def constant(cls, value, order):
        value = np.asarray(value, dtype=float)
        c = np.zeros((order + 1,) + value.shape)
        c[0] = value
        return cls(c)

    @classmethod
    def from_derivatives(cls, derivs):
        """Build from a sequence ``[f, f', f'', ...]`` of (batched) values."""
        derivs = [np.asarray(d, dtype=float) for d in derivs]
        shape = np.broadcast_shapes(*(d.shape for d in derivs))
        c = np.empty((len(derivs),) + shape)
        for k, d in enumerate(derivs):
            c[k] = d / factorial(k)
        return cls(c)

    @property
    def order(self):
        return self.c.shape[0] - 1

    @property
    def value(self):
        return self.c[0]

    def deriv(self, m):
        """The ``m``-th derivative at the base point."""
        return factorial(m) * self.c[m]

    def derivatives(self):
        return [self.deriv(k) for k in range(self.order + 1)]

    def differentiate(self, m=1):
        """Jet (of order ``K - m``) of the ``m``-th derivative."""
        K = self.order
        if m > K:
            raise ValueError("cannot differentiate a jet beyond its order")
        scale = np.array([factorial(k + m) / factorial(k) for k in range(K - m + 1)])
        scale = scale.reshape((-1,) + (1,) * (self.c.ndim - 1))
        return Jet(self.c[m:] * scale)

    def truncate(self, order):
        return Jet(self.c[: order + 1])

    # arithmetic -------------------------------------------------------

    def _coerce(self, other):
        if isinstance(other, Jet):
            K = min(self.order, other.order)
            return self.c[: K + 1], other.c[: K + 1]
        other = np.asarray(other, dtype=float)
        c = np.zeros_like(self.c + other)  # broadcast batch shape
        c[0] = other
        return np.broadcast_to(self.c, c.shape), c

    def __add__(self, other):
        a, b = self._coerce(other)
        return Jet(a + b)

    __radd__ = __add__

    def __sub__(self, other):
        a, b = self._coerce(other)
        return Jet(a - b)

    def __rsub__(self, other):
        a, b = self._coerce(other)
        return Jet(b - a)

    def __neg__(self):
        return Jet(-self.c)

    def __mul__(self, other):
        if not isinstance(other, Jet):
            return Jet(self.c * np.asarray(other, dtype=float))
        a, b = self._coerce(other)
        K = a.shape[0] - 1
        shape = np.broadcast_shapes(a.shape[1:], b.shape[1:])
        out = np.zeros((K + 1,) + shape)
        for k in range(K + 1):
            for j in range(k + 1):
                out[k] += a[j] * b[k - j]
        return Jet(out)

    __rmul__ = __mul__

    def reciprocal(self):
        a = self.c
        K = self.order
        b = np.zeros_like(a)
        b[0] = 1.0 / a[0]
        for k in range(1, K + 1):
            acc = np.zeros_like(a[0])
            for j in range(1, k + 1):
                acc = acc + a[j] * b[k - j]
            b[k] = -acc * b[0]
        return Jet(b)

    def __truediv__(self, other):
        if not isinstance(other, Jet):
            return Jet(self.c / np.asarray(other, dtype=float))
        return self * other.reciprocal()

    def __rtruediv__(self, other):
        return self.reciprocal() * other

    def ipow(self, n):
        """Integer power by repeated squaring; safe when the value is zero."""
        if n < 0:
            return self.reciprocal().ipow(-n)
        result = Jet.constant(np.ones_like(self.c[0]), self.order)
        base = self
        while n:
            if n & 1:
                result = result * base
            n >>= 1
            if n:
                base = base * base
        return result

    def __pow__(self, p):
        if float(p).is_integer():
            return self.ipow(int(p))
        # requires a nonzero value
        a = self.c
        K = self.order
        b = np.zeros_like(a)
        b[0] = a[0] ** p
        for k in range(1, K + 1):
            acc = np.zeros_like(a[0])
            for j in range(1, k + 1):
                acc = acc + ((p + 1) * j - k) * a[j] * b[k - j]
            b[k] = acc / (k * a[0])
        return Jet(b)

    def sqrt(self):
        return self ** 0.5

    def exp(self):
        a = self.c
        K = self.order
        b = np.zeros_like(a)
        b[0] = np.exp(a[0])
        for k in range(1, K + 1):
            acc = np.zeros_like(a[0])
            for j in range(1, k + 1):
                acc = acc + j * a[j] * b[k - j]
            b[k] = acc / k
        return Jet(b)

    def __getitem__(self, idx):
        if not isinstance(idx, tuple):
            idx = (idx,)
        return Jet(self.c[(slice(None),) + idx])

    def __repr__(self):
        return f"Jet(order={self.order}, shape={self.c.shape[1:]})"


def falling(p, k):
    """Falling factorial ``p (p-1) ... (p-k+1)``."""
    out = 1.0
    for i in range(k):
        out *= p - i
    return out
