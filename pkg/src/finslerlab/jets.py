"""Truncated univariate Taylor arithmetic (forward-mode jets).

A :class:`Jet` stores the Taylor coefficients of a scalar function of one
real parameter ``t`` around ``t = 0``, truncated at a fixed order.  The
coefficient ring is deliberately generic: coefficients may be Python
floats, numpy arrays (for batched evaluation over many base points at
once), or other ``Jet`` instances (for nested/mixed differentiation).
Directional derivatives of multivariate functions are obtained by seeding
one jet variable per coordinate, and mixed partial derivatives by
polarization over directional jets.

All arithmetic is exact truncated-polynomial arithmetic; mixing jets of
different truncation orders raises :class:`InputError`.
"""

from __future__ import annotations

import math
from itertools import product

import numpy as np

from .errors import EvaluationError, InputError

__all__ = [
    "Jet",
    "sqrt",
    "exp",
    "log",
    "sin",
    "cos",
    "directional_jet",
    "nth_directional_derivative",
    "partials",
    "DirectionalTable",
]


class Jet:
    """Truncated Taylor series with generic coefficients.

    ``self.c[k]`` is the k-th Taylor coefficient, i.e. the k-th derivative
    divided by k!.  ``len(self.c) == order + 1``.
    """

    __slots__ = ("c",)

    def __init__(self, coeffs):
        self.c = list(coeffs)
        if not self.c:
            raise InputError("a jet needs at least one coefficient")

    # -- constructors ------------------------------------------------------

    @classmethod
    def variable(cls, value, tangent, order):
        """Jet of ``value + tangent * t`` truncated at ``order``."""
        if order < 1:
            raise InputError("jet order must be >= 1")
        return cls([value, tangent] + [0.0] * (order - 1))

    @classmethod
    def constant(cls, value, order):
        return cls([value] + [0.0] * order)

    @property
    def order(self):
        return len(self.c) - 1

    def value(self):
        """Zeroth-order coefficient (the underlying point value)."""
        return self.c[0]

    def derivative(self, k):
        """k-th derivative at t = 0 (coefficient times k!)."""
        if k > self.order:
            return 0.0
        return self.c[k] * math.factorial(k)

    # -- coercion ----------------------------------------------------------

    def _coerce(self, other):
        if isinstance(other, Jet):
            if other.order != self.order:
                raise InputError(
                    f"cannot mix jets of orders {self.order} and {other.order}"
                )
            return other
        return Jet.constant(other, self.order)

    # -- ring operations ---------------------------------------------------

    def __add__(self, other):
        o = self._coerce(other)
        return Jet([a + b for a, b in zip(self.c, o.c)])

    __radd__ = __add__

    def __sub__(self, other):
        o = self._coerce(other)
        return Jet([a - b for a, b in zip(self.c, o.c)])

    def __rsub__(self, other):
        o = self._coerce(other)
        return Jet([b - a for a, b in zip(self.c, o.c)])

    def __neg__(self):
        return Jet([-a for a in self.c])

    def __mul__(self, other):
        o = self._coerce(other)
        n = self.order
        out = []
        for k in range(n + 1):
            s = self.c[0] * o.c[k]
            for j in range(1, k + 1):
                s = s + self.c[j] * o.c[k - j]
            out.append(s)
        return Jet(out)

    __rmul__ = __mul__

    def reciprocal(self):
        b0 = self.c[0]
        inv0 = _generic_reciprocal(b0)
        out = [inv0]
        for k in range(1, self.order + 1):
            s = self.c[1] * out[k - 1]
            for j in range(2, k + 1):
                s = s + self.c[j] * out[k - j]
            out.append(-(s * inv0))
        return Jet(out)

    def __truediv__(self, other):
        o = self._coerce(other)
        return self * o.reciprocal()

    def __rtruediv__(self, other):
        o = self._coerce(other)
        return o * self.reciprocal()

    # -- powers and elementary functions -----------------------------------

    def __pow__(self, p):
        if isinstance(p, Jet):
            return exp(log(self) * p)
        if isinstance(p, int) or (isinstance(p, float) and p.is_integer()):
            return self._int_pow(int(p))
        return self._real_pow(float(p))

    def _int_pow(self, p):
        if p < 0:
            return self.reciprocal()._int_pow(-p)
        result = Jet.constant(1.0, self.order)
        base = self
        while p:
            if p & 1:
                result = result * base
            base = base * base
            p >>= 1
        return result

    def _real_pow(self, p):
        # Recurrence k*x0*y_k = sum_{j<k} (p*(k-j) - j) x_{k-j} y_j;
        # requires x0 != 0 (checked only implicitly via division).
        x0 = self.c[0]
        y = [_generic_pow(x0, p)]
        inv_x0 = _generic_reciprocal(x0)
        for k in range(1, self.order + 1):
            s = (p * k) * (self.c[k] * y[0])
            for j in range(1, k):
                s = s + (p * (k - j) - j) * (self.c[k - j] * y[j])
            y.append(s * inv_x0 * (1.0 / k))
        return Jet(y)

    def sqrt(self):
        y0 = sqrt(self.c[0])
        inv2y0 = _generic_reciprocal(y0 + y0)
        y = [y0]
        for k in range(1, self.order + 1):
            s = self.c[k]
            for j in range(1, k):
                s = s - y[j] * y[k - j]
            y.append(s * inv2y0)
        return Jet(y)

    def exp(self):
        y = [exp(self.c[0])]
        for k in range(1, self.order + 1):
            s = (1 * 1.0) * self.c[1] * y[k - 1]
            for j in range(2, k + 1):
                s = s + (j * 1.0) * self.c[j] * y[k - j]
            y.append(s * (1.0 / k))
        return Jet(y)

    def log(self):
        x0 = self.c[0]
        inv_x0 = _generic_reciprocal(x0)
        y = [log(x0)]
        for k in range(1, self.order + 1):
            s = (k * 1.0) * self.c[k]
            for j in range(1, k):
                s = s - (j * 1.0) * y[j] * self.c[k - j]
            y.append(s * inv_x0 * (1.0 / k))
        return Jet(y)

    def sin(self):
        return self._sincos()[0]

    def cos(self):
        return self._sincos()[1]

    def _sincos(self):
        s = [sin(self.c[0])]
        co = [cos(self.c[0])]
        for k in range(1, self.order + 1):
            a = (1 * 1.0) * self.c[1] * co[k - 1]
            b = (1 * 1.0) * self.c[1] * s[k - 1]
            for j in range(2, k + 1):
                a = a + (j * 1.0) * self.c[j] * co[k - j]
                b = b + (j * 1.0) * self.c[j] * s[k - j]
            s.append(a * (1.0 / k))
            co.append(-b * (1.0 / k))
        return Jet(s), Jet(co)

    def __repr__(self):
        return f"Jet({self.c!r})"


# -- generic scalar helpers (dispatch on Jet vs. plain numerics) -----------


def _generic_reciprocal(z):
    if isinstance(z, Jet):
        return z.reciprocal()
    with np.errstate(divide="raise"):
        try:
            return 1.0 / z
        except (ZeroDivisionError, FloatingPointError):
            raise EvaluationError("division by zero", op="div") from None


def _generic_pow(z, p):
    if isinstance(z, Jet):
        return z ** p
    return z ** p


def sqrt(z):
    if isinstance(z, Jet):
        return z.sqrt()
    if np.any(np.asarray(z) < 0):
        raise EvaluationError("sqrt of negative value", op="sqrt")
    return np.sqrt(z)


def exp(z):
    if isinstance(z, Jet):
        return z.exp()
    return np.exp(z)


def log(z):
    if isinstance(z, Jet):
        return z.log()
    if np.any(np.asarray(z) <= 0):
        raise EvaluationError("log of nonpositive value", op="log")
    return np.log(z)


def sin(z):
    if isinstance(z, Jet):
        return z.sin()
    return np.sin(z)


def cos(z):
    if isinstance(z, Jet):
        return z.cos()
    return np.cos(z)


# -- directional jets and mixed partials -----------------------------------


def directional_jet(f, base, direction, order):
    """Taylor coefficients of ``t -> f(base + t * direction)`` at t = 0.

    ``base`` is a sequence of scalar-like values (floats, arrays, or jets);
    ``direction`` a sequence of plain numbers.  Returns a :class:`Jet`
    (constant results are promoted).
    """
    if order < 1:
        raise InputError("jet order must be >= 1")
    args = [
        Jet.variable(base[i], direction[i], order) for i in range(len(base))
    ]
    out = f(args)
    if not isinstance(out, Jet):
        out = Jet.constant(out, order)
    return out


def nth_directional_derivative(f, base, direction, k):
    """k-th derivative of ``t -> f(base + t*direction)`` at t = 0."""
    return directional_jet(f, base, direction, k).derivative(k)


class DirectionalTable:
    """Caches directional jets of one function at one base point.

    Polarization needs the same direction for several mixed partials;
    caching keeps the evaluation count linear in the number of distinct
    directions.
    """

    def __init__(self, f, base):
        self.f = f
        self.base = base
        self._cache = {}

    def jet(self, direction, order):
        key = (tuple(direction), order)
        if key not in self._cache:
            self._cache[key] = directional_jet(self.f, self.base, direction, order)
        return self._cache[key]

    def derivative(self, direction, k):
        return self.jet(direction, k).derivative(k)


def partials(f, base, multi_index, table=None):
    """Mixed partial derivative of ``f`` at ``base`` for a multi-index.

    Uses the polarization identity for the symmetric k-linear form
    ``D^k f``: with arguments the coordinate directions repeated according
    to the multi-index,

        D^k f(u_1, ..., u_k)
          = (1/k!) * sum_{0 != r <= m} (-1)^(k - |r|) prod C(m_i, r_i)
                       * D^k_{sum r_i e_i} f

    where ``m`` collects multiplicities of the distinct directions.
    """
    alpha = list(multi_index)
    if len(alpha) != len(base):
        raise InputError("multi-index length must match base dimension")
    k = int(sum(alpha))
    if k == 0:
        out = f(list(base))
        return out
    if k > 5:
        raise InputError("partials supports total order <= 5")
    if table is None:
        table = DirectionalTable(f, base)
    idx = [i for i, a in enumerate(alpha) if a > 0]
    mults = [alpha[i] for i in idx]
    total = None
    for r in product(*[range(m + 1) for m in mults]):
        if not any(r):
            continue
        weight = (-1) ** (k - sum(r))
        for m, ri in zip(mults, r):
            weight *= math.comb(m, ri)
        direction = [0.0] * len(base)
        for i, ri in zip(idx, r):
            direction[i] = float(ri)
        term = table.derivative(direction, k)
        term = weight * term if weight != 1 else term
        total = term if total is None else total + term
    return total * (1.0 / math.factorial(k))


def jet_eval(f, base, direction, order):
    """Directional jet as a list of Taylor coefficients.

    Convenience wrapper: coefficient k equals (1/k!) d^k/dt^k f(base + t u).
    """
    return directional_jet(f, base, direction, order).c
