"""Central finite differences with Richardson extrapolation.

These routines are the *independent* derivative oracle used to
cross-check the jet engine and the osculating-metric constructions.  They
deliberately share no code with :mod:`finslerlab.jets`.
"""

from __future__ import annotations

import numpy as np

__all__ = ["fd_step", "fd_partial", "fd_gradient", "fd_hessian", "fd_christoffel"]

_EPS = np.finfo(float).eps


def fd_step(order, scale=1.0):
    """Step balancing truncation and round-off: eps^(1/(order+2)) * scale."""
    return _EPS ** (1.0 / (order + 2)) * max(scale, 1.0)


def _central_diff(g, t, h):
    return (g(t + h) - g(t - h)) / (2.0 * h)


def fd_partial(f, base, multi_index, h=None, richardson=True):
    """Mixed partial of ``f`` at ``base`` by nested central differences.

    ``f`` maps a list of floats to a scalar (or array).  One Richardson
    extrapolation step removes the leading O(h^2) truncation error.
    """
    base = [float(b) for b in base]
    order = int(sum(multi_index))
    if order == 0:
        return f(base)
    if h is None:
        scale = max(abs(b) for b in base) if base else 1.0
        h = fd_step(order, scale)

    def deriv(point, remaining):
        for i, a in enumerate(remaining):
            if a > 0:
                rest = list(remaining)
                rest[i] -= 1

                def g(t, i=i, rest=rest):
                    shifted = list(point)
                    shifted[i] = t
                    return deriv(shifted, rest)

                return _central_diff(g, point[i], h)
        return f(list(point))

    d_h = deriv(base, list(multi_index))
    if not richardson:
        return d_h
    # halved-step evaluation; Richardson for the O(h^2) error of every
    # nested central difference simultaneously
    nonlocal_h = h

    def deriv2(point, remaining):
        for i, a in enumerate(remaining):
            if a > 0:
                rest = list(remaining)
                rest[i] -= 1

                def g(t, i=i, rest=rest):
                    shifted = list(point)
                    shifted[i] = t
                    return deriv2(shifted, rest)

                return _central_diff(g, point[i], nonlocal_h / 2.0)
        return f(list(point))

    d_h2 = deriv2(base, list(multi_index))
    return (4.0 * d_h2 - d_h) / 3.0


def fd_gradient(f, base, h=None):
    n = len(base)
    out = []
    for i in range(n):
        alpha = [0] * n
        alpha[i] = 1
        out.append(fd_partial(f, base, alpha, h=h))
    return np.array(out)


def fd_hessian(f, base, h=None):
    n = len(base)
    H = np.empty((n, n))
    for i in range(n):
        for j in range(i, n):
            alpha = [0] * n
            alpha[i] += 1
            alpha[j] += 1
            H[i, j] = H[j, i] = fd_partial(f, base, alpha, h=h)
    return H


def fd_christoffel(metric, x, h=1e-5):
    """Christoffel symbols of a metric field by central differences.

    ``metric`` maps an n-vector to an (n, n) matrix; returns Gamma with
    ``Gamma[i, j, k]`` = Gamma^i_{jk}.
    """
    x = np.asarray(x, dtype=float)
    n = x.size
    g = np.asarray(metric(x), dtype=float)
    dg = np.empty((n, n, n))  # dg[k, i, j] = d g_ij / d x_k
    for k in range(n):
        xp = x.copy()
        xm = x.copy()
        xp[k] += h
        xm[k] -= h
        gp = np.asarray(metric(xp), dtype=float)
        gm = np.asarray(metric(xm), dtype=float)
        xp2 = x.copy()
        xm2 = x.copy()
        xp2[k] += h / 2.0
        xm2[k] -= h / 2.0
        gp2 = np.asarray(metric(xp2), dtype=float)
        gm2 = np.asarray(metric(xm2), dtype=float)
        d_h = (gp - gm) / (2.0 * h)
        d_h2 = (gp2 - gm2) / h
        dg[k] = (4.0 * d_h2 - d_h) / 3.0
    ginv = np.linalg.inv(g)
    gamma = np.empty((n, n, n))
    for i in range(n):
        for j in range(n):
            for k in range(n):
                s = 0.0
                for l in range(n):
                    s += ginv[i, l] * (dg[j, l, k] + dg[k, j, l] - dg[l, j, k])
                gamma[i, j, k] = 0.5 * s
    return gamma
