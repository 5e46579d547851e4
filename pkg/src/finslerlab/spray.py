"""Fundamental tensor, geodesic spray, nonlinear connection, curvature.

Everything here is derived from F^2 by forward-mode jets.  Conventions
are pinned once and used everywhere:

* fundamental tensor      g_ij(x, v) = 1/2 d^2 F^2 / dv_i dv_j
* spray coefficients      G^i = 1/4 g^{il} (d^2F^2/dx^k dv^l v^k - dF^2/dx^l)
* geodesic equation       xdd^i + 2 G^i(x, xd) = 0
* nonlinear connection    N^i_j = dG^i/dv^j
* Jacobi operator         R^i_k = 2 dG^i/dx^k - v^j d^2G^i/dx^j dv^k
                                  + 2 G^j d^2G^i/dv^j dv^k
                                  - dG^i/dv^j dG^j/dv^k

With these signs the flagpole satisfies R(v) = 0 and, for a Riemannian
metric, R(w) = Riem(w, v)v, the classical Jacobi operator.

Families with closed-form sprays register vectorized kernels on their
model (see :mod:`finslerlab.metrics`); every public entry point falls
back to the generic jet path, which is also what the cross-validation
tests compare the kernels against.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations_with_replacement

import numpy as np

from .errors import DegeneracyError, InputError
from .jets import Jet
from .metrics import PD_FLOOR, as_model

__all__ = [
    "FundamentalTensor",
    "SprayData",
    "fundamental_tensor",
    "fundamental_tensor_batch",
    "spray_generic",
    "spray_coefficients",
    "spray_data_batch",
    "berwald_curvature_operator",
    "jacobi_operator_batch",
    "berwald_scan",
]


# ---------------------------------------------------------------------------
# generic helpers (scalar ring = floats | arrays | jets)
# ---------------------------------------------------------------------------


def _recip(z):
    if isinstance(z, Jet):
        return z.reciprocal()
    return 1.0 / z


def _solve_spd(A, b):
    """Solve A y = b by elimination without pivoting (A symmetric PD)."""
    n = len(b)
    A = [row[:] for row in A]
    b = list(b)
    for k in range(n):
        inv = _recip(A[k][k])
        for i in range(k + 1, n):
            f = A[i][k] * inv
            for j in range(k + 1, n):
                A[i][j] = A[i][j] - f * A[k][j]
            b[i] = b[i] - f * b[k]
    y = [None] * n
    for i in reversed(range(n)):
        s = b[i]
        for j in range(i + 1, n):
            s = s - A[i][j] * y[j]
        y[i] = s * _recip(A[i][i])
    return y


class _VecTable:
    """Caches directional jets of a vector-valued function at one base."""

    def __init__(self, fvec, base, width):
        self.fvec = fvec
        self.base = base
        self.width = width
        self._cache = {}

    def jets(self, direction, order):
        key = (tuple(direction), order)
        if key not in self._cache:
            args = [
                Jet.variable(self.base[i], direction[i], order)
                for i in range(len(self.base))
            ]
            out = self.fvec(args)
            self._cache[key] = [
                o if isinstance(o, Jet) else Jet.constant(o, order) for o in out
            ]
        return self._cache[key]

    def derivative(self, direction, k):
        return [j.derivative(k) for j in self.jets(direction, k)]


def _vector_partial(table, alpha, m):
    """Mixed partial (list over output components) by polarization."""
    k = int(sum(alpha))
    idx = [i for i, a in enumerate(alpha) if a > 0]
    mults = [alpha[i] for i in idx]
    total = None
    from itertools import product as iproduct

    for r in iproduct(*[range(a + 1) for a in mults]):
        if not any(r):
            continue
        weight = (-1) ** (k - sum(r))
        for a, ri in zip(mults, r):
            weight *= math.comb(a, ri)
        direction = [0.0] * m
        for i, ri in zip(idx, r):
            direction[i] = float(ri)
        term = table.derivative(direction, k)
        if total is None:
            total = [weight * t for t in term]
        else:
            total = [s + weight * t for s, t in zip(total, term)]
    scale = 1.0 / math.factorial(k)
    return [scale * t for t in total]


# ---------------------------------------------------------------------------
# fundamental tensor
# ---------------------------------------------------------------------------


def _f2_flat(model):
    n = model.n
    return lambda z: model.F2(z[:n], z[n:])


def _hessian_v_generic(model, xs, vs):
    """H_ij = d^2 F^2 / dv_i dv_j over generic scalars, plus x-derivative
    data shared with the spray (returned lazily by the caller)."""
    n = model.n
    f2 = _f2_flat(model)
    base = list(xs) + list(vs)

    def d2(direction):
        args = [Jet.variable(base[i], direction[i], 2) for i in range(2 * n)]
        out = f2(args)
        if not isinstance(out, Jet):
            out = Jet.constant(out, 2)
        return out

    jets_v = {}
    for i in range(n):
        d = [0.0] * (2 * n)
        d[n + i] = 1.0
        jets_v[i] = d2(d)
    H = [[None] * n for _ in range(n)]
    for i in range(n):
        H[i][i] = jets_v[i].derivative(2)
    for i, j in combinations_with_replacement(range(n), 2):
        if i == j:
            continue
        d = [0.0] * (2 * n)
        d[n + i] = 1.0
        d[n + j] = 1.0
        mixed = d2(d).derivative(2)
        H[i][j] = H[j][i] = 0.5 * (mixed - H[i][i] - H[j][j])
    return H


def fundamental_tensor_batch(model_or_spec, X, V):
    """Fundamental tensors g_v at a batch of (x, v); shape (..., n, n)."""
    model = as_model(model_or_spec)
    n = model.n
    X = np.asarray(X, dtype=float)
    V = np.asarray(V, dtype=float)
    xs = [X[..., i] for i in range(n)]
    vs = [V[..., i] for i in range(n)]
    H = _hessian_v_generic(model, xs, vs)
    g = np.empty(X.shape[:-1] + (n, n))
    for i in range(n):
        for j in range(n):
            g[..., i, j] = 0.5 * np.asarray(H[i][j])
    return g


@dataclass
class FundamentalTensor:
    """g_v with its inverse and spectral range at one (x, v)."""

    x: np.ndarray
    v: np.ndarray
    g: np.ndarray
    g_inv: np.ndarray
    eig_min: float
    eig_max: float


def fundamental_tensor(spec, x, v):
    model = as_model(spec)
    x = np.asarray(x, dtype=float)
    v = np.asarray(v, dtype=float)
    if np.all(v == 0.0):
        raise InputError("fundamental tensor needs v != 0")
    model.spec.require_in_chart(x)
    g = fundamental_tensor_batch(model, x, v)
    eig = np.linalg.eigvalsh(g)
    if eig[-1] <= 0 or eig[0] < PD_FLOOR * eig[-1]:
        raise DegeneracyError(
            f"fundamental tensor degenerate (eigenvalues {eig.tolist()})", x=x, v=v
        )
    return FundamentalTensor(x, v, g, np.linalg.inv(g), float(eig[0]), float(eig[-1]))


# ---------------------------------------------------------------------------
# spray
# ---------------------------------------------------------------------------


def spray_generic(model, xs, vs):
    """Spray coefficients G^i over generic scalars (jets/arrays welcome)."""
    n = model.n
    f2 = _f2_flat(model)
    base = list(xs) + list(vs)

    def jet2(direction):
        args = [Jet.variable(base[i], direction[i], 2) for i in range(2 * n)]
        out = f2(args)
        if not isinstance(out, Jet):
            out = Jet.constant(out, 2)
        return out

    # second v-derivatives (Hessian H = 2g)
    jets_v = []
    for i in range(n):
        d = [0.0] * (2 * n)
        d[n + i] = 1.0
        jets_v.append(jet2(d))
    H = [[None] * n for _ in range(n)]
    for i in range(n):
        H[i][i] = jets_v[i].derivative(2)
    for i in range(n):
        for j in range(i + 1, n):
            d = [0.0] * (2 * n)
            d[n + i] = 1.0
            d[n + j] = 1.0
            mixed = jet2(d).derivative(2)
            H[i][j] = H[j][i] = 0.5 * (mixed - H[i][i] - H[j][j])

    # x-gradient and mixed x-v second derivatives
    jets_x = []
    for k in range(n):
        d = [0.0] * (2 * n)
        d[k] = 1.0
        jets_x.append(jet2(d))
    A = [j.derivative(1) for j in jets_x]  # dF^2/dx_l
    rhs = []
    for l in range(n):
        s = None
        for k in range(n):
            d = [0.0] * (2 * n)
            d[k] = 1.0
            d[n + l] = 1.0
            mixed = jet2(d).derivative(2)
            B_kl = 0.5 * (mixed - jets_x[k].derivative(2) - jets_v[l].derivative(2))
            term = B_kl * vs[k]
            s = term if s is None else s + term
        rhs.append(s - A[l])

    # G = 1/4 g^{-1} rhs = 1/2 H^{-1} rhs
    y = _solve_spd(H, rhs)
    return [0.5 * yi for yi in y]


def _spray_flat(model):
    n = model.n
    return lambda z: spray_generic(model, z[:n], z[n:])


# -- fast generic path for (G, N, Gx) ---------------------------------------
#
# The integrators need G, N = dG/dv, and Gx = dG/dx at every right-hand-
# side call.  Differentiating the formula G = 1/2 H^{-1} r analytically,
#
#   dG/dz = 1/2 H^{-1} (dr/dz - 2 (dH/dz) G),
#
# everything reduces to partial derivatives of F^2 up to third order,
# which one shared DirectionalTable of (non-nested) jets supplies.  This
# avoids re-running spray_generic with jet-valued arguments (jets nested
# inside jets), which is an order of magnitude slower.


def _spray_jac_generic(model, X, V, need_x=True):
    from .jets import DirectionalTable, partials

    n = model.n
    X = np.asarray(X, dtype=float)
    V = np.asarray(V, dtype=float)
    batch = X.shape[:-1]
    f2 = _f2_flat(model)
    base = [X[..., i] for i in range(n)] + [V[..., i] for i in range(n)]
    table = DirectionalTable(f2, base)

    def p(*pairs):
        alpha = [0] * (2 * n)
        for pos, count in pairs:
            alpha[pos] += count
        return np.asarray(partials(f2, base, alpha, table=table))

    xi = lambda i: i
    vi = lambda i: n + i

    H = np.empty(batch + (n, n))
    for i in range(n):
        for j in range(i, n):
            H[..., i, j] = H[..., j, i] = (
                p((vi(i), 2)) if i == j else p((vi(i), 1), (vi(j), 1))
            )
    A = np.stack([p((xi(l), 1)) for l in range(n)], axis=-1)
    B = np.empty(batch + (n, n))  # B[k, l] = d2 F2 / dx_k dv_l
    for k in range(n):
        for l in range(n):
            B[..., k, l] = p((xi(k), 1), (vi(l), 1))
    r = np.einsum("...kl,...k->...l", B, V) - A
    G = 0.5 * np.linalg.solve(H, r[..., None])[..., 0]

    T = np.empty(batch + (n, n, n))  # d3 F2 / dv dv dv (symmetric)
    for i, j, k in combinations_with_replacement(range(n), 3):
        val = p((vi(i), 1), (vi(j), 1), (vi(k), 1)) if len({i, j, k}) == 3 else (
            p((vi(i), 3)) if i == j == k else None
        )
        if val is None:
            pairs = {}
            for idx in (i, j, k):
                pairs[vi(idx)] = pairs.get(vi(idx), 0) + 1
            val = p(*pairs.items())
        for a, b, c in {(i, j, k), (i, k, j), (j, i, k), (j, k, i),
                        (k, i, j), (k, j, i)}:
            T[..., a, b, c] = val
    D = np.empty(batch + (n, n, n))  # D[k, l, j] = d3 F2 / dx_k dv_l dv_j
    for k in range(n):
        for l in range(n):
            for j in range(l, n):
                val = (
                    p((xi(k), 1), (vi(l), 2))
                    if l == j
                    else p((xi(k), 1), (vi(l), 1), (vi(j), 1))
                )
                D[..., k, l, j] = D[..., k, j, l] = val

    # N = dG/dv
    rv = np.einsum("...klj,...k->...lj", D, V) + np.swapaxes(B, -1, -2) - B
    rhs_N = rv - 2.0 * np.einsum("...ilj,...l->...ij", T, G)
    N = 0.5 * np.linalg.solve(H, rhs_N)
    if not need_x:
        return G, N, None

    E = np.empty(batch + (n, n, n))  # E[j, k, l] = d3 F2 / dx_j dx_k dv_l
    for j in range(n):
        for k in range(j, n):
            for l in range(n):
                val = (
                    p((xi(j), 2), (vi(l), 1))
                    if j == k
                    else p((xi(j), 1), (xi(k), 1), (vi(l), 1))
                )
                E[..., j, k, l] = E[..., k, j, l] = val
    P = np.empty(batch + (n, n))  # d2 F2 / dx dx (symmetric)
    for j in range(n):
        for l in range(j, n):
            P[..., j, l] = P[..., l, j] = (
                p((xi(j), 2)) if j == l else p((xi(j), 1), (xi(l), 1))
            )
    rx = np.einsum("...jkl,...k->...lj", E, V) - np.swapaxes(P, -1, -2)
    # (dH/dx_j)_{li} = D[j, l, i]
    rhs_Gx = rx - 2.0 * np.einsum("...jli,...i->...lj", D, G)
    Gx = 0.5 * np.linalg.solve(H, rhs_Gx)
    return G, N, Gx


def _spray_G_generic(model, X, V):
    """G alone from second-order partials of F^2 (fast generic path)."""
    from .jets import DirectionalTable, partials

    n = model.n
    X = np.asarray(X, dtype=float)
    V = np.asarray(V, dtype=float)
    batch = X.shape[:-1]
    f2 = _f2_flat(model)
    base = [X[..., i] for i in range(n)] + [V[..., i] for i in range(n)]
    table = DirectionalTable(f2, base)

    def p(*pairs):
        alpha = [0] * (2 * n)
        for pos, count in pairs:
            alpha[pos] += count
        return np.asarray(partials(f2, base, alpha, table=table))

    H = np.empty(batch + (n, n))
    for i in range(n):
        for j in range(i, n):
            H[..., i, j] = H[..., j, i] = (
                p((n + i, 2)) if i == j else p((n + i, 1), (n + j, 1))
            )
    A = np.stack([p((l, 1)) for l in range(n)], axis=-1)
    B = np.empty(batch + (n, n))
    for k in range(n):
        for l in range(n):
            B[..., k, l] = p((k, 1), (n + l, 1))
    r = np.einsum("...kl,...k->...l", B, V) - A
    return 0.5 * np.linalg.solve(H, r[..., None])[..., 0]


def _spray_derivs(model, X, V, order_v=1, need_x=False, need_second=False):
    """Generic-jet derivatives of G at a (possibly batched) base point.

    Returns a dict with keys among G, N, Gx, Gvv, Gxv, Gvvv as numpy
    arrays with leading batch axes.
    """
    n = model.n
    X = np.asarray(X, dtype=float)
    V = np.asarray(V, dtype=float)
    batch = X.shape[:-1]
    base = [X[..., i] for i in range(n)] + [V[..., i] for i in range(n)]
    table = _VecTable(_spray_flat(model), base, n)

    def arr(values):
        out = np.empty(batch + (len(values),))
        for i, val in enumerate(values):
            out[..., i] = np.asarray(val)
        return np.moveaxis(out, -1, len(batch))

    out = {}
    G = table.fvec(base)
    out["G"] = arr(G)

    def partial(alpha):
        return _vector_partial(table, alpha, 2 * n)

    def unit(i):
        a = [0] * (2 * n)
        a[i] = 1
        return a

    if order_v >= 1:
        N = np.empty(batch + (n, n))
        for j in range(n):
            col = partial(unit(n + j))
            for i in range(n):
                N[..., i, j] = np.asarray(col[i])
        out["N"] = N
    if need_x:
        Gx = np.empty(batch + (n, n))
        for j in range(n):
            col = partial(unit(j))
            for i in range(n):
                Gx[..., i, j] = np.asarray(col[i])
        out["Gx"] = Gx
    if need_second:
        Gvv = np.empty(batch + (n, n, n))  # Gvv[i, j, k] = d2 G^i / dv_j dv_k
        for j in range(n):
            for k in range(j, n):
                a = [0] * (2 * n)
                a[n + j] += 1
                a[n + k] += 1
                col = partial(a)
                for i in range(n):
                    Gvv[..., i, j, k] = np.asarray(col[i])
                    Gvv[..., i, k, j] = Gvv[..., i, j, k]
        out["Gvv"] = Gvv
        Gxv = np.empty(batch + (n, n, n))  # Gxv[i, j, k] = d2 G^i / dx_j dv_k
        for j in range(n):
            for k in range(n):
                a = [0] * (2 * n)
                a[j] += 1
                a[n + k] += 1
                col = partial(a)
                for i in range(n):
                    Gxv[..., i, j, k] = np.asarray(col[i])
        out["Gxv"] = Gxv
    if order_v >= 3:
        Gvvv = np.empty(batch + (n,) + (n, n, n))
        for j, k, l in combinations_with_replacement(range(n), 3):
            a = [0] * (2 * n)
            a[n + j] += 1
            a[n + k] += 1
            a[n + l] += 1
            col = partial(a)
            for i in range(n):
                val = np.asarray(col[i])
                for p, q, r in {(j, k, l), (j, l, k), (k, j, l), (k, l, j),
                                (l, j, k), (l, k, j)}:
                    Gvvv[..., i, p, q, r] = val
        out["Gvvv"] = Gvvv
    return out


def spray_data_batch(model_or_spec, X, V, need_jacobian=True):
    """Vectorized (G, N, Gx) for the batched integrators.

    Uses the family's closed-form kernels when available, otherwise the
    generic jet path.  ``need_jacobian=False`` returns only G.
    """
    model = as_model(model_or_spec)
    if not need_jacobian:
        if model.spray_batch is not None:
            return model.spray_batch(X, V)
        return _spray_G_generic(model, X, V)
    if model.spray_jac_batch is not None:
        return model.spray_jac_batch(X, V)
    G, N, Gx = _spray_jac_generic(model, X, V)
    return G, N, Gx


@dataclass
class SprayData:
    """Spray, connection, and Berwald-tensor magnitude at one (x, v)."""

    x: np.ndarray
    v: np.ndarray
    G: np.ndarray
    N: np.ndarray
    berwald_norm: float


def spray_coefficients(spec, x, v):
    model = as_model(spec)
    x = np.asarray(x, dtype=float)
    v = np.asarray(v, dtype=float)
    if np.all(v == 0.0):
        raise InputError("spray needs v != 0")
    fundamental_tensor(model, x, v)  # raises DegeneracyError when singular
    d = _spray_derivs(model, x, v, order_v=3)
    return SprayData(x, v, d["G"], d["N"], float(np.max(np.abs(d["Gvvv"]))))


def berwald_scan(model_or_spec, X, V):
    """Max |d^3 G/dv^3| and the scale max |d^2 G/dv^2| per sample."""
    model = as_model(model_or_spec)
    d = _spray_derivs(model, X, V, order_v=3, need_second=True)
    n = model.n
    bmax = np.max(np.abs(d["Gvvv"].reshape(d["Gvvv"].shape[: -4] + (n**4,))), axis=-1)
    scale = np.max(np.abs(d["Gvv"].reshape(d["Gvv"].shape[: -3] + (n**3,))), axis=-1)
    return bmax, scale


# ---------------------------------------------------------------------------
# Jacobi operator (Berwald curvature of the spray)
# ---------------------------------------------------------------------------


def _jacobi_from_derivs(V, d):
    G, N, Gx = d["G"], d["N"], d["Gx"]
    Gvv, Gxv = d["Gvv"], d["Gxv"]
    V = np.asarray(V, dtype=float)
    term1 = 2.0 * Gx
    term2 = np.einsum("...j,...ijk->...ik", V, Gxv)
    term3 = 2.0 * np.einsum("...j,...ijk->...ik", G, Gvv)
    term4 = np.einsum("...ij,...jk->...ik", N, N)
    return term1 - term2 + term3 - term4


def jacobi_operator_batch(model_or_spec, X, V):
    """R^i_k at a batch of (x, v); kernel when available, else jets."""
    model = as_model(model_or_spec)
    if model.jacobi_batch is not None:
        return model.jacobi_batch(X, V)
    d = _spray_derivs(model, X, V, order_v=1, need_x=True, need_second=True)
    return _jacobi_from_derivs(V, d)


def berwald_curvature_operator(spec, x, v):
    """Jacobi operator R at one (x, v), always via the generic jet path."""
    model = as_model(spec)
    x = np.asarray(x, dtype=float)
    v = np.asarray(v, dtype=float)
    if np.all(v == 0.0):
        raise InputError("curvature needs v != 0")
    fundamental_tensor(model, x, v)  # degeneracy gate
    d = _spray_derivs(model, x, v, order_v=1, need_x=True, need_second=True)
    return _jacobi_from_derivs(v, d)
