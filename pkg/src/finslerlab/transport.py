"""Covariant derivative, parallel transport, and Jacobi fields.

Along a geodesic gamma the covariant derivative of a vector field W is

    (D W)^i = Wd^i + N^i_j(gamma, gammad) W^j,

with N the nonlinear connection of the spray.  Linear parallel transport
solves D W = 0; Jacobi fields are computed two independent ways (by
differentiating the geodesic flow in its initial velocity, and by the
Jacobi equation D D J = -R(J) in a parallel frame) and cross-checked.
The osculating cross-check validates D against the Levi-Civita
derivative of an explicit osculating Riemannian metric built from the
spray flow, with no shared code path.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp
from scipy.interpolate import CubicSpline

from .batch import rk5_fixed
from .errors import DomainError, InputError, IntegrationError
from .geodesics import DEFAULT_ATOL, DEFAULT_RTOL, GeodesicTrace, integrate_geodesic
from .metrics import as_model
from .spray import fundamental_tensor_batch, jacobi_operator_batch, spray_data_batch

__all__ = [
    "ParallelFrame",
    "JacobiFieldData",
    "covariant_derivative",
    "parallel_transport",
    "jacobi_by_variation",
    "jacobi_by_ode",
    "jacobi_residual",
    "reconstruct_jacobi_operator",
    "small_time_expansion_check",
    "osculating_cross_check",
]


def _as_columns(w, n):
    """Normalize a vector / stack of vectors to an (n, k) column matrix."""
    w = np.asarray(w, dtype=float)
    if w.ndim == 1:
        if w.shape != (n,):
            raise InputError("vector must have length n")
        return w[:, None], True
    if w.ndim == 2 and w.shape[0] == n:
        return w, False
    raise InputError("expected an n-vector or an (n, k) column matrix")


def _connection_at(model, X, V):
    _, N, _ = spray_data_batch(model, X, V)
    return N


# ---------------------------------------------------------------------------
# covariant derivative and parallel transport
# ---------------------------------------------------------------------------


def covariant_derivative(spec, trace: GeodesicTrace, W, t=None):
    """(D W)(t) = Wd + N(gamma, gammad) W along the trace.

    ``W`` is either a callable t -> vector (differentiated by a 4th-order
    stencil) or an array of samples at the trace nodes (cubic-spline
    differentiated); ``t`` defaults to the trace nodes.
    """
    model = as_model(spec)
    n = model.n
    if t is None:
        t = trace.t
    t = np.atleast_1d(np.asarray(t, dtype=float))
    if callable(W):
        Wt = np.array([np.asarray(W(ti), dtype=float) for ti in t])
        h = 1e-4 * max(abs(trace.t_end), 1.0)
        Wd = np.array(
            [
                (
                    -np.asarray(W(ti + 2 * h))
                    + 8.0 * np.asarray(W(ti + h))
                    - 8.0 * np.asarray(W(ti - h))
                    + np.asarray(W(ti - 2 * h))
                )
                / (12.0 * h)
                for ti in t
            ]
        )
    else:
        Ws = np.asarray(W, dtype=float)
        if Ws.shape != (len(trace.t), n):
            raise InputError("W samples must align with the trace nodes: (m, n)")
        spline = CubicSpline(trace.t, Ws, axis=0)
        Wt = spline(t)
        Wd = spline(t, 1)
    X, V = trace.state(t)
    N = _connection_at(model, X, V)
    return Wd + np.einsum("...ij,...j->...i", N, Wt)


@dataclass
class ParallelFrame:
    """Vectors transported linearly along a geodesic, sampled at nodes.

    ``W`` has shape (m, n, k): k columns at each of the m trace nodes.
    """

    trace: GeodesicTrace
    W0: np.ndarray
    t: np.ndarray
    W: np.ndarray
    norms: np.ndarray  # F(gamma(t), W_k(t)), shape (m, k)
    sol: object

    @property
    def k(self):
        return self.W0.shape[1]

    def at(self, t):
        """Transported columns at arbitrary t within the trace span."""
        n = self.trace.model.n
        y = self.sol(t)
        if np.ndim(t) == 0:
            return y[2 * n :].reshape(n, self.k)
        return np.moveaxis(y[2 * n :].reshape(n, self.k, -1), -1, 0)

    def norm_drift(self):
        """Max relative drift of F(W_k(t)) over the trace, per column."""
        F0 = self.norms[0]
        return np.max(np.abs(self.norms - F0), axis=0) / F0

    def residual(self):
        """Max transport-equation residual |Wd + N W| at interior nodes."""
        n = self.trace.model.n
        DW = np.stack(
            [
                covariant_derivative(
                    self.trace.model, self.trace, lambda s, j=j: self.at(s)[:, j]
                )
                for j in range(self.k)
            ],
            axis=-1,
        )
        keep = (self.t > self.t[0] + 1e-3) & (self.t < self.t[-1] - 1e-3)
        return float(np.max(np.abs(DW[keep]))) if np.any(keep) else 0.0

    def to_csv(self, path):
        n = self.trace.model.n
        header = ["t"]
        for j in range(self.k):
            header += [f"W{j + 1}_{i + 1}" for i in range(n)]
        header += [f"F_W{j + 1}" for j in range(self.k)]
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(header)
            for m in range(len(self.t)):
                row = [self.t[m]]
                for j in range(self.k):
                    row += list(self.W[m, :, j])
                row += list(self.norms[m])
                w.writerow([f"{val:.17g}" for val in row])


def parallel_transport(spec, trace: GeodesicTrace, w0) -> ParallelFrame:
    """Solve Wd = -N(gamma, gammad) W along the trace, W(0) = w0.

    ``w0`` may be a single vector or an (n, k) matrix of columns; the
    geodesic is re-integrated jointly at the trace tolerances so the
    transported vectors see a consistent state.
    """
    model = as_model(spec)
    n = model.n
    W0, _ = _as_columns(w0, n)
    k = W0.shape[1]

    def rhs(t, y):
        x = y[:n]
        v = y[n : 2 * n]
        W = y[2 * n :].reshape(n, k)
        G, N, _ = spray_data_batch(model, x, v)
        return np.concatenate([v, -2.0 * np.asarray(G), (-N @ W).ravel()])

    y0 = np.concatenate([trace.x0, trace.v0, W0.ravel()])
    res = solve_ivp(
        rhs,
        (0.0, trace.t_end),
        y0,
        method="RK45",
        rtol=trace.rtol,
        atol=trace.atol,
        dense_output=True,
        t_eval=trace.t,
    )
    if res.status != 0:
        raise IntegrationError(f"transport integration failed: {res.message}")
    W = res.y[2 * n :].T.reshape(len(trace.t), n, k)
    X = res.y[:n].T
    norms = np.stack(
        [model.F_batch(X, W[:, :, j]) for j in range(k)], axis=-1
    )
    return ParallelFrame(trace, W0, res.t, W, norms, res.sol)


# ---------------------------------------------------------------------------
# Jacobi fields
# ---------------------------------------------------------------------------


@dataclass
class JacobiFieldData:
    """J and its covariant derivative along a geodesic, at the nodes.

    ``tag`` records the construction route ("variation" or "ode").
    ``J``, ``Jdot``, ``DJ`` have shape (m, n, k).
    """

    spec: object
    model: object
    tag: str
    t: np.ndarray
    x: np.ndarray
    v: np.ndarray
    J: np.ndarray
    Jdot: np.ndarray
    DJ: np.ndarray
    sol: object

    def at(self, t):
        """(x, v, J, Jdot, DJ) at arbitrary times inside the span."""
        n = self.model.n
        k = self.J.shape[2]
        t = np.asarray(t, dtype=float)
        scalar = t.ndim == 0
        ts = np.atleast_1d(t)
        y = self.sol(ts).T
        x = y[:, :n]
        v = y[:, n : 2 * n]
        J = y[:, 2 * n : 2 * n + n * k].reshape(-1, n, k)
        Jd = y[:, 2 * n + n * k : 2 * n + 2 * n * k].reshape(-1, n, k)
        N = _connection_at(self.model, x, v)
        DJ = Jd + np.einsum("mij,mjk->mik", N, J)
        if scalar:
            return x[0], v[0], J[0], Jd[0], DJ[0]
        return x, v, J, Jd, DJ


def _variation_ivp(model, x0, v0, J0, Jd0, T, rtol, atol):
    n = model.n
    k = J0.shape[1]

    def rhs(t, y):
        x = y[:n]
        v = y[n : 2 * n]
        J = y[2 * n : 2 * n + n * k].reshape(n, k)
        Jd = y[2 * n + n * k :].reshape(n, k)
        G, N, Gx = spray_data_batch(model, x, v)
        Jdd = -2.0 * (Gx @ J) - 2.0 * (N @ Jd)
        return np.concatenate([v, -2.0 * np.asarray(G), Jd.ravel(), Jdd.ravel()])

    y0 = np.concatenate([x0, v0, J0.ravel(), Jd0.ravel()])
    res = solve_ivp(
        rhs,
        (0.0, float(T)),
        y0,
        method="RK45",
        rtol=rtol,
        atol=atol,
        dense_output=True,
    )
    if res.status != 0:
        raise IntegrationError(f"Jacobi integration failed: {res.message}")
    return res


def jacobi_by_variation(
    spec, x0, v0, w, T=1.0, rtol=DEFAULT_RTOL, atol=DEFAULT_ATOL
) -> JacobiFieldData:
    """J(t) = d/ds|_0 gamma_{v0 + s w}(t), by forward differentiation.

    The geodesic flow is differentiated in its initial velocity by
    integrating the exact linearization (the variational equations, whose
    coefficient matrices come from the jet engine or closed-form
    kernels) jointly with the geodesic -- no finite differencing of
    nearby trajectories is involved.
    """
    model = as_model(spec)
    n = model.n
    x0 = np.asarray(x0, dtype=float)
    v0 = np.asarray(v0, dtype=float)
    if np.all(v0 == 0.0):
        raise InputError("jacobi_by_variation needs v0 != 0")
    W, _ = _as_columns(w, n)
    k = W.shape[1]
    res = _variation_ivp(model, x0, v0, np.zeros((n, k)), W, T, rtol, atol)
    m = len(res.t)
    X = res.y[:n].T
    V = res.y[n : 2 * n].T
    J = res.y[2 * n : 2 * n + n * k].T.reshape(m, n, k)
    Jd = res.y[2 * n + n * k :].T.reshape(m, n, k)
    N = _connection_at(model, X, V)
    DJ = Jd + np.einsum("mij,mjk->mik", N, J)
    return JacobiFieldData(
        model.spec, model, "variation", res.t, X, V, J, Jd, DJ, res.sol
    )


def jacobi_by_ode(
    spec, trace: GeodesicTrace, J0, J0dot, rtol=DEFAULT_RTOL, atol=DEFAULT_ATOL
) -> JacobiFieldData:
    """Integrate D D J = -R(J) in a parallel frame along the trace.

    ``J0dot`` is the initial *covariant* derivative D J(0).  Writing
    J = E y with a parallel frame E (DE = 0) gives ydd = -E^{-1} R E y,
    integrated jointly with gamma and E.
    """
    model = as_model(spec)
    n = model.n
    J0, _ = _as_columns(J0, n)
    Jd0, _ = _as_columns(J0dot, n)
    if Jd0.shape != J0.shape:
        raise InputError("J0 and J0dot must have matching shapes")
    k = J0.shape[1]

    def rhs(t, z):
        x = z[:n]
        v = z[n : 2 * n]
        E = z[2 * n : 2 * n + n * n].reshape(n, n)
        y = z[2 * n + n * n : 2 * n + n * n + n * k].reshape(n, k)
        yd = z[2 * n + n * n + n * k :].reshape(n, k)
        G, N, _ = spray_data_batch(model, x, v)
        R = jacobi_operator_batch(model, x, v)
        ydd = -np.linalg.solve(E, R @ (E @ y))
        return np.concatenate(
            [v, -2.0 * np.asarray(G), (-N @ E).ravel(), yd.ravel(), ydd.ravel()]
        )

    z0 = np.concatenate(
        [trace.x0, trace.v0, np.eye(n).ravel(), J0.ravel(), Jd0.ravel()]
    )
    res = solve_ivp(
        rhs,
        (0.0, trace.t_end),
        z0,
        method="RK45",
        rtol=rtol,
        atol=atol,
        dense_output=True,
        t_eval=trace.t,
    )
    if res.status != 0:
        raise IntegrationError(f"Jacobi ODE integration failed: {res.message}")
    m = len(res.t)
    X = res.y[:n].T
    V = res.y[n : 2 * n].T
    E = res.y[2 * n : 2 * n + n * n].T.reshape(m, n, n)
    y = res.y[2 * n + n * n : 2 * n + n * n + n * k].T.reshape(m, n, k)
    yd = res.y[2 * n + n * n + n * k :].T.reshape(m, n, k)
    J = np.einsum("mij,mjk->mik", E, y)
    DJ = np.einsum("mij,mjk->mik", E, yd)
    N = _connection_at(model, X, V)
    Jd = DJ - np.einsum("mij,mjk->mik", N, J)

    n_frame = n

    class _FrameSol:
        """Adapter exposing the frame solution in (x, v, J, Jd) layout."""

        def __call__(self, t):
            z = res.sol(t)
            single = z.ndim == 1
            if single:
                z = z[:, None]
            p = z.shape[1]
            E = z[2 * n_frame : 2 * n_frame + n_frame * n_frame].reshape(
                n_frame, n_frame, p
            )
            yy = z[
                2 * n_frame + n_frame**2 : 2 * n_frame + n_frame**2 + n_frame * k
            ].reshape(n_frame, k, p)
            yyd = z[2 * n_frame + n_frame**2 + n_frame * k :].reshape(
                n_frame, k, p
            )
            Jt = np.einsum("ijp,jkp->ikp", E, yy)
            DJt = np.einsum("ijp,jkp->ikp", E, yyd)
            x = z[:n_frame]
            v = z[n_frame : 2 * n_frame]
            Nt = _connection_at(
                _FrameSol.model, np.moveaxis(x, -1, 0), np.moveaxis(v, -1, 0)
            )
            Jdt = DJt - np.einsum("pij,jkp->ikp", Nt, Jt)
            out = np.concatenate(
                [x, v, Jt.reshape(-1, p), Jdt.reshape(-1, p)], axis=0
            )
            return out[:, 0] if single else out

    _FrameSol.model = model
    return JacobiFieldData(
        model.spec, model, "ode", res.t, X, V, J, Jd, DJ, _FrameSol()
    )


def jacobi_residual(data: JacobiFieldData, times=None, dt=None):
    """Max |D D J + R(J)| at the given times (4th-order stencil for DDJ)."""
    if times is None:
        span = data.t[-1] - data.t[0]
        times = np.linspace(data.t[0] + 0.1 * span, data.t[-1] - 0.1 * span, 7)
    times = np.atleast_1d(np.asarray(times, dtype=float))
    if dt is None:
        dt = 0.02 * max(abs(data.t[-1] - data.t[0]), 1e-3)
    worst = 0.0
    for t0 in times:
        stencil = [data.at(t0 + s * dt)[4] for s in (-2, -1, 1, 2)]
        dDJ = (-stencil[3] + 8 * stencil[2] - 8 * stencil[1] + stencil[0]) / (
            12.0 * dt
        )
        x, v, J, _, DJ = data.at(t0)
        N = _connection_at(data.model, x, v)
        DDJ = dDJ + N @ DJ
        R = jacobi_operator_batch(data.model, x, v)
        worst = max(worst, float(np.max(np.abs(DDJ + R @ J))))
    return worst


def reconstruct_jacobi_operator(spec, x0, v0, t0=0.5, dt=0.05):
    """Recover R(gamma(t0)) from integrated Jacobi fields.

    Integrates the n Jacobi fields with J(0) = 0, DJ(0) = e_k and forms
    Rhat = -DDJ(t0) J(t0)^{-1}, the unique operator consistent with the
    Jacobi equation over that basis.  Independent oracle for the
    coordinate curvature formula.
    """
    model = as_model(spec)
    n = model.n
    data = jacobi_by_variation(spec, x0, v0, np.eye(n), T=t0 + 3 * dt)
    stencil = [data.at(t0 + s * dt)[4] for s in (-2, -1, 1, 2)]
    dDJ = (-stencil[3] + 8 * stencil[2] - 8 * stencil[1] + stencil[0]) / (12.0 * dt)
    x, v, J, _, DJ = data.at(t0)
    N = _connection_at(model, x, v)
    DDJ = dDJ + N @ DJ
    return -DDJ @ np.linalg.inv(J)


# ---------------------------------------------------------------------------
# small-time expansion (J = t W + O(t^3))
# ---------------------------------------------------------------------------


@dataclass
class ExpansionCheck:
    """Result of the small-time comparison of J(t) against t W(t)."""

    exact: bool
    slope: float | None
    times: np.ndarray
    errors: np.ndarray


def small_time_expansion_check(
    spec, x0, v0, w, t_min=1e-3, t_max=1e-1, n_points=13
) -> ExpansionCheck:
    """Fit the decay order of e(t) = |J(t) - t W(t)| on a log-log grid.

    Reports ``exact`` when e(t) sits at the integration noise floor (flat
    families); otherwise the regression slope (expected >= 2.8 for the
    cubic remainder).
    """
    model = as_model(spec)
    x0 = np.asarray(x0, dtype=float)
    v0 = np.asarray(v0, dtype=float)
    w = np.asarray(w, dtype=float)
    times = np.geomspace(t_min, t_max, n_points)
    data = jacobi_by_variation(spec, x0, v0, w, T=t_max)
    trace = integrate_geodesic(spec, x0, v0, t_max)
    frame = parallel_transport(spec, trace, w)
    errors = np.empty(n_points)
    for i, t in enumerate(times):
        J = data.at(t)[2][:, 0]
        W = frame.at(t)[:, 0]
        errors[i] = np.linalg.norm(J - t * W)
    floor = 1e-10 * float(np.linalg.norm(w)) * t_max
    if np.max(errors) <= floor:
        return ExpansionCheck(True, None, times, errors)
    mask = errors > 1e-15
    slope = float(np.polyfit(np.log(times[mask]), np.log(errors[mask]), 1)[0])
    return ExpansionCheck(False, slope, times, errors)


# ---------------------------------------------------------------------------
# osculating-metric cross-check
# ---------------------------------------------------------------------------


def _orthogonal_complement(g, v):
    """g-orthogonal complement of v: columns spanning {w : g(v, w) = 0}."""
    row = (g @ v)[None, :]
    _, _, vt = np.linalg.svd(row)
    return vt[1:].T  # (n, n-1)


class _OsculatingField:
    """Velocity field of the spray flow emitted from a hypersurface.

    The hypersurface is the g_{v0}-orthogonal complement of v0 at
    gamma(0); a point p near gamma is matched to flow parameters (t, s)
    with gamma_{(x0 + B s, v0)}(t) = p by vectorized Newton, using the
    homogeneity trick gamma_{(x, v0)}(t) = gamma_{(x, t v0)}(1).
    """

    def __init__(self, model, x0, v0, n_steps=48):
        self.model = model
        self.x0 = np.asarray(x0, dtype=float)
        self.v0 = np.asarray(v0, dtype=float)
        g0 = fundamental_tensor_batch(model, self.x0, self.v0)
        self.B = _orthogonal_complement(g0, self.v0)
        self.n_steps = n_steps

    def _flow(self, U):
        """Endpoints and endpoint velocities for parameter rows (t, s)."""
        n = self.model.n
        t = U[:, 0]
        s = U[:, 1:]
        X0 = self.x0[None, :] + s @ self.B.T
        V0 = t[:, None] * self.v0[None, :]
        y0 = np.concatenate([X0, V0], axis=1)

        def rhs(_, y):
            x = y[:, :n]
            v = y[:, n:]
            G = spray_data_batch(self.model, x, v, need_jacobian=False)
            return np.concatenate([v, -2.0 * np.asarray(G)], axis=1)

        y = rk5_fixed(rhs, y0, 0.0, 1.0, self.n_steps)
        return y[:, :n], y[:, n:]

    def __call__(self, P, t_guess):
        """V(p) for query points P (m, n) near gamma(t_guess)."""
        P = np.atleast_2d(np.asarray(P, dtype=float))
        if not self.model.spec.chart_domain.contains_batch(P).all():
            raise DomainError("osculating extension leaves the chart")
        m, n = P.shape
        U = np.zeros((m, n))
        U[:, 0] = t_guess
        h = 1e-6
        for _ in range(30):
            E, _ = self._flow(U)
            r = E - P
            if np.max(np.linalg.norm(r, axis=1)) < 1e-12:
                break
            # forward-difference Jacobian of the endpoint in (t, s)
            cols = []
            for j in range(n):
                Uj = U.copy()
                Uj[:, j] += h
                Ej, _ = self._flow(Uj)
                cols.append((Ej - E) / h)
            Jac = np.stack(cols, axis=-1)  # (m, n, n)
            U = U - np.linalg.solve(Jac, r[..., None])[..., 0]
        else:
            raise IntegrationError("osculating flow inversion did not converge")
        _, v_end = self._flow(U)
        V = v_end / U[:, 0:1]
        return V


def osculating_cross_check(spec, trace: GeodesicTrace, sample_count=5, h=1e-4):
    """Lemma-2.3 check: Levi-Civita of an osculating metric vs D_gamma.

    Builds the explicit osculating extension V, the Riemannian field
    g_V(p) = g(p, V(p)), its Christoffel symbols by Richardson-
    extrapolated central differences, and compares the resulting
    Levi-Civita connection along gamma against the N-based covariant
    derivative on the coordinate basis.  Returns the max discrepancy.
    """
    model = as_model(spec)
    n = model.n
    field = _OsculatingField(model, trace.x0, trace.v0)
    t_lo = 0.15 * trace.t_end
    t_hi = 0.85 * trace.t_end
    worst = 0.0
    for t_bar in np.linspace(t_lo, t_hi, sample_count):
        x_bar, v_bar = trace.state(t_bar)
        # queries for the metric derivatives: x +- h e_j and x +- h/2 e_j
        shifts = [np.zeros(n)]
        for j in range(n):
            for step in (h, -h, h / 2, -h / 2):
                e = np.zeros(n)
                e[j] = step
                shifts.append(e)
        P = x_bar[None, :] + np.asarray(shifts)
        V = field(P, t_bar)
        gV = fundamental_tensor_batch(model, P, V)
        dg = np.empty((n, n, n))  # dg[k] = d g_V / d x_k
        for j in range(n):
            base = 1 + 4 * j
            d_h = (gV[base] - gV[base + 1]) / (2.0 * h)
            d_h2 = (gV[base + 2] - gV[base + 3]) / h
            dg[j] = (4.0 * d_h2 - d_h) / 3.0
        ginv = np.linalg.inv(gV[0])
        gamma = 0.5 * np.einsum(
            "il,jlk->ijk",
            ginv,
            dg + np.transpose(dg, (2, 1, 0)) - np.transpose(dg, (1, 0, 2)),
        )
        # Levi-Civita along gamma on constant fields: Gamma(v, .) vs N
        lc = np.einsum("ijk,j->ik", gamma, v_bar)
        N = _connection_at(model, x_bar, v_bar)
        worst = max(worst, float(np.max(np.abs(lc - N))))
    return worst
