"""Geodesic initial-value problems, exponential map, and local distances.

The geodesic ODE is ``xdd = -2 G(x, xd)``.  Scalar integrations use
scipy's embedded Runge-Kutta 5(4) pair with dense output; the shooting
solver for the (non-symmetric) local distance d_F uses damped Newton with
the exact Jacobian from the variational equations

    Jdd = -2 (dG/dx) J - 2 N Jd,

which is the linearization of the geodesic flow in its initial data.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp

from .errors import BVPError, DomainError, InputError, IntegrationError
from .metrics import as_model
from .spray import spray_data_batch

__all__ = [
    "GeodesicTrace",
    "DistanceResult",
    "integrate_geodesic",
    "exp_map",
    "local_distance",
    "geodesic_rhs",
    "variational_rhs",
]

DEFAULT_RTOL = 1e-9
DEFAULT_ATOL = 1e-11


def geodesic_rhs(model):
    n = model.n

    def rhs(t, y):
        x = y[:n]
        v = y[n:]
        G = spray_data_batch(model, x, v, need_jacobian=False)
        return np.concatenate([v, -2.0 * np.asarray(G)])

    return rhs


def variational_rhs(model, k):
    """RHS of geodesic + k Jacobi columns: y = [x, v, J (n*k), Jd (n*k)]."""
    n = model.n

    def rhs(t, y):
        x = y[:n]
        v = y[n : 2 * n]
        J = y[2 * n : 2 * n + n * k].reshape(n, k)
        Jd = y[2 * n + n * k :].reshape(n, k)
        G, N, Gx = spray_data_batch(model, x, v)
        Jdd = -2.0 * (Gx @ J) - 2.0 * (N @ Jd)
        return np.concatenate([v, -2.0 * np.asarray(G), Jd.ravel(), Jdd.ravel()])

    return rhs


def _chart_event(model):
    lo = np.asarray(model.spec.chart_domain.lo)
    hi = np.asarray(model.spec.chart_domain.hi)
    n = model.n

    def margin(t, y):
        x = y[:n]
        return float(min(np.min(x - lo), np.min(hi - x)))

    margin.terminal = True
    margin.direction = -1
    return margin


@dataclass
class GeodesicTrace:
    """Adaptive-step geodesic solution with dense output.

    ``status`` is "complete" or "chart_exit" (trace truncated at the
    boundary).  Node arrays hold the integrator's accepted steps.
    """

    spec: object
    x0: np.ndarray
    v0: np.ndarray
    T: float
    rtol: float
    atol: float
    t: np.ndarray
    x: np.ndarray
    v: np.ndarray
    status: str
    nfev: int
    sol: object = field(repr=False)
    model: object = field(repr=False)

    @property
    def t_end(self):
        return float(self.t[-1])

    def state(self, t):
        y = self.sol(t)
        n = self.model.n
        if np.ndim(t) == 0:
            return y[:n], y[n:]
        return y[:n].T, y[n:].T

    def x_at(self, t):
        return self.state(t)[0]

    def v_at(self, t):
        return self.state(t)[1]

    def endpoint(self):
        return self.x[-1].copy()

    def speed(self, t=None):
        """F(x(t), xd(t)); constant along a geodesic up to tolerance."""
        if t is None:
            X, V = self.x, self.v
        else:
            X, V = self.state(np.asarray(t, dtype=float))
        return self.model.F_batch(X, V)

    def speed_drift(self):
        s = self.speed()
        return float(np.max(np.abs(s - s[0])) / s[0])

    def to_csv(self, path):
        n = self.model.n
        F = self.speed()
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(
                ["t"]
                + [f"x{i + 1}" for i in range(n)]
                + [f"v{i + 1}" for i in range(n)]
                + ["F"]
            )
            for i in range(len(self.t)):
                row = [self.t[i], *self.x[i], *self.v[i], F[i]]
                w.writerow([f"{val:.17g}" for val in row])


def integrate_geodesic(spec, x0, v0, T=1.0, rtol=DEFAULT_RTOL, atol=DEFAULT_ATOL):
    """Integrate the geodesic with initial data (x0, v0) over [0, T].

    T may be negative (backward integration).  Stops with status
    "chart_exit" if the trajectory reaches the chart boundary; raises
    :class:`IntegrationError` on step-size collapse.
    """
    model = as_model(spec)
    x0 = np.asarray(x0, dtype=float)
    v0 = np.asarray(v0, dtype=float)
    if x0.shape != (model.n,) or v0.shape != (model.n,):
        raise InputError("x0 and v0 must be n-vectors")
    if not (np.all(np.isfinite(x0)) and np.all(np.isfinite(v0))):
        raise InputError("non-finite initial data")
    if np.all(v0 == 0.0):
        raise InputError("geodesic initial velocity must be nonzero")
    model.spec.require_in_chart(x0)
    if T == 0:
        raise InputError("T must be nonzero")
    y0 = np.concatenate([x0, v0])
    res = solve_ivp(
        geodesic_rhs(model),
        (0.0, float(T)),
        y0,
        method="RK45",
        rtol=rtol,
        atol=atol,
        dense_output=True,
        events=[_chart_event(model)],
    )
    if res.status == -1:
        raise IntegrationError(f"integrator failed: {res.message}")
    status = "chart_exit" if res.status == 1 else "complete"
    n = model.n
    return GeodesicTrace(
        spec=model.spec,
        x0=x0,
        v0=v0,
        T=float(T),
        rtol=rtol,
        atol=atol,
        t=res.t,
        x=res.y[:n].T.copy(),
        v=res.y[n:].T.copy(),
        status=status,
        nfev=res.nfev,
        sol=res.sol,
        model=model,
    )


def exp_map(spec, x0, v0, rtol=DEFAULT_RTOL, atol=DEFAULT_ATOL):
    """Endpoint of the unit-time geodesic with initial data (x0, v0)."""
    trace = integrate_geodesic(spec, x0, v0, 1.0, rtol=rtol, atol=atol)
    if trace.status != "complete":
        raise DomainError("geodesic left the chart before t = 1")
    return trace.endpoint()


@dataclass
class DistanceResult:
    """Forward distance d_F(p, q) with the connecting initial velocity."""

    p: np.ndarray
    q: np.ndarray
    value: float
    v0: np.ndarray
    iterations: int
    residual: float
    converged: bool


def _shoot(model, p, v, rtol, atol, with_jacobian):
    n = model.n
    if with_jacobian:
        y0 = np.concatenate(
            [p, v, np.zeros(n * n), np.eye(n).ravel()]
        )
        rhs = variational_rhs(model, n)
    else:
        y0 = np.concatenate([p, v])
        rhs = geodesic_rhs(model)
    res = solve_ivp(
        rhs,
        (0.0, 1.0),
        y0,
        method="RK45",
        rtol=rtol,
        atol=atol,
        events=[_chart_event(model)],
    )
    if res.status == -1:
        raise IntegrationError(f"integrator failed: {res.message}")
    if res.status == 1:
        raise BVPError("shooting geodesic left the chart (target unreachable?)")
    y = res.y[:, -1]
    if with_jacobian:
        return y[:n], y[2 * n : 2 * n + n * n].reshape(n, n)
    return y[:n], None


def local_distance(
    spec,
    p,
    q,
    tol=1e-10,
    rtol=DEFAULT_RTOL,
    atol=DEFAULT_ATOL,
    max_iter=30,
):
    """Forward distance d_F(p, q) by single shooting with damped Newton.

    Both endpoints must lie in the spec's convex-neighborhood region; the
    result is the unique short connecting geodesic there.  Symmetry is
    NOT assumed: d_F(p, q) and d_F(q, p) generally differ.
    """
    model = as_model(spec)
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    region = model.spec.distance_region()
    for name, pt in (("p", p), ("q", q)):
        if pt.shape != (model.n,):
            raise InputError(f"{name} must be an n-vector")
        if not region.contains(pt):
            raise DomainError(f"{name}={pt.tolist()} outside the convex region")
    if np.array_equal(p, q):
        return DistanceResult(p, q, 0.0, np.zeros(model.n), 0, 0.0, True)

    if model.x_independent:
        # translation-invariant metric: geodesics are straight lines
        v = q - p
        return DistanceResult(p, q, float(model.F_batch(p, v)), v, 0, 0.0, True)

    v = q - p
    scale = max(float(np.linalg.norm(v)), 1e-12)
    rn_prev = np.inf
    for it in range(1, max_iter + 1):
        endpoint, jac = _shoot(model, p, v, rtol, atol, True)
        r = endpoint - q
        rn = float(np.linalg.norm(r))
        if rn < tol * max(1.0, scale):
            return DistanceResult(
                p, q, float(model.F_batch(p, v)), v, it, rn, True
            )
        try:
            delta = np.linalg.solve(jac, r)
        except np.linalg.LinAlgError as exc:
            raise BVPError(f"singular shooting Jacobian: {exc}", residual=rn)
        # Armijo backtracking on the residual norm
        alpha = 1.0
        while alpha > 1.0 / 128:
            trial = v - alpha * delta
            e_trial, _ = _shoot(model, p, trial, rtol, atol, False)
            if np.linalg.norm(e_trial - q) <= (1.0 - 1e-4 * alpha) * rn:
                break
            alpha *= 0.5
        v = v - alpha * delta
        rn_prev = rn
    raise BVPError(
        f"shooting did not converge in {max_iter} iterations", residual=rn_prev
    )
