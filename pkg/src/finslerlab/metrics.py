"""Finsler norm families, metric specs, and spec validation.

A :class:`MetricSpec` is a declarative, immutable description of a Finsler
norm family on a single coordinate chart.  :func:`build_model` turns a
spec into a :class:`MetricModel` that evaluates F^2 over generic scalars
(floats, numpy arrays, jets), which is all the differential machinery in
the other modules needs.  Families with cheap closed-form sprays also
expose vectorized kernels used by the batched integrators; the kernels
are cross-checked against the jet engine in the test suite.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from . import jets
from .errors import DomainError, InputError, SpecError
from .expressions import compile_expression

__all__ = [
    "Box",
    "MetricSpec",
    "MetricModel",
    "build_model",
    "eval_norm",
    "validate_spec",
    "ValidationReport",
    "load_spec",
    "save_spec",
    "spec_from_dict",
    "spec_to_dict",
]

FAMILIES = (
    "riemannian",
    "minkowski_quartic",
    "randers",
    "berwald_product",
    "custom_expression",
)

#: smallest acceptable ratio eig_min/eig_max of the fundamental tensor
PD_FLOOR = 1e-8


@dataclass(frozen=True)
class Box:
    """Axis-aligned box in R^n."""

    lo: tuple
    hi: tuple

    def __post_init__(self):
        if len(self.lo) != len(self.hi):
            raise SpecError("box lo/hi length mismatch", field="chart_domain")
        if any(l >= h for l, h in zip(self.lo, self.hi)):
            raise SpecError("box must have lo < hi in every axis", field="chart_domain")

    @property
    def dim(self):
        return len(self.lo)

    def contains(self, x, margin=0.0):
        x = np.asarray(x, dtype=float)
        lo = np.asarray(self.lo) + margin
        hi = np.asarray(self.hi) - margin
        return bool(np.all(x >= lo) and np.all(x <= hi))

    def contains_batch(self, X, margin=0.0):
        X = np.asarray(X, dtype=float)
        lo = np.asarray(self.lo) + margin
        hi = np.asarray(self.hi) - margin
        return np.all((X >= lo) & (X <= hi), axis=-1)

    def sample(self, rng, count=None, shrink=0.0):
        lo = np.asarray(self.lo) + shrink
        hi = np.asarray(self.hi) - shrink
        if count is None:
            return rng.uniform(lo, hi)
        return rng.uniform(lo, hi, size=(count, self.dim))

    def shrunk(self, margin):
        return Box(
            tuple(l + margin for l in self.lo), tuple(h - margin for h in self.hi)
        )

    def to_dict(self):
        return {"lo": list(self.lo), "hi": list(self.hi)}

    @classmethod
    def from_dict(cls, d, n=None, field_name="chart_domain"):
        try:
            lo = tuple(float(v) for v in d["lo"])
            hi = tuple(float(v) for v in d["hi"])
        except (KeyError, TypeError, ValueError) as exc:
            raise SpecError(f"malformed box: {exc}", field=field_name) from exc
        if n is not None and len(lo) != n:
            raise SpecError(
                f"box dimension {len(lo)} != metric dimension {n}", field=field_name
            )
        return cls(lo, hi)


@dataclass(frozen=True)
class MetricSpec:
    """Immutable description of a Finsler norm family on a chart."""

    family: str
    dimension: int
    params: dict = field(default_factory=dict)
    chart_domain: Box = None
    convex_box: Box = None

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise SpecError(f"unknown family {self.family!r}", field="family")
        if not isinstance(self.dimension, int) or self.dimension < 1:
            raise SpecError("dimension must be a positive integer", field="dimension")
        if self.chart_domain is None:
            object.__setattr__(
                self,
                "chart_domain",
                Box((-1.0,) * self.dimension, (1.0,) * self.dimension),
            )
        if self.chart_domain.dim != self.dimension:
            raise SpecError("chart_domain dimension mismatch", field="chart_domain")
        if self.convex_box is not None and self.convex_box.dim != self.dimension:
            raise SpecError("convex_box dimension mismatch", field="convex_box")

    def require_in_chart(self, x):
        x = np.asarray(x, dtype=float)
        if not np.all(np.isfinite(x)):
            raise InputError("non-finite point coordinates")
        if not self.chart_domain.contains(x):
            raise DomainError(f"point {x.tolist()} outside chart domain")

    def distance_region(self):
        """Box in which local_distance / convexity sampling is trusted."""
        return self.convex_box if self.convex_box is not None else self.chart_domain


# ---------------------------------------------------------------------------
# conformally flat Riemannian building block
# ---------------------------------------------------------------------------


class _Conformal:
    """Metric g = phi(x) * delta with phi = 4/(1 -+ |x|^2)^2.

    ``sign`` = -1 gives the Poincare disk (curvature -1), +1 the
    stereographic round-sphere chart (curvature +1); ``sign`` = 0 is the
    Euclidean metric.
    """

    def __init__(self, kind):
        self.kind = kind
        self.sign = {"euclidean": 0, "poincare_disk": -1, "sphere_chart": +1}[kind]
        self.curvature = float(self.sign)

    # -- generic scalar path (jets welcome) --------------------------------

    def phi(self, x):
        if self.sign == 0:
            return 1.0
        r2 = _dot(x, x)
        s = 1.0 - r2 if self.sign < 0 else 1.0 + r2
        return 4.0 / (s * s)

    def quad(self, x, v):
        """g_x(v, v) over generic scalars."""
        return self.phi(x) * _dot(v, v)

    # -- vectorized closed forms -------------------------------------------

    def phi_batch(self, X):
        if self.sign == 0:
            return np.ones(np.asarray(X).shape[:-1])
        r2 = np.sum(np.asarray(X) ** 2, axis=-1)
        s = 1.0 - r2 if self.sign < 0 else 1.0 + r2
        return 4.0 / s**2

    def grad_omega(self, X):
        """Gradient of omega = log(phi)/2 (vectorized)."""
        X = np.asarray(X, dtype=float)
        if self.sign == 0:
            return np.zeros_like(X)
        r2 = np.sum(X**2, axis=-1, keepdims=True)
        if self.sign < 0:
            return 2.0 * X / (1.0 - r2)
        return -2.0 * X / (1.0 + r2)

    def hess_omega(self, X):
        X = np.asarray(X, dtype=float)
        n = X.shape[-1]
        eye = np.eye(n)
        if self.sign == 0:
            return np.zeros(X.shape[:-1] + (n, n))
        r2 = np.sum(X**2, axis=-1)[..., None, None]
        xxt = X[..., :, None] * X[..., None, :]
        if self.sign < 0:
            s = 1.0 - r2
            return 2.0 * eye / s + 4.0 * xxt / s**2
        s = 1.0 + r2
        return -2.0 * eye / s + 4.0 * xxt / s**2

    def spray(self, X, V):
        """G^i = v^i (v . u) - |v|^2 u_i / 2 with u = grad(omega)."""
        V = np.asarray(V, dtype=float)
        u = self.grad_omega(X)
        vu = np.sum(V * u, axis=-1, keepdims=True)
        v2 = np.sum(V * V, axis=-1, keepdims=True)
        return V * vu - 0.5 * v2 * u

    def spray_jac(self, X, V):
        V = np.asarray(V, dtype=float)
        n = V.shape[-1]
        u = self.grad_omega(X)
        H = self.hess_omega(X)
        vu = np.sum(V * u, axis=-1)
        v2 = np.sum(V * V, axis=-1)
        eye = np.eye(n)
        G = V * vu[..., None] - 0.5 * v2[..., None] * u
        N = (
            eye * vu[..., None, None]
            + V[..., :, None] * u[..., None, :]
            - u[..., :, None] * V[..., None, :]
        )
        Hv = np.einsum("...kj,...k->...j", H, V)
        Gx = V[..., :, None] * Hv[..., None, :] - 0.5 * v2[..., None, None] * H
        return G, N, Gx

    def jacobi_operator(self, X, V):
        """R(w) = K (g(v,v) w - g(v,w) v) for constant curvature K."""
        V = np.asarray(V, dtype=float)
        n = V.shape[-1]
        if self.sign == 0:
            return np.zeros(V.shape[:-1] + (n, n))
        phi = self.phi_batch(X)[..., None, None]
        v2 = np.sum(V * V, axis=-1)[..., None, None]
        vvt = V[..., :, None] * V[..., None, :]
        eye = np.eye(n)
        return self.curvature * phi * (v2 * eye - vvt)

    def valid(self, X):
        if self.sign >= 0:
            return np.full(np.asarray(X).shape[:-1], True)
        return np.sum(np.asarray(X) ** 2, axis=-1) < 1.0


def _dot(a, b):
    s = a[0] * b[0]
    for i in range(1, len(a)):
        s = s + a[i] * b[i]
    return s


# ---------------------------------------------------------------------------
# metric models
# ---------------------------------------------------------------------------


class MetricModel:
    """Runtime evaluator for a :class:`MetricSpec`.

    ``F2(x, v)`` works over generic scalars; vectorized kernels
    (``spray_batch`` etc.) are ``None`` unless the family has closed
    forms.
    """

    x_independent = False

    def __init__(self, spec: MetricSpec):
        self.spec = spec
        self.n = spec.dimension

    # generic scalar path ---------------------------------------------------
    def F2(self, x, v):
        raise NotImplementedError

    # vectorized helpers ----------------------------------------------------
    def F2_batch(self, X, V):
        X = np.asarray(X, dtype=float)
        V = np.asarray(V, dtype=float)
        xs = [X[..., i] for i in range(self.n)]
        vs = [V[..., i] for i in range(self.n)]
        return np.asarray(self.F2(xs, vs), dtype=float)

    def F_batch(self, X, V):
        out = np.sqrt(self.F2_batch(X, V))
        V = np.asarray(V, dtype=float)
        zero = np.all(V == 0.0, axis=-1)
        if np.any(zero):
            out = np.where(zero, 0.0, out)
        return out

    # optional closed-form kernels -----------------------------------------
    spray_batch = None       # (X, V) -> G
    spray_jac_batch = None   # (X, V) -> (G, N, Gx)
    jacobi_batch = None      # (X, V) -> R

    def point_valid(self, x):
        """Family-specific validity beyond the chart box."""
        return True

    def point_valid_batch(self, X):
        """Vectorized point_valid; boolean mask over the batch axis."""
        return np.full(np.asarray(X).shape[:-1], True)


class _RiemannianModel(MetricModel):
    def __init__(self, spec):
        super().__init__(spec)
        kind = spec.params.get("metric", "euclidean")
        if kind not in ("euclidean", "poincare_disk", "sphere_chart"):
            raise SpecError(f"unknown riemannian metric {kind!r}", field="params.metric")
        self.conformal = _Conformal(kind)
        self.x_independent = kind == "euclidean"
        self.spray_batch = self.conformal.spray
        self.spray_jac_batch = self.conformal.spray_jac
        self.jacobi_batch = self.conformal.jacobi_operator

    def F2(self, x, v):
        return self.conformal.quad(x, v)

    def metric_matrix(self, x):
        """The metric tensor g(x) as a plain matrix."""
        return self.conformal.phi_batch(np.asarray(x, dtype=float)) * np.eye(self.n)

    def point_valid(self, x):
        return bool(np.all(self.conformal.valid(np.asarray(x, dtype=float))))

    def point_valid_batch(self, X):
        return self.conformal.valid(np.asarray(X, dtype=float))


def _quartic_norm_sq(vs, c):
    """F^2 of the quartic Minkowski norm over generic scalars."""
    q2 = _dot(vs, vs)
    q4 = vs[0] ** 4
    for i in range(1, len(vs)):
        q4 = q4 + vs[i] ** 4
    return jets.sqrt(q4 + c * q2 * q2)


class _MinkowskiQuarticModel(MetricModel):
    x_independent = True

    def __init__(self, spec):
        super().__init__(spec)
        self.c = float(spec.params.get("c", 1.0))
        if self.c < 0:
            raise SpecError("minkowski_quartic parameter c must be >= 0", field="params.c")
        zeros = lambda X, V: np.zeros(np.asarray(V, dtype=float).shape)

        def jac(X, V):
            V = np.asarray(V, dtype=float)
            n = V.shape[-1]
            z = np.zeros(V.shape[:-1] + (n, n))
            return np.zeros(V.shape), z, z.copy()

        self.spray_batch = zeros
        self.spray_jac_batch = jac
        self.jacobi_batch = lambda X, V: np.zeros(
            np.asarray(V, dtype=float).shape[:-1] + (self.n, self.n)
        )

    def F2(self, x, v):
        return _quartic_norm_sq(v, self.c)


class _RandersModel(MetricModel):
    def __init__(self, spec):
        super().__init__(spec)
        base = spec.params.get("base", "euclidean")
        if base not in ("euclidean", "poincare_disk"):
            raise SpecError(f"unsupported randers base {base!r}", field="params.base")
        self.conformal = _Conformal(base)
        drift = spec.params.get("drift")
        if not isinstance(drift, dict) or "type" not in drift:
            raise SpecError("randers needs params.drift with a type", field="params.drift")
        self.drift = drift
        kind = drift["type"]
        if kind == "constant":
            value = drift.get("value")
            if value is None or len(value) != self.n:
                raise SpecError(
                    "constant drift needs a value of length n", field="params.drift"
                )
            self.b_const = np.asarray(value, dtype=float)
            self.x_independent = base == "euclidean"
            if self.x_independent:
                self.spray_batch = lambda X, V: np.zeros(
                    np.asarray(V, dtype=float).shape
                )

                def jac(X, V):
                    V = np.asarray(V, dtype=float)
                    n = V.shape[-1]
                    z = np.zeros(V.shape[:-1] + (n, n))
                    return np.zeros(V.shape), z, z.copy()

                self.spray_jac_batch = jac
                self.jacobi_batch = lambda X, V: np.zeros(
                    np.asarray(V, dtype=float).shape[:-1] + (self.n, self.n)
                )
        elif kind == "sine":
            if self.n < 2:
                raise SpecError("sine drift needs dimension >= 2", field="params.drift")
            self.amplitude = float(drift.get("amplitude", 0.3))
            if base == "euclidean":
                self.spray_batch = lambda X, V: _randers_spray(self, X, V)[2]
                self.spray_jac_batch = lambda X, V: _randers_spray_jac(self, X, V)
        else:
            raise SpecError(f"unknown drift type {kind!r}", field="params.drift")

    def drift_batch(self, X):
        """b, db[i, j] = db_i/dx_j, d2b[i, j, m] at a batch of points."""
        X = np.asarray(X, dtype=float)
        batch = X.shape[:-1]
        n = self.n
        b = np.zeros(batch + (n,))
        db = np.zeros(batch + (n, n))
        d2b = np.zeros(batch + (n, n, n))
        if self.drift["type"] == "constant":
            b[...] = self.b_const
        else:
            b[..., 1] = self.amplitude * np.sin(X[..., 0])
            db[..., 1, 0] = self.amplitude * np.cos(X[..., 0])
            d2b[..., 1, 0, 0] = -self.amplitude * np.sin(X[..., 0])
        return b, db, d2b

    def drift_form(self, x):
        """One-form b at x, over generic scalars (list of length n)."""
        if self.drift["type"] == "constant":
            return list(self.b_const)
        b = [0.0] * self.n
        b[1] = self.amplitude * jets.sin(x[0])
        return b

    def F2(self, x, v):
        a = jets.sqrt(self.conformal.quad(x, v))
        b = self.drift_form(x)
        f = a + _dot(b, v)
        return f * f

    def point_valid(self, x):
        return bool(np.all(self.conformal.valid(np.asarray(x, dtype=float))))

    def point_valid_batch(self, X):
        return self.conformal.valid(np.asarray(X, dtype=float))


def _randers_core(model, X, V):
    """Shared quantities of the Euclidean-base Randers spray.

    The Euler-Lagrange equations of F = |v| + b(x).v reduce to the linear
    system g vdot = R with g the fundamental tensor
    g = (F/a)(I - u u^T) + w w^T (a = |v|, u = v/a, w = u + b) and
    R = F (db^T - db) v - (v.(db v)) w.  The spray is G = -vdot / 2.
    """
    X = np.asarray(X, dtype=float)
    V = np.asarray(V, dtype=float)
    b, db, d2b = model.drift_batch(X)
    alpha = np.sqrt(np.einsum("...i,...i->...", V, V))
    u = V / alpha[..., None]
    beta = np.einsum("...i,...i->...", b, V)
    F = alpha + beta
    w = u + b
    eye = np.eye(model.n)
    proj = eye - np.einsum("...i,...j->...ij", u, u)
    M = (F / alpha)[..., None, None] * proj + np.einsum("...i,...j->...ij", w, w)
    dbv = np.einsum("...ij,...j->...i", db, V)
    dbTv = np.einsum("...ji,...j->...i", db, V)
    C = dbTv - dbv
    q = np.einsum("...i,...i->...", dbv, V)
    R = F[..., None] * C - q[..., None] * w
    vdot = np.linalg.solve(M, R[..., None])[..., 0]
    return b, db, d2b, alpha, u, beta, F, w, proj, M, dbv, dbTv, C, q, vdot


def _randers_spray(model, X, V):
    core = _randers_core(model, X, V)
    M, vdot = core[9], core[14]
    return M, vdot, -0.5 * vdot


def _randers_spray_jac(model, X, V):
    """(G, N, Gx) for the Euclidean-base Randers spray, closed form.

    Differentiating g vdot = R gives d(vdot)/dz = g^{-1}(dR/dz - (dg/dz) vdot)
    for z any x- or v-coordinate.
    """
    (b, db, d2b, alpha, u, beta, F, w, proj, M,
     dbv, dbTv, C, q, vdot) = _randers_core(model, X, V)
    Fa = F / alpha
    G = -0.5 * vdot

    # v-derivatives: du/dv_m = proj/alpha, d(F/a)/dv_m = (b - (beta/a)u)_m/a.
    DU = proj / alpha[..., None, None]
    p = b - (beta / alpha)[..., None] * u
    dFa = p / alpha[..., None]
    dM_v = (
        np.einsum("...m,...ij->...ijm", dFa, proj)
        + np.einsum("...j,...im->...ijm", p, DU)
        + np.einsum("...i,...jm->...ijm", p, DU)
    )
    dC_v = np.swapaxes(db, -1, -2) - db
    dq_v = dbv + dbTv
    dR_v = (
        np.einsum("...m,...i->...im", w, C)
        + F[..., None, None] * dC_v
        - q[..., None, None] * DU
        - np.einsum("...i,...m->...im", w, dq_v)
    )
    rhs_v = dR_v - np.einsum("...ijm,...j->...im", dM_v, vdot)
    N = -0.5 * np.linalg.solve(M, rhs_v)

    # x-derivatives: only b depends on x; db[..., :, m] is db/dx_m.
    beta_x = dbTv
    dM_x = (
        np.einsum("...m,...ij->...ijm", beta_x / alpha[..., None], proj)
        + np.einsum("...j,...im->...ijm", w, db)
        + np.einsum("...i,...jm->...ijm", w, db)
    )
    dC_x = np.einsum("...jim,...j->...im", d2b, V) - np.einsum(
        "...ijm,...j->...im", d2b, V
    )
    dq_x = np.einsum("...i,...ijm,...j->...m", V, d2b, V)
    dR_x = (
        np.einsum("...m,...i->...im", beta_x, C)
        + F[..., None, None] * dC_x
        - q[..., None, None] * db
        - np.einsum("...i,...m->...im", w, dq_x)
    )
    rhs_x = dR_x - np.einsum("...ijm,...j->...im", dM_x, vdot)
    Gx = -0.5 * np.linalg.solve(M, rhs_x)
    return G, N, Gx


class _BerwaldProductModel(MetricModel):
    """Poincare disk (x1, x2) times the line (x3), quartic combination.

    F^4 = F1^4 + F2^4 + c (F1^2 + F2^2)^2 with F1 the hyperbolic norm of
    (v1, v2) and F2 = |v3|.  The spray is the product spray: Poincare on
    the first block, zero on the third coordinate.
    """

    def __init__(self, spec):
        super().__init__(spec)
        if self.n != 3:
            raise SpecError("berwald_product requires dimension 3", field="dimension")
        self.c = float(spec.params.get("c", 1.0))
        if self.c <= 0:
            raise SpecError("berwald_product needs c > 0", field="params.c")
        self.conformal = _Conformal("poincare_disk")

        def spray(X, V):
            X = np.asarray(X, dtype=float)
            V = np.asarray(V, dtype=float)
            G = np.zeros(V.shape)
            G[..., :2] = self.conformal.spray(X[..., :2], V[..., :2])
            return G

        def jac(X, V):
            X = np.asarray(X, dtype=float)
            V = np.asarray(V, dtype=float)
            G = np.zeros(V.shape)
            N = np.zeros(V.shape[:-1] + (3, 3))
            Gx = np.zeros(V.shape[:-1] + (3, 3))
            g2, n2, gx2 = self.conformal.spray_jac(X[..., :2], V[..., :2])
            G[..., :2] = g2
            N[..., :2, :2] = n2
            Gx[..., :2, :2] = gx2
            return G, N, Gx

        def jac_op(X, V):
            X = np.asarray(X, dtype=float)
            V = np.asarray(V, dtype=float)
            R = np.zeros(V.shape[:-1] + (3, 3))
            R[..., :2, :2] = self.conformal.jacobi_operator(X[..., :2], V[..., :2])
            return R

        self.spray_batch = spray
        self.spray_jac_batch = jac
        self.jacobi_batch = jac_op

    def F2(self, x, v):
        f1sq = self.conformal.quad(x[:2], v[:2])
        f2sq = v[2] * v[2]
        quart = f1sq * f1sq + f2sq * f2sq + self.c * (f1sq + f2sq) ** 2
        return jets.sqrt(quart)

    def point_valid(self, x):
        x12 = np.asarray(x, dtype=float)[..., :2]
        return bool(np.all(self.conformal.valid(x12)))

    def point_valid_batch(self, X):
        return self.conformal.valid(np.asarray(X, dtype=float)[..., :2])


class _CustomExpressionModel(MetricModel):
    def __init__(self, spec):
        super().__init__(spec)
        tree = spec.params.get("F2")
        if tree is None:
            raise SpecError("custom_expression needs params.F2", field="params.F2")
        self._f2 = compile_expression(tree, self.n)
        self.x_independent = bool(spec.params.get("x_independent", False))

    def F2(self, x, v):
        return self._f2(x, v)


_MODEL_CLASSES = {
    "riemannian": _RiemannianModel,
    "minkowski_quartic": _MinkowskiQuarticModel,
    "randers": _RandersModel,
    "berwald_product": _BerwaldProductModel,
    "custom_expression": _CustomExpressionModel,
}


def build_model(spec: MetricSpec) -> MetricModel:
    return _MODEL_CLASSES[spec.family](spec)


def as_model(spec_or_model):
    if isinstance(spec_or_model, MetricModel):
        return spec_or_model
    return build_model(spec_or_model)


# ---------------------------------------------------------------------------
# norm evaluation
# ---------------------------------------------------------------------------


def eval_norm(spec, x, v):
    """F(x, v).  Exactly 0 for v = 0; raises on bad input."""
    model = as_model(spec)
    x = np.asarray(x, dtype=float)
    v = np.asarray(v, dtype=float)
    if x.shape != (model.n,) or v.shape != (model.n,):
        raise InputError("x and v must be n-vectors")
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(v))):
        raise InputError("non-finite input")
    model.spec.require_in_chart(x)
    if not model.point_valid(x):
        raise DomainError(f"point {x.tolist()} outside the family's validity region")
    if np.all(v == 0.0):
        return 0.0
    return float(np.sqrt(model.F2(list(x), list(v))))


# ---------------------------------------------------------------------------
# spec validation
# ---------------------------------------------------------------------------


@dataclass
class ValidationReport:
    spec: MetricSpec
    passed: bool
    sample_count: int
    seed: int
    checks: list
    witnesses: list

    def summary(self):
        lines = [f"validation: {'pass' if self.passed else 'FAIL'}"]
        for chk in self.checks:
            lines.append(f"  {chk['name']}: {'pass' if chk['passed'] else 'FAIL'}"
                         f" (worst {chk['worst']:.3e})")
        for w in self.witnesses:
            lines.append(f"  witness [{w['property']}]: x={w['x']} v={w['v']}")
        return "\n".join(lines)

    def to_dict(self):
        return {
            "passed": self.passed,
            "sample_count": self.sample_count,
            "seed": self.seed,
            "checks": self.checks,
            "witnesses": self.witnesses,
        }


def _sample_points(model, rng, count):
    """Chart samples restricted to the family's validity region."""
    box = model.spec.chart_domain
    X = np.empty((count, model.n))
    filled = 0
    for _ in range(200):
        need = count - filled
        if need == 0:
            break
        cand = box.sample(rng, need)
        ok = np.array([model.point_valid(c) for c in cand])
        good = cand[ok]
        X[filled : filled + len(good)] = good
        filled += len(good)
    if filled < count:
        raise InputError("chart domain has almost no valid points")
    return X


def validate_spec(spec, sample_count=100, seed=0):
    """Sampled checks: homogeneity, positivity, strong convexity of g_v.

    Deterministic given the seed.  Returns a :class:`ValidationReport`;
    a failed check records the offending (x, v) witness.
    """
    from .spray import fundamental_tensor_batch  # local import: avoids a cycle

    if sample_count < 1:
        raise InputError("sample_count must be >= 1")
    model = as_model(spec)
    spec = model.spec
    n = model.n
    rng = np.random.default_rng(seed)
    X = _sample_points(model, rng, sample_count)
    V = rng.normal(size=(sample_count, n))
    V /= np.linalg.norm(V, axis=1, keepdims=True)

    checks = []
    witnesses = []

    def record(name, worst, passed, witness=None):
        checks.append({"name": name, "worst": float(worst), "passed": bool(passed)})
        if not passed and witness is not None:
            witnesses.append(
                {"property": name, "x": list(map(float, witness[0])),
                 "v": list(map(float, witness[1]))}
            )

    # positivity of F on nonzero vectors
    F2 = model.F2_batch(X, V)
    worst_idx = int(np.argmin(F2))
    record("positivity", F2[worst_idx], np.all(F2 > 0), (X[worst_idx], V[worst_idx]))

    # positive 1-homogeneity
    F = np.sqrt(np.maximum(F2, 0.0))
    worst_h = 0.0
    hom_ok = True
    hom_wit = None
    for lam in (0.5, 2.0, 10.0):
        Fl = model.F_batch(X, lam * V)
        rel = np.abs(Fl - lam * F) / np.maximum(lam * F, 1e-300)
        i = int(np.argmax(rel))
        if rel[i] > worst_h:
            worst_h = rel[i]
            hom_wit = (X[i], lam * V[i])
        if rel[i] > 1e-10:
            hom_ok = False
    record("homogeneity", worst_h, hom_ok, hom_wit)

    # strong convexity: fundamental tensor positive definite above floor
    try:
        g = fundamental_tensor_batch(model, X, V)
        eig = np.linalg.eigvalsh(g)
        ratio = eig[:, 0] / np.maximum(eig[:, -1], 1e-300)
        i = int(np.argmin(ratio))
        pd_ok = bool(np.all(eig[:, -1] > 0) and np.all(ratio >= PD_FLOOR))
        record("fundamental_tensor_pd", ratio[i], pd_ok, (X[i], V[i]))
    except Exception:
        # evaluation blew up (e.g. F <= 0 somewhere); positivity witness applies
        record("fundamental_tensor_pd", np.nan, False, (X[0], V[0]))

    # randers drift bound |b|_a < 1
    if spec.family == "randers":
        worst_b = 0.0
        b_wit = None
        for x in X:
            b = np.array([float(c) for c in model.drift_form(list(x))])
            a = model.conformal.phi_batch(x) * np.eye(n)
            bn = float(np.sqrt(b @ np.linalg.inv(a) @ b))
            if bn > worst_b:
                worst_b = bn
                # witness direction: v aligned with -b makes F smallest
                b_wit = (x, -b / max(np.linalg.norm(b), 1e-300))
        record("randers_drift_bound", worst_b, worst_b < 1.0, b_wit)

    passed = all(c["passed"] for c in checks)
    return ValidationReport(spec, passed, sample_count, seed, checks, witnesses)


# ---------------------------------------------------------------------------
# JSON schema
# ---------------------------------------------------------------------------


def spec_to_dict(spec: MetricSpec):
    d = {
        "family": spec.family,
        "dimension": spec.dimension,
        "params": spec.params,
        "chart_domain": spec.chart_domain.to_dict(),
    }
    if spec.convex_box is not None:
        d["convex_box"] = spec.convex_box.to_dict()
    return d


def spec_from_dict(d):
    if not isinstance(d, dict):
        raise SpecError("metric spec must be a JSON object")
    for key in ("family", "dimension"):
        if key not in d:
            raise SpecError(f"missing field {key!r}", field=key)
    family = d["family"]
    if family not in FAMILIES:
        raise SpecError(f"unknown family {family!r}", field="family")
    dim = d["dimension"]
    if not isinstance(dim, int) or isinstance(dim, bool) or dim < 1:
        raise SpecError("dimension must be a positive integer", field="dimension")
    params = d.get("params", {})
    if not isinstance(params, dict):
        raise SpecError("params must be an object", field="params")
    chart = d.get("chart_domain")
    chart_box = Box.from_dict(chart, dim) if chart is not None else None
    convex = d.get("convex_box")
    convex_box = Box.from_dict(convex, dim, "convex_box") if convex is not None else None
    spec = MetricSpec(family, dim, params, chart_box, convex_box)
    build_model(spec)  # surfaces family-specific schema problems eagerly
    return spec


def load_spec(path):
    with open(path) as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise SpecError(
                f"{path}: parse error at line {exc.lineno}, column {exc.colno}: {exc.msg}"
            ) from exc
    return spec_from_dict(data)


def save_spec(spec, path):
    with open(path, "w") as fh:
        json.dump(spec_to_dict(spec), fh, indent=2, sort_keys=True)
        fh.write("\n")
