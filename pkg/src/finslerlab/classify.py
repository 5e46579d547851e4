"""Rigidity criteria and the end-to-end classification verdict.

Three independent tests decide where a metric sits:

* Berwald detection -- the spray's third v-derivative vanishes;
* flag-curvature nonpositivity -- sampled Jacobi spectra;
* Busemann convexity -- sampled midpoint convexity of t -> d(g1(t), g2(t)).

The supporting machinery (norm preservation under parallel transport,
the Binet-Legendre canonical inner product, the kappa-defect against an
auxiliary Riemannian metric, and holonomy sampling) produces the
corroborating evidence and witnesses.  For the built-in fixtures the
verdicts must satisfy (berwald and flag_nonpositive) <=> busemann-pass.

All samplers derive child seeds from the master seed, so reports are
deterministic for a given (spec, config).
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial.legendre import leggauss

from .batch import distance_batch, integrate_geodesic_batch, transport_batch
from .curvature import NONPOS_TOL, jacobi_spectrum, nonpositivity_scan
from .errors import InputError, QuadratureError, SamplingError
from .geodesics import integrate_geodesic
from .metrics import as_model
from .numdiff import fd_christoffel
from .spray import berwald_scan, spray_data_batch
from .transport import jacobi_by_ode, parallel_transport

__all__ = [
    "NormPreservationResult",
    "KappaData",
    "AuxInvarianceResult",
    "HolonomySample",
    "ConvexityReport",
    "ConvexityWitness",
    "ClassifyConfig",
    "ClassificationReport",
    "norm_preservation_test",
    "binet_legendre_metric",
    "binet_legendre_field",
    "kappa_defect",
    "transport_invariance_of_aux",
    "holonomy_sample",
    "busemann_convexity_sample",
    "jacobi_convexity_witness",
    "classify_report",
]


def _sample_valid_points(model, region, rng, count):
    n = model.n
    X = np.empty((0, n))
    for _ in range(64):
        cand = region.sample(rng, count)
        cand = cand[model.point_valid_batch(cand)]
        X = np.concatenate([X, cand])
        if len(X) >= count:
            return X[:count]
    raise SamplingError("could not sample enough valid chart points")


def _unit_velocities(model, X, rng):
    V = rng.standard_normal(X.shape)
    return V / model.F_batch(X, V)[:, None]


# ---------------------------------------------------------------------------
# norm preservation (Lemma 3.1 behavior)
# ---------------------------------------------------------------------------


@dataclass
class NormPreservationResult:
    """Worst relative drift of F(W(t)) over transported sample vectors."""

    n_geodesics: int
    n_vectors: int
    T: float
    seed: int
    max_deviation: float
    witness: dict

    def to_dict(self):
        return {
            "n_geodesics": self.n_geodesics,
            "n_vectors": self.n_vectors,
            "T": self.T,
            "seed": self.seed,
            "max_deviation": self.max_deviation,
            "witness": self.witness,
        }


def norm_preservation_test(
    spec, region=None, n_geodesics=50, n_vectors=5, T=1.0, seed=0, n_steps=64
) -> NormPreservationResult:
    """Max over sampled parallel fields of sup_t |F(W(t)) - F(W(0))| / F(W(0)).

    Geodesics start in the region with F-unit speed; fields are random.
    Geodesics leaving the chart within [0, T] are dropped.
    """
    model = as_model(spec)
    n = model.n
    if region is None:
        region = model.spec.distance_region()
    rng = np.random.default_rng(seed)
    X0 = _sample_valid_points(model, region, rng, n_geodesics)
    V0 = _unit_velocities(model, X0, rng)
    W0 = rng.standard_normal((n_geodesics, n, n_vectors))
    grid = np.linspace(0.0, T, 9)
    g, X, V, W = transport_batch(model, X0, V0, W0, T, n_steps=n_steps, grid=grid)
    inside = model.spec.chart_domain.contains_batch(
        X.reshape(-1, n)
    ).reshape(len(grid), -1)
    keep = inside.all(axis=0) & model.point_valid_batch(
        X.reshape(-1, n)
    ).reshape(len(grid), -1).all(axis=0)
    FW = np.stack(
        [
            model.F_batch(X.reshape(-1, n), W[..., j].reshape(-1, n)).reshape(
                len(grid), -1
            )
            for j in range(n_vectors)
        ],
        axis=-1,
    )  # (grid, B, k)
    dev = np.max(np.abs(FW - FW[0]) / FW[0], axis=0)  # (B, k)
    dev = dev[keep]
    flat = int(np.argmax(dev))
    b, j = np.unravel_index(flat, dev.shape)
    kept_idx = np.nonzero(keep)[0]
    gi = int(kept_idx[b])
    return NormPreservationResult(
        n_geodesics=n_geodesics,
        n_vectors=n_vectors,
        T=T,
        seed=seed,
        max_deviation=float(np.max(dev)),
        witness={
            "x0": X0[gi].tolist(),
            "v0": V0[gi].tolist(),
            "w0": W0[gi, :, j].tolist(),
        },
    )


# ---------------------------------------------------------------------------
# Binet-Legendre canonical inner product
# ---------------------------------------------------------------------------


def _sphere_rule(n, order):
    """Product quadrature nodes/weights on the Euclidean unit sphere."""
    if n == 2:
        theta = 2.0 * np.pi * np.arange(order) / order
        U = np.column_stack([np.cos(theta), np.sin(theta)])
        w = np.full(order, 2.0 * np.pi / order)
        return U, w
    if n == 3:
        z, wz = leggauss(order)
        m = 2 * order
        theta = 2.0 * np.pi * np.arange(m) / m
        s = np.sqrt(1.0 - z**2)
        U = np.empty((order * m, 3))
        W = np.empty(order * m)
        for i in range(order):
            block = slice(i * m, (i + 1) * m)
            U[block, 0] = s[i] * np.cos(theta)
            U[block, 1] = s[i] * np.sin(theta)
            U[block, 2] = z[i]
            W[block] = wz[i] * (2.0 * np.pi / m)
        return U, W
    raise InputError("Binet-Legendre quadrature supports dimensions 2 and 3")


def _bl_once(model, x, order):
    n = model.n
    U, w = _sphere_rule(n, order)
    X = np.broadcast_to(np.asarray(x, dtype=float), U.shape)
    F = model.F_batch(X, U)
    m0 = float(np.sum(w * F**(-n)))
    M = np.einsum("m,mi,mj->ij", w * F ** (-(n + 2)), U, U)
    ginv = n * M / m0
    return np.linalg.inv(ginv)


def binet_legendre_metric(spec, x, order=None, tol=1e-6, max_doublings=5):
    """Canonical inner product at x from second moments of the unit ball.

    Normalized so the Euclidean norm gives the identity:
    (g^{-1})^{ij} = (n+2)/vol(B) * int_B v^i v^j dv over B = {F(x, .) <= 1},
    reduced to a sphere integral by homogeneity.  Quadrature order doubles
    until the matrix settles to ``tol`` (unless ``order`` pins it).
    """
    model = as_model(spec)
    if order is not None:
        return _bl_once(model, x, order)
    order = 16 if model.n == 2 else 8
    g = _bl_once(model, x, order)
    for _ in range(max_doublings):
        order *= 2
        g_next = _bl_once(model, x, order)
        change = np.max(np.abs(g_next - g)) / max(np.max(np.abs(g_next)), 1e-30)
        g = g_next
        if change < tol:
            return g
    raise QuadratureError(
        f"Binet-Legendre quadrature did not settle to {tol} by order {order}"
    )


def binet_legendre_field(spec, tol=1e-6):
    """The Binet-Legendre metric as a smooth field x -> matrix.

    The quadrature order is calibrated once (at the chart center) and
    then frozen, so finite differences of the field see a smooth
    function rather than adaptive-order jumps.  Evaluations are cached.
    """
    model = as_model(spec)
    center = 0.5 * (
        np.asarray(model.spec.chart_domain.lo) + np.asarray(model.spec.chart_domain.hi)
    )
    order = 16 if model.n == 2 else 8
    g = _bl_once(model, center, order)
    for _ in range(5):
        order *= 2
        g_next = _bl_once(model, center, order)
        change = np.max(np.abs(g_next - g)) / max(np.max(np.abs(g_next)), 1e-30)
        g = g_next
        if change < tol:
            break
    else:
        raise QuadratureError("Binet-Legendre order calibration failed")
    cache = {}

    def aux(x):
        key = np.asarray(x, dtype=float).tobytes()
        if key not in cache:
            cache[key] = _bl_once(model, x, order)
        return cache[key]

    return aux


# ---------------------------------------------------------------------------
# kappa-defect
# ---------------------------------------------------------------------------


@dataclass
class KappaData:
    """Covariant acceleration of the F-geodesic in an auxiliary metric.

    ``kappa_perp`` is the component aux-orthogonal to v (the affine-
    equivalence defect); ``inner_v`` is <kappa, v>_aux.
    """

    x: np.ndarray
    v: np.ndarray
    kappa: np.ndarray
    kappa_perp: np.ndarray
    inner_v: float


def kappa_defect(spec, aux_metric_field, x, v) -> KappaData:
    """kappa = gamma_dd + Gamma[aux](gamma_d, gamma_d) at t = 0.

    With gamma the F-geodesic through (x, v): kappa = -2 G(x, v) +
    Gamma[aux](v, v).  Vanishing (of the v-orthogonal part) at all (x, v)
    means aux shares its geodesics with F up to reparametrization.
    """
    model = as_model(spec)
    x = np.asarray(x, dtype=float)
    v = np.asarray(v, dtype=float)
    if np.all(v == 0.0):
        raise InputError("kappa_defect needs v != 0")
    aux = np.asarray(aux_metric_field(x), dtype=float)
    eig = np.linalg.eigvalsh(aux)
    if eig[0] <= 0:
        raise InputError("auxiliary metric degenerate at x")
    G = np.asarray(spray_data_batch(model, x, v, need_jacobian=False))
    gamma = fd_christoffel(aux_metric_field, x)
    kappa = -2.0 * G + np.einsum("ijk,j,k->i", gamma, v, v)
    vv = float(v @ aux @ v)
    inner = float(kappa @ aux @ v)
    kappa_perp = kappa - (inner / vv) * v
    return KappaData(x, v, kappa, kappa_perp, inner)


@dataclass
class AuxInvarianceResult:
    """Transport drift of aux-inner products, with the kappa spot check."""

    samples: int
    seed: int
    max_drift: float
    max_kappa_inner: float
    witness: dict

    def to_dict(self):
        return {
            "samples": self.samples,
            "seed": self.seed,
            "max_drift": self.max_drift,
            "max_kappa_inner": self.max_kappa_inner,
            "witness": self.witness,
        }


def transport_invariance_of_aux(
    spec, aux_metric_field, region=None, samples=20, seed=0, n_steps=64
) -> AuxInvarianceResult:
    """Does linear parallel transport preserve the auxiliary metric?

    Transports aux-orthonormal frames along sampled unit-speed geodesics
    and reports the max drift of the aux Gram matrix; when the drift is
    small the identity <kappa(v), v>_aux = 0 is spot-checked too.
    """
    model = as_model(spec)
    n = model.n
    if region is None:
        region = model.spec.distance_region()
    rng = np.random.default_rng(seed)
    X0 = _sample_valid_points(model, region, rng, samples)
    V0 = _unit_velocities(model, X0, rng)
    W0 = np.empty((samples, n, n))
    for b in range(samples):
        L = np.linalg.cholesky(np.asarray(aux_metric_field(X0[b]), dtype=float))
        W0[b] = np.linalg.inv(L).T  # aux-orthonormal columns
    grid = np.linspace(0.0, 1.0, 5)
    _, X, V, W = transport_batch(model, X0, V0, W0, 1.0, n_steps=n_steps, grid=grid)
    drift = np.zeros(samples)
    for k in range(len(grid)):
        inside = model.spec.chart_domain.contains_batch(X[k])
        for b in range(samples):
            if not inside[b]:
                drift[b] = np.nan
                continue
            aux = np.asarray(aux_metric_field(X[k, b]), dtype=float)
            gram = W[k, b].T @ aux @ W[k, b]
            drift[b] = max(drift[b], float(np.max(np.abs(gram - np.eye(n)))))
    valid = ~np.isnan(drift)
    worst = int(np.nanargmax(drift))
    max_drift = float(np.nanmax(drift[valid]))
    kappa_inner = 0.0
    for b in range(min(5, samples)):
        kd = kappa_defect(model, aux_metric_field, X0[b], V0[b])
        kappa_inner = max(kappa_inner, abs(kd.inner_v))
    return AuxInvarianceResult(
        samples=samples,
        seed=seed,
        max_drift=max_drift,
        max_kappa_inner=kappa_inner,
        witness={"x0": X0[worst].tolist(), "v0": V0[worst].tolist()},
    )


# ---------------------------------------------------------------------------
# holonomy sampling
# ---------------------------------------------------------------------------


@dataclass
class HolonomySample:
    """Sampled generators of the linear holonomy group at p.

    Each loop is a pair of geodesic paths p -> q (one direct, one through
    an intermediate vertex); the group element is P_2^{-1} o P_1.
    """

    p: np.ndarray
    seed: int
    loops: list
    maps: list
    operator_norms: np.ndarray
    F_deviations: np.ndarray
    skipped: int
    composition_error: float

    def to_dict(self):
        return {
            "p": self.p.tolist(),
            "seed": self.seed,
            "n_loops": len(self.maps),
            "skipped": self.skipped,
            "max_operator_norm": float(np.max(self.operator_norms)),
            "max_F_deviation": float(np.max(self.F_deviations)),
            "composition_error": self.composition_error,
        }


def holonomy_sample(
    spec, p, n_loops=20, loop_scale=0.2, seed=0, n_steps=64
) -> HolonomySample:
    """Sample linear-holonomy generators P_{gamma2}^{-1} o P_{gamma1}.

    gamma1 is the geodesic p -> q, gamma2 the broken geodesic p -> m -> q;
    the transports along the legs are composed and the return path is
    inverted as a linear map (backward transport is NOT the inverse for
    general Finsler metrics).  Loops whose legs fail to connect are
    skipped and counted.
    """
    model = as_model(spec)
    n = model.n
    p = np.asarray(p, dtype=float)
    rng = np.random.default_rng(seed)
    region = model.spec.distance_region()

    Q = np.empty((n_loops, n))
    M = np.empty((n_loops, n))
    count = 0
    for _ in range(200 * n_loops):
        if count == n_loops:
            break
        q, m = p + loop_scale * rng.uniform(-1.0, 1.0, (2, n))
        if region.contains(q) and region.contains(m) and model.point_valid(q) \
                and model.point_valid(m):
            Q[count], M[count] = q, m
            count += 1
    if count < n_loops:
        raise SamplingError("could not place holonomy loops inside the region")

    P0 = np.tile(p, (n_loops, 1))
    legs_P = np.concatenate([P0, P0, M])   # p->q, p->m, m->q
    legs_Q = np.concatenate([Q, M, Q])
    d, V, conv, _ = distance_batch(model, legs_P, legs_Q, n_steps=n_steps)
    conv3 = conv.reshape(3, n_loops)
    ok = conv3.all(axis=0)
    skipped = int(np.sum(~ok))
    idx = np.nonzero(ok)[0]
    if len(idx) == 0:
        raise SamplingError("all holonomy loops failed to connect")

    W0 = np.tile(np.eye(n), (len(legs_P), 1, 1))
    _, _, Wend = transport_batch(model, legs_P, V, W0, 1.0, n_steps=n_steps)
    T_pq = Wend[:n_loops]
    T_pm = Wend[n_loops : 2 * n_loops]
    T_mq = Wend[2 * n_loops :]

    maps = []
    loops = []
    op_norms = []
    devs = []
    test = np.concatenate([np.eye(n), rng.standard_normal((3, n))])
    Ftest = model.F_batch(np.tile(p, (len(test), 1)), test)
    for i in idx:
        P2 = T_mq[i] @ T_pm[i]
        L = np.linalg.solve(P2, T_pq[i])
        maps.append(L)
        loops.append({"q": Q[i].tolist(), "m": M[i].tolist()})
        op_norms.append(np.linalg.norm(L, 2))
        FL = model.F_batch(np.tile(p, (len(test), 1)), test @ L.T)
        devs.append(float(np.max(np.abs(FL / Ftest - 1.0))))

    # composition consistency: carrying a frame through both legs of
    # gamma2 in one pass must equal the product of the leg transports
    comp_err = 0.0
    for i in idx[:3]:
        _, _, carried = transport_batch(
            model, M[i][None], V[2 * n_loops + i][None], T_pm[i][None], 1.0,
            n_steps=n_steps,
        )
        comp_err = max(
            comp_err, float(np.max(np.abs(carried[0] - T_mq[i] @ T_pm[i])))
        )

    return HolonomySample(
        p=p,
        seed=seed,
        loops=loops,
        maps=maps,
        operator_norms=np.asarray(op_norms),
        F_deviations=np.asarray(devs),
        skipped=skipped,
        composition_error=comp_err,
    )


# ---------------------------------------------------------------------------
# Busemann convexity sampling
# ---------------------------------------------------------------------------


@dataclass
class ConvexityReport:
    """Discrete midpoint-convexity statistics of h(t) = d(g1(t), g2(t)).

    ``worst_margin`` > tol at some triple means a convexity violation;
    both distance orderings are tested.  The report certifies only "no
    violation found at this tolerance over this sample", never convexity
    itself.
    """

    n_pairs: int
    n_tested: int
    skipped: int
    grid: np.ndarray
    tol: float
    seed: int
    violated: bool
    worst_margin: float
    witness: dict
    margins: np.ndarray = field(repr=False)
    H: np.ndarray = field(repr=False)

    def to_dict(self):
        return {
            "n_pairs": self.n_pairs,
            "n_tested": self.n_tested,
            "skipped": self.skipped,
            "grid": self.grid.tolist(),
            "tol": self.tol,
            "seed": self.seed,
            "violated": self.violated,
            "worst_margin": self.worst_margin,
            "witness": self.witness,
            "note": (
                "sampled evidence only: certifies no violation found at "
                "tolerance tol over n_tested pairs, not convexity itself"
            ),
        }

    def h_to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(
                ["pair", "ordering"] + [f"h_t{k}" for k in range(len(self.grid))]
            )
            for b in range(self.H.shape[2]):
                for o in range(2):
                    w.writerow(
                        [b, o] + [f"{val:.17g}" for val in self.H[o, :, b]]
                    )


def busemann_convexity_sample(
    spec, region=None, n_pairs=1000, grid=5, tol=1e-7, seed=0, n_steps=64
) -> ConvexityReport:
    """Sample geodesic pairs and test discrete midpoint convexity.

    Each pair runs two constant-speed geodesics over [0, 1] between
    sampled endpoints; h(t) = d_F(g1(t), g2(t)) is evaluated on the grid
    and every aligned triple (t_i, t_mid, t_j) is checked against
    h_mid <= (h_i + h_j)/2 + tol, in both distance orderings.
    """
    model = as_model(spec)
    n = model.n
    if region is None:
        region = model.spec.distance_region()
    if (grid - 1) <= 0:
        raise InputError("grid must have at least 2 points")
    steps = n_steps if n_steps % (grid - 1) == 0 else (grid - 1) * max(
        1, n_steps // (grid - 1)
    )
    rng = np.random.default_rng(seed)
    A1 = _sample_valid_points(model, region, rng, n_pairs)
    B1 = _sample_valid_points(model, region, rng, n_pairs)
    A2 = _sample_valid_points(model, region, rng, n_pairs)
    B2 = _sample_valid_points(model, region, rng, n_pairs)

    _, V1, c1, _ = distance_batch(model, A1, B1, n_steps=steps)
    _, V2, c2, _ = distance_batch(model, A2, B2, n_steps=steps)
    keep = c1 & c2
    times = np.linspace(0.0, 1.0, grid)
    _, X1, _ = integrate_geodesic_batch(
        model, A1[keep], V1[keep], 1.0, n_steps=steps, grid=times
    )
    _, X2, _ = integrate_geodesic_batch(
        model, A2[keep], V2[keep], 1.0, n_steps=steps, grid=times
    )
    B = int(np.sum(keep))
    H = np.empty((2, grid, B))
    conv = np.ones(B, dtype=bool)
    for k in range(grid):
        h12, _, ca, _ = distance_batch(model, X1[k], X2[k], n_steps=steps)
        h21, _, cb, _ = distance_batch(model, X2[k], X1[k], n_steps=steps)
        H[0, k] = h12
        H[1, k] = h21
        conv &= ca & cb
    H = H[:, :, conv]
    n_tested = H.shape[2]
    skipped = n_pairs - n_tested
    if n_tested < 0.8 * n_pairs:
        raise SamplingError(
            f"convexity sampler skipped {skipped}/{n_pairs} pairs"
        )

    triples = [
        (i, (i + j) // 2, j)
        for i in range(grid)
        for j in range(i + 2, grid)
        if (i + j) % 2 == 0
    ]
    margins = np.stack(
        [H[:, m] - 0.5 * (H[:, i] + H[:, j]) for i, m, j in triples]
    )  # (n_triples, 2, B)
    worst = float(np.max(margins))
    t_idx, o_idx, b_idx = np.unravel_index(np.argmax(margins), margins.shape)
    kept_idx = np.nonzero(keep)[0][conv]
    gi = int(kept_idx[b_idx])
    witness = {
        "pair_index": gi,
        "ordering": int(o_idx),
        "triple": [times[k] for k in triples[t_idx]],
        "gamma1": {"a": A1[gi].tolist(), "b": B1[gi].tolist()},
        "gamma2": {"a": A2[gi].tolist(), "b": B2[gi].tolist()},
    }
    return ConvexityReport(
        n_pairs=n_pairs,
        n_tested=n_tested,
        skipped=skipped,
        grid=times,
        tol=tol,
        seed=seed,
        violated=bool(worst > tol),
        worst_margin=worst,
        witness=witness,
        margins=margins,
        H=H,
    )


# ---------------------------------------------------------------------------
# positive-eigenvalue convexity-violation witness
# ---------------------------------------------------------------------------


@dataclass
class ConvexityWitness:
    """A positive Jacobi eigenvalue with its measured convexity defect.

    ``second_difference`` is the numerical (d^2/dt^2) F(Jbar(t)) at t=0
    for the Jacobi field with J(0) = w, DJ(0) = 0, pulled back to the
    base point by parallel transport; ``predicted`` is -lambda F(w).
    """

    x: np.ndarray
    v: np.ndarray
    eigenvalue: float
    w: np.ndarray
    second_difference: float
    predicted: float


def jacobi_convexity_witness(spec, x, v, seed=0, h=0.05):
    """If R has a positive eigenvalue, exhibit the convexity defect.

    Returns None when the spectrum at (x, v) is nonpositive.
    """
    model = as_model(spec)
    x = np.asarray(x, dtype=float)
    v = np.asarray(v, dtype=float)
    sd = jacobi_spectrum(model, x, v)
    lam = float(sd.eigenvalues[-1])
    if lam <= NONPOS_TOL * sd.F2:
        return None
    # eigenvector of the top transverse eigenvalue, in coordinates
    from scipy.linalg import eigh

    from .curvature import _transverse_basis
    from .spray import fundamental_tensor_batch, jacobi_operator_batch

    g = fundamental_tensor_batch(model, x, v)
    R = jacobi_operator_batch(model, x, v)
    S = 0.5 * (g @ R + (g @ R).T)
    Bt = _transverse_basis(g, v)
    vals, vecs = eigh(Bt.T @ S @ Bt, Bt.T @ g @ Bt)
    w = Bt @ vecs[:, -1]
    Fw = float(model.F_batch(x, w))

    samples = {}
    for sign in (1.0, -1.0):
        trace = integrate_geodesic(model.spec, x, v, sign * 2.0 * h)
        jd = jacobi_by_ode(model, trace, w, np.zeros_like(w))
        frame = parallel_transport(model, trace, np.eye(len(x)))
        for s in (1, 2):
            t = sign * s * h
            J = jd.at(t)[2][:, 0]
            E = frame.at(t)
            samples[round(t / h)] = float(
                model.F_batch(x, np.linalg.solve(E, J))
            )
    samples[0] = Fw
    second = (
        -samples[2] + 16 * samples[1] - 30 * samples[0] + 16 * samples[-1]
        - samples[-2]
    ) / (12.0 * h * h)
    return ConvexityWitness(x, v, lam, w, second, -lam * Fw)


# ---------------------------------------------------------------------------
# end-to-end classification
# ---------------------------------------------------------------------------


@dataclass
class ClassifyConfig:
    """Sample counts, tolerances, and the master seed for classify_report."""

    seed: int = 0
    berwald_samples: int = 200
    berwald_rel_tol: float = 1e-7
    norm_geodesics: int = 50
    norm_vectors: int = 5
    curvature_samples: int = 500
    busemann_pairs: int = 1000
    busemann_grid: int = 5
    busemann_tol: float = 1e-7
    holonomy_loops: int = 20
    holonomy_scale: float = 0.2
    kappa_samples: int = 10
    kappa_tol: float = 1e-5

    def to_dict(self):
        return dict(self.__dict__)


@dataclass
class ClassificationReport:
    """Aggregated verdicts, evidence, and witnesses for one metric."""

    spec: object
    config: ClassifyConfig
    verdicts: dict
    evidence: dict
    witnesses: dict
    consistent: bool
    incomplete: str | None

    def to_dict(self):
        from .metrics import spec_to_dict

        return {
            "spec": spec_to_dict(self.spec),
            "config": self.config.to_dict(),
            "verdicts": self.verdicts,
            "evidence": self.evidence,
            "witnesses": self.witnesses,
            "theorem_consistent": self.consistent,
            "incomplete": self.incomplete,
        }

    def to_json(self, path=None):
        text = json.dumps(self.to_dict(), indent=2, sort_keys=True)
        if path is not None:
            with open(path, "w") as fh:
                fh.write(text)
        return text


def _child_seeds(master, count):
    ss = np.random.SeedSequence(master)
    return [int(c.generate_state(1)[0]) for c in ss.spawn(count)]


def classify_report(spec, config: ClassifyConfig | None = None) -> ClassificationReport:
    """Run all rigidity criteria and assemble the classification verdict.

    Verdicts: ``berwald`` from the spray's third v-derivative,
    ``flag_nonpositive`` from sampled Jacobi spectra, ``busemann_sampled``
    from the midpoint-convexity sampler.  The report records whether the
    Theorem-level equivalence (berwald and flag_nonpositive <=>
    busemann pass) holds for this metric at the sampled tolerances.
    """
    model = as_model(spec)
    config = config or ClassifyConfig()
    seeds = _child_seeds(config.seed, 6)
    region = model.spec.distance_region()
    verdicts = {}
    evidence = {}
    witnesses = {}
    incomplete = None

    try:
        rng = np.random.default_rng(seeds[0])
        X = _sample_valid_points(model, region, rng, config.berwald_samples)
        V = _unit_velocities(model, X, rng)
        bmax, scale = berwald_scan(model, X, V)
        smax = float(np.max(scale))
        worst = int(np.argmax(bmax))
        berwald = bool(
            np.max(bmax) <= config.berwald_rel_tol * max(smax, 1e-12) + 1e-12
        )
        verdicts["berwald"] = berwald
        evidence["berwald_norm_max"] = float(np.max(bmax))
        evidence["berwald_scale"] = smax
        if not berwald:
            witnesses["berwald"] = {
                "x": X[worst].tolist(),
                "v": V[worst].tolist(),
                "seed": seeds[0],
            }

        npr = norm_preservation_test(
            model,
            region,
            n_geodesics=config.norm_geodesics,
            n_vectors=config.norm_vectors,
            seed=seeds[1],
        )
        evidence["norm_preservation_deviation"] = npr.max_deviation
        if npr.max_deviation > 1e-6:
            witnesses["norm_preservation"] = dict(npr.witness, seed=seeds[1])

        scan = nonpositivity_scan(
            model, region, sample_count=config.curvature_samples, seed=seeds[2]
        )
        verdicts["flag_nonpositive"] = scan.nonpositive
        evidence["max_flag_eigenvalue"] = scan.max_eigenvalue
        if not scan.nonpositive:
            witnesses["flag_positive"] = {
                "x": scan.witness_x.tolist(),
                "v": scan.witness_v.tolist(),
                "seed": seeds[2],
            }

        conv = busemann_convexity_sample(
            model,
            region,
            n_pairs=config.busemann_pairs,
            grid=config.busemann_grid,
            tol=config.busemann_tol,
            seed=seeds[3],
        )
        verdicts["busemann_sampled"] = "violated" if conv.violated else "pass"
        evidence["convexity_worst_margin"] = conv.worst_margin
        evidence["convexity_skipped"] = conv.skipped
        if conv.violated:
            witnesses["busemann"] = dict(conv.witness, seed=seeds[3])

        center = 0.5 * (
            np.asarray(region.lo) + np.asarray(region.hi)
        )
        hol = holonomy_sample(
            model,
            center,
            n_loops=config.holonomy_loops,
            loop_scale=config.holonomy_scale,
            seed=seeds[4],
        )
        evidence["holonomy_max_F_deviation"] = float(np.max(hol.F_deviations))
        evidence["holonomy_max_operator_norm"] = float(np.max(hol.operator_norms))
        evidence["holonomy_skipped"] = hol.skipped
        if np.max(hol.F_deviations) > 1e-3:
            i = int(np.argmax(hol.F_deviations))
            witnesses["holonomy"] = dict(hol.loops[i], seed=seeds[4])

        aux = binet_legendre_field(model)
        rng = np.random.default_rng(seeds[5])
        Xk = _sample_valid_points(model, region, rng, config.kappa_samples)
        Vk = _unit_velocities(model, Xk, rng)
        kmax = 0.0
        kw = None
        for b in range(config.kappa_samples):
            kd = kappa_defect(model, aux, Xk[b], Vk[b])
            mag = float(np.linalg.norm(kd.kappa_perp))
            if mag > kmax:
                kmax = mag
                kw = {"x": Xk[b].tolist(), "v": Vk[b].tolist(), "seed": seeds[5]}
        evidence["kappa_defect_max"] = kmax
        if kmax > config.kappa_tol and kw is not None:
            witnesses["kappa_defect"] = kw
    except SamplingError as exc:
        incomplete = str(exc)

    consistent = False
    if incomplete is None:
        lhs = verdicts["berwald"] and verdicts["flag_nonpositive"]
        consistent = lhs == (verdicts["busemann_sampled"] == "pass")
    return ClassificationReport(
        spec=model.spec,
        config=config,
        verdicts=verdicts,
        evidence=evidence,
        witnesses=witnesses,
        consistent=consistent,
        incomplete=incomplete,
    )
