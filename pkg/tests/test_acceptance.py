"""Acceptance gate: one test per numbered criterion, each printing a
single pass/fail line (visible via ``pytest -s`` or on failure).

Heavy artifacts (classification reports) are computed once per session
and shared between the end-to-end and determinism criteria.
"""

import numpy as np
import pytest

from finslerlab.classify import (
    ClassifyConfig,
    _bl_once,
    binet_legendre_field,
    binet_legendre_metric,
    busemann_convexity_sample,
    classify_report,
    holonomy_sample,
    jacobi_convexity_witness,
    kappa_defect,
    norm_preservation_test,
    transport_invariance_of_aux,
)
from finslerlab.curvature import flag_curvature
from finslerlab.geodesics import integrate_geodesic
from finslerlab.numdiff import fd_hessian
from finslerlab.spray import (
    berwald_curvature_operator,
    berwald_scan,
    fundamental_tensor_batch,
)
from finslerlab.transport import (
    jacobi_by_ode,
    jacobi_by_variation,
    osculating_cross_check,
    reconstruct_jacobi_operator,
    small_time_expansion_check,
)

from conftest import ALL_FIXTURES, BERWALD_FIXTURES, sample_state


def report(capsys, num, ok, detail):
    with capsys.disabled():
        print(f"[criterion {num:2d}] {'PASS' if ok else 'FAIL'}: {detail}")
    assert ok, f"criterion {num}: {detail}"


def _interior_state(model, count, seed, scale=0.3):
    """Start states with shortened velocities so unit-time arcs stay inside."""
    region = model.spec.distance_region()
    X, V = sample_state(model, count, seed=seed, region=region)
    return X, scale * V


# ---------------------------------------------------------------------------
# shared heavy artifact: reduced-count classification reports, all fixtures
# ---------------------------------------------------------------------------

CLASSIFY_CONFIG = ClassifyConfig(
    seed=0,
    berwald_samples=100,
    norm_geodesics=20,
    curvature_samples=100,
    busemann_pairs=200,
    holonomy_loops=5,
    kappa_samples=5,
)


@pytest.fixture(scope="module")
def classify_runs(specs):
    """Two independent classify passes per fixture (verdicts + raw JSON)."""
    runs = {}
    for name in ALL_FIXTURES:
        first = classify_report(specs[name], CLASSIFY_CONFIG)
        second = classify_report(specs[name], CLASSIFY_CONFIG)
        runs[name] = (first, first.to_json(), second.to_json())
    return runs


# ---------------------------------------------------------------------------
# criteria
# ---------------------------------------------------------------------------


def test_criterion_01_fundamental_tensor_oracle(models, capsys):
    worst = 0.0
    for name in ALL_FIXTURES:
        model = models[name]
        X, V = sample_state(model, 100, seed=101)
        g = fundamental_tensor_batch(model, X, V)
        for m in range(len(X)):
            x = X[m]
            H = fd_hessian(
                lambda v: float(model.F_batch(x, np.asarray(v))) ** 2, V[m]
            )
            rel = np.max(np.abs(g[m] - 0.5 * H)) / np.max(np.abs(g[m]))
            worst = max(worst, rel)
    report(
        capsys, 1, worst < 1e-6,
        f"jet g_v vs FD Hessian, 100 samples x {len(ALL_FIXTURES)} fixtures, "
        f"max rel err {worst:.2e} (tol 1e-6)",
    )


def test_criterion_02_constant_speed(specs, models, capsys):
    worst = 0.0
    for name in ALL_FIXTURES:
        X, V = _interior_state(models[name], 100, seed=102)
        for m in range(len(X)):
            trace = integrate_geodesic(specs[name], X[m], V[m], 1.0)
            worst = max(worst, trace.speed_drift())
    report(
        capsys, 2, worst < 1e-8,
        f"relative F(xdot) drift over 100 geodesics x {len(ALL_FIXTURES)} "
        f"fixtures, max {worst:.2e} (tol 1e-8)",
    )


def test_criterion_03_constant_curvature(specs, models, capsys):
    rng = np.random.default_rng(103)
    worst = 0.0
    for name, K_true in (("poincare", -1.0), ("sphere_chart", 1.0)):
        X, V = sample_state(models[name], 50, seed=103)
        for m in range(len(X)):
            w = rng.standard_normal(2)
            K = flag_curvature(specs[name], X[m], V[m], w)
            worst = max(worst, abs(K - K_true))
    report(
        capsys, 3, worst < 1e-5,
        f"flag curvature -1/+1 on poincare/sphere, 50 flags each, "
        f"max |K - K_true| {worst:.2e} (tol 1e-5)",
    )


def test_criterion_04_small_time_expansion(specs, capsys):
    details = []
    ok = True
    cases = {
        "poincare": ([0.0, 0.0], [0.5, 0.0], [0.0, 1.0]),
        "berwald_product": ([0.0, 0.0, 0.0], [0.2, 0.1, 0.2], [0.0, 1.0, 0.0]),
        "euclidean": ([0.0, 0.0], [0.5, 0.0], [0.0, 1.0]),
        "minkowski_quartic": ([0.0, 0.0], [0.5, 0.1], [0.0, 1.0]),
    }
    for name, (x0, v0, w) in cases.items():
        chk = small_time_expansion_check(specs[name], x0, v0, w)
        if chk.exact:
            details.append(f"{name}: exact")
        else:
            details.append(f"{name}: slope {chk.slope:.3f}")
            ok = ok and chk.slope >= 2.8
    report(capsys, 4, ok, "J - tW decay order: " + "; ".join(details) + " (min 2.8)")


def test_criterion_05_osculating_independence(specs, models, capsys):
    worst = 0.0
    for name in ALL_FIXTURES:
        X, V = _interior_state(models[name], 1, seed=105)
        trace = integrate_geodesic(specs[name], X[0], V[0], 1.0)
        worst = max(worst, osculating_cross_check(specs[name], trace))
    report(
        capsys, 5, worst < 1e-5,
        f"osculating Levi-Civita vs D_gamma on all fixtures, "
        f"max discrepancy {worst:.2e} (tol 1e-5)",
    )


def test_criterion_06_jacobi_cross_oracle(specs, models, capsys):
    worst_cross = 0.0
    worst_rhat = 0.0
    for name in ALL_FIXTURES:
        model = models[name]
        X, V = _interior_state(model, 1, seed=106, scale=0.4)
        x0, v0 = X[0], V[0]
        n = model.n
        w = np.zeros(n)
        w[1] = 1.0
        var = jacobi_by_variation(specs[name], x0, v0, w, T=1.0)
        trace = integrate_geodesic(specs[name], x0, v0, 1.0)
        ode = jacobi_by_ode(specs[name], trace, np.zeros(n), w)
        for t in (0.3, 0.6, 0.9):
            diff = np.max(np.abs(var.at(t)[2] - ode.at(t)[2]))
            worst_cross = max(worst_cross, diff)
        Rhat = reconstruct_jacobi_operator(specs[name], x0, v0, t0=0.5)
        x, v = trace.state(0.5)
        R = berwald_curvature_operator(specs[name], x, v)
        scale = max(np.max(np.abs(R)), 1.0)
        worst_rhat = max(worst_rhat, np.max(np.abs(Rhat - R)) / scale)
    ok = worst_cross < 1e-7 and worst_rhat < 1e-6
    report(
        capsys, 6, ok,
        f"variation vs ODE Jacobi {worst_cross:.2e} (tol 1e-7); "
        f"reconstructed Rhat vs formula {worst_rhat:.2e} (tol 1e-6)",
    )


def test_criterion_07_berwald_detection(models, capsys):
    worst_rel = 0.0
    for name in BERWALD_FIXTURES:
        model = models[name]
        X, V = sample_state(model, 50, seed=107)
        bmax, scale = berwald_scan(model, X, V)
        worst_rel = max(worst_rel, np.max(bmax) / max(np.max(scale), 1e-12))
    model = models["randers_sine"]
    X, V = sample_state(model, 50, seed=107)
    bmax, scale = berwald_scan(model, X, V)
    witness = np.max(bmax / np.maximum(scale, 1e-12))
    ok = worst_rel <= 1e-7 and witness >= 1e-2
    report(
        capsys, 7, ok,
        f"Berwald norm <= {worst_rel:.2e} x scale on Berwald fixtures "
        f"(tol 1e-7); randers_sine witness {witness:.2e} x scale (min 1e-2)",
    )


def test_criterion_08_norm_preservation(specs, capsys):
    worst = 0.0
    for name in BERWALD_FIXTURES:
        res = norm_preservation_test(
            specs[name], n_geodesics=100, n_vectors=5, seed=108
        )
        worst = max(worst, res.max_deviation)
    bad = norm_preservation_test(
        specs["randers_sine"], n_geodesics=100, n_vectors=5, seed=108
    )
    ok = worst <= 1e-6 and bad.max_deviation >= 1e-3
    report(
        capsys, 8, ok,
        f"F(W(t)) deviation {worst:.2e} on Berwald fixtures (tol 1e-6); "
        f"randers_sine witness {bad.max_deviation:.2e} (min 1e-3)",
    )


def test_criterion_09_binet_legendre(specs, models, capsys):
    g_id = binet_legendre_metric(specs["euclidean"], [0.0, 0.0])
    identity_err = float(np.max(np.abs(g_id - np.eye(2))))

    model = models["minkowski_quartic"]
    rng = np.random.default_rng(109)
    g_base = _bl_once(model, np.zeros(2), 1024)
    equi_err = 0.0
    for _ in range(20):
        A = np.eye(2) + 0.5 * rng.standard_normal((2, 2))

        class Shim:
            n = 2

            @staticmethod
            def F_batch(X, V, A=A):
                return model.F_batch(X, V @ A.T)

        g_pulled = _bl_once(Shim, np.zeros(2), 1024)
        equi_err = max(
            equi_err, float(np.max(np.abs(g_pulled - A.T @ g_base @ A)))
        )

    aux = binet_legendre_field(specs["berwald_product"])
    inv = transport_invariance_of_aux(specs["berwald_product"], aux, samples=10)
    ok = identity_err < 1e-6 and equi_err < 1e-4 and inv.max_drift <= 1e-6
    report(
        capsys, 9, ok,
        f"BL(euclidean) - I {identity_err:.2e} (tol 1e-6); equivariance over "
        f"20 maps {equi_err:.2e} (tol 1e-4); berwald_product transport drift "
        f"{inv.max_drift:.2e} (tol 1e-6)",
    )


def test_criterion_10_kappa_defect(specs, models, capsys):
    worst = 0.0
    for name in BERWALD_FIXTURES:
        aux = binet_legendre_field(specs[name])
        X, V = sample_state(models[name], 10, seed=110)
        for m in range(len(X)):
            kd = kappa_defect(specs[name], aux, X[m], V[m])
            worst = max(worst, float(np.linalg.norm(kd.kappa_perp)))
    aux_rs = binet_legendre_field(specs["randers_sine"])
    X, V = sample_state(models["randers_sine"], 10, seed=110)
    witness = max(
        float(np.linalg.norm(kappa_defect(specs["randers_sine"], aux_rs, X[m], V[m]).kappa_perp))
        for m in range(len(X))
    )
    k1 = kappa_defect(specs["randers_sine"], aux_rs, X[0], V[0]).kappa
    k2 = kappa_defect(specs["randers_sine"], aux_rs, X[0], 2.0 * V[0]).kappa
    hom = float(np.max(np.abs(k2 - 4.0 * k1)) / max(np.max(np.abs(k2)), 1e-30))
    ok = worst <= 1e-5 and witness >= 1e-3 and hom <= 1e-9
    report(
        capsys, 10, ok,
        f"kappa_perp {worst:.2e} on Berwald fixtures (tol 1e-5); randers_sine "
        f"witness {witness:.2e} (min 1e-3); kappa(2v)=4kappa(v) rel err "
        f"{hom:.2e} (tol 1e-9)",
    )


def test_criterion_11_holonomy(specs, models, capsys):
    mq = holonomy_sample(specs["minkowski_quartic"], [0.0, 0.0], n_loops=50, seed=111)
    mq_err = max(float(np.max(np.abs(L - np.eye(2)))) for L in mq.maps)

    p = np.array([0.0, 0.0])
    pc = holonomy_sample(specs["poincare"], p, n_loops=10, seed=111)
    g = fundamental_tensor_batch(models["poincare"], p, np.array([1.0, 0.0]))
    ortho_err = max(
        float(np.max(np.abs(L.T @ g @ L - g))) / float(np.max(np.abs(g)))
        for L in pc.maps
    )

    rs = holonomy_sample(specs["randers_sine"], [0.0, 0.0], n_loops=6, seed=111)
    rs_dev = float(np.max(rs.F_deviations))
    ok = mq_err <= 1e-8 and ortho_err <= 1e-6 and rs_dev >= 1e-3
    report(
        capsys, 11, ok,
        f"minkowski loops vs identity {mq_err:.2e} (tol 1e-8, 50 loops); "
        f"poincare g-orthogonality {ortho_err:.2e} (tol 1e-6); randers_sine "
        f"F-changing element {rs_dev:.2e} (min 1e-3)",
    )


def test_criterion_12_busemann_end_to_end(specs, classify_runs, capsys):
    details = []
    ok = True
    for name in ("minkowski_quartic", "poincare", "berwald_product"):
        conv = busemann_convexity_sample(
            specs[name], n_pairs=10000, tol=1e-7, seed=112
        )
        ok = ok and not conv.violated and conv.skipped == 0
        details.append(f"{name} margin {conv.worst_margin:.1e}")
    sphere = busemann_convexity_sample(
        specs["sphere_chart"], n_pairs=2000, tol=1e-7, seed=112
    )
    ok = ok and sphere.violated and sphere.worst_margin >= 1e-3
    details.append(f"sphere witness {sphere.worst_margin:.1e}")
    for name in ALL_FIXTURES:
        rep = classify_runs[name][0]
        ok = ok and rep.incomplete is None and rep.consistent
    details.append("classify consistent on all fixtures")
    report(
        capsys, 12, ok,
        "10^4 pairs both orderings, tol 1e-7: " + "; ".join(details),
    )


def test_criterion_13_convexity_witness(specs, capsys):
    w = jacobi_convexity_witness(specs["sphere_chart"], [0.1, 0.05], [0.3, 0.2])
    err = abs(w.second_difference - w.predicted)
    report(
        capsys, 13, err <= 1e-4,
        f"(d2/dt2) F(Jbar) = -lambda F(w): measured {w.second_difference:.6f}, "
        f"predicted {w.predicted:.6f}, err {err:.2e} (tol 1e-4)",
    )


def test_criterion_14_determinism(classify_runs, capsys):
    ok = all(first == second for _, first, second in classify_runs.values())
    report(
        capsys, 14, ok,
        f"classification reports byte-identical across two runs "
        f"(seed {CLASSIFY_CONFIG.seed}, {len(classify_runs)} fixtures)",
    )
