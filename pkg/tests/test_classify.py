"""Rigidity criteria: norm preservation, Binet-Legendre, kappa, holonomy,
Busemann convexity, and the aggregated classification report."""

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
from finslerlab.metrics import as_model


SMALL = ClassifyConfig(
    seed=0,
    berwald_samples=40,
    norm_geodesics=10,
    curvature_samples=60,
    busemann_pairs=60,
    holonomy_loops=4,
    kappa_samples=4,
)


def test_binet_legendre_euclidean_identity(specs):
    g = binet_legendre_metric(specs["euclidean"], [0.0, 0.0])
    assert np.max(np.abs(g - np.eye(2))) < 1e-10


def test_binet_legendre_quartic_properties(specs):
    g = binet_legendre_metric(specs["minkowski_quartic"], [0.1, 0.2])
    assert np.allclose(g, g.T)
    assert np.linalg.eigvalsh(g)[0] > 0
    # the quartic norm is symmetric under coordinate swap and sign flips,
    # so its canonical metric must be a multiple of the identity
    assert abs(g[0, 1]) < 1e-10
    assert g[0, 0] == pytest.approx(g[1, 1], rel=1e-10)


def test_binet_legendre_equivariance_single_map(models):
    """F'(v) = F(Av) implies BL[F'] = A^T BL[F] A."""
    model = models["minkowski_quartic"]
    A = np.array([[1.1, 0.3], [-0.2, 0.9]])
    x = np.zeros(2)

    class Shim:
        n = 2

        @staticmethod
        def F_batch(X, V):
            return model.F_batch(X, V @ A.T)

    g = _bl_once(model, x, 256)
    g_pulled = _bl_once(Shim, x, 256)
    assert np.max(np.abs(g_pulled - A.T @ g @ A)) < 1e-8


def test_norm_preservation_split(specs):
    ok = norm_preservation_test(specs["berwald_product"], n_geodesics=15, seed=1)
    assert ok.max_deviation < 1e-6
    bad = norm_preservation_test(specs["randers_sine"], n_geodesics=15, seed=1)
    assert bad.max_deviation > 1e-3
    assert "x0" in bad.witness


def test_kappa_defect_split(specs):
    aux_pc = binet_legendre_field(specs["poincare"])
    kd = kappa_defect(specs["poincare"], aux_pc, [0.1, 0.05], [0.3, 0.2])
    assert np.linalg.norm(kd.kappa_perp) < 1e-5
    aux_rs = binet_legendre_field(specs["randers_sine"])
    kd = kappa_defect(specs["randers_sine"], aux_rs, [0.3, 0.1], [0.3, 0.2])
    assert np.linalg.norm(kd.kappa_perp) > 1e-3


def test_kappa_homogeneity(specs):
    aux = binet_legendre_field(specs["randers_sine"])
    v = np.array([0.25, 0.15])
    k1 = kappa_defect(specs["randers_sine"], aux, [0.2, 0.0], v).kappa
    k2 = kappa_defect(specs["randers_sine"], aux, [0.2, 0.0], 2.0 * v).kappa
    assert np.allclose(k2, 4.0 * k1, rtol=1e-9)


def test_transport_invariance_on_berwald_product(specs):
    aux = binet_legendre_field(specs["berwald_product"])
    res = transport_invariance_of_aux(
        specs["berwald_product"], aux, samples=6, seed=2
    )
    assert res.max_drift < 1e-6
    assert res.max_kappa_inner < 1e-6


def test_holonomy_identity_on_minkowski(specs):
    hol = holonomy_sample(specs["minkowski_quartic"], [0.0, 0.0], n_loops=5, seed=3)
    for L in hol.maps:
        assert np.max(np.abs(L - np.eye(2))) < 1e-10
    assert np.max(hol.F_deviations) < 1e-10
    assert hol.composition_error < 1e-8


def test_holonomy_f_changing_on_randers_sine(specs):
    hol = holonomy_sample(specs["randers_sine"], [0.0, 0.0], n_loops=6, seed=4)
    assert np.max(hol.F_deviations) > 1e-3


def test_busemann_sampler_verdicts(specs):
    clean = busemann_convexity_sample(specs["minkowski_quartic"], n_pairs=80, seed=5)
    assert not clean.violated
    assert clean.worst_margin <= 1e-7
    sphere = busemann_convexity_sample(specs["sphere_chart"], n_pairs=80, seed=5)
    assert sphere.violated
    assert sphere.worst_margin > 1e-3
    assert "p1" in sphere.witness or len(sphere.witness) > 0


def test_jacobi_convexity_witness_split(specs):
    assert jacobi_convexity_witness(specs["poincare"], [0.1, 0.0], [0.3, 0.2]) is None
    w = jacobi_convexity_witness(specs["sphere_chart"], [0.1, 0.05], [0.3, 0.2])
    assert w is not None
    assert w.eigenvalue > 0
    assert w.second_difference == pytest.approx(w.predicted, abs=1e-4)


def test_classify_report_consistent_on_quartic(specs):
    rep = classify_report(specs["minkowski_quartic"], SMALL)
    assert rep.verdicts["berwald"]
    assert rep.verdicts["flag_nonpositive"]
    assert rep.verdicts["busemann_sampled"] == "pass"
    assert rep.consistent
    assert rep.incomplete is None


def test_classify_report_randers_sine_negative(specs):
    rep = classify_report(specs["randers_sine"], SMALL)
    assert not rep.verdicts["berwald"]
    assert rep.verdicts["busemann_sampled"] == "violated"
    assert rep.consistent
    assert "berwald" in rep.witnesses


def test_classify_report_deterministic(specs):
    a = classify_report(specs["minkowski_quartic"], SMALL).to_json()
    b = classify_report(specs["minkowski_quartic"], SMALL).to_json()
    assert a == b
