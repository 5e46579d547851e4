"""Covariant derivative, parallel transport, Jacobi fields, osculating check."""

import numpy as np
import pytest

from finslerlab.geodesics import integrate_geodesic
from finslerlab.spray import fundamental_tensor_batch
from finslerlab.transport import (
    covariant_derivative,
    jacobi_by_ode,
    jacobi_by_variation,
    jacobi_residual,
    osculating_cross_check,
    parallel_transport,
    reconstruct_jacobi_operator,
    small_time_expansion_check,
)

from finslerlab.spray import berwald_curvature_operator


def test_velocity_field_is_parallel(specs):
    """D_gamma of the velocity field vanishes along any geodesic."""
    for name in ("poincare", "randers_sine"):
        trace = integrate_geodesic(specs[name], [0.1, 0.0], [0.3, 0.2], 1.0)
        dw = covariant_derivative(specs[name], trace, lambda t: trace.v_at(t))
        assert np.max(np.abs(dw)) < 1e-7, name


def test_parallel_frame_residual_and_riemannian_norms(specs):
    trace = integrate_geodesic(specs["poincare"], [0.0, 0.1], [0.4, -0.1], 1.0)
    frame = parallel_transport(specs["poincare"], trace, np.eye(2))
    assert frame.residual() < 1e-6
    # Riemannian case: linear transport is Levi-Civita transport, so the
    # g-inner products of the frame are constant along the geodesic
    g = fundamental_tensor_batch(specs["poincare"], trace.x, trace.v)
    grams = np.einsum("mik,mij,mjl->mkl", frame.W, g, frame.W)
    assert np.max(np.abs(grams - grams[0])) < 1e-8


def test_transport_norm_drift_nonzero_for_randers_sine(specs):
    trace = integrate_geodesic(specs["randers_sine"], [0.0, 0.0], [0.4, 0.1], 1.0)
    frame = parallel_transport(specs["randers_sine"], trace, np.array([0.0, 1.0]))
    assert frame.norm_drift()[0] > 1e-4  # linear transport does not preserve F


def test_jacobi_variation_vs_ode(specs):
    for name in ("poincare", "randers_sine", "berwald_product"):
        n = 3 if name == "berwald_product" else 2
        x0 = np.zeros(n)
        v0 = np.full(n, 0.3)
        w = np.zeros(n)
        w[1] = 1.0
        var = jacobi_by_variation(specs[name], x0, v0, w, T=1.0)
        trace = integrate_geodesic(specs[name], x0, v0, 1.0)
        ode = jacobi_by_ode(specs[name], trace, np.zeros(n), w)
        for t in (0.25, 0.6, 0.95):
            J1 = var.at(t)[2]
            J2 = ode.at(t)[2]
            assert np.max(np.abs(J1 - J2)) < 1e-8, name


def test_jacobi_residual_small(specs):
    var = jacobi_by_variation(
        specs["poincare"], [0.0, 0.0], [0.4, 0.1], [0.0, 1.0], T=1.0
    )
    assert jacobi_residual(var) < 1e-6


def test_poincare_jacobi_matches_sinh(specs):
    """K = -1: a normal Jacobi field with |DJ(0)|_g = 1 grows as sinh(t)."""
    x0 = np.array([0.0, 0.0])
    v0 = np.array([0.5, 0.0])  # F-unit at the origin
    w = np.array([0.0, 0.5])  # g-unit, g-orthogonal to v0
    var = jacobi_by_variation(specs["poincare"], x0, v0, w, T=2.0)
    for t in (0.5, 1.0, 1.8):
        x, v, J = var.at(t)[:3]
        g = fundamental_tensor_batch(specs["poincare"], x, v)
        norm = float(np.sqrt(J[:, 0] @ g @ J[:, 0]))
        assert norm == pytest.approx(np.sinh(t), rel=1e-7)


def test_reconstructed_operator_matches_formula(specs):
    x0 = np.array([0.05, -0.1])
    v0 = np.array([0.4, 0.3])
    Rhat = reconstruct_jacobi_operator(specs["randers_sine"], x0, v0, t0=0.5)
    trace = integrate_geodesic(specs["randers_sine"], x0, v0, 0.8)
    x, v = trace.state(0.5)
    R = berwald_curvature_operator(specs["randers_sine"], x, v)
    assert np.max(np.abs(Rhat - R)) < 1e-6


def test_small_time_expansion(specs):
    flat = small_time_expansion_check(
        specs["euclidean"], [0.0, 0.0], [0.5, 0.0], [0.0, 1.0]
    )
    assert flat.exact
    curved = small_time_expansion_check(
        specs["poincare"], [0.0, 0.0], [0.5, 0.0], [0.0, 1.0]
    )
    assert not curved.exact
    assert curved.slope >= 2.8


def test_osculating_cross_check_small(specs):
    for name in ("poincare", "randers_sine"):
        trace = integrate_geodesic(specs[name], [0.05, 0.0], [0.3, 0.15], 1.0)
        worst = osculating_cross_check(specs[name], trace, sample_count=3)
        assert worst < 1e-5, name


def test_frame_csv_contract(tmp_path, specs):
    trace = integrate_geodesic(specs["poincare"], [0.0, 0.0], [0.4, 0.0], 1.0)
    frame = parallel_transport(specs["poincare"], trace, np.eye(2))
    out = tmp_path / "frame.csv"
    frame.to_csv(out)
    header = out.read_text().splitlines()[0]
    assert header.startswith("t,")
    assert "F_W1" in header
