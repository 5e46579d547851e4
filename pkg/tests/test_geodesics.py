"""Geodesic IVP, exponential map, and the shooting BVP."""

import numpy as np
import pytest

from finslerlab.batch import distance_batch
from finslerlab.errors import DomainError
from finslerlab.geodesics import (
    exp_map,
    integrate_geodesic,
    local_distance,
)

from conftest import ALL_FIXTURES, sample_state


def test_poincare_exp_closed_form(specs):
    """Unit-speed radial geodesic from the origin reaches tanh(t/2).

    The disk metric g = 4 delta / (1 - |x|^2)^2 has F((0,0), (0.5, 0)) = 1,
    and the radial geodesic is t -> (tanh(t/2), 0).
    """
    end = exp_map(specs["poincare"], [0.0, 0.0], [0.5, 0.0])
    assert end[0] == pytest.approx(np.tanh(0.5), abs=1e-9)
    assert end[1] == pytest.approx(0.0, abs=1e-12)


@pytest.mark.parametrize("name", ALL_FIXTURES)
def test_constant_speed(models, specs, name):
    model = models[name]
    X, V = sample_state(model, 5, seed=21)
    for m in range(len(X)):
        trace = integrate_geodesic(specs[name], X[m], 0.4 * V[m], 1.0)
        assert trace.speed_drift() < 1e-8


def test_chart_exit_detected(specs):
    trace = integrate_geodesic(specs["poincare"], [0.0, 0.0], [3.0, 0.0], 1.0)
    assert trace.status == "chart_exit"
    assert trace.t_end < 1.0
    with pytest.raises(DomainError):
        exp_map(specs["poincare"], [0.0, 0.0], [3.0, 0.0])


def test_euclidean_distance_exact(specs):
    p = np.array([0.1, -0.2])
    q = np.array([0.5, 0.3])
    res = local_distance(specs["euclidean"], p, q)
    assert res.value == pytest.approx(np.linalg.norm(q - p), rel=1e-12)


def test_randers_const_distance_and_asymmetry(specs):
    """Straight-line geodesics: d(p, q) = |q - p| + b.(q - p)."""
    b = np.array([0.5, 0.0])
    p = np.array([-0.3, 0.2])
    q = np.array([0.6, -0.4])
    fwd = local_distance(specs["randers_const"], p, q).value
    bwd = local_distance(specs["randers_const"], q, p).value
    assert fwd == pytest.approx(np.linalg.norm(q - p) + b @ (q - p), rel=1e-12)
    assert fwd - bwd == pytest.approx(2.0 * b @ (q - p), rel=1e-12)


def test_poincare_distance_closed_form(specs):
    """d(0, x) = 2 artanh |x| for the factor-4 disk metric."""
    q = np.array([0.3, 0.0])
    res = local_distance(specs["poincare"], [0.0, 0.0], q)
    assert res.value == pytest.approx(2.0 * np.arctanh(0.3), abs=1e-8)
    assert res.converged


def test_distance_shooting_consistent_with_exp(specs):
    p = np.array([0.1, -0.1])
    q = np.array([-0.2, 0.25])
    res = local_distance(specs["randers_sine"], p, q)
    trace = integrate_geodesic(specs["randers_sine"], p, res.v0, 1.0)
    assert np.max(np.abs(trace.endpoint() - q)) < 1e-8
    # the connecting speed equals the distance (constant-speed geodesic)
    assert trace.speed()[0] == pytest.approx(res.value, rel=1e-9)


def test_distance_rejects_outside_region(specs):
    with pytest.raises(DomainError):
        local_distance(specs["poincare"], [0.0, 0.0], [0.69, 0.69])


def test_distance_batch_matches_scalar(specs, models):
    model = models["poincare"]
    rng = np.random.default_rng(31)
    P = rng.uniform(-0.3, 0.3, (6, 2))
    Q = rng.uniform(-0.3, 0.3, (6, 2))
    d, V0, conv, _ = distance_batch(model, P, Q)
    assert conv.all()
    for m in range(len(P)):
        res = local_distance(specs["poincare"], P[m], Q[m])
        assert d[m] == pytest.approx(res.value, abs=1e-8)


def test_trace_csv_contract(tmp_path, specs):
    trace = integrate_geodesic(specs["poincare"], [0.0, 0.0], [0.5, 0.1], 1.0)
    out = tmp_path / "trace.csv"
    trace.to_csv(out)
    rows = out.read_text().strip().splitlines()
    assert rows[0] == "t,x1,x2,v1,v2,F"
    data = np.loadtxt(rows[1:], delimiter=",")
    assert data.shape[1] == 6
    # full-precision round trip of the final state
    assert data[-1, 1] == trace.x[-1][0]
