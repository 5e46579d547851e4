"""Spec handling, norm evaluation, and the Randers closed-form kernel."""

import numpy as np
import pytest

import finslerlab.metrics as fm
from finslerlab.errors import SpecError
from finslerlab.metrics import (
    MetricSpec,
    as_model,
    eval_norm,
    load_spec,
    save_spec,
    spec_from_dict,
    spec_to_dict,
    validate_spec,
)
from finslerlab.spray import _spray_jac_generic

from conftest import ALL_FIXTURES, FIXTURE_DIR, sample_state


@pytest.mark.parametrize("name", ALL_FIXTURES)
def test_spec_round_trip(tmp_path, name):
    spec = load_spec(FIXTURE_DIR / f"{name}.json")
    out = tmp_path / "copy.json"
    save_spec(spec, out)
    again = load_spec(out)
    assert spec_to_dict(again) == spec_to_dict(spec)


@pytest.mark.parametrize("name", ALL_FIXTURES)
def test_validate_spec_passes(specs, name):
    report = validate_spec(specs[name], sample_count=40, seed=3)
    assert report.passed, report.summary()


@pytest.mark.parametrize("name", ALL_FIXTURES)
def test_norm_homogeneity_and_positivity(models, name):
    model = models[name]
    X, V = sample_state(model, 30, seed=7)
    F1 = model.F_batch(X, V)
    F2 = model.F_batch(X, 2.0 * V)
    assert np.all(F1 > 0)
    assert np.allclose(F2, 2.0 * F1, rtol=1e-12)


def test_randers_non_reversible(specs):
    x = np.array([0.4, 0.1])
    v = np.array([0.3, 0.5])
    fwd = eval_norm(specs["randers_sine"], x, v)
    bwd = eval_norm(specs["randers_sine"], x, -v)
    assert abs(fwd - bwd) > 1e-3


def test_riemannian_reversible(specs):
    x = np.array([0.2, -0.1])
    v = np.array([0.3, 0.5])
    fwd = eval_norm(specs["poincare"], x, v)
    bwd = eval_norm(specs["poincare"], x, -v)
    assert fwd == pytest.approx(bwd, rel=1e-14)


def test_poincare_point_validity(models):
    model = models["poincare"]
    assert model.point_valid(np.array([0.0, 0.0]))
    assert not model.point_valid(np.array([0.8, 0.8]))


def test_bad_specs_rejected():
    with pytest.raises(SpecError):
        MetricSpec(
            family="no_such_family",
            dimension=2,
            params={},
            chart_domain=fm.Box(lo=(-1, -1), hi=(1, 1)),
            convex_box=fm.Box(lo=(-0.5, -0.5), hi=(0.5, 0.5)),
        )
    with pytest.raises(SpecError):
        as_model(
            MetricSpec(
                family="randers",
                dimension=2,
                params={"base": "euclidean"},
                chart_domain=fm.Box(lo=(-1, -1), hi=(1, 1)),
                convex_box=fm.Box(lo=(-0.5, -0.5), hi=(0.5, 0.5)),
            )
        )


def test_randers_kernel_matches_jet_path(models):
    """Closed-form sine-drift spray kernel vs the generic jet engine."""
    model = models["randers_sine"]
    X, V = sample_state(model, 25, seed=11)
    G_k, N_k, Gx_k = model.spray_jac_batch(X, V)
    G_j, N_j, Gx_j = _spray_jac_generic(model, X, V)
    assert np.max(np.abs(G_k - G_j)) < 1e-12
    assert np.max(np.abs(N_k - N_j)) < 1e-12
    assert np.max(np.abs(Gx_k - Gx_j)) < 1e-12
    assert np.max(np.abs(model.spray_batch(X, V) - G_j)) < 1e-12


def test_spec_from_dict_rejects_bad_dimension():
    d = spec_to_dict(load_spec(FIXTURE_DIR / "euclidean.json"))
    d["dimension"] = -1
    with pytest.raises(SpecError):
        spec_from_dict(d)
