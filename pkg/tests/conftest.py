"""Shared fixtures: loaded metric specs and sampling helpers."""

from pathlib import Path

import numpy as np
import pytest

from finslerlab.metrics import as_model, load_spec

FIXTURE_DIR = Path(__file__).resolve().parent.parent / "fixtures"

ALL_FIXTURES = [
    "euclidean",
    "poincare",
    "sphere_chart",
    "minkowski_quartic",
    "randers_const",
    "randers_sine",
    "berwald_product",
]

# fixtures whose spray is quadratic in v (Berwald class)
BERWALD_FIXTURES = [
    "euclidean",
    "poincare",
    "sphere_chart",
    "minkowski_quartic",
    "randers_const",
    "berwald_product",
]


@pytest.fixture(scope="session")
def specs():
    return {name: load_spec(FIXTURE_DIR / f"{name}.json") for name in ALL_FIXTURES}


@pytest.fixture(scope="session")
def models(specs):
    return {name: as_model(spec) for name, spec in specs.items()}


def sample_state(model, count, seed=0, region=None):
    """(X, V) with X valid chart points and V of F-unit norm."""
    region = region or model.spec.distance_region()
    rng = np.random.default_rng(seed)
    X = np.empty((0, model.n))
    while len(X) < count:
        cand = region.sample(rng, count)
        cand = cand[model.point_valid_batch(cand)]
        X = np.concatenate([X, cand])
    X = X[:count]
    V = rng.standard_normal((count, model.n))
    V /= model.F_batch(X, V)[:, None]
    return X, V
