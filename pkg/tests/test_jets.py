"""Taylor-jet engine against closed-form derivatives."""

import math

import numpy as np
import pytest

from finslerlab import jets


def test_directional_jet_matches_analytic_series():
    # exp(sin t) = 1 + t + t^2/2 + 0 t^3 - t^4/8 + ...
    f = lambda xs: jets.exp(jets.sin(xs[0]))
    jet = jets.directional_jet(f, [0.0], [1.0], 4)
    expected = [1.0, 1.0, 0.5, 0.0, -0.125]
    for k, want in enumerate(expected):
        assert jet.c[k] == pytest.approx(want, abs=1e-14)


def test_nth_directional_derivative_polynomial_exact():
    f = lambda xs: xs[0] ** 3 * xs[1] + 2.0 * xs[1] ** 2
    base = [1.0, 2.0]
    d = [0.5, -1.0]
    # analytic second directional derivative
    x, y = base
    a, b = d
    hess = np.array([[6 * x * y, 3 * x**2], [3 * x**2, 4.0]])
    expected = np.array([a, b]) @ hess @ np.array([a, b])
    got = jets.nth_directional_derivative(f, base, d, 2)
    assert got == pytest.approx(expected, rel=1e-13)


def test_partials_mixed_exact():
    f = lambda xs: xs[0] ** 2 * xs[1] ** 3
    # d^5 f / dx^2 dy^3 = 2 * 6 = 12 everywhere
    assert jets.partials(f, [0.7, -0.3], (2, 3)) == pytest.approx(12.0, rel=1e-12)
    # lower-order partial at a point
    assert jets.partials(f, [2.0, 1.0], (1, 1)) == pytest.approx(
        2 * 2.0 * 3 * 1.0**2, rel=1e-12
    )


def test_directional_table_reuse_consistent():
    f = lambda xs: jets.sqrt(1.0 + xs[0] ** 2 + xs[1] ** 2)
    base = [0.3, -0.2]
    table = jets.DirectionalTable(f, base)
    direct = jets.partials(f, base, (2, 1))
    cached = jets.partials(f, base, (2, 1), table=table)
    assert cached == pytest.approx(direct, rel=1e-13)


def test_elementary_identities():
    f = lambda xs: jets.log(jets.exp(xs[0]))
    jet = jets.directional_jet(f, [0.4], [1.0], 4)
    for k in range(5):
        want = {0: 0.4, 1: 1.0}.get(k, 0.0)
        assert jet.derivative(k) == pytest.approx(want, abs=1e-12)
    g = lambda xs: jets.sin(xs[0]) ** 2 + jets.cos(xs[0]) ** 2
    assert jets.nth_directional_derivative(g, [1.1], [1.0], 3) == pytest.approx(
        0.0, abs=1e-12
    )
