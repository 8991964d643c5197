from __future__ import annotations

import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ggqmom.model import (
    MVSDEModel,
    SDEModel,
    dawson_shiino,
    effective_drift,
    generator_apply,
    generator_apply_monomial,
    load_model,
    model_from_json,
    ornstein_uhlenbeck,
    validate,
)
from ggqmom.polynomial import Polynomial, eval_poly
from ggqmom.quadrature import QuadratureMeasure

coeffs = st.lists(st.floats(-2, 2), min_size=1, max_size=5)


def test_effective_drift_examples():
    m = dawson_shiino()
    assert effective_drift(m, QuadratureMeasure.point_mass(0.0)) == Polynomial([0, 0, 0, -1])
    assert effective_drift(m, QuadratureMeasure.point_mass(1.0)) == Polynomial([1, 0, 0, -1])
    assert effective_drift(m, QuadratureMeasure([-1, 1], [0.5, 0.5])) == Polynomial([0, 0, 0, -1])


def test_generator_examples():
    s = 0.8
    assert generator_apply_monomial(ornstein_uhlenbeck(1.0, s), 2) == Polynomial([s**2, 0, -2])
    assert generator_apply_monomial(dawson_shiino(0.5), 0).is_zero()
    frozen = SDEModel(Polynomial([0.3, 0, 0, -1]))
    assert generator_apply_monomial(frozen, 1) == frozen.drift


def test_generator_apply_matches_monomials():
    m = SDEModel(Polynomial([0.5, -1, 0, -1]), Polynomial([1, 0.2]), 0.7)
    p = Polynomial([1, -2, 0, 3])
    combo = Polynomial([0])
    for k, c in enumerate(p.coefficients):
        combo = combo + c * generator_apply_monomial(m, k)
    x = np.linspace(-2, 2, 9)
    np.testing.assert_allclose(eval_poly(generator_apply(m, p), x), eval_poly(combo, x), atol=1e-12)


def test_validation_examples():
    assert validate(ornstein_uhlenbeck(), -5, 5, 101).ok
    bad = validate(SDEModel(Polynomial([0, 0, 0, 1])))
    assert not bad.checks["confining_drift"]
    ds = validate(dawson_shiino())
    assert ds.checks["effective_potential_convex"] and ds.ok
    assert not validate(SDEModel(Polynomial([0, -1]), Polynomial([0, 1]))).checks["diffusion_positive"]
    concave = MVSDEModel(Polynomial([0, -1]), Polynomial([0, 1]))
    assert not validate(concave).checks["effective_potential_convex"]


def test_validation_report_json():
    rep = validate(ornstein_uhlenbeck())
    doc = rep.to_json()
    assert doc["ok"] and doc["grid"] == {"lo": -10.0, "hi": 10.0, "n": 401}
    with pytest.raises(ValueError):
        validate(ornstein_uhlenbeck(), 1, -1)


def test_serialization_round_trip(tmp_path):
    for m in (ornstein_uhlenbeck(2.0, 0.3), dawson_shiino(0.5, 0.8)):
        assert model_from_json(json.loads(json.dumps(m.to_json()))) == m
    path = tmp_path / "m.json"
    path.write_text(json.dumps(dawson_shiino().to_json()))
    assert load_model(path) == dawson_shiino()
    with pytest.raises(KeyError, match="sigma"):
        model_from_json({"kind": "sde", "drift": [0, -1]})
    with pytest.raises(KeyError, match="kind"):
        model_from_json({"drift": [0, -1], "sigma": 1})


@settings(max_examples=100, deadline=None)
@given(coeffs, st.lists(st.floats(0.2, 2), min_size=1, max_size=2), st.floats(0.1, 2), st.integers(0, 6),
       st.floats(-1.5, 1.5))
def test_generator_matches_finite_differences(a, b, sigma, k, x):
    m = SDEModel(Polynomial(a), Polynomial(b), sigma)
    h = 1e-3
    f = lambda y: y**k  # noqa: E731
    d1 = (f(x + h) - f(x - h)) / (2 * h)
    d2 = (f(x + h) - 2 * f(x) + f(x - h)) / h**2
    fd = eval_poly(m.drift, x) * d1 + 0.5 * sigma**2 * eval_poly(m.diffusion, x) ** 2 * d2
    exact = eval_poly(generator_apply_monomial(m, k), x)
    scale = (abs(eval_poly(m.drift, x) * k * x ** max(k - 1, 0))
             + 0.5 * sigma**2 * eval_poly(m.diffusion, x) ** 2 * k * (k - 1) * abs(x) ** max(k - 2, 0))
    assert abs(fd - exact) <= 1e-5 * max(scale, 1.0)


@settings(max_examples=100, deadline=None)
@given(coeffs, st.floats(-2, 2), st.floats(0.1, 0.9))
def test_effective_drift_depends_only_on_mean_field(vbar, theta, p):
    m = MVSDEModel(Polynomial(vbar), Polynomial([0, 1]), theta)
    # two different measures with the same mean 0.4
    mu1 = QuadratureMeasure.point_mass(0.4)
    mu2 = QuadratureMeasure.normalized([0.4 - (1 - p), 0.4 + p], [p, 1 - p])
    d1, d2 = effective_drift(m, mu1), effective_drift(m, mu2)
    np.testing.assert_allclose(d1.coefficients, d2.coefficients, atol=1e-15)
    assert (d1 + m.effective_potential_deriv).degree == 0
