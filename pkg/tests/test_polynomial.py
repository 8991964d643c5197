from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ggqmom.polynomial import (
    Polynomial,
    antiderivative,
    derivative,
    distinct_real_roots,
    eval_poly,
    hermite,
    real_roots,
)

coeff = st.floats(-2.0, 2.0, allow_nan=False)


def test_eval_examples():
    assert eval_poly(Polynomial([-1, 0, 1]), 2.0) == 3.0
    assert eval_poly(Polynomial(), 5.0) == 0.0
    assert abs(eval_poly(Polynomial([0, -3, 0, 1]), math.sqrt(3))) < 1e-12


def test_eval_vectorized():
    p = Polynomial([1, 2, 3])
    x = np.array([0.0, 1.0, -1.0])
    np.testing.assert_array_equal(p(x), [1.0, 6.0, 2.0])


def test_canonical_trimming():
    p = Polynomial([1.0, 2.0, 0.0, 0.0])
    assert p.coefficients == (1.0, 2.0)
    assert p.degree == 1
    assert Polynomial([0.0, 0.0]).is_zero()
    # only exact zeros are trimmed
    assert Polynomial([1.0, 1e-300]).degree == 1


def test_derivative_examples():
    assert derivative(Polynomial([-1, 0, 1])).coefficients == (0.0, 2.0)
    assert derivative(Polynomial([7])).is_zero()
    assert derivative(Polynomial([0, 0, 0, 0, 0.25])).coefficients == (0.0, 0.0, 0.0, 1.0)
    assert derivative(Polynomial([1, 1, 1]), 3).is_zero()


def test_antiderivative_inverts_derivative():
    p = Polynomial([3, -1, 4, 1])
    assert derivative(antiderivative(p)) == p
    assert eval_poly(antiderivative(p), 0.0) == 0.0


def test_hermite_examples():
    assert hermite(0).coefficients == (1.0,)
    assert hermite(2).coefficients == (-1.0, 0.0, 1.0)
    assert hermite(3).coefficients == (0.0, -3.0, 0.0, 1.0)
    with pytest.raises(ValueError):
        hermite(-1)


def test_hermite_matches_numpy():
    from numpy.polynomial import hermite_e

    for k in range(9):
        ref = hermite_e.herme2poly([0] * k + [1])
        np.testing.assert_allclose(hermite(k).coefficients, ref)


def test_real_roots_examples():
    np.testing.assert_allclose(real_roots(Polynomial([-1, 0, 1])), [-1, 1])
    np.testing.assert_allclose(real_roots(Polynomial([0, -3, 0, 1])), [-math.sqrt(3), 0, math.sqrt(3)],
                               atol=1e-14)
    np.testing.assert_allclose(real_roots(Polynomial([0, 1, 0, -1])), [-1, 0, 1], atol=1e-14)


def test_real_roots_drops_complex_and_rejects_constants():
    assert real_roots(Polynomial([1, 0, 1])) == []
    with pytest.raises(ValueError, match="constant"):
        real_roots(Polynomial([3]))


def test_distinct_roots_merges_multiplicity():
    p = Polynomial([0, 0, 0, 1]) * Polynomial([-1, 1])  # x^3 (x - 1)
    roots = distinct_real_roots(p)
    assert [m for _, m in roots] == [3, 1]
    assert abs(roots[0][0]) < 1e-4 and abs(roots[1][0] - 1) < 1e-10


def test_arithmetic_and_json():
    p, q = Polynomial([1, 1]), Polynomial([-1, 1])
    assert (p * q).coefficients == (-1.0, 0.0, 1.0)
    assert (p - p).is_zero()
    assert (2 * p + 1).coefficients == (3.0, 2.0)
    assert (p**3).degree == 3
    assert Polynomial.from_json(p.to_json()) == p
    assert Polynomial([0, 1, 0, -1]).is_odd() and not Polynomial([1, 1]).is_odd()
    assert Polynomial([1, 0, 2]).is_even()


@settings(max_examples=200, deadline=None)
@given(st.lists(coeff, min_size=1, max_size=7), st.floats(-3.0, 3.0))
def test_derivative_matches_central_difference(cs, x):
    p = Polynomial(cs)
    h = 1e-5
    fd = (eval_poly(p, x + h) - eval_poly(p, x - h)) / (2 * h)
    exact = eval_poly(derivative(p), x)
    # truncation error O(h^2 |p'''|) plus rounding error O(eps sum|c||x|^k / h)
    noise = sum(abs(c) * (k + 1) ** 3 * 3.0**k for k, c in enumerate(cs))
    assert abs(fd - exact) <= 1e-6 * abs(exact) + 1e-9 * noise


@pytest.mark.parametrize("k", range(1, 11))
def test_hermite_roots_count_and_symmetry(k):
    r = np.array(real_roots(hermite(k)))
    assert r.size == k
    np.testing.assert_allclose(r, -r[::-1], atol=1e-10)
    if k % 2:
        assert abs(r[k // 2]) < 1e-10


@settings(max_examples=200, deadline=None)
@given(st.lists(coeff, min_size=2, max_size=8))
def test_real_roots_sorted_and_are_roots(cs):
    p = Polynomial(cs)
    if p.degree < 1 or abs(p.coefficients[-1]) < 1e-3:
        return
    r = real_roots(p)
    assert all(a <= b for a, b in zip(r, r[1:]))
    for root in r:
        # residual judged against the size of the terms; clustered roots are exempt
        terms = sum(abs(c) * abs(root) ** k for k, c in enumerate(p.coefficients))
        assert abs(eval_poly(p, root)) <= 1e-10 * terms or abs(eval_poly(derivative(p), root)) < 1e-3
