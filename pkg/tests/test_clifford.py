from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from numpy.testing import assert_allclose

from spherical_pi.clifford import (
    DimensionError,
    Multivector,
    blade_product,
    left_mult_dense,
    left_mult_matrix,
    multivector_from_json,
    multivector_to_json,
)


def mv(n):
    coeffs = st.lists(st.integers(-6, 6), min_size=1 << n, max_size=1 << n)
    return coeffs.map(lambda c: Multivector(n, {m: Fraction(v) for m, v in enumerate(c)}))


def test_generators_square_to_minus_one():
    for i in range(1, 4):
        e = Multivector.basis(3, i)
        assert e * e == Multivector.scalar(3, -1)


def test_generators_anticommute():
    e1, e2 = Multivector.basis(3, 1), Multivector.basis(3, 2)
    assert e1 * e2 == -(e2 * e1)
    assert e1 * e2 == Multivector.basis(3, 1, 2)


def test_blade_product_e12_squared():
    s, m = blade_product(0b11, 0b11)
    assert (s, m) == (-1, 0)


@given(mv(3), mv(3), mv(3))
@settings(max_examples=40, deadline=None)
def test_associative(a, b, c):
    assert (a * b) * c == a * (b * c)


@given(mv(3), mv(3))
@settings(max_examples=40, deadline=None)
def test_involution_laws(a, b):
    assert (a * b).reversion() == b.reversion() * a.reversion()
    assert (a * b).conjugation() == b.conjugation() * a.conjugation()
    # bar is the grade involution and keeps product order
    assert (a * b).bar() == a.bar() * b.bar()


@given(st.lists(st.integers(-9, 9), min_size=4, max_size=4))
def test_paravector_norm(xs):
    x = Multivector.paravector([Fraction(v) for v in xs])
    assert x.bar() * x == Multivector.scalar(3, sum(v * v for v in xs))


def test_dimension_mismatch():
    with pytest.raises(DimensionError):
        Multivector.basis(2, 1) * Multivector.basis(3, 1)
    with pytest.raises(DimensionError):
        Multivector(2, {0b100: 1})


def test_left_mult_matrix_matches_product():
    rng = np.random.default_rng(1)
    a = Multivector.from_array(3, rng.normal(size=8))
    b = Multivector.from_array(3, rng.normal(size=8))
    assert_allclose(left_mult_dense(a) @ b.to_array(), (a * b).to_array(), atol=1e-13)
    # generator matrices are orthogonal
    for m in range(8):
        L = left_mult_matrix(3, m)
        assert_allclose(L @ L.T, np.eye(8), atol=0)


def test_json_round_trip_exact():
    a = Multivector(3, {0: Fraction(1, 3), 0b101: -2, 0b111: Fraction(5, 7)})
    assert multivector_from_json(multivector_to_json(a)) == a
