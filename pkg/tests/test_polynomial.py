import math
from fractions import Fraction

import pytest
from numpy.testing import assert_allclose

from spherical_pi.clifford import Multivector
from spherical_pi.polynomial import (
    IDENTITY_CHECKS,
    CliffordPolynomial,
    ContractError,
    apply_diff_op,
    exact_identity_residuals,
    harmonic_decompose,
    mult_paravector,
    polynomial_from_json,
    polynomial_to_json,
    reassemble,
    sphere_area,
    sphere_inner_product,
)


def var(n, j, c=1):
    return CliffordPolynomial.variable(n, j, c)


@pytest.mark.parametrize("n", [2, 3])
def test_exact_identities_vanish(n):
    res = exact_identity_residuals(n, degree=5, trials=4, seed=n)
    assert set(res) == set(IDENTITY_CHECKS)
    assert all(v == 0 for v in res.values())


def test_dirac_of_paravector_variable():
    # D0 x = 1 - n (each e_j d_j x_j e_j contributes e_j^2 = -1)
    for n in (2, 3):
        x = CliffordPolynomial.x(n)
        assert apply_diff_op("D0", x) == CliffordPolynomial.constant(1 - n, n)
        assert apply_diff_op("D0bar", x) == CliffordPolynomial.constant(1 + n, n)


def test_gamma0_kills_radial():
    r2 = CliffordPolynomial.r2(3)
    assert apply_diff_op("Gamma0", r2).is_zero()
    assert apply_diff_op("Gamma0bar", r2).is_zero()


def test_euler_operator_scales_by_degree():
    p = var(2, 0) * var(2, 1) * var(2, 2, Multivector.basis(2, 1))
    assert apply_diff_op("Er", p) == p * 3


def test_fischer_decomposition_round_trip():
    p = var(2, 0) * var(2, 0) + var(2, 1) * var(2, 2, Multivector.basis(2, 1, 2))
    comps = harmonic_decompose(p)
    assert set(comps) == {2, 0}
    for h in comps.values():
        assert apply_diff_op("Laplacian", h).is_zero()
    assert reassemble(comps, 2, 2) == p


def test_fischer_rejects_inhomogeneous():
    with pytest.raises(ContractError):
        harmonic_decompose(var(2, 0) + CliffordPolynomial.constant(1, 2))


def test_sphere_areas():
    assert_allclose([sphere_area(1), sphere_area(2), sphere_area(3)], [2 * math.pi, 4 * math.pi, 2 * math.pi**2])


def test_sphere_inner_product_moments():
    # mean of x_0^2 over S^n is 1/(n+1)
    for n in (2, 3):
        x0 = var(n, 0)
        r = sphere_inner_product(x0, x0, exact=True)
        assert r == Multivector.scalar(n, Fraction(1, n + 1))
    # odd moments vanish
    assert sphere_inner_product(var(2, 0), CliffordPolynomial.constant(1, 2), exact=True).is_zero()


def test_inner_product_scalar_part_positive():
    e12 = Multivector.basis(2, 1, 2)
    p = var(2, 1, e12) + CliffordPolynomial.constant(Multivector.basis(2, 2))
    assert float(sphere_inner_product(p, p).scalar_part) > 0


def test_mult_paravector_on_sphere():
    one = CliffordPolynomial.constant(1, 2)
    w = mult_paravector("w", one)
    assert mult_paravector("wbar", w) == CliffordPolynomial.r2(2)


def test_polynomial_json_round_trip():
    p = var(3, 1, Fraction(2, 3)) * var(3, 2, Multivector.basis(3, 1, 3))
    assert polynomial_from_json(polynomial_to_json(p)) == p


def test_inner_product_of_generators():
    e1, e2 = (CliffordPolynomial.constant(Multivector.basis(2, i)) for i in (1, 2))
    r = sphere_inner_product(e1, e2)
    assert_allclose(r.to_array(), [0, 0, 0, -4 * math.pi], atol=1e-12)


def test_inner_product_sesquilinear():
    a = Multivector(2, {0: Fraction(1), 0b11: Fraction(2)})
    b = Multivector(2, {0b01: Fraction(3), 0b10: Fraction(-1)})
    u, v = var(2, 0) + var(2, 1, Multivector.basis(2, 2)), var(2, 0, Multivector.basis(2, 1, 2))
    lhs = sphere_inner_product(u * a, v * b, exact=True)
    rhs = a.conjugation() * sphere_inner_product(u, v, exact=True) * b
    assert lhs == rhs


def test_fischer_examples():
    x0 = var(2, 0)
    comps = harmonic_decompose(x0 * x0)
    assert comps[0] == CliffordPolynomial.constant(Fraction(1, 3), 2)
    assert comps[2] == x0 * x0 - CliffordPolynomial.r2(2) * Fraction(1, 3)
    assert harmonic_decompose(CliffordPolynomial.r2(2) * x0) == {1: x0}


def test_gamma0_commutes_with_r2():
    p = var(3, 1) * var(3, 2, Multivector.basis(3, 1, 3)) + var(3, 0, Multivector.basis(3, 2))
    r2 = CliffordPolynomial.r2(3)
    assert apply_diff_op("Gamma0", r2 * p) == r2 * apply_diff_op("Gamma0", p)
