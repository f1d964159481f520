import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from spherical_pi.operators import spectral_values
from spherical_pi.clifford import Multivector
from spherical_pi.polynomial import CliffordPolynomial
from spherical_pi.quadrature import (
    CapMesh,
    MeshDomainError,
    MeshFunction,
    PiCapOperator,
    borel_pompeiu_residual,
    boundary_transform_quad,
    build_cap_mesh,
    build_sphere_mesh,
    cauchy_kernel,
    cauchy_transform_quad,
    cl_mul,
    conjugate_dirac_of_cauchy,
    convergence_csv,
    interior_targets,
    kernel_mass,
    pi_s0_quad,
    polynomial_values,
    sphere_transform_quad,
)

ONE = CliffordPolynomial.constant(1, 2)


def test_cl_mul_matches_multivector():
    rng = np.random.default_rng(0)
    a, b = rng.normal(size=(2, 4))
    ref = (Multivector.from_array(2, a) * Multivector.from_array(2, b)).to_array()
    assert_allclose(cl_mul(a[None], b[None], 2)[0], ref, atol=1e-14)


def test_cap_area_second_order():
    errs = [abs(build_cap_mesh(math.pi / 3, h).area() - 2 * math.pi * (1 - math.cos(math.pi / 3)))
            for h in (0.08, 0.04)]
    assert errs[1] < errs[0] / 3
    m = build_cap_mesh(math.pi / 3, 0.04)
    assert_allclose(m.boundary_length(), m.exact_length(), rtol=1e-12)


def test_sphere_mesh_area():
    assert_allclose(build_sphere_mesh(0.05).area(), 4 * math.pi, rtol=1e-3)


def test_mesh_domain_errors():
    for bad in (0.0, math.pi, -1.0):
        with pytest.raises(MeshDomainError):
            build_cap_mesh(bad, 0.05)
    with pytest.raises(MeshDomainError):
        build_sphere_mesh(0.0)


def test_rotated_mesh_is_centred():
    axis = np.array([0.0, 0.6, 0.8])
    m = build_cap_mesh(0.5, 0.05, axis)
    assert np.all(m.nodes @ axis >= math.cos(0.5) - 1e-12)


def test_mesh_json_round_trip():
    m = build_cap_mesh(0.6, 0.1)
    m2 = CapMesh.from_json(m.to_json())
    assert_allclose(m2.nodes, m.nodes)
    assert_allclose(m2.weights, m.weights)
    f = MeshFunction(m.nodes, polynomial_values(ONE, m.nodes), 2)
    assert_allclose(MeshFunction.from_json(f.to_json()).values, f.values)


def test_kernel_exclusion_and_shape():
    pts = build_cap_mesh(0.4, 0.1).nodes
    K = cauchy_kernel(pts[:3], pts, 0.2)
    assert K.shape == (3, len(pts), 4)
    assert np.all(K[0, 0] == 0)


def test_kernel_mass():
    km = kernel_mass(2, h=0.04)
    assert_allclose(km["sphere_integral"], 4 * math.pi)
    assert_allclose(km["quadrature"], 4 * math.pi, rtol=1e-3)


@pytest.mark.parametrize("f", [ONE, CliffordPolynomial.variable(2, 1, Multivector.basis(2, 2))])
def test_sphere_cauchy_matches_spectral(f):
    pts = interior_targets(math.pi / 2, 0.2)[:4]
    got = sphere_transform_quad(f, pts, 0.04).values
    ref = spectral_values("T", f, 3, pts)
    assert np.abs(got - ref).max() < 1e-2


def test_pi_s0_derived_form_matches_spectral():
    f = CliffordPolynomial.variable(2, 0)
    pts = interior_targets(math.pi / 2, 0.3)[:3]
    got = pi_s0_quad(f, pts, 0.04, form="derived").values
    ref = spectral_values("Pi_s0", f, 4, pts)
    assert np.abs(got - ref).max() / np.abs(ref).max() < 1e-2


def test_boundary_transform_reproduces_monogenic_seed():
    # the Cauchy kernel with pole outside the cap satisfies D_s phi = 0, so F phi = phi inside
    m = build_cap_mesh(math.pi / 3, 0.04)
    pole = np.array([-1.0, 0.0, 0.0])

    def phi(pts):
        return cauchy_kernel(pts, pole[None], 0.0)[:, 0, :]

    pts = interior_targets(math.pi / 3, 0.25)
    F, warn = boundary_transform_quad(phi, m, pts)
    assert warn == []
    assert np.abs(F.values - phi(pts)).max() < 1e-2


def test_boundary_transform_warnings_and_orientation():
    m = build_cap_mesh(math.pi / 3, 0.04)
    _, warn = boundary_transform_quad(ONE, m, m.nodes[-1:])
    assert warn
    a, _ = boundary_transform_quad(ONE, m, m.axis[None])
    b, _ = boundary_transform_quad(ONE, m, m.axis[None], orientation="outward")
    assert_allclose(a.values, -b.values)
    with pytest.raises(ValueError):
        boundary_transform_quad(ONE, m, m.axis[None], orientation="sideways")


def test_borel_pompeiu_residual_small():
    rows = borel_pompeiu_residual(ONE, hs=(0.08, 0.04))
    assert rows[-1].residual < rows[0].residual < 2e-2
    assert rows[1].observed_order is not None
    assert convergence_csv(rows).splitlines()[0] == "h,residual,observed_order"


def test_conjugate_dirac_of_cauchy_vanishing_s1_part():
    # D_s G = 0 away from the pole, so the s0 and s1 right-hand sides differ by wbar G
    pole = np.array([-1.0, 0.0, 0.0])
    pts = build_cap_mesh(0.5, 0.2).nodes
    a = conjugate_dirac_of_cauchy(pts, pole, "s0")
    b = conjugate_dirac_of_cauchy(pts, pole, "s1")
    G = cauchy_kernel(pts, pole[None], 0.0)[:, 0, :]
    wbar = np.zeros_like(G)
    wbar[:, 0] = pts[:, 0]
    wbar[:, 1], wbar[:, 2] = -pts[:, 1], -pts[:, 2]
    assert_allclose(a - b, cl_mul(wbar, G, 2), atol=1e-12)


def test_pi_cap_operator_transpose_is_adjoint():
    m = build_cap_mesh(0.5, 0.1)
    P = PiCapOperator(m)
    rng = np.random.default_rng(3)
    u, v = rng.normal(size=(2, m.size, 4))
    lhs = np.sum(P(u) * v)
    rhs = np.sum(u * P.transpose(v))
    assert_allclose(lhs, rhs, rtol=1e-10)
    assert P.norm_estimate(iters=30) > 0


def test_cauchy_transform_rejects_wrong_size():
    m = build_cap_mesh(0.5, 0.1)
    with pytest.raises(ValueError):
        cauchy_transform_quad(np.zeros((3, 4)), m, m.axis[None])


def test_quadrature_linear_in_f():
    m = build_cap_mesh(math.pi / 3, 0.08)
    rng = np.random.default_rng(9)
    u, v = rng.normal(size=(2, m.size, 4))
    pts = interior_targets(math.pi / 3, 0.3)
    a = cauchy_transform_quad(2 * u - 3 * v, m, pts).values
    b = 2 * cauchy_transform_quad(u, m, pts).values - 3 * cauchy_transform_quad(v, m, pts).values
    assert np.abs(a - b).max() <= 1e-12 * np.abs(a).max()


def test_whole_sphere_cauchy_cubic_at_h002():
    e = Multivector.basis(2, 1, 2)
    g = var3 = CliffordPolynomial.variable(2, 0) * CliffordPolynomial.variable(2, 1) * CliffordPolynomial.variable(2, 2, e)
    pts = np.array([[0.0, 0.6, 0.8], [0.5, -0.5, math.sqrt(0.5)]])
    got = sphere_transform_quad(g, pts, 0.02).values
    ref = spectral_values("T", var3, 5, pts)
    samples = polynomial_values(g, build_sphere_mesh(0.05).nodes)
    assert np.abs(got - ref).max() / np.abs(samples).max() <= 1e-2
