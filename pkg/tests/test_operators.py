import math

import pytest
from numpy.testing import assert_allclose

from spherical_pi.operators import (
    IDENTITY_TAGS,
    OPERATOR_TAGS,
    assemble_operator,
    isometry_defect,
    norm_report,
    operator_norm_L2,
    predicted_eigenvalues,
    spectrum,
    theoretical_bounds,
    verify_identity,
)

# pairing_plus needs (Gamma_0 - n/2 - 1) invertible, which fails on Q_1 at n = 2
EXACT_AT_N2 = [t for t in IDENTITY_TAGS if t != "pairing_plus"]


@pytest.mark.parametrize("tag", EXACT_AT_N2)
def test_identities_n2(tag):
    assert verify_identity(tag, 2, 4).residual < 1e-10


@pytest.mark.parametrize("tag", IDENTITY_TAGS)
def test_identities_n3(tag):
    assert verify_identity(tag, 3, 4).residual < 1e-10


def test_pairing_plus_breaks_at_n2():
    r = verify_identity("pairing_plus", 2, 4)
    assert r.residual > 1e-3


def test_unknown_tags():
    with pytest.raises(ValueError):
        verify_identity("nope", 2, 3)
    with pytest.raises(ValueError):
        assemble_operator("nope", 2, 3)


@pytest.mark.parametrize("n", [2, 3])
@pytest.mark.parametrize("tag", ["gamma0", "Ds", "T", "Laplace_s"])
def test_spectra_match_closed_forms(n, tag):
    rep = spectrum(tag, n, 4)
    assert rep.max_residual < 1e-8
    for blk in rep.blocks:
        assert_allclose(sorted(blk.eigenvalues), sorted(predicted_eigenvalues(tag, n, blk.degree)), atol=1e-8)


def test_laplace_closed_form_values():
    assert predicted_eigenvalues("Laplace_s", 2, 1) == [-2.0]
    assert predicted_eigenvalues("Laplace_s", 3, 0) == [-0.75]


def test_multiplicities_fill_blocks():
    rep = spectrum("gamma0", 2, 3)
    assert [sum(b.multiplicities) for b in rep.blocks] == [4, 12, 20, 28]


@pytest.mark.parametrize("n", [2, 3])
def test_cauchy_norm_is_two_over_n(n):
    T = assemble_operator("T", n, 5)
    assert abs(operator_norm_L2(T) - 2 / n) < 1e-10


def test_pi_s0_norm_bounds():
    r2, r3 = norm_report(2, 5), norm_report(3, 5)
    assert r2["Pi_s0"]["max"] <= 2
    assert r3["Pi_s0"]["max"] <= 1 + 4 / 9
    assert r3["Pi_s0"]["max"] <= 1 + 2 / 3


def test_pi_s1_is_not_isometric():
    d = isometry_defect("Pi_s1", 2, 4, count=20)
    assert d["sample"] > 1e-3 and d["gram"] > 1e-3


def test_operator_matrix_composition_tracks_degrees():
    T = assemble_operator("T", 2, 4)
    W = assemble_operator("w", 2, 4)
    C = W @ T
    assert C.valid_degree == min(T.valid_degree, W.valid_degree - T.shift)
    assert set(OPERATOR_TAGS) >= {"Ds", "T", "Pi_s0", "Pi_s1", "Pi_plus"}


def test_theoretical_bounds():
    b = theoretical_bounds(3, 2.0, 1.0)
    assert_allclose(b["Pi_s0_Lp_bound"], math.sqrt(math.pi) + math.pi / 2)
    assert_allclose(b["T_Lp_bound"], math.pi)
    assert_allclose(b["kernel_theta_integral"], math.pi / 2)
    assert_allclose(theoretical_bounds(4, 2.0, 1.0)["kernel_theta_integral"], 4 / 3)
    assert_allclose(b["C_p"], 1.0, atol=1e-15)
    with pytest.raises(ValueError):
        theoretical_bounds(3, 1.0, 1.0)
    with pytest.raises(ValueError):
        theoretical_bounds(3, 2.0, 0.0)


def test_spectral_values_refuses_truncated_output():
    from spherical_pi.operators import spectral_values
    from spherical_pi.polynomial import CliffordPolynomial, ContractError

    x = CliffordPolynomial.variable(2, 0)
    with pytest.raises(ContractError):
        spectral_values("T", x * x * x, 3, [[1.0, 0.0, 0.0]])
