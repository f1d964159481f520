"""Spherical Dirac, Cauchy and Pi operators on S^n with Clifford-valued functions.

Modules
-------
clifford     Cl_n multivectors (e_i^2 = -1) with exact or float coefficients.
polynomial   Clifford polynomials, D_0 / Gamma_0 / Laplacian, Fischer decomposition.
basis        Harmonic P/Q basis of L^2(S^n) truncated at degree N, Gram matrix.
operators    Matrix realizations of D_s, T, Pi_{s,0}, Pi_{s,1}, spectra and norms.
quadrature   Cap and sphere meshes on S^2, singular-integral transforms.
beltrami     Fixed-point solver for the spherical Beltrami equation.
cli          ``spherical-pi`` command-line front end.
"""

from .clifford import Multivector
from .polynomial import CliffordPolynomial, ContractError
from .basis import assemble_basis
from .operators import assemble_operator, spectrum, verify_identity

__all__ = [
    "Multivector",
    "CliffordPolynomial",
    "ContractError",
    "assemble_basis",
    "assemble_operator",
    "spectrum",
    "verify_identity",
]
__version__ = "0.1.0"
