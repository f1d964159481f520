"""Banach fixed-point solver for the spherical Beltrami equations.

Variant ``s0``:  D_s f = q (Dsbar + wbar) f, solved as f = phi + T h with
    h = q ((Dsbar + wbar) phi + Pi_{s,0} h).
Variant ``s1``:  D_s f = q Dsbar f, with Pi_{s,1} = Dsbar T and Dsbar phi.

Two realizations: spectral (whole sphere, truncated basis, phi = 0) and
quadrature (a cap of S^2, node values, phi a Cauchy kernel with its pole
outside the cap).
"""

from __future__ import annotations

import json
import math
from fractions import Fraction
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.stats import qmc, norm as normal_dist

from .basis import assemble_basis, coords_to_polynomial, polynomial_to_coords_tracked, to_float
from .clifford import Multivector, left_mult_dense, multivector_from_json, multivector_to_json
from .operators import assemble_operator, operator_norm_L2
from .polynomial import CliffordPolynomial, ContractError, poly_multiply, polynomial_from_json, polynomial_to_json
from .quadrature import (
    PiCapOperator,
    build_cap_mesh,
    cauchy_kernel,
    cauchy_transform_quad,
    cl_mul,
    conjugate_dirac_of_cauchy,
    polynomial_values,
)

VARIANTS = ("s0", "s1")


class NonConvergence(RuntimeError):
    def __init__(self, msg: str, history: Sequence[float]):
        super().__init__(msg)
        self.history = list(history)


@dataclass(frozen=True)
class SpectralMode:
    N: int

    def to_json(self) -> dict:
        return {"kind": "spectral", "N": self.N}


@dataclass(frozen=True)
class QuadratureMode:
    theta_c: float
    h: float
    axis: tuple[float, float, float] = (1.0, 0.0, 0.0)

    def to_json(self) -> dict:
        return {"kind": "quadrature", "theta_c": self.theta_c, "h": self.h, "axis": list(self.axis)}


Coefficient = Multivector | CliffordPolynomial


@dataclass(frozen=True, eq=False)
class BeltramiProblem:
    n: int
    variant: str
    mode: SpectralMode | QuadratureMode
    q: Coefficient
    pole: tuple[float, ...] | None = None  # None: phi = 0
    tolerance: float = 1e-10
    max_iterations: int = 200
    start: str = "zero"  # or "random"
    seed: int = 0

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"variant must be one of {VARIANTS}")
        if self.start not in ("zero", "random"):
            raise ValueError("start must be 'zero' or 'random'")
        if isinstance(self.mode, SpectralMode) and self.pole is not None:
            raise ContractError("the whole sphere carries no nonzero monogenic seed; use pole=None")
        if isinstance(self.mode, QuadratureMode) and self.n != 2:
            raise ContractError("quadrature mode is implemented for n = 2")

    def to_json(self) -> dict:
        q = self.q
        qj = ({"multivector": multivector_to_json(q)} if isinstance(q, Multivector)
              else {"polynomial": polynomial_to_json(q)})
        return {
            "n": self.n,
            "variant": self.variant,
            "mode": self.mode.to_json(),
            "q": qj,
            "phi": "zero" if self.pole is None else {"pole": list(self.pole)},
            "tolerance": self.tolerance,
            "max_iterations": self.max_iterations,
            "start": self.start,
            "seed": self.seed,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "BeltramiProblem":
        m = obj["mode"]
        if m["kind"] == "spectral":
            mode = SpectralMode(int(m["N"]))
        else:
            mode = QuadratureMode(float(m["theta_c"]), float(m["h"]), tuple(m.get("axis", (1.0, 0.0, 0.0))))
        qj = obj["q"]
        q = multivector_from_json(qj["multivector"]) if "multivector" in qj else polynomial_from_json(qj["polynomial"])
        phi = obj.get("phi", "zero")
        pole = None if phi == "zero" else tuple(float(x) for x in phi["pole"])
        return cls(
            int(obj["n"]), obj["variant"], mode, q, pole,
            float(obj.get("tolerance", 1e-10)), int(obj.get("max_iterations", 200)),
            obj.get("start", "zero"), int(obj.get("seed", 0)),
        )


@dataclass(frozen=True)
class Precheck:
    passed: bool
    margin: float
    q_sup: float
    pi_norm: float

    def to_json(self) -> dict:
        return {"passed": self.passed, "margin": self.margin, "q_sup": self.q_sup, "pi_norm": self.pi_norm}


@dataclass(frozen=True, eq=False)
class BeltramiResult:
    h: np.ndarray = field(repr=False)
    f: np.ndarray = field(repr=False)
    iterations: int
    residual_history: tuple[float, ...]
    rate: float
    final_residual: float
    precheck: Precheck
    discarded_norm: float = 0.0
    warnings: tuple[str, ...] = ()

    def to_json(self, include_solution: bool = False) -> dict:
        out = {
            "iterations": self.iterations,
            "residual_history": list(self.residual_history),
            "rate": self.rate,
            "final_residual": self.final_residual,
            "precheck": self.precheck.to_json(),
            "discarded_norm": self.discarded_norm,
            "warnings": list(self.warnings),
        }
        if include_solution:
            out["h"] = np.asarray(self.h).tolist()
            out["f"] = np.asarray(self.f).tolist()
        return out


# ----------------------------------------------------------------------
# contraction check


def contraction_precheck(q_sup: float, pi_norm: float) -> Precheck:
    """Pass iff ||q||_inf * ||Pi|| < 1; margin = 1 - product."""
    prod = q_sup * pi_norm
    return Precheck(bool(prod < 1), 1.0 - prod, q_sup, pi_norm)


def sphere_samples(n: int, count: int = 10_000, seed: int = 0) -> np.ndarray:
    """Quasi-uniform points on S^n: scrambled Sobol points pushed through the normal map."""
    sob = qmc.Sobol(d=n + 1, scramble=True, seed=seed)
    u = sob.random_base2(max(1, math.ceil(math.log2(count))))[:count]
    g = normal_dist.ppf(np.clip(u, 1e-12, 1 - 1e-12))
    return g / np.linalg.norm(g, axis=1)[:, None]


def coefficient_values(q: Coefficient, points: np.ndarray) -> np.ndarray:
    if isinstance(q, Multivector):
        return np.tile(q.to_array(), (len(points), 1))
    return polynomial_values(q, points)


def q_sup_norm(q: Coefficient, n: int, count: int = 10_000, seed: int = 0) -> float:
    if isinstance(q, Multivector):
        return float(q.norm())
    vals = coefficient_values(q, sphere_samples(n, count, seed))
    return float(np.linalg.norm(vals, axis=1).max())


# ----------------------------------------------------------------------
# iteration


def _iterate(step, norm, h0, tol, max_it):
    h = h0
    history: list[float] = []
    for k in range(1, max_it + 1):
        h_new = step(h)
        res = norm(h_new - h) / max(1.0, norm(h_new))
        history.append(res)
        h = h_new
        if res < tol:
            return h, k, history
    raise NonConvergence(f"no convergence in {max_it} iterations (last residual {history[-1]:.3e})", history)


def _rate(history: Sequence[float]) -> float:
    """Geometric mean of successive residual ratios (first step excluded)."""
    r = [b / a for a, b in zip(history[1:-1], history[2:]) if a > 0 and b > 0]
    if not r:
        return 0.0
    return float(np.exp(np.mean(np.log(r))))


def solve_fixed_point(problem: BeltramiProblem, pi_norm: float | None = None) -> BeltramiResult:
    """Run the contraction iteration; raises ContractError if the precheck fails."""
    if isinstance(problem.mode, SpectralMode):
        return _solve_spectral(problem, pi_norm)
    return _solve_cap(problem, pi_norm)


def _exact(p: CliffordPolynomial) -> CliffordPolynomial:
    return CliffordPolynomial(
        p.n, {a: Multivector(p.n, {m: Fraction(v) for m, v in c.items()}) for a, c in p.terms.items()}
    )


def _solve_spectral(pb: BeltramiProblem, pi_norm: float | None) -> BeltramiResult:
    n, N = pb.n, pb.mode.N
    b = assemble_basis(n, N)
    Pi = assemble_operator("Pi_s0" if pb.variant == "s0" else "Pi_s1", n, N, b)
    T = assemble_operator("T", n, N, b)
    if pi_norm is None:
        pi_norm = operator_norm_L2(Pi)
    pre = contraction_precheck(q_sup_norm(pb.q, n), pi_norm)
    if not pre.passed:
        raise ContractError(f"contraction precheck failed: ||q|| ||Pi|| = {1 - pre.margin:.4g} >= 1")

    discarded = [0.0]
    warnings: list[str] = []
    if isinstance(pb.q, Multivector):
        # constant coefficient: left multiplication acts blade-wise on coordinates
        nb_scalar = b.dim >> n
        Lq = np.kron(np.eye(nb_scalar), left_mult_dense(pb.q))
        Q = b.C_inv @ Lq @ b.C

        def qmul(c):
            return Q @ c
    else:
        qpoly = _exact(pb.q)

        def qmul(c):
            # floats are exact binary rationals, so the Fischer step stays exact
            g = coords_to_polynomial([Fraction(x) for x in b.C @ c], n, N)
            v, disc = polynomial_to_coords_tracked(poly_multiply(qpoly, g), N)
            out = b.C_inv @ to_float(v)
            discarded[0] = max(discarded[0], disc)
            if disc > 0.1 * max(b.norm(out), 1e-300):
                msg = "truncation discarded more than 10% of an iterate"
                if msg not in warnings:
                    warnings.append(msg)
            return out

    rhs = np.zeros(b.dim)  # phi = 0 on the whole sphere
    if pb.start == "random":
        h0 = np.random.default_rng(pb.seed).normal(size=b.dim)
    else:
        h0 = np.zeros(b.dim)

    def step(h):
        return qmul(rhs + Pi.M @ h)

    h, k, hist = _iterate(step, b.norm, h0, pb.tolerance, pb.max_iterations)
    final = b.norm(h - step(h)) / max(1.0, b.norm(h))
    return BeltramiResult(h, T.M @ h, k, tuple(hist), _rate(hist), final, pre, discarded[0], tuple(warnings))


def _solve_cap(pb: BeltramiProblem, pi_norm: float | None) -> BeltramiResult:
    mode = pb.mode
    mesh = build_cap_mesh(mode.theta_c, mode.h, mode.axis)
    Pi = PiCapOperator(mesh, form="derived", variant=pb.variant)
    if pi_norm is None:
        pi_norm = Pi.norm_estimate(seed=pb.seed)
    Qv = coefficient_values(pb.q, mesh.nodes)
    pre = contraction_precheck(float(np.linalg.norm(Qv, axis=1).max()), pi_norm)
    if not pre.passed:
        raise ContractError(f"contraction precheck failed: ||q|| ||Pi|| = {1 - pre.margin:.4g} >= 1")
    sw = np.sqrt(mesh.weights)[:, None]

    def l2(g):
        return float(np.linalg.norm(sw * g))

    if pb.pole is None:
        phi = np.zeros((mesh.size, 4))
        rhs = np.zeros((mesh.size, 4))
    else:
        pole = np.asarray(pb.pole, dtype=float)
        if np.min(np.linalg.norm(mesh.nodes - pole, axis=1)) < mesh.h:
            raise ContractError("seed pole lies on the cap; pick an exterior pole")
        phi = cauchy_kernel(mesh.nodes, pole[None], 0.0)[:, 0, :]
        rhs = conjugate_dirac_of_cauchy(mesh.nodes, pole, pb.variant)
    if pb.start == "random":
        h0 = np.random.default_rng(pb.seed).normal(size=(mesh.size, 4))
    else:
        h0 = np.zeros((mesh.size, 4))

    def step(h):
        return cl_mul(Qv, rhs + Pi(h), 2)

    h, k, hist = _iterate(step, l2, h0, pb.tolerance, pb.max_iterations)
    final = l2(h - step(h)) / max(1.0, l2(h))
    f = phi + cauchy_transform_quad(h, mesh, mesh.nodes).values
    return BeltramiResult(h, f, k, tuple(hist), _rate(hist), final, pre)


def dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True)


__all__ = [
    "BeltramiProblem",
    "BeltramiResult",
    "NonConvergence",
    "Precheck",
    "QuadratureMode",
    "SpectralMode",
    "contraction_precheck",
    "q_sup_norm",
    "solve_fixed_point",
    "sphere_samples",
]
