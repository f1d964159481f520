"""Dense matrices of the spherical operators on a truncated basis.

Everything is first assembled in harmonic coordinates (see
:mod:`spherical_pi.basis`) and then conjugated into the published P/Q
basis.  Degree bookkeeping: an :class:`OperatorMatrix` is exact on inputs of
degree <= ``valid_degree`` and raises degree by at most ``shift``.

Conventions used throughout:

* ``A = Gamma0 - n/2`` is self-adjoint and invertible, ``W`` (multiplication
  by w) is unitary with inverse ``Wbar``.
* ``Ds = W A``, ``Dsbar = -A Wbar`` (equivalent to ``wbar(Gamma0bar - n/2)``),
  ``T = A^{-1} Wbar`` (the inverse of ``Ds``), ``Tbar = -W A^{-1}``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
import scipy.linalg as sla

from .basis import (
    BasisDescriptor,
    Layout,
    assemble_basis,
    coord_gamma_block,
    coord_mult_blocks,
    evaluate_coords,
    polynomial_to_coords,
    to_float,
)
from .polynomial import CliffordPolynomial, ContractError, sphere_area

OPERATOR_TAGS = (
    "gamma0",
    "gamma0bar",
    "w",
    "wbar",
    "A",
    "Ds",
    "Dsbar",
    "T",
    "Tbar",
    "Laplace_s",
    "Laplace_s_quad",
    "Pi_s0",
    "Pi_s1",
    "Pi_plus",
)

IDENTITY_TAGS = (
    "lemma_gamma_w",
    "thm_ds_w",
    "laplace_factor",
    "dual_ds",
    "ds_pi",
    "pi_ds",
    "pairing_plus",
    "borel_pompeiu_spectral",
)


class IncompatibleBasis(ContractError):
    pass


# ----------------------------------------------------------------------
# coordinate-space assembly


@lru_cache(maxsize=None)
def coordinate_matrices(n: int, N: int) -> dict[str, np.ndarray]:
    """Gamma0, Gamma0bar, W, Wbar in harmonic coordinates (read-only)."""
    lay = Layout(n, N)
    D = lay.dim
    G0 = np.zeros((D, D))
    G0b = np.zeros((D, D))
    W = np.zeros((D, D))
    Wb = np.zeros((D, D))
    for m in range(N + 1):
        b = lay.block(m)
        G0[b, b] = coord_gamma_block(n, m)
        G0b[b, b] = coord_gamma_block(n, m, conj=True)
        for conj, M in ((False, W), (True, Wb)):
            up, down = coord_mult_blocks(n, m, conj)
            if m + 1 <= N:
                M[lay.block(m + 1), b] = to_float(up)
            if down is not None:
                M[lay.block(m - 1), b] = to_float(down)
    out = {"gamma0": G0, "gamma0bar": G0b, "w": W, "wbar": Wb}
    for M in out.values():
        M.setflags(write=False)
    return out


# ----------------------------------------------------------------------
# operator matrices


@dataclass(frozen=True, eq=False)
class OperatorMatrix:
    """Operator on the truncated space, as a matrix in the published basis.

    Columns of ``M`` are the expansions of the operator applied to the basis
    vectors.  ``notes`` carries caveats (e.g. a pseudo-inverse was needed).
    """

    tag: str
    basis: BasisDescriptor
    M: np.ndarray = field(repr=False)
    valid_degree: int
    shift: int
    notes: tuple[str, ...] = ()

    @property
    def n(self) -> int:
        return self.basis.n

    @property
    def N(self) -> int:
        return self.basis.N

    def coords(self) -> np.ndarray:
        """The same operator in harmonic coordinates."""
        return self.basis.C @ self.M @ self.basis.C_inv

    def valid_indices(self) -> np.ndarray:
        return self.basis.indices(max_degree=self.valid_degree)

    def apply(self, c: np.ndarray) -> np.ndarray:
        return self.M @ np.asarray(c, dtype=float)

    def __matmul__(self, other: "OperatorMatrix") -> "OperatorMatrix":
        return compose(self, other)

    def __add__(self, other: "OperatorMatrix") -> "OperatorMatrix":
        _check_same(self, other)
        return OperatorMatrix(
            f"({self.tag}+{other.tag})",
            self.basis,
            self.M + other.M,
            min(self.valid_degree, other.valid_degree),
            max(self.shift, other.shift),
            self.notes + other.notes,
        )

    def __sub__(self, other: "OperatorMatrix") -> "OperatorMatrix":
        return self + other.scaled(-1.0)

    def scaled(self, s: float) -> "OperatorMatrix":
        return OperatorMatrix(self.tag, self.basis, s * self.M, self.valid_degree, self.shift, self.notes)

    def renamed(self, tag: str) -> "OperatorMatrix":
        return OperatorMatrix(tag, self.basis, self.M, self.valid_degree, self.shift, self.notes)


def _check_same(a: OperatorMatrix, b: OperatorMatrix):
    if a.basis is not b.basis and (a.n, a.N) != (b.n, b.N):
        raise IncompatibleBasis(f"bases (n={a.n}, N={a.N}) and (n={b.n}, N={b.N}) differ")


def compose(a: OperatorMatrix, b: OperatorMatrix) -> OperatorMatrix:
    """a after b; exact where b is exact and b's output stays in a's range."""
    _check_same(a, b)
    valid = min(b.valid_degree, a.valid_degree - b.shift)
    return OperatorMatrix(
        f"{a.tag}*{b.tag}", a.basis, a.M @ b.M, valid, a.shift + b.shift, a.notes + b.notes
    )


def _from_coords(tag, basis, Mc, valid, shift, notes=()):
    M = basis.C_inv @ Mc @ basis.C
    return OperatorMatrix(tag, basis, M, valid, shift, tuple(notes))


def assemble_operator(tag: str, n: int, N: int, basis: BasisDescriptor | None = None) -> OperatorMatrix:
    """Matrix of the operator ``tag`` on degrees 0..N."""
    if tag not in OPERATOR_TAGS:
        raise ValueError(f"unknown operator {tag!r}; expected one of {OPERATOR_TAGS}")
    if basis is None:
        basis = assemble_basis(n, N)
    elif (basis.n, basis.N) != (n, N):
        raise IncompatibleBasis(f"basis built for (n={basis.n}, N={basis.N}), asked for ({n}, {N})")
    if n < 1:
        raise ContractError("need at least one generator")
    if basis is assemble_basis(n, N):
        return _cached(tag, n, N)
    return _assemble(tag, basis)


@lru_cache(maxsize=None)
def _cached(tag: str, n: int, N: int) -> OperatorMatrix:
    op = _assemble(tag, assemble_basis(n, N))
    op.M.setflags(write=False)
    return op


def _assemble(tag: str, basis: BasisDescriptor) -> OperatorMatrix:
    n, N = basis.n, basis.N
    if basis is assemble_basis(n, N):
        sub = lambda t: _cached(t, n, N)  # noqa: E731
    else:
        sub = lambda t: _assemble(t, basis)  # noqa: E731
    cm = coordinate_matrices(n, N)
    I = np.eye(basis.dim)
    raising = tag not in ("gamma0", "gamma0bar", "A")
    if raising and N < 2:
        raise ContractError(f"{tag} needs truncation N >= 2")
    if tag in ("gamma0", "gamma0bar"):
        return _from_coords(tag, basis, cm[tag], N, 0)
    if tag in ("w", "wbar"):
        return _from_coords(tag, basis, cm[tag], N - 1, 1)
    if tag == "A":
        return _from_coords(tag, basis, cm["gamma0"] - n / 2 * I, N, 0)

    A, W, Wb = sub("A"), sub("w"), sub("wbar")
    if tag == "Ds":
        return (W @ A).renamed(tag)
    if tag == "Dsbar":
        return (A @ Wb).scaled(-1.0).renamed(tag)
    if tag == "T":
        return (_inverse(A, "A^-1") @ Wb).renamed(tag)
    if tag == "Tbar":
        return (W @ _inverse(A, "A^-1")).scaled(-1.0).renamed(tag)
    Ds, Dsb, T = sub("Ds"), sub("Dsbar"), sub("T")
    if tag == "Laplace_s":
        return (Dsb @ (Ds + W)).renamed(tag)
    if tag == "Laplace_s_quad":
        G = sub("gamma0")
        q = (G @ G).scaled(-1.0) + G.scaled(n - 1.0)
        M = q.M - (n * n / 4 - n / 2) * I
        return OperatorMatrix(tag, basis, M, N, 0)
    if tag == "Pi_s0":
        return ((Dsb + Wb) @ T).renamed(tag)
    if tag == "Pi_s1":
        return (Dsb @ T).renamed(tag)
    if tag == "Pi_plus":
        # (Ds - w)^{-1} = (A - I)^{-1} Wbar, since Ds - w = W (A - I)
        AmI = A - OperatorMatrix("I", basis, I, N, 0)
        return (_inverse(AmI, "(A-I)^-1") @ Wb @ Dsb).renamed(tag)
    raise AssertionError(tag)


def _inverse(op: OperatorMatrix, tag: str) -> OperatorMatrix:
    """Inverse of a degree-preserving operator; pseudo-inverse if singular."""
    if op.shift != 0:
        raise ContractError("only degree-preserving operators are inverted")
    s = np.linalg.svd(op.M, compute_uv=False)
    if s[-1] > 1e-10 * s[0]:
        return OperatorMatrix(tag, op.basis, np.linalg.inv(op.M), op.valid_degree, 0, op.notes)
    note = f"{tag}: singular (cond {s[0] / max(s[-1], 1e-300):.3e}); Moore-Penrose pseudo-inverse used"
    return OperatorMatrix(tag, op.basis, np.linalg.pinv(op.M, rcond=1e-10), op.valid_degree, 0, op.notes + (note,))


# ----------------------------------------------------------------------
# spectra


def predicted_eigenvalues(tag: str, n: int, m: int) -> list[float]:
    """Closed-form eigenvalues on the degree-m block.

    gamma0: -m on P_m, n+m-1 on Q_m.  ``Ds`` refers to the self-adjoint
    factor A = Gamma0 - n/2 of Ds = w A; ``T`` to its reciprocals.
    """
    if tag == "gamma0":
        return [-m] + ([n + m - 1] if m >= 1 else [])
    if tag == "Ds":
        return [-(m + n / 2)] + ([m - 1 + n / 2] if m >= 1 else [])
    if tag == "T":
        return [1.0 / v for v in predicted_eigenvalues("Ds", n, m)]
    if tag in ("Laplace_s", "Laplace_s_quad"):
        return [-(m * m) - m * (n - 1) - (n * n / 4 - n / 2)]
    raise ValueError(f"no spectral prediction for {tag!r}")


SPECTRUM_TAGS = ("gamma0", "Ds", "T", "Laplace_s", "Laplace_s_quad")


@dataclass(frozen=True)
class SpectrumBlock:
    degree: int
    eigenvalues: tuple[float, ...]
    multiplicities: tuple[int, ...]
    predicted: tuple[float, ...]
    residual: float


@dataclass(frozen=True)
class SpectrumReport:
    operator: str
    n: int
    N: int
    blocks: tuple[SpectrumBlock, ...]
    notes: tuple[str, ...] = ()

    @property
    def max_residual(self) -> float:
        return max((b.residual for b in self.blocks), default=0.0)

    def to_json(self) -> dict:
        return {
            "operator": self.operator,
            "n": self.n,
            "N": self.N,
            "notes": list(self.notes),
            "max_residual": self.max_residual,
            "blocks": [
                {
                    "degree": b.degree,
                    "eigenvalues": list(b.eigenvalues),
                    "multiplicities": list(b.multiplicities),
                    "predicted": list(b.predicted),
                    "residual": b.residual,
                }
                for b in self.blocks
            ],
        }


def _cluster(vals: np.ndarray, tol: float = 1e-6) -> tuple[list[float], list[int]]:
    vals = np.sort(vals)
    groups: list[list[float]] = []
    for v in vals:
        if groups and abs(v - groups[-1][-1]) <= tol:
            groups[-1].append(v)
        else:
            groups.append([v])
    return [float(np.mean(g)) for g in groups], [len(g) for g in groups]


def spectrum(op_tag: str, n: int, N: int, max_degree: int | None = None) -> SpectrumReport:
    """Per-degree eigenvalues of ``op_tag`` matched against the closed forms.

    D_s = w A does not preserve degree, so its truncation has no meaningful
    eigen-decomposition.  Its spectrum is read from the self-adjoint factor
    A = wbar D_s; the spectrum of T from A^{-1} = T w.
    """
    if op_tag not in SPECTRUM_TAGS:
        raise ValueError(f"spectrum available for {SPECTRUM_TAGS}, not {op_tag!r}")
    basis = assemble_basis(n, N)
    notes: list[str] = []
    if op_tag == "gamma0":
        M = assemble_operator("gamma0", n, N, basis).M
    elif op_tag == "Ds":
        M = assemble_operator("A", n, N, basis).M
        notes.append("eigenvalues of the self-adjoint factor A = wbar*Ds = Gamma0 - n/2")
    elif op_tag == "T":
        M = np.linalg.inv(assemble_operator("A", n, N, basis).M)
        notes.append("eigenvalues of A^{-1} = T*w")
    else:
        op = assemble_operator(op_tag, n, N, basis)
        M = op.M
    top = N if max_degree is None else min(N, max_degree)
    if op_tag == "Laplace_s":
        # composition loses exactness at the top two degrees
        top = min(top, N - 2)
    blocks = []
    for m in range(top + 1):
        idx = basis.degree_block(m)
        blk = M[np.ix_(idx, idx)]
        ev = np.linalg.eigvals(blk)
        imag = float(np.abs(ev.imag).max())
        vals, mult = _cluster(ev.real)
        pred = predicted_eigenvalues(op_tag, n, m)
        res = max(float(np.min(np.abs(np.array(pred) - v))) for v in ev.real)
        blocks.append(SpectrumBlock(m, tuple(vals), tuple(mult), tuple(float(p) for p in pred), max(res, imag)))
    return SpectrumReport(op_tag, n, N, tuple(blocks), tuple(notes))


# ----------------------------------------------------------------------
# identities


@dataclass(frozen=True)
class IdentityReport:
    tag: str
    n: int
    N: int
    residual: float
    max_input_degree: int
    notes: tuple[str, ...] = ()

    def passed(self, tol: float = 1e-10) -> bool:
        return self.residual < tol

    def to_json(self) -> dict:
        return {
            "identity": self.tag,
            "n": self.n,
            "N": self.N,
            "residual": self.residual,
            "max_input_degree": self.max_input_degree,
            "notes": list(self.notes),
        }


def _residual(lhs: OperatorMatrix, rhs: OperatorMatrix, max_degree: int) -> float:
    cols = lhs.basis.indices(max_degree=max_degree)
    if len(cols) == 0:
        return 0.0
    return float(np.abs((lhs.M - rhs.M)[:, cols]).max())


def verify_identity(tag: str, n: int, N: int) -> IdentityReport:
    """Max entry of LHS - RHS over columns where both sides are exact."""
    if tag not in IDENTITY_TAGS:
        raise ValueError(f"unknown identity {tag!r}; expected one of {IDENTITY_TAGS}")
    b = assemble_basis(n, N)
    op = {t: assemble_operator(t, n, N, b) for t in OPERATOR_TAGS}
    I = OperatorMatrix("I", b, np.eye(b.dim), N, 0)
    notes: list[str] = []

    if tag == "lemma_gamma_w":
        lhs = op["gamma0"] @ op["wbar"]
        rhs = op["wbar"].scaled(n) - op["wbar"] @ op["gamma0bar"]
    elif tag == "thm_ds_w":
        lhs = op["Ds"] @ op["wbar"]
        rhs = (op["w"] @ op["Dsbar"]).scaled(-1.0)
    elif tag == "laplace_factor":
        other = op["Ds"] @ (op["Dsbar"] + op["wbar"])
        deg = min(op["Laplace_s"].valid_degree, other.valid_degree)
        r1 = _residual(op["Laplace_s"], op["Laplace_s_quad"], deg)
        r2 = _residual(other, op["Laplace_s_quad"], deg)
        notes.append(f"Dsbar(Ds+w): {r1:.3e}; Ds(Dsbar+wbar): {r2:.3e}")
        return IdentityReport(tag, n, N, max(r1, r2), deg, tuple(notes))
    elif tag == "dual_ds":
        # <Ds u, v> = -<u, Dsbar v>  <=>  Ds^T G = -G Dsbar on valid degrees
        deg = min(op["Ds"].valid_degree, op["Dsbar"].valid_degree)
        S = b.indices(max_degree=deg)
        G = b.gram
        R = op["Ds"].M[:, S].T @ G[:, S] + G[S, :] @ op["Dsbar"].M[:, S]
        scale = float(np.abs(G).max())
        notes.append("Gram-adjoint form; residual relative to max |G|")
        return IdentityReport(tag, n, N, float(np.abs(R).max()) / scale, deg, tuple(notes))
    elif tag == "ds_pi":
        lhs = op["Ds"] @ op["Pi_s0"]
        rhs = op["Dsbar"] - op["wbar"]
    elif tag == "pi_ds":
        lhs = op["Pi_s0"] @ op["Ds"]
        rhs = op["Dsbar"] + op["wbar"]
    elif tag == "pairing_plus":
        # <Pi_s0 f, Pi_plus g> = <f, g>
        P0, Pp = op["Pi_s0"], op["Pi_plus"]
        deg = min(P0.valid_degree, Pp.valid_degree)
        S = b.indices(max_degree=deg)
        G = b.gram
        R = P0.M[:, S].T @ G @ Pp.M[:, S] - G[np.ix_(S, S)]
        notes.extend(Pp.notes)
        notes.append("residual relative to max |G|")
        return IdentityReport(tag, n, N, float(np.abs(R).max()) / float(np.abs(G).max()), deg, tuple(notes))
    else:  # borel_pompeiu_spectral
        lhs = op["T"] @ op["Ds"]
        rhs = I
    deg = min(lhs.valid_degree, rhs.valid_degree)
    return IdentityReport(tag, n, N, _residual(lhs, rhs, deg), deg, tuple(notes))


# ----------------------------------------------------------------------
# norms and closed-form bounds


def operator_norm_L2(op: OperatorMatrix, which: str = "max") -> float:
    """Largest (or smallest) L^2 gain over inputs of degree <= valid_degree.

    Generalized symmetric eigenproblem  M_S^T G M_S v = s^2 G_S v.
    """
    b = op.basis
    S = op.valid_indices()
    G = b.gram
    MS = op.M[:, S]
    lhs = MS.T @ G @ MS
    rhs = G[np.ix_(S, S)]
    try:
        ev = sla.eigh(0.5 * (lhs + lhs.T), rhs, eigvals_only=True)
    except np.linalg.LinAlgError as exc:
        raise ContractError(f"Gram matrix is not positive definite: {exc}") from exc
    ev = np.clip(ev, 0.0, None)
    return float(np.sqrt(ev[-1] if which == "max" else ev[0]))


def spectral_values(tag: str, f: CliffordPolynomial, N: int, points: np.ndarray) -> np.ndarray:
    """Values (npts, 2**n) at sphere points of operator ``tag`` applied to f."""
    b = assemble_basis(f.n, N)
    op = assemble_operator(tag, f.n, N, b)
    if f.degree() > op.valid_degree:
        raise ContractError(f"{tag} at N={N} is exact only up to input degree {op.valid_degree}")
    c = b.C_inv @ to_float(polynomial_to_coords(f, N))
    return evaluate_coords(b.C @ (op.M @ c), f.n, N, points)


def isometry_defect(tag: str, n: int, N: int, count: int = 200, seed: int = 0) -> dict:
    """How far an operator is from an L^2 isometry on its valid degrees.

    ``sample``: max | ||Op u|| / ||u|| - 1 | over ``count`` random u;
    ``gram``: max |M^T G M - G| / max |G| on the valid columns.
    """
    op = assemble_operator(tag, n, N)
    b = op.basis
    S = op.valid_indices()
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(count):
        u = np.zeros(b.dim)
        u[S] = rng.normal(size=len(S))
        worst = max(worst, abs(b.norm(op.M @ u) / b.norm(u) - 1.0))
    G = b.gram
    MS = op.M[:, S]
    R = MS.T @ G @ MS - G[np.ix_(S, S)]
    return {"operator": tag, "n": n, "N": N, "count": count, "seed": seed,
            "sample": worst, "gram": float(np.abs(R).max() / np.abs(G).max())}


def theoretical_bounds(n: int, p: float, Bp: float) -> dict:
    """Evaluate the closed-form L^p bounds (pure arithmetic)."""
    if not p > 1:
        raise ValueError(f"p must exceed 1, got {p}")
    if not Bp > 0:
        raise ValueError(f"B_p must be positive, got {Bp}")
    if n < 2:
        raise ValueError("bounds need n >= 2")
    om = sphere_area(n)
    om1 = sphere_area(n - 1)
    theta_const = math.sqrt(math.pi) * math.gamma(n / 2) / math.gamma((n + 1) / 2)
    riesz = math.sqrt(math.pi) / (2 * math.sqrt(2)) * math.sqrt(p / (p - 1)) * Bp
    pstar = p / (p - 1)
    return {
        "n": n,
        "p": p,
        "Bp": Bp,
        "omega_n": om,
        "omega_n_minus_1": om1,
        "T_Lp_bound": om1 / 4,
        "kernel_theta_integral": theta_const,
        "kernel_sphere_integral": om1 * theta_const,
        "riesz_factor": riesz,
        "C_p": 1.0 / math.tan(math.pi / (2 * pstar)),
        "Pi_s0_Lp_bound": (n - 1) * riesz + (n / 2 - 1) * om1 / 4,
        "Pi_s1_Lp_bound": (n - 1) * riesz + (n / 2) * om1 / 4,
        "Pi_s0_L2_bound_quadratic": 1 + 4 / n**2,
        "Pi_s0_L2_bound_triangle": 1 + 2 / n,
        "T_L2_exact": 2 / n,
    }


def norm_report(n: int, N: int) -> dict:
    b = assemble_basis(n, N)
    out = {"n": n, "N": N}
    for tag in ("T", "Pi_s0", "Pi_s1"):
        op = assemble_operator(tag, n, N, b)
        out[tag] = {
            "max": operator_norm_L2(op, "max"),
            "min": operator_norm_L2(op, "min"),
            "valid_degree": op.valid_degree,
        }
    out["bounds"] = {
        "T_exact": 2 / n,
        "T_Lp_at_p2": sphere_area(n - 1) / 4,
        "Pi_s0_quadratic": 1 + 4 / n**2,
        "Pi_s0_triangle": 1 + 2 / n,
        "Pi_s1_isometry": 1.0,
    }
    return out


def dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True)
