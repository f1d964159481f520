"""Truncated bases of L^2(S^n, Cl_n) built from harmonic polynomials.

Scalar harmonics of degree m are indexed by the monomials x^alpha with
alpha_0 in {0, 1}: the basis element for alpha is the unique harmonic
polynomial whose (x_0-degree <= 1) part is exactly x^alpha.  Coordinates of
any harmonic polynomial in this basis are therefore read off its
coefficients, with no solve.

Clifford-valued functions use the tensor basis (scalar harmonic s) x (blade
A), flattened as s * 2**n + A, referred to below as *coordinate* space.
The published basis of a :class:`BasisDescriptor` splits each H_m into a
P-part (Gamma_0 eigenvalue -m) and a Q-part, each spanned by exact rational
combinations of coordinate vectors.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Mapping, Sequence

import numpy as np
import scipy.linalg as sla

from .clifford import Multivector, left_mult_matrix
from .polynomial import (
    Alpha,
    CliffordPolynomial,
    ContractError,
    _sp_diff,
    _sp_laplacian,
    apply_diff_op,
    harmonic_decompose,
    monomial_sphere_ratio,
    monomials,
    polynomial_to_json,
    reduce_on_sphere,
    sphere_area,
)


class TruncationError(ValueError):
    """Expansion would need harmonic degrees above the truncation."""

    def __init__(self, msg: str, discarded_norm: float):
        super().__init__(f"{msg} (discarded L2 norm {discarded_norm:.3e})")
        self.discarded_norm = discarded_norm


# ----------------------------------------------------------------------
# scalar harmonics


@lru_cache(maxsize=None)
def harmonic_index(d: int, m: int) -> tuple[Alpha, ...]:
    """Monomials of degree m in d variables with alpha_0 <= 1."""
    return tuple(a for a in monomials(d, m) if a[0] <= 1)


@lru_cache(maxsize=None)
def scalar_harmonic(d: int, alpha: Alpha) -> tuple[tuple[Alpha, Fraction], ...]:
    """Harmonic polynomial equal to x^alpha modulo x_0^2."""
    a0, rest = alpha[0], alpha[1:]
    # h = sum_j x0^j / j! * g_j(x'), g_{j+2} = -Lap' g_j
    g = {rest: Fraction(1)}
    out: dict[Alpha, Fraction] = {}
    j = a0
    fact = Fraction(1)
    while g:
        for b, v in g.items():
            key = (j,) + b
            out[key] = out.get(key, 0) + v * fact
        # advance two x0-degrees
        g = {b: -v for b, v in _sp_laplacian(g).items()}
        fact = fact / ((j + 1) * (j + 2))
        j += 2
    return tuple(sorted(out.items(), reverse=True))


def scalar_harmonic_dict(d: int, alpha: Alpha) -> dict[Alpha, Fraction]:
    return dict(scalar_harmonic(d, alpha))


def scalar_dim(d: int, m: int) -> int:
    return len(harmonic_index(d, m))


def scalar_coords(p: Mapping[Alpha, Fraction], d: int, m: int) -> list[Fraction]:
    """Coordinates of a harmonic homogeneous degree-m polynomial."""
    return [p.get(a, Fraction(0)) for a in harmonic_index(d, m)]


# ----------------------------------------------------------------------
# exact scalar operator blocks (object arrays of Fractions)


def _frac_zeros(r: int, c: int) -> np.ndarray:
    out = np.empty((r, c), dtype=object)
    out.fill(Fraction(0))
    return out


@lru_cache(maxsize=None)
def scalar_angular(d: int, m: int, i: int, j: int) -> np.ndarray:
    """Matrix of x_i d_j - x_j d_i on degree-m scalar harmonics (integer entries)."""
    idx = harmonic_index(d, m)
    M = np.zeros((len(idx), len(idx)), dtype=np.int64)
    for c, a in enumerate(idx):
        h = scalar_harmonic_dict(d, a)
        t: dict = {}
        for b, v in _sp_diff(h, j).items():
            k = b[:i] + (b[i] + 1,) + b[i + 1 :]
            t[k] = t.get(k, 0) + v
        for b, v in _sp_diff(h, i).items():
            k = b[:j] + (b[j] + 1,) + b[j + 1 :]
            t[k] = t.get(k, 0) - v
        col = scalar_coords(t, d, m)
        if any(v.denominator != 1 for v in map(Fraction, col)):
            raise ArithmeticError("angular operator left the integer lattice")
        M[:, c] = [int(v) for v in col]
    M.setflags(write=False)
    return M


@lru_cache(maxsize=None)
def scalar_mult_var(d: int, m: int, j: int) -> tuple[np.ndarray, np.ndarray | None]:
    """Multiplication by x_j restricted to S^n: H_m -> H_{m+1} + H_{m-1}.

    x_j h = [x_j h - r^2 d_j h / (2m + d - 2)] + r^2 d_j h / (2m + d - 2).
    Returns (up, down) blocks; down is None for m = 0.
    """
    idx = harmonic_index(d, m)
    up = _frac_zeros(scalar_dim(d, m + 1), len(idx))
    down = _frac_zeros(scalar_dim(d, m - 1), len(idx)) if m > 0 else None
    c0 = Fraction(1, 2 * m + d - 2) if m > 0 else Fraction(0)
    for c, a in enumerate(idx):
        h = scalar_harmonic_dict(d, a)
        xh = {b[:j] + (b[j] + 1,) + b[j + 1 :]: v for b, v in h.items()}
        if m > 0:
            dh = {b: v * c0 for b, v in _sp_diff(h, j).items()}
            down[:, c] = scalar_coords(dh, d, m - 1)
            for b, v in dh.items():
                for t in range(d):
                    k = b[:t] + (b[t] + 2,) + b[t + 1 :]
                    xh[k] = xh.get(k, 0) - v
        up[:, c] = scalar_coords(xh, d, m + 1)
    return up, down


@lru_cache(maxsize=None)
def scalar_gram_ratio(d: int, m1: int, m2: int) -> np.ndarray:
    """Exact (integral of h_s h_t over S^n) / |S^n| between degree blocks."""
    i1, i2 = harmonic_index(d, m1), harmonic_index(d, m2)
    G = _frac_zeros(len(i1), len(i2))
    hs2 = [scalar_harmonic(d, b) for b in i2]
    for r, a in enumerate(i1):
        h1 = scalar_harmonic(d, a)
        for c, h2 in enumerate(hs2):
            acc = Fraction(0)
            for e1, v1 in h1:
                for e2, v2 in h2:
                    acc += v1 * v2 * monomial_sphere_ratio(tuple(x + y for x, y in zip(e1, e2)))
            G[r, c] = acc
    return G


def frac_kron(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    return np.kron(A, B.astype(object)) if A.dtype == object else np.kron(A, B)


def to_float(A: np.ndarray) -> np.ndarray:
    return np.array(A, dtype=float) if A.dtype == object else A


# ----------------------------------------------------------------------
# Clifford-valued coordinate space


@dataclass(frozen=True)
class Layout:
    """Index bookkeeping for coordinate space up to degree N."""

    n: int
    N: int

    @property
    def d(self) -> int:
        return self.n + 1

    @property
    def blades(self) -> int:
        return 1 << self.n

    def block_dim(self, m: int) -> int:
        return scalar_dim(self.d, m) * self.blades

    def offset(self, m: int) -> int:
        return sum(self.block_dim(k) for k in range(m))

    def block(self, m: int) -> slice:
        o = self.offset(m)
        return slice(o, o + self.block_dim(m))

    @property
    def dim(self) -> int:
        return self.offset(self.N + 1)

    def degrees(self) -> np.ndarray:
        return np.concatenate([np.full(self.block_dim(m), m) for m in range(self.N + 1)])


def harmonic_to_coords(h: CliffordPolynomial, m: int) -> np.ndarray:
    """Exact coordinate vector (Fractions) of a harmonic homogeneous degree-m polynomial."""
    d, nb = h.n + 1, 1 << h.n
    idx = harmonic_index(d, m)
    pos = {a: i for i, a in enumerate(idx)}
    v = np.empty(len(idx) * nb, dtype=object)
    v.fill(Fraction(0))
    for a, c in h.terms.items():
        if a in pos:
            for mask, val in c.items():
                v[pos[a] * nb + mask] += val
    return v


def coords_to_harmonic(v: Sequence, n: int, m: int) -> CliffordPolynomial:
    d, nb = n + 1, 1 << n
    out: dict[Alpha, dict[int, Fraction]] = {}
    for s, a in enumerate(harmonic_index(d, m)):
        h = scalar_harmonic(d, a)
        for mask in range(nb):
            val = v[s * nb + mask]
            if val == 0:
                continue
            for e, hv in h:
                out.setdefault(e, {})
                out[e][mask] = out[e].get(mask, 0) + hv * val
    return CliffordPolynomial(n, {e: Multivector(n, c) for e, c in out.items()})


def polynomial_to_coords(p: CliffordPolynomial, N: int, strict: bool = True) -> np.ndarray:
    """Exact coordinate vector of p restricted to S^n, truncated at degree N."""
    return _to_coords(p, N, strict)[0]


def polynomial_to_coords_tracked(p: CliffordPolynomial, N: int) -> tuple[np.ndarray, float]:
    """Truncated coordinates and the L^2 norm of the dropped part."""
    return _to_coords(p, N, False)


def _to_coords(p: CliffordPolynomial, N: int, strict: bool) -> tuple[np.ndarray, float]:
    lay = Layout(p.n, max(N, 0))
    comps: dict[int, CliffordPolynomial] = {}
    for k in range(p.degree() + 1):
        hk = p.homogeneous_part(k)
        if hk.is_zero():
            continue
        for m, h in harmonic_decompose(hk).items():
            comps[m] = comps[m] + h if m in comps else h
    v = np.empty(lay.dim, dtype=object)
    v.fill(Fraction(0))
    overflow = {m: h for m, h in comps.items() if m > N and not h.is_zero()}
    disc = 0.0
    if overflow:
        from .polynomial import sphere_inner_product

        disc = sum(float(sphere_inner_product(h, h).scalar_part) for h in overflow.values()) ** 0.5
        if strict:
            raise TruncationError(f"degree {max(overflow)} exceeds truncation N={N}", disc)
    for m, h in comps.items():
        if m <= N:
            v[lay.block(m)] = harmonic_to_coords(h, m)
    return v, disc


def coords_to_polynomial(v: Sequence, n: int, N: int) -> CliffordPolynomial:
    lay = Layout(n, N)
    out = CliffordPolynomial.zero(n)
    for m in range(N + 1):
        out = out + coords_to_harmonic(v[lay.block(m)], n, m)
    return out


# ----------------------------------------------------------------------
# exact coordinate-space operators


@lru_cache(maxsize=None)
def coord_gamma_block(n: int, m: int, conj: bool = False) -> np.ndarray:
    """Gamma_0 (or its bar) on the degree-m block of coordinate space, exact int64."""
    d = n + 1
    dim = scalar_dim(d, m) * (1 << n)
    M = np.zeros((dim, dim), dtype=np.int64)
    s0 = -1 if conj else 1
    for j in range(1, n + 1):
        C = left_mult_matrix(n, 1 << (j - 1)).astype(np.int64)
        M += s0 * np.kron(scalar_angular(d, m, 0, j), C)
    for i in range(1, n + 1):
        for j in range(i + 1, n + 1):
            C = left_mult_matrix(n, (1 << (i - 1)) | (1 << (j - 1))).astype(np.int64)
            M -= np.kron(scalar_angular(d, m, i, j), C)
    M.setflags(write=False)
    return M


@lru_cache(maxsize=None)
def coord_mult_blocks(n: int, m: int, conj: bool = False):
    """Multiplication by w (or wbar) from degree m: (to m+1, to m-1) exact blocks."""
    d = n + 1
    up = down = None
    for j in range(d):
        u, dn = scalar_mult_var(d, m, j)
        C = left_mult_matrix(n, 0 if j == 0 else 1 << (j - 1)).astype(int)
        if conj and j > 0:
            C = -C
        tu = frac_kron(u, C)
        up = tu if up is None else up + tu
        if dn is not None:
            td = frac_kron(dn, C)
            down = td if down is None else down + td
    return up, down


def coord_gram(n: int, N: int) -> np.ndarray:
    """Float Gram matrix of coordinate space under raw surface measure.

    Cross-degree blocks are zero by orthogonality of spherical harmonics of
    different degree; :func:`scalar_gram_ratio` verifies that exactly.
    """
    d = n + 1
    lay = Layout(n, N)
    G = np.zeros((lay.dim, lay.dim))
    eye = np.eye(1 << n)
    area = sphere_area(n)
    for m in range(N + 1):
        G[lay.block(m), lay.block(m)] = np.kron(to_float(scalar_gram_ratio(d, m, m)), eye) * area
    return G


# ----------------------------------------------------------------------
# spaces H_m, M_m and the Almansi-Fischer splitting


def _exact_nullspace(A: np.ndarray) -> list[list[Fraction]]:
    """Null space of a Fraction matrix by reduced row echelon form."""
    A = [list(map(Fraction, row)) for row in A]
    rows, cols = len(A), len(A[0]) if A else 0
    pivots = []
    r = 0
    for c in range(cols):
        p = next((i for i in range(r, rows) if A[i][c] != 0), None)
        if p is None:
            continue
        A[r], A[p] = A[p], A[r]
        inv = 1 / A[r][c]
        A[r] = [v * inv for v in A[r]]
        for i in range(rows):
            if i != r and A[i][c] != 0:
                f = A[i][c]
                A[i] = [a - f * b for a, b in zip(A[i], A[r])]
        pivots.append(c)
        r += 1
        if r == rows:
            break
    free = [c for c in range(cols) if c not in pivots]
    basis = []
    for f in free:
        v = [Fraction(0)] * cols
        v[f] = Fraction(1)
        for i, pc in enumerate(pivots):
            v[pc] = -A[i][f]
        basis.append(v)
    return basis


def build_space(tag: str, n: int, m: int) -> list[CliffordPolynomial]:
    """Real-linear basis of H_m (harmonic) or M_m (monogenic), homogeneous degree m."""
    if m < 0:
        raise ContractError("degree must be >= 0")
    d, nb = n + 1, 1 << n
    H = [
        CliffordPolynomial.from_scalar(n, scalar_harmonic_dict(d, a), Multivector(n, {mask: 1}))
        for a in harmonic_index(d, m)
        for mask in range(nb)
    ]
    if tag == "H":
        return H
    if tag != "M":
        raise ValueError(f"unknown space tag {tag!r}")
    if m == 0:
        return H
    # D_0 maps H_m into H_{m-1}; solve for its kernel in coordinates
    A = np.stack([harmonic_to_coords(apply_diff_op("D0", h), m - 1) for h in H], axis=1)
    out = []
    for v in _exact_nullspace(A):
        out.append(coords_to_harmonic(v, n, m))
    return out


def _gamma_eigs(n: int, m: int) -> tuple[int, int]:
    """Gamma_0 eigenvalues on the two Almansi-Fischer parts of H_m."""
    return -m, n + m - 1


@lru_cache(maxsize=None)
def pq_projectors(n: int, m: int) -> tuple[np.ndarray, np.ndarray, int]:
    """Spectral projectors of Gamma_0 on coordinate block m as integer numerators.

    Returns (P_num, Q_num, den) with projectors P_num/den and Q_num/den.
    Raises ContractError if Gamma_0 does not satisfy its quadratic
    minimal polynomial there.
    """
    G = coord_gamma_block(n, m)
    dim = G.shape[0]
    eye = np.eye(dim, dtype=np.int64)
    if m == 0:
        if G.any():
            raise ContractError("Gamma_0 does not annihilate constants")
        return eye, np.zeros_like(eye), 1
    lp, lq = _gamma_eigs(n, m)
    if ((G - lp * eye) @ (G - lq * eye)).any():
        raise ContractError(f"Gamma_0 on H_{m} is not diagonalizable with eigenvalues {lp}, {lq}")
    den = lq - lp
    # P = (lq - G)/(lq - lp), Q = (G - lp)/(lq - lp)
    return lq * eye - G, G - lp * eye, den


def _column_basis(P: np.ndarray) -> np.ndarray:
    """Linearly independent columns of an integer projector numerator (pivoted QR)."""
    F = P.astype(float)
    if not F.any():
        return P[:, :0]
    _, R, piv = sla.qr(F, mode="economic", pivoting=True)
    diag = np.abs(np.diag(R))
    rank = int(np.sum(diag > diag[0] * 1e-10))
    return P[:, np.sort(piv[:rank])]


def almansi_fischer(h: CliffordPolynomial) -> tuple[CliffordPolynomial, CliffordPolynomial]:
    """Split harmonic homogeneous h = p_k + xbar * bar(p_{k-1}).

    Both returned polynomials are left monogenic (D_0 p = 0).  The split is
    the Gamma_0 eigenprojection; p_{k-1} is then recovered from the Q-part.
    """
    if h.is_zero():
        return h, h
    if not h.is_homogeneous():
        raise ContractError("almansi_fischer needs a homogeneous polynomial")
    if not apply_diff_op("Laplacian", h).is_zero():
        raise ContractError("almansi_fischer needs a harmonic polynomial")
    n, k = h.n, h.degree()
    v = harmonic_to_coords(h, k)
    P, Q, den = pq_projectors(n, k)
    pk = coords_to_harmonic(P.astype(object).dot(v) / den, n, k)
    qpart = coords_to_harmonic(Q.astype(object).dot(v) / den, n, k)
    pk1 = recover_q_generator(qpart)
    return pk, pk1


def recover_q_generator(q: CliffordPolynomial) -> CliffordPolynomial:
    """Given q = xbar * bar(p) with p homogeneous, return p.

    Multiply on the left by x: x xbar = r^2, so bar(p) = (x q) / r^2.
    """
    if q.is_zero():
        return q
    from .polynomial import _sp_div_r2

    xq = CliffordPolynomial.x(q.n) * q
    comps = {mask: _sp_div_r2(sp, q.n + 1) for mask, sp in xq.blade_components().items()}
    return CliffordPolynomial.from_blade_components(q.n, comps).bar()


# ----------------------------------------------------------------------
# descriptor


@dataclass(frozen=True)
class BasisElement:
    degree: int
    tag: str  # "P" or "Q"
    index: int


@dataclass(frozen=True, eq=False)
class BasisDescriptor:
    """Truncated real basis of L^2(S^n, Cl_n), degrees 0..N, split into P/Q parts.

    ``C`` maps published-basis coefficients to coordinate space (exact
    Fractions in ``C_exact``); ``gram`` is the Gram matrix of the published
    basis under raw surface measure.
    """

    n: int
    N: int
    elements: tuple[BasisElement, ...]
    C_exact: np.ndarray = field(repr=False)
    C: np.ndarray = field(repr=False)
    C_inv: np.ndarray = field(repr=False)
    gram: np.ndarray = field(repr=False)
    gram_coords: np.ndarray = field(repr=False)

    @property
    def layout(self) -> Layout:
        return Layout(self.n, self.N)

    @property
    def dim(self) -> int:
        return len(self.elements)

    def degrees(self) -> np.ndarray:
        return np.array([e.degree for e in self.elements])

    def tags(self) -> np.ndarray:
        return np.array([e.tag for e in self.elements])

    def indices(self, max_degree: int | None = None, tag: str | None = None) -> np.ndarray:
        sel = [
            i
            for i, e in enumerate(self.elements)
            if (max_degree is None or e.degree <= max_degree) and (tag is None or e.tag == tag)
        ]
        return np.array(sel, dtype=int)

    def degree_block(self, m: int) -> np.ndarray:
        return np.array([i for i, e in enumerate(self.elements) if e.degree == m], dtype=int)

    def polynomial(self, i: int) -> CliffordPolynomial:
        e = self.elements[i]
        lay = self.layout
        return coords_to_harmonic(self.C_exact[lay.block(e.degree), i], self.n, e.degree)

    def synth(self, c: Sequence[float]) -> np.ndarray:
        """Coordinate-space vector of sum_i c_i basis_i."""
        return self.C @ np.asarray(c, dtype=float)

    def evaluate(self, c: Sequence[float], points: np.ndarray) -> np.ndarray:
        """Values (npts, 2**n) of sum_i c_i basis_i at sphere points (npts, n+1)."""
        return evaluate_coords(self.synth(c), self.n, self.N, points)

    def norm(self, c: Sequence[float]) -> float:
        c = np.asarray(c, dtype=float)
        return float(np.sqrt(c @ self.gram @ c))

    def whitening(self) -> np.ndarray:
        """W with W^T G W = I (inverse Cholesky factor), for conditioning."""
        L = np.linalg.cholesky(self.gram)
        return sla.solve_triangular(L, np.eye(self.dim), lower=True).T

    def to_json(self, include_polynomials: bool = True) -> dict:
        out = {
            "n": self.n,
            "N": self.N,
            "elements": [{"degree": e.degree, "tag": e.tag, "index": e.index} for e in self.elements],
            "gram": [float(v) for v in self.gram.ravel()],
        }
        if include_polynomials:
            out["basis"] = [polynomial_to_json(self.polynomial(i)) for i in range(self.dim)]
        return out

    def dumps(self, **kw) -> str:
        return json.dumps(self.to_json(**kw), sort_keys=True)


@lru_cache(maxsize=None)
def assemble_basis(n: int, N: int) -> BasisDescriptor:
    """P/Q-split truncated basis for degrees 0..N with its Gram matrix."""
    if N < 0:
        raise ContractError("truncation degree must be >= 0")
    lay = Layout(n, N)
    elements: list[BasisElement] = []
    C = np.zeros((lay.dim, lay.dim), dtype=np.int64)
    col = 0
    for m in range(N + 1):
        P, Q, _ = pq_projectors(n, m)
        blk = lay.block(m)
        for tag, proj in (("P", P), ("Q", Q)):
            cols = _column_basis(proj)
            C[blk, col : col + cols.shape[1]] = cols
            elements.extend(BasisElement(m, tag, i) for i in range(cols.shape[1]))
            col += cols.shape[1]
    if col != lay.dim:
        raise ContractError(f"P/Q split produced {col} vectors for a space of dimension {lay.dim}")
    Gc = coord_gram(n, N)
    Cf = C.astype(float)
    G = Cf.T @ Gc @ Cf
    G = 0.5 * (G + G.T)
    Cinv = np.linalg.inv(Cf)
    C.setflags(write=False)
    return BasisDescriptor(n, N, tuple(elements), C, Cf, Cinv, G, Gc)


def expand(p: CliffordPolynomial, basis: BasisDescriptor) -> np.ndarray:
    """Coefficients of p|S^n in the published basis.

    Equivalent to solving G c = b with b_i = <basis_i, p>, but computed
    exactly through coordinates.  Raises TruncationError on overflow.
    """
    v = polynomial_to_coords(p, basis.N)
    return basis.C_inv @ to_float(v)


def expand_inner_products(p: CliffordPolynomial, basis: BasisDescriptor) -> np.ndarray:
    """Route through G c = b, b_i = <basis_i, p>; cross-check for :func:`expand`."""
    from .polynomial import sphere_inner_product

    b = np.array([float(sphere_inner_product(basis.polynomial(i), p).scalar_part) for i in range(basis.dim)])
    return np.linalg.solve(basis.gram, b)


# ----------------------------------------------------------------------
# pointwise evaluation of coordinate vectors


def scalar_harmonics_at(d: int, m: int, points: np.ndarray) -> np.ndarray:
    """(npts, dim_m) values of the degree-m scalar harmonic basis."""
    points = np.asarray(points, dtype=float)
    out = np.zeros((points.shape[0], scalar_dim(d, m)))
    for c, a in enumerate(harmonic_index(d, m)):
        for e, v in scalar_harmonic(d, a):
            out[:, c] += float(v) * np.prod(points ** np.array(e), axis=1)
    return out


def evaluate_coords(v: np.ndarray, n: int, N: int, points: np.ndarray) -> np.ndarray:
    """Values (npts, 2**n) of a coordinate-space vector at points."""
    lay = Layout(n, N)
    nb = 1 << n
    out = np.zeros((np.asarray(points).shape[0], nb))
    v = np.asarray(v, dtype=float)
    for m in range(N + 1):
        Y = scalar_harmonics_at(n + 1, m, points)
        out += Y @ v[lay.block(m)].reshape(-1, nb)
    return out


def sphere_restrict(p: CliffordPolynomial) -> CliffordPolynomial:
    return reduce_on_sphere(p)
