"""Quadrature on S^2 for the spherical Cauchy transform and its relatives.

Meshes are latitude bands around an axis, each band cut into cells of equal
area; a node sits at the centre of its cell and carries the midpoint-rule
weight sin(theta) dtheta dphi.  Singular kernels are handled by dropping the
nodes within geodesic distance ``eps`` (default 2h) of the target; nothing is
added back.

Kernel normalization: ``"calibrated"`` divides by omega_{n-1}, which is the
constant that makes the whole-sphere transform invert D_s; ``"stated"``
divides by omega_n.  The first is the default.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Sequence

import numpy as np

from .clifford import blade_product, left_mult_matrix
from .polynomial import CliffordPolynomial, apply_diff_op, mult_paravector, sphere_area

NORMALIZATIONS = ("calibrated", "stated")
PI_FORMS = ("stated", "derived")

_CHUNK = 1_500_000  # target*source pairs per kernel block


class MeshDomainError(ValueError):
    pass


# ----------------------------------------------------------------------
# vectorized Clifford helpers (last axis holds the 2**n blade coefficients)


@lru_cache(maxsize=None)
def _structure(n: int) -> np.ndarray:
    d = 1 << n
    S = np.zeros((d, d, d))
    for a in range(d):
        for b in range(d):
            s, m = blade_product(a, b)
            S[a, b, m] = s
    S.setflags(write=False)
    return S


def cl_mul(a: np.ndarray, b: np.ndarray, n: int) -> np.ndarray:
    """Elementwise geometric product of multivector arrays (broadcasting)."""
    return np.einsum("...a,...b,abc->...c", a, b, _structure(n), optimize=True)


def paravector_array(x: np.ndarray) -> np.ndarray:
    """(..., n+1) points -> (..., 2**n) multivectors x_0 + sum x_j e_j."""
    x = np.asarray(x, dtype=float)
    n = x.shape[-1] - 1
    out = np.zeros(x.shape[:-1] + (1 << n,))
    out[..., 0] = x[..., 0]
    for j in range(1, n + 1):
        out[..., 1 << (j - 1)] = x[..., j]
    return out


def bar_paravector(x: np.ndarray) -> np.ndarray:
    y = np.array(x, dtype=float, copy=True)
    y[..., 1:] *= -1
    return y


def _normalizer(n: int, normalization: str) -> float:
    if normalization == "calibrated":
        return 1.0 / sphere_area(n - 1)
    if normalization == "stated":
        return 1.0 / sphere_area(n)
    raise ValueError(f"normalization must be one of {NORMALIZATIONS}")


def polynomial_values(p: CliffordPolynomial, points: np.ndarray) -> np.ndarray:
    """(npts, 2**n) values of a Clifford polynomial."""
    points = np.asarray(points, dtype=float)
    out = np.zeros((points.shape[0], 1 << p.n))
    for a, c in p.terms.items():
        mono = np.prod(points ** np.array(a), axis=1)
        out += np.outer(mono, c.to_array())
    return out


def _values_of(f, points: np.ndarray, n: int) -> np.ndarray:
    if isinstance(f, CliffordPolynomial):
        return polynomial_values(f, points)
    if callable(f):
        return np.asarray(f(points), dtype=float).reshape(len(points), 1 << n)
    raise TypeError("f must be a CliffordPolynomial or a callable on (npts, n+1) arrays")


# ----------------------------------------------------------------------
# meshes


def _frame(axis: Sequence[float]) -> np.ndarray:
    """Orthonormal 3x3 matrix whose first column is ``axis``."""
    a = np.asarray(axis, dtype=float)
    a = a / np.linalg.norm(a)
    e = np.array([1.0, 0.0, 0.0])
    u = e - a
    if np.linalg.norm(u) < 1e-14:
        return np.eye(3)
    u /= np.linalg.norm(u)
    H = np.eye(3) - 2 * np.outer(u, u)  # Householder reflection with H e = a
    return H


def _bands(theta_max: float, h: float):
    nb = max(1, math.ceil(theta_max / h - 1e-9))
    dth = theta_max / nb
    th, ph, wt = [], [], []
    for i in range(nb):
        t = (i + 0.5) * dth
        k = max(3, round(2 * math.pi * math.sin(t) / dth))
        dph = 2 * math.pi / k
        th.append(np.full(k, t))
        ph.append((np.arange(k) + 0.5 * (i % 2)) * dph)
        wt.append(np.full(k, math.sin(t) * dth * dph))
    return np.concatenate(th), np.concatenate(ph), np.concatenate(wt)


def _place(frame: np.ndarray, theta: np.ndarray, phi: np.ndarray) -> np.ndarray:
    local = np.stack([np.cos(theta), np.sin(theta) * np.cos(phi), np.sin(theta) * np.sin(phi)], axis=1)
    return local @ frame.T


@dataclass(frozen=True, eq=False)
class CapMesh:
    """Nodes and weights on a spherical cap of S^2 (the whole sphere if theta_c = pi)."""

    axis: np.ndarray
    theta_c: float
    h: float
    nodes: np.ndarray = field(repr=False)
    weights: np.ndarray = field(repr=False)
    boundary_nodes: np.ndarray = field(repr=False)
    boundary_weights: np.ndarray = field(repr=False)
    conormals: np.ndarray = field(repr=False)

    n = 2

    @property
    def size(self) -> int:
        return len(self.weights)

    @property
    def is_sphere(self) -> bool:
        return self.theta_c >= math.pi

    def area(self) -> float:
        return float(self.weights.sum())

    def boundary_length(self) -> float:
        return float(self.boundary_weights.sum())

    def exact_area(self) -> float:
        return 2 * math.pi * (1 - math.cos(self.theta_c))

    def exact_length(self) -> float:
        return 0.0 if self.is_sphere else 2 * math.pi * math.sin(self.theta_c)

    def geodesic_to_boundary(self, points: np.ndarray) -> np.ndarray:
        ang = np.arccos(np.clip(np.asarray(points) @ self.axis, -1, 1))
        return self.theta_c - ang

    def rotated(self, axis: Sequence[float]) -> "CapMesh":
        """Same mesh carried by the reflection that maps the old axis to ``axis``."""
        R = _frame(axis) @ _frame(self.axis).T
        return CapMesh(
            R @ self.axis, self.theta_c, self.h, self.nodes @ R.T, self.weights,
            self.boundary_nodes @ R.T, self.boundary_weights, self.conormals @ R.T,
        )

    def to_json(self) -> dict:
        return {
            "axis": self.axis.tolist(),
            "theta_c": self.theta_c,
            "h": self.h,
            "nodes": self.nodes.tolist(),
            "weights": self.weights.tolist(),
            "boundary_nodes": self.boundary_nodes.tolist(),
            "boundary_weights": self.boundary_weights.tolist(),
            "conormals": self.conormals.tolist(),
        }

    @classmethod
    def from_json(cls, obj: dict) -> "CapMesh":
        arr = lambda k: np.asarray(obj[k], dtype=float)  # noqa: E731
        return cls(
            arr("axis"), float(obj["theta_c"]), float(obj["h"]), arr("nodes").reshape(-1, 3),
            arr("weights"), arr("boundary_nodes").reshape(-1, 3), arr("boundary_weights"),
            arr("conormals").reshape(-1, 3),
        )


@lru_cache(maxsize=32)
def _mesh(theta_c: float, h: float, axis: tuple) -> CapMesh:
    F = _frame(axis)
    th, ph, wt = _bands(theta_c, h)
    nodes = _place(F, th, ph)
    if theta_c >= math.pi:
        empty = np.zeros((0, 3))
        return CapMesh(F[:, 0].copy(), math.pi, h, nodes, wt, empty, np.zeros(0), empty)
    k = max(3, math.ceil(2 * math.pi * math.sin(theta_c) / h))
    bph = (np.arange(k) + 0.5) * 2 * math.pi / k
    bth = np.full(k, theta_c)
    bnodes = _place(F, bth, bph)
    # d/dtheta of the position: points away from the axis, tangent to the sphere
    local = np.stack([-np.sin(bth), np.cos(bth) * np.cos(bph), np.cos(bth) * np.sin(bph)], axis=1)
    conormals = local @ F.T
    bw = np.full(k, 2 * math.pi * math.sin(theta_c) / k)
    return CapMesh(F[:, 0].copy(), theta_c, h, nodes, wt, bnodes, bw, conormals)


def build_cap_mesh(theta_c: float, h: float, axis: Sequence[float] = (1.0, 0.0, 0.0)) -> CapMesh:
    """Cap {v : angle(v, axis) < theta_c} with spacing about h."""
    if not 0 < theta_c < math.pi:
        raise MeshDomainError(f"cap opening angle must lie in (0, pi), got {theta_c}")
    if not h > 0:
        raise MeshDomainError(f"spacing must be positive, got {h}")
    return _mesh(float(theta_c), float(h), tuple(float(a) for a in axis))


def build_sphere_mesh(h: float, axis: Sequence[float] = (1.0, 0.0, 0.0)) -> CapMesh:
    """Whole S^2, bands around ``axis``; centring on a target makes exclusion symmetric."""
    if not h > 0:
        raise MeshDomainError(f"spacing must be positive, got {h}")
    return _mesh(math.pi, float(h), tuple(float(a) for a in axis))


@dataclass(frozen=True, eq=False)
class MeshFunction:
    """Cl_n values at a list of sphere points."""

    points: np.ndarray = field(repr=False)
    values: np.ndarray = field(repr=False)
    n: int = 2

    def __post_init__(self):
        if len(self.points) != len(self.values):
            raise ValueError(f"{len(self.values)} values for {len(self.points)} points")

    def to_json(self) -> dict:
        return {"n": self.n, "points": self.points.tolist(), "values": self.values.tolist()}

    @classmethod
    def from_json(cls, obj: dict) -> "MeshFunction":
        n = int(obj["n"])
        return cls(np.asarray(obj["points"], float).reshape(-1, n + 1),
                   np.asarray(obj["values"], float).reshape(-1, 1 << n), n)


def sample(f, points: np.ndarray, n: int = 2) -> MeshFunction:
    points = np.asarray(points, dtype=float)
    return MeshFunction(points, _values_of(f, points, n), n)


def _raw(f, n: int) -> np.ndarray:
    return f.values if isinstance(f, MeshFunction) else np.asarray(f, dtype=float).reshape(-1, 1 << n)


# ----------------------------------------------------------------------
# kernels


def _chord(eps: float) -> float:
    return 2 * math.sin(min(eps, math.pi) / 2)


def _chunks(nt: int, ns: int):
    step = max(1, _CHUNK // max(ns, 1))
    for i in range(0, nt, step):
        yield slice(i, min(nt, i + step))


def _apply(K: np.ndarray, wf: np.ndarray, n: int) -> np.ndarray:
    """sum_s K[t, s] * wf[s] (geometric product, kernel on the left)."""
    out = np.zeros((K.shape[0], 1 << n))
    for m in range(1 << n):
        if not np.any(K[:, :, m]):
            continue
        out += (K[:, :, m] @ wf) @ left_mult_matrix(n, m).T
    return out


def cauchy_kernel(targets: np.ndarray, sources: np.ndarray, eps: float) -> np.ndarray:
    """G_s(w - v) = bar(w - v)/|w - v|^n as (nt, ns, 2**n); zero inside the exclusion."""
    z = targets[:, None, :] - sources[None, :, :]
    n = z.shape[-1] - 1
    r = np.linalg.norm(z, axis=-1)
    keep = r >= max(_chord(eps), 1e-300)
    inv = np.where(keep, 1.0, 0.0) / np.where(keep, r, 1.0) ** n
    return paravector_array(bar_paravector(z)) * inv[..., None]


def _tangent_coeffs(w: np.ndarray, conj: bool) -> np.ndarray:
    """c_k(w) with Gamma0 = sum_k c_k d_k (Gamma0bar if conj); shape (nt, n+1, 2**n)."""
    nt, d = w.shape
    n = d - 1
    c = np.zeros((nt, d, 1 << n))
    s0 = -1.0 if conj else 1.0
    for j in range(1, d):
        mj = 1 << (j - 1)
        # +-e_j (w_0 d_j - w_j d_0)
        c[:, j, mj] += s0 * w[:, 0]
        c[:, 0, mj] -= s0 * w[:, j]
        for i in range(1, j):
            sgn, m = blade_product(1 << (i - 1), mj)
            # -e_i e_j (w_i d_j - w_j d_i)
            c[:, j, m] -= sgn * w[:, i]
            c[:, i, m] += sgn * w[:, j]
    return c


def pi_kernel(targets: np.ndarray, sources: np.ndarray, eps: float, form: str = "derived",
              normalization: str = "calibrated", variant: str = "s0") -> tuple[np.ndarray, np.ndarray]:
    """(K, P): singular kernel (nt, ns, 2**n) and pointwise multiplier (nt, 2**n).

    Pi_{s,0} f(w) ~ sum_s K[w, v_s] f(v_s) dv_s + P(w) f(w).

    ``stated``: the three-kernel expression
        [(1-n-wbar^2)/|z|^n + n (vbar - <w,v> wbar) bar(z)/|z|^{n+2}
         + (1-n/2) wbar bar(z)/|z|^n] / omega  and  P = (1-n)/n,
    ``derived``: wbar [sum_k c_k(w) d_k G_s + (1 - n/2) G_s] / omega_{n-1} with
        c_k the coefficients of Gamma0bar and P = wbar (1/n) sum_k c_k ebar_k,
        the jump of a tangential derivative of the Cauchy kernel.

    ``variant="s1"`` (derived form only) drops the wbar T part, giving
    Pi_{s,1} = Dsbar T.
    """
    if form not in PI_FORMS:
        raise ValueError(f"form must be one of {PI_FORMS}")
    if variant not in ("s0", "s1"):
        raise ValueError("variant must be 's0' or 's1'")
    if variant == "s1" and form == "stated":
        raise ValueError("the stated expression exists for Pi_{s,0} only")
    z = targets[:, None, :] - sources[None, :, :]
    nt, ns, d = z.shape
    n = d - 1
    r = np.linalg.norm(z, axis=-1)
    keep = r >= max(_chord(eps), 1e-300)
    rs = np.where(keep, r, 1.0)
    mask = keep.astype(float)
    zb = paravector_array(bar_paravector(z))
    wb = paravector_array(bar_paravector(targets))  # (nt, D)
    G = zb * (mask / rs**n)[..., None]
    one = np.zeros(1 << n)
    one[0] = 1.0
    if form == "stated":
        c = _normalizer(n, normalization)
        k1 = (1 - n) * one - cl_mul(wb, wb, n)  # (nt, D)
        K = k1[:, None, :] * (mask / rs**n)[..., None]
        vb = paravector_array(bar_paravector(sources))[None, :, :]
        ip = targets @ sources.T  # <w, v>
        P = vb - ip[..., None] * wb[:, None, :]
        K = K + n * cl_mul(P, zb, n) * (mask / rs ** (n + 2))[..., None]
        K = K + (1 - n / 2) * cl_mul(wb[:, None, :], G, n)
        pointwise = np.tile((1 - n) / n * one, (nt, 1))
        return c * K, pointwise
    c = 1.0 / sphere_area(n - 1)
    coeff = _tangent_coeffs(targets, conj=True)  # (nt, d, D)
    inner = ((1 - n / 2) if variant == "s0" else -n / 2) * G
    for k in range(d):
        ek = np.zeros(d)
        ek[k] = 1.0
        dG = paravector_array(bar_paravector(ek))[None, None, :] * (mask / rs**n)[..., None]
        dG = dG - n * (z[..., k] * mask / rs ** (n + 2))[..., None] * zb
        inner = inner + cl_mul(coeff[:, None, k, :], dG, n)
    K = c * cl_mul(wb[:, None, :], inner, n)
    jump = np.zeros((nt, 1 << n))
    for k in range(d):
        ek = np.zeros(d)
        ek[k] = 1.0
        jump += cl_mul(coeff[:, k, :], paravector_array(bar_paravector(ek)), n) / n
    return K, cl_mul(wb, jump, n)


# ----------------------------------------------------------------------
# transforms


def _eps(mesh: CapMesh, eps: float | None) -> float:
    return 2 * mesh.h if eps is None else eps


def cauchy_transform_quad(f, mesh: CapMesh, targets: np.ndarray, eps: float | None = None,
                          normalization: str = "calibrated") -> MeshFunction:
    """T_Omega f at targets: omega^{-1} sum_s weight_s G_s(w - v_s) f(v_s)."""
    n = mesh.n
    targets = np.atleast_2d(np.asarray(targets, dtype=float))
    F = _values_of(f, mesh.nodes, n) if not isinstance(f, (MeshFunction, np.ndarray)) else _raw(f, n)
    if len(F) != mesh.size:
        raise ValueError(f"{len(F)} values for a mesh of {mesh.size} nodes")
    wf = F * mesh.weights[:, None]
    c = _normalizer(n, normalization)
    out = np.zeros((len(targets), 1 << n))
    for sl in _chunks(len(targets), mesh.size):
        out[sl] = c * _apply(cauchy_kernel(targets[sl], mesh.nodes, _eps(mesh, eps)), wf, n)
    return MeshFunction(targets, out, n)


def boundary_transform_quad(f, mesh: CapMesh, targets: np.ndarray, normalization: str = "calibrated",
                            orientation: str = "inward") -> tuple[MeshFunction, list[str]]:
    """F f at interior targets: omega^{-1} sum_b weight_b G_s(w - v_b) n(v_b) f(v_b).

    With the kernel written as a function of w - v, integrating D_s by parts
    over the cap produces the boundary term with the inward conormal, so
    ``n = -mesh.conormals`` by default; ``orientation="outward"`` flips it.

    Returns the values and a list of warnings for targets within 3h of the
    boundary (accuracy not guaranteed there).
    """
    if orientation not in ("inward", "outward"):
        raise ValueError("orientation must be 'inward' or 'outward'")
    n = mesh.n
    if mesh.is_sphere:
        raise MeshDomainError("the whole sphere has no boundary")
    targets = np.atleast_2d(np.asarray(targets, dtype=float))
    F = _values_of(f, mesh.boundary_nodes, n) if not isinstance(f, (MeshFunction, np.ndarray)) else _raw(f, n)
    if len(F) != len(mesh.boundary_weights):
        raise ValueError("boundary function does not match boundary nodes")
    warnings = []
    dist = mesh.geodesic_to_boundary(targets)
    close = np.nonzero(dist < 3 * mesh.h)[0]
    if len(close):
        warnings.append(f"{len(close)} target(s) within 3h of the boundary; accuracy not guaranteed")
    nu = paravector_array(mesh.conormals if orientation == "outward" else -mesh.conormals)
    wf = cl_mul(nu, F, n) * mesh.boundary_weights[:, None]
    c = _normalizer(n, normalization)
    out = np.zeros((len(targets), 1 << n))
    for sl in _chunks(len(targets), len(wf)):
        out[sl] = c * _apply(cauchy_kernel(targets[sl], mesh.boundary_nodes, 0.0), wf, n)
    return MeshFunction(targets, out, n), warnings


def pi_s0_quad(f, targets: np.ndarray, h: float, form: str = "stated", eps: float | None = None,
               normalization: str = "calibrated") -> MeshFunction:
    """Pi_{s,0} f at targets by whole-sphere quadrature.

    Each target gets its own copy of the sphere mesh with bands centred on
    it, so the excluded disc is symmetric about the target.
    """
    n = 2
    targets = np.atleast_2d(np.asarray(targets, dtype=float))
    base = build_sphere_mesh(h)
    eps = 2 * h if eps is None else eps
    out = np.zeros((len(targets), 1 << n))
    for i, w in enumerate(targets):
        mesh = base.rotated(w)
        wf = _values_of(f, mesh.nodes, n) * mesh.weights[:, None]
        K, P = pi_kernel(w[None], mesh.nodes, eps, form, normalization)
        out[i] = _apply(K, wf, n)[0] + cl_mul(P[0], _values_of(f, w[None], n)[0], n)
    return MeshFunction(targets, out, n)


def sphere_transform_quad(f, targets: np.ndarray, h: float, eps: float | None = None,
                          normalization: str = "calibrated") -> MeshFunction:
    """Whole-sphere T f with a target-centred mesh for each target."""
    targets = np.atleast_2d(np.asarray(targets, dtype=float))
    base = build_sphere_mesh(h)
    out = np.zeros((len(targets), 4))
    for i, w in enumerate(targets):
        mesh = base.rotated(w)
        out[i] = cauchy_transform_quad(f, mesh, w[None], eps, normalization).values[0]
    return MeshFunction(targets, out, 2)


class PiCapOperator:
    """Pi_{s,0} restricted to a cap, as a linear map on node values.

    The kernel is assembled once (targets = sources = mesh nodes); node
    values are (size, 4) arrays.
    """

    def __init__(self, mesh: CapMesh, form: str = "derived", eps: float | None = None,
                 normalization: str = "calibrated", variant: str = "s0"):
        self.mesh = mesh
        self.form = form
        self.variant = variant
        eps = _eps(mesh, eps)
        n = mesh.n
        blocks, points = [], []
        for sl in _chunks(mesh.size, mesh.size):
            K, P = pi_kernel(mesh.nodes[sl], mesh.nodes, eps, form, normalization, variant)
            blocks.append(K * mesh.weights[None, :, None])
            points.append(P)
        K = np.concatenate(blocks)
        # one (size, size) real matrix per blade of the kernel
        self._K = [np.ascontiguousarray(K[:, :, m]) for m in range(1 << n)]
        self._P = np.concatenate(points)

    def __call__(self, F: np.ndarray) -> np.ndarray:
        n = self.mesh.n
        out = cl_mul(self._P, F, n)
        for m, Km in enumerate(self._K):
            out += (Km @ F) @ left_mult_matrix(n, m).T
        return out

    def transpose(self, G: np.ndarray) -> np.ndarray:
        """Action of the coefficient-space transpose."""
        n = self.mesh.n
        out = np.einsum("ta,tab->tb", G, np.stack([_left_dense(p, n) for p in self._P]))
        for m, Km in enumerate(self._K):
            out += (Km.T @ G) @ left_mult_matrix(n, m)
        return out

    def norm_estimate(self, iters: int = 60, seed: int = 0) -> float:
        """Power iteration for the norm in L^2 with the mesh weights."""
        rng = np.random.default_rng(seed)
        s = np.sqrt(self.mesh.weights)[:, None]
        x = rng.normal(size=(self.mesh.size, 1 << self.mesh.n))
        x /= np.linalg.norm(x)
        lam = 0.0
        for _ in range(iters):
            y = s * self(x / s)
            z = self.transpose(s * y) / s
            lam = float(np.linalg.norm(z))
            x = z / lam
        return math.sqrt(lam)


def conjugate_dirac_of_cauchy(points: np.ndarray, pole: np.ndarray, variant: str = "s0") -> np.ndarray:
    """(Dsbar + wbar) G_s(. - pole) (variant s0) or Dsbar G_s(. - pole) (s1) at points."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    n = points.shape[1] - 1
    K, _ = pi_kernel(points, np.asarray(pole, dtype=float)[None], 0.0, "derived", variant=variant)
    return K[:, 0, :] * sphere_area(n - 1)


def _left_dense(a: np.ndarray, n: int) -> np.ndarray:
    return sum(a[m] * left_mult_matrix(n, m) for m in range(1 << n))


# ----------------------------------------------------------------------
# Borel-Pompeiu convergence study


def spherical_dirac(p: CliffordPolynomial) -> CliffordPolynomial:
    """D_s p = w (Gamma0 - n/2) p as a polynomial (to be restricted to the sphere)."""
    g = apply_diff_op("Gamma0", p) - p * (p.n / 2)
    return mult_paravector("w", g)


def interior_targets(theta_c: float, margin: float, axis=(1.0, 0.0, 0.0), rings: int = 2, per_ring: int = 6):
    """Deterministic targets at geodesic distance >= margin from the cap boundary."""
    F = _frame(axis)
    tmax = theta_c - margin
    if tmax <= 0:
        raise MeshDomainError("cap too small for the requested margin")
    th = [0.0] + [tmax * (i + 1) / rings for i in range(rings)]
    pts = [_place(F, np.array([0.0]), np.array([0.0]))]
    for i, t in enumerate(th[1:]):
        ph = (np.arange(per_ring) + 0.25 * (i + 1)) * 2 * math.pi / per_ring
        pts.append(_place(F, np.full(per_ring, t), ph))
    return np.concatenate(pts)


@dataclass(frozen=True)
class ConvergenceRow:
    h: float
    residual: float
    observed_order: float | None


def borel_pompeiu_residual(f: CliffordPolynomial, theta_c: float = math.pi / 3,
                           hs: Sequence[float] = (0.08, 0.04, 0.02),
                           targets: np.ndarray | None = None) -> list[ConvergenceRow]:
    """max |F f + T D_s f - f| over interior targets, for each spacing in ``hs``."""
    if f.n != 2:
        raise ValueError("quadrature is implemented for n = 2")
    if targets is None:
        targets = interior_targets(theta_c, 3 * max(hs))
    dsf = spherical_dirac(f)
    exact = polynomial_values(f, targets)
    rows: list[ConvergenceRow] = []
    prev = None
    for h in hs:
        mesh = build_cap_mesh(theta_c, h)
        Fb, _ = boundary_transform_quad(f, mesh, targets)
        Tv = cauchy_transform_quad(dsf, mesh, targets)
        res = float(np.abs(Fb.values + Tv.values - exact).max())
        order = None
        if prev is not None and res > 0 and prev[1] > 0:
            order = math.log(prev[1] / res) / math.log(prev[0] / h)
        rows.append(ConvergenceRow(h, res, order))
        prev = (h, res)
    return rows


def convergence_csv(rows: Sequence[ConvergenceRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["h", "residual", "observed_order"])
    for r in rows:
        w.writerow([f"{r.h:.12g}", f"{r.residual:.12g}", "" if r.observed_order is None else f"{r.observed_order:.12g}"])
    return buf.getvalue()


# ----------------------------------------------------------------------
# kernel mass


def kernel_mass(n: int, h: float = 0.02) -> dict:
    """theta-integral constant, full sphere integral of |w-v|^{-(n-1)}, quadrature check.

    The quadrature (n = 2 only) uses a mesh centred on the target, whose
    nodes never coincide with it, so no exclusion is needed.
    """
    if n < 2:
        raise ValueError("kernel mass needs n >= 2")
    theta = math.sqrt(math.pi) * math.gamma(n / 2) / math.gamma((n + 1) / 2)
    full = sphere_area(n - 1) * theta
    quad = None
    if n == 2:
        mesh = build_sphere_mesh(h)
        r = np.linalg.norm(mesh.nodes - mesh.axis, axis=1)
        quad = float(np.sum(mesh.weights / r ** (n - 1)))
    return {"n": n, "theta_integral": theta, "sphere_integral": full, "quadrature": quad, "h": h}


def cauchy_lp_ratios(fs: Sequence[CliffordPolynomial], h: float = 0.08, ps: Sequence[float] = (2.0, 4.0),
                     normalization: str = "calibrated") -> np.ndarray:
    """||T f||_p / ||f||_p on the whole sphere (n = 2), nodes as targets; shape (len(fs), len(ps)).

    The kernel is assembled once and reused for every input.
    """
    mesh = build_sphere_mesh(h)
    K = cauchy_kernel(mesh.nodes, mesh.nodes, _eps(mesh, None))
    c = _normalizer(2, normalization)
    out = np.zeros((len(fs), len(ps)))
    for i, f in enumerate(fs):
        F = _values_of(f, mesh.nodes, 2)
        TF = c * _apply(K, F * mesh.weights[:, None], 2)
        a, b = np.linalg.norm(F, axis=1), np.linalg.norm(TF, axis=1)
        for j, p in enumerate(ps):
            out[i, j] = (mesh.weights @ b**p) ** (1 / p) / (mesh.weights @ a**p) ** (1 / p)
    return out


def dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True)

