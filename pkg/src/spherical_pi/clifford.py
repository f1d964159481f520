"""Clifford algebra Cl_n with generators e_1..e_n, e_i^2 = -1.

Blades are stored as bitmasks (bit i-1 set <=> e_i present), which is the
sorted-subset normal form.  The empty blade is the identity e_0.
Coefficients are kept exactly as given: ``Fraction``/``int`` for identity
checks, ``float`` for numerical work.
"""

from __future__ import annotations

import math
from fractions import Fraction
from functools import lru_cache
from numbers import Real
from typing import Iterable, Mapping

import numpy as np

MAX_GENERATORS = 10

INVOLUTIONS = ("reversion", "conjugation", "bar")


class DimensionError(ValueError):
    """Operands live in Clifford algebras with different generator counts."""


def blade_from_indices(indices: Iterable[int]) -> int:
    mask = 0
    for i in indices:
        if i < 1:
            raise ValueError(f"generator index must be >= 1, got {i}")
        bit = 1 << (i - 1)
        if mask & bit:
            raise ValueError(f"repeated generator e_{i} in blade")
        mask |= bit
    return mask


def blade_indices(mask: int) -> tuple[int, ...]:
    out = []
    i = 1
    while mask:
        if mask & 1:
            out.append(i)
        mask >>= 1
        i += 1
    return tuple(out)


def grade(mask: int) -> int:
    return bin(mask).count("1")


@lru_cache(maxsize=None)
def blade_product(a: int, b: int) -> tuple[int, int]:
    """Return (sign, mask) with e_a e_b = sign * e_mask."""
    # transpositions needed to sort the concatenated index list
    swaps = 0
    x = a >> 1
    while x:
        swaps += grade(x & b)
        x >>= 1
    # each shared generator contracts to e_i^2 = -1
    swaps += grade(a & b)
    return (-1 if swaps & 1 else 1), a ^ b


def involution_sign(kind: str, k: int) -> int:
    if kind == "reversion":
        e = k * (k - 1) // 2
    elif kind == "conjugation":
        e = k * (k + 1) // 2
    elif kind == "bar":
        # reversion composed with conjugation
        e = k * (k - 1) // 2 + k * (k + 1) // 2
    else:
        raise ValueError(f"unknown involution {kind!r}; expected one of {INVOLUTIONS}")
    return -1 if e & 1 else 1


def _is_zero(c) -> bool:
    return c == 0


class Multivector:
    """Element of Cl_n as a sparse map blade-mask -> coefficient."""

    __slots__ = ("n", "_c")

    def __init__(self, n: int, coeffs: Mapping[int, Real] | None = None):
        if not 0 <= n <= MAX_GENERATORS:
            raise DimensionError(f"generator count {n} outside 0..{MAX_GENERATORS}")
        self.n = n
        full = (1 << n) - 1
        c = {}
        for mask, v in (coeffs or {}).items():
            if mask & ~full:
                raise DimensionError(f"blade {blade_indices(mask)} not in Cl_{n}")
            if not _is_zero(v):
                c[mask] = v
        self._c = c

    # construction helpers
    @classmethod
    def scalar(cls, n: int, value: Real = 1) -> "Multivector":
        return cls(n, {0: value})

    @classmethod
    def basis(cls, n: int, *indices: int, coeff: Real = 1) -> "Multivector":
        return cls(n, {blade_from_indices(indices): coeff})

    @classmethod
    def paravector(cls, xs: Iterable[Real]) -> "Multivector":
        """x_0 + x_1 e_1 + ... + x_n e_n."""
        xs = list(xs)
        n = len(xs) - 1
        return cls(n, {(0 if j == 0 else 1 << (j - 1)): v for j, v in enumerate(xs)})

    @classmethod
    def from_array(cls, n: int, arr) -> "Multivector":
        return cls(n, {m: float(v) for m, v in enumerate(arr)})

    # access
    def items(self):
        return self._c.items()

    def __getitem__(self, mask: int):
        return self._c.get(mask, 0)

    def coeff(self, *indices: int):
        return self._c.get(blade_from_indices(indices), 0)

    @property
    def scalar_part(self):
        return self._c.get(0, 0)

    def is_zero(self) -> bool:
        return not self._c

    def to_array(self) -> np.ndarray:
        out = np.zeros(1 << self.n)
        for m, v in self._c.items():
            out[m] = float(v)
        return out

    def to_float(self) -> "Multivector":
        return Multivector(self.n, {m: float(v) for m, v in self._c.items()})

    # arithmetic
    def _check(self, other: "Multivector"):
        if self.n != other.n:
            raise DimensionError(f"Cl_{self.n} and Cl_{other.n} operands")

    def __add__(self, other):
        if isinstance(other, Real):
            other = Multivector.scalar(self.n, other)
        self._check(other)
        c = dict(self._c)
        for m, v in other._c.items():
            c[m] = c.get(m, 0) + v
        return Multivector(self.n, c)

    __radd__ = __add__

    def __neg__(self):
        return Multivector(self.n, {m: -v for m, v in self._c.items()})

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, Real):
            return Multivector(self.n, {m: v * other for m, v in self._c.items()})
        if not isinstance(other, Multivector):
            return NotImplemented
        return mv_product(self, other)

    def __rmul__(self, other):
        if isinstance(other, Real):
            return self * other
        return NotImplemented

    def __truediv__(self, other: Real):
        if isinstance(other, int):
            other = Fraction(other)
        return Multivector(self.n, {m: v / other for m, v in self._c.items()})

    def __eq__(self, other):
        if isinstance(other, Real):
            other = Multivector.scalar(self.n, other)
        if not isinstance(other, Multivector):
            return NotImplemented
        return self.n == other.n and self._c == other._c

    def __hash__(self):
        return hash((self.n, frozenset(self._c.items())))

    def __repr__(self):
        if not self._c:
            return "0"
        parts = []
        for m in sorted(self._c, key=lambda m: (grade(m), m)):
            v = self._c[m]
            name = "e" + "".join(map(str, blade_indices(m))) if m else ""
            parts.append(f"{v}{'*' + name if name else ''}")
        return " + ".join(parts)

    # algebra
    def reversion(self):
        return mv_involution(self, "reversion")

    def conjugation(self):
        return mv_involution(self, "conjugation")

    def bar(self):
        return mv_involution(self, "bar")

    def grade(self, k: int):
        return grade_project(self, k)

    def norm(self):
        return mv_norm(self)

    def norm2(self):
        return sum(v * v for v in self._c.values())

    def is_close(self, other: "Multivector", tol: float = 1e-12) -> bool:
        return mv_norm(self - other) <= tol


def mv_product(a: Multivector, b: Multivector) -> Multivector:
    """Geometric product a*b."""
    a._check(b)
    out: dict[int, Real] = {}
    for ma, va in a._c.items():
        for mb, vb in b._c.items():
            s, m = blade_product(ma, mb)
            out[m] = out.get(m, 0) + (va * vb if s > 0 else -(va * vb))
    return Multivector(a.n, out)


def mv_involution(a: Multivector, kind: str) -> Multivector:
    """reversion, conjugation or bar (= reversion of the conjugate).

    reversion and conjugation reverse products; bar, being the composite of
    two reversing maps, preserves product order.
    """
    return Multivector(a.n, {m: v * involution_sign(kind, grade(m)) for m, v in a._c.items()})


def mv_norm(a: Multivector) -> float:
    return math.sqrt(sum(float(v) ** 2 for v in a._c.values()))


def grade_project(a: Multivector, k: int) -> Multivector:
    if not 0 <= k <= a.n:
        raise ValueError(f"grade {k} outside 0..{a.n}")
    return Multivector(a.n, {m: v for m, v in a._c.items() if grade(m) == k})


# dense representations used by the spectral assembly

@lru_cache(maxsize=None)
def left_mult_matrix(n: int, mask: int) -> np.ndarray:
    """Matrix of x -> e_mask * x on coefficient arrays of length 2**n."""
    d = 1 << n
    M = np.zeros((d, d))
    for b in range(d):
        s, m = blade_product(mask, b)
        M[m, b] = s
    M.setflags(write=False)
    return M


def left_mult_dense(a: Multivector) -> np.ndarray:
    d = 1 << a.n
    M = np.zeros((d, d))
    for m, v in a.items():
        M += float(v) * left_mult_matrix(a.n, m)
    return M


# JSON

def _coeff_to_json(v):
    if isinstance(v, Fraction):
        return str(v) if v.denominator != 1 else v.numerator
    if isinstance(v, int):
        return v
    return float(v)


def _coeff_from_json(v):
    if isinstance(v, str):
        return Fraction(v)
    return v


def multivector_to_json(a: Multivector) -> dict:
    terms = [
        {"blade": list(blade_indices(m)), "coeff": _coeff_to_json(v)}
        for m, v in sorted(a.items(), key=lambda t: (grade(t[0]), blade_indices(t[0])))
    ]
    return {"n": a.n, "terms": terms}


def multivector_from_json(obj: Mapping) -> Multivector:
    n = int(obj["n"])
    c: dict[int, Real] = {}
    for t in obj["terms"]:
        m = blade_from_indices(t["blade"])
        c[m] = c.get(m, 0) + _coeff_from_json(t["coeff"])
    return Multivector(n, c)
