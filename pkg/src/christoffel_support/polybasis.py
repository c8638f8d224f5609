"""Multi-indices and monomial vectors for p-variate polynomials of degree <= d.

Indices are ordered by total degree, and within a fixed total degree in
descending lexicographic order of the exponent tuple.  For ``p=2, d=2``::

    (0,0) (1,0) (0,1) (2,0) (1,1) (0,2)

so ``enumerate_basis(p, d)`` is always a prefix of ``enumerate_basis(p, d+1)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

ORDER_TAG = "graded-desclex"

# Largest basis we are willing to index; beyond this s(d) does not fit int32
# index arrays and the moment matrix would not fit in memory anyway.
MAX_BASIS_SIZE = 2**31 - 1


class BasisSizeOverflowError(OverflowError):
    """Raised when binom(d+p, d) exceeds the supported index range."""


def basis_size(p: int, d: int) -> int:
    """Dimension s(d) = binom(d+p, d) of the space of polynomials of degree <= d."""
    p, d = _check_pd(p, d)
    s = math.comb(d + p, d)
    if s > MAX_BASIS_SIZE:
        raise BasisSizeOverflowError(
            f"s(d) = binom({d + p}, {d}) = {s} exceeds {MAX_BASIS_SIZE}"
        )
    return s


def _check_pd(p, d):
    if int(p) != p or p < 1:
        raise ValueError(f"dimension p must be an integer >= 1, got {p!r}")
    if int(d) != d or d < 0:
        raise ValueError(f"degree d must be an integer >= 0, got {d!r}")
    return int(p), int(d)


def _compositions(total: int, p: int):
    """Exponent tuples of length p summing to total, descending lex order."""
    if p == 1:
        yield (total,)
        return
    for first in range(total, -1, -1):
        for rest in _compositions(total - first, p - 1):
            yield (first,) + rest


@dataclass(frozen=True)
class MultiIndex:
    exponents: tuple[int, ...]

    def __post_init__(self):
        exps = tuple(int(a) for a in self.exponents)
        if len(exps) < 1:
            raise ValueError("a multi-index needs at least one component")
        if any(a < 0 for a in exps):
            raise ValueError(f"exponents must be nonnegative, got {exps}")
        object.__setattr__(self, "exponents", exps)

    @property
    def degree(self) -> int:
        return sum(self.exponents)

    @property
    def dimension(self) -> int:
        return len(self.exponents)

    def __add__(self, other: "MultiIndex") -> "MultiIndex":
        if other.dimension != self.dimension:
            raise ValueError("cannot add multi-indices of different dimension")
        return MultiIndex(tuple(a + b for a, b in zip(self.exponents, other.exponents)))


@dataclass(frozen=True)
class MonomialBasis:
    """Graded, descending-lex ordered monomial basis of Pi_d^p.

    Attributes
    ----------
    dimension : int
        Ambient dimension p.
    degree : int
        Maximal total degree d.
    indices : tuple of MultiIndex
        The s(d) multi-indices in basis order.
    """

    dimension: int
    degree: int
    indices: tuple[MultiIndex, ...] = field(repr=False)

    def __len__(self):
        return len(self.indices)

    @cached_property
    def exponents(self) -> np.ndarray:
        """Integer array of shape (s(d), p); row j holds the j-th multi-index."""
        arr = np.array([a.exponents for a in self.indices], dtype=np.intp)
        arr.setflags(write=False)
        return arr

    @cached_property
    def degrees(self) -> np.ndarray:
        return self.exponents.sum(axis=1)

    def __call__(self, x):
        return eval_monomials(self, x)


def enumerate_basis(p: int, d: int) -> MonomialBasis:
    """Return the graded, descending-lex monomial basis of degree <= d in p variables."""
    s = basis_size(p, d)
    indices = tuple(
        MultiIndex(a) for k in range(d + 1) for a in _compositions(k, p)
    )
    assert len(indices) == s
    return MonomialBasis(dimension=p, degree=d, indices=indices)


def eval_monomials(basis: MonomialBasis, x) -> np.ndarray:
    """Evaluate the monomial vector v_d at one point or a batch of points.

    Parameters
    ----------
    basis : MonomialBasis
    x : array_like, shape (p,) or (m, p)
        Query point(s).  For p == 1 a flat array of m scalars is also accepted
        when it is passed as shape (m, 1).

    Returns
    -------
    ndarray, shape (s(d),) or (m, s(d))
        Entry j is prod_i x_i**alpha_i for the j-th multi-index, with 0**0 = 1.
    """
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    pts = x[None, :] if single else x
    if pts.ndim != 2 or pts.shape[1] != basis.dimension:
        raise ValueError(
            f"expected points of dimension {basis.dimension}, got array of shape {x.shape}"
        )
    m, p = pts.shape
    d = basis.degree
    # power table pw[:, i, k] = x_i**k, built by running products (pw[..., 0] = 1)
    pw = np.empty((m, p, d + 1))
    pw[:, :, 0] = 1.0
    for k in range(1, d + 1):
        pw[:, :, k] = pw[:, :, k - 1] * pts
    exps = basis.exponents
    out = pw[:, 0, exps[:, 0]]
    for i in range(1, p):
        out = out * pw[:, i, exps[:, i]]
    return out[0] if single else out


def generalized_binomial(a: float, k: int) -> float:
    """binom(a, k) = a (a-1) ... (a-k+1) / k! for real a and integer k >= 0."""
    if int(k) != k or k < 0:
        raise ValueError(f"k must be a nonnegative integer, got {k!r}")
    k = int(k)
    if float(a).is_integer() and a >= 0:
        return float(math.comb(int(a), k))
    num = 1.0
    for j in range(k):
        num *= (a - j) / (j + 1)
    return num
