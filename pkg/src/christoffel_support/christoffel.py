"""Empirical moment matrices, their factorization, and the Christoffel function.

The Christoffel function of a measure mu at degree d is

    Lambda(x) = 1 / kappa(x, x),    kappa(x, x) = v_d(x)^T M^{-1} v_d(x),

with M the moment matrix of mu in the monomial basis v_d.  With M = L L^T the
kernel diagonal is ||L^{-1} v_d(x)||^2, obtained by one triangular solve.

:func:`fit` never forms M for the solve.  It takes the Householder QR
factorization of the scaled design matrix V / sqrt(n) = Q R, so that
M = R^T R and L = R^T.  This squares the usable condition range compared to
a Cholesky factorization of M, which matters at the degrees produced by the
practical rule d = floor(2 n^{1/4}) (already d = 26 at n = 32000).
"""

from __future__ import annotations

import dataclasses
import json
import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.linalg

from .errors import (
    DegenerateSampleError,
    RankDeficientWarning,
    SingularMomentMatrixError,
)
from .polybasis import ORDER_TAG, MonomialBasis, enumerate_basis, eval_monomials

MODEL_FORMAT = "christoffel-model"
MODEL_VERSION = 1

# Rows per block when evaluating many query points or accumulating moments.
CHUNK = 8192

_EPS = np.finfo(float).eps


@dataclass(frozen=True)
class MomentMatrix:
    """Symmetric PSD Gram matrix of the monomial basis under a measure.

    ``provenance`` is ``("empirical", n)`` or ``("analytic", measure_id)``.
    """

    entries: np.ndarray
    provenance: tuple
    basis: Optional[MonomialBasis] = field(default=None, repr=False)

    @property
    def size(self) -> int:
        return self.entries.shape[0]

    @property
    def mass(self) -> float:
        return float(self.entries[0, 0])

    def check(self, sym_rtol=1e-12, psd_rtol=1e-10):
        """Raise ValueError if symmetry or positive semidefiniteness fails."""
        a = self.entries
        scale = max(np.abs(a).max(), np.finfo(float).tiny)
        if np.abs(a - a.T).max() > sym_rtol * scale:
            raise ValueError("moment matrix is not symmetric")
        lo = np.linalg.eigvalsh((a + a.T) / 2).min()
        if lo < -psd_rtol * np.trace(a):
            raise ValueError(f"moment matrix is not PSD (min eigenvalue {lo:.3e})")
        return self


@dataclass(frozen=True)
class AffineMap:
    """x -> linear @ x + offset, applied row-wise to arrays of points."""

    linear: np.ndarray
    offset: np.ndarray

    def __post_init__(self):
        lin = np.atleast_2d(np.asarray(self.linear, dtype=float))
        off = np.atleast_1d(np.asarray(self.offset, dtype=float))
        if lin.shape != (off.size, off.size):
            raise ValueError(f"linear part {lin.shape} does not match offset {off.shape}")
        if not np.isfinite(np.linalg.cond(lin)):
            raise ValueError("linear part of an affine map must be invertible")
        object.__setattr__(self, "linear", lin)
        object.__setattr__(self, "offset", off)
        object.__setattr__(self, "_inv", np.linalg.inv(lin))

    @classmethod
    def identity(cls, p: int) -> "AffineMap":
        return cls(np.eye(p), np.zeros(p))

    @property
    def dimension(self) -> int:
        return self.offset.size

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return x @ self.linear.T + self.offset

    def inverse(self, y):
        y = np.asarray(y, dtype=float)
        return (y - self.offset) @ self._inv.T

    def compose(self, inner: "AffineMap") -> "AffineMap":
        """Return self o inner."""
        return AffineMap(self.linear @ inner.linear, self.linear @ inner.offset + self.offset)


def _as_points(sample, p=None) -> np.ndarray:
    x = np.asarray(sample, dtype=float)
    if x.ndim == 1:
        x = x[:, None] if p in (None, 1) else x[None, :]
    if x.ndim != 2:
        raise ValueError(f"expected an (n, p) array of points, got shape {x.shape}")
    if p is not None and x.shape[1] != p:
        raise ValueError(f"expected points of dimension {p}, got {x.shape[1]}")
    return x


def _query_points(x, p):
    """Coerce queries to (m, p); scalars (p == 1) and (p,) vectors count as one point."""
    x = np.asarray(x, dtype=float)
    single = x.ndim == 0 or (x.ndim == 1 and p > 1)
    return _as_points(x.reshape(1, -1) if single else x, p), single


def standardize(sample, rtol=1e-12):
    """Whiten a sample: zero mean, identity covariance.

    Uses the symmetric inverse square root of the (biased, 1/n) sample
    covariance.  Returns ``(map, transformed_sample)``.

    Raises
    ------
    DegenerateSampleError
        If n < 2 or the covariance has an eigenvalue below ``rtol`` times the
        largest one; the exception carries the offending direction.
    """
    x = _as_points(sample)
    n, p = x.shape
    if n < 2:
        raise DegenerateSampleError(f"cannot standardize a sample of {n} point(s)")
    mean = x.mean(axis=0)
    cov = np.atleast_2d(np.cov(x, rowvar=False, bias=True))
    w, u = np.linalg.eigh(cov)
    if w[-1] <= 0 or w[0] <= rtol * w[-1]:
        direction = u[:, 0]
        raise DegenerateSampleError(
            "sample covariance is singular; no spread along direction "
            + np.array2string(direction, precision=4),
            null_direction=direction,
        )
    whiten = (u / np.sqrt(w)) @ u.T
    amap = AffineMap(whiten, -whiten @ mean)
    return amap, amap(x)


def build_moment_matrix(sample, basis: MonomialBasis) -> MomentMatrix:
    """Empirical moment matrix (1/n) sum_i v_d(X_i) v_d(X_i)^T.

    Blocks of CHUNK rows are reduced in index order, so identical input gives
    a bit-identical matrix.
    """
    x = _as_points(sample, basis.dimension)
    n = x.shape[0]
    s = len(basis)
    acc = np.zeros((s, s))
    for start in range(0, n, CHUNK):
        v = eval_monomials(basis, x[start:start + CHUNK])
        acc += v.T @ v
    acc = (acc + acc.T) / 2
    return MomentMatrix(acc / n, ("empirical", n), basis)


def _equilibrated_cholesky(a: np.ndarray):
    """Cholesky of a after symmetric diagonal scaling; returns (L, min pivot) or None."""
    diag = np.diag(a)
    if not np.all(diag > 0) or not np.all(np.isfinite(a)):
        return None
    scale = 1.0 / np.sqrt(diag)
    try:
        lt = scipy.linalg.cholesky(a * scale[:, None] * scale[None, :], lower=True)
    except np.linalg.LinAlgError:
        return None
    pivot = np.diag(lt).min() ** 2
    return lt / scale[:, None], pivot


def factorize(M, jitter="auto", max_tries=6):
    """Cholesky factor L (lower, positive diagonal) with L L^T = M + jitter * I.

    Parameters
    ----------
    M : MomentMatrix or ndarray
    jitter : {"auto", "off"}
        With "auto", a failed factorization is retried with lambda * I added,
        lambda starting at 1e-12 * trace(M) / s and growing tenfold per try.
    max_tries : int

    Returns
    -------
    L : ndarray
    applied : float
        Jitter actually added (0.0 when none was needed).

    Raises
    ------
    SingularMomentMatrixError
    """
    a = np.asarray(M.entries if isinstance(M, MomentMatrix) else M, dtype=float)
    s = a.shape[0]
    if jitter not in ("auto", "off"):
        raise ValueError(f"unknown jitter policy {jitter!r}")
    tol = s * _EPS
    res = _equilibrated_cholesky(a)
    if res is not None and res[1] > tol:
        return res[0], 0.0
    if jitter == "auto":
        lam = 1e-12 * np.trace(a) / s
        for _ in range(max_tries):
            res = _equilibrated_cholesky(a + lam * np.eye(s))
            if res is not None and res[1] > tol:
                return res[0], float(lam)
            lam *= 10
    raise SingularMomentMatrixError(
        f"moment matrix of size {s} is numerically singular; "
        "use at least s(d) well-spread samples or lower the degree"
    )


def _qr_factor(v: np.ndarray, tol: float):
    """Lower factor L = R^T of the QR of v after column equilibration, or None."""
    norms = np.sqrt(np.einsum("ij,ij->j", v, v))
    if not np.all(norms > 0) or not np.all(np.isfinite(norms)):
        return None
    r = scipy.linalg.qr(v / norms, mode="r", check_finite=False)[0]
    s = v.shape[1]
    r = np.triu(r[:s, :s])
    dg = np.diag(r)
    if np.abs(dg).min() <= tol * np.abs(dg).max():
        return None
    r = r * np.sign(dg)[:, None]
    return (r * norms[None, :]).T


@dataclass(frozen=True)
class ChristoffelModel:
    """A fitted empirical Christoffel function.

    Attributes
    ----------
    basis : MonomialBasis
    standardizer : AffineMap
        Applied to every query point before evaluating monomials.
    factor : ndarray, shape (s, s)
        Lower-triangular L with L L^T = M (+ jitter * I), M the empirical moment
        matrix of the standardized sample.
    degree, n : int
    jitter : float
    train_min_score : float or None
        min_i Lambda(X_i) over the training sample.
    train_box : (lo, hi) or None
        Axis-aligned bounding box of the training sample.
    notes : tuple of str
    """

    basis: MonomialBasis = field(repr=False)
    standardizer: AffineMap = field(repr=False)
    factor: np.ndarray = field(repr=False)
    degree: int
    n: int
    jitter: float = 0.0
    train_min_score: Optional[float] = None
    train_box: Optional[tuple] = field(default=None, repr=False)
    notes: tuple = ()

    @property
    def dimension(self) -> int:
        return self.basis.dimension

    def moment_matrix(self) -> MomentMatrix:
        L = self.factor
        return MomentMatrix(L @ L.T, ("empirical", self.n), self.basis)

    def kernel_diag(self, x):
        return cd_kernel_diag(self, x)

    def __call__(self, x):
        return christoffel(self, x)

    score = __call__


def cd_kernel_diag(model: ChristoffelModel, x):
    """kappa(x, x) = ||L^{-1} v_d(A x)||^2 for one point or an (m, p) batch."""
    pts, single = _query_points(x, model.dimension)
    out = np.empty(pts.shape[0])
    with np.errstate(over="ignore", invalid="ignore"):
        for start in range(0, pts.shape[0], CHUNK):
            y = model.standardizer(pts[start:start + CHUNK])
            v = eval_monomials(model.basis, y)
            z = scipy.linalg.solve_triangular(
                model.factor, v.T, lower=True, check_finite=False
            )
            out[start:start + CHUNK] = np.einsum("ij,ij->j", z, z)
    out[~np.isfinite(out)] = np.inf
    return float(out[0]) if single else out


def christoffel(model: ChristoffelModel, x):
    """Lambda(x) = 1 / kappa(x, x); values lie in (0, 1] for probability measures."""
    k = cd_kernel_diag(model, x)
    with np.errstate(divide="ignore"):
        return 1.0 / k


def orthonormal_transform(M) -> np.ndarray:
    """T = L^{-1} for M = L L^T, so that T M T^T = I.

    Row j of T holds the monomial coefficients of the j-th orthonormal
    polynomial (Gram-Schmidt in basis order).
    """
    L, _ = factorize(M, jitter="off")
    return scipy.linalg.solve_triangular(L, np.eye(L.shape[0]), lower=True)


def fit(sample, d, standardize_sample=True, jitter="auto", max_tries=6, solver="qr"):
    """Fit the empirical Christoffel function of degree d to a sample.

    Parameters
    ----------
    sample : array_like, shape (n, p)
    d : int
    standardize_sample : bool
        Whiten the sample first (recommended; Lambda is affine invariant so
        this only changes conditioning).
    jitter : {"auto", "off"}
    max_tries : int
    solver : {"qr", "cholesky"}
        "qr" factorizes the design matrix directly; "cholesky" forms the
        moment matrix and calls :func:`factorize`.

    Warns
    -----
    RankDeficientWarning
        When n < s(d).
    """
    x = _as_points(sample)
    n, p = x.shape
    if n < 1:
        raise ValueError("cannot fit an empty sample")
    basis = enumerate_basis(p, d)
    s = len(basis)
    if standardize_sample:
        amap, y = standardize(x)
    else:
        amap, y = AffineMap.identity(p), x

    notes = []
    if n < s:
        msg = f"n = {n} < s(d) = {s}: empirical moment matrix is rank deficient"
        warnings.warn(msg, RankDeficientWarning, stacklevel=2)
        notes.append(msg)

    if solver == "cholesky":
        L, lam = factorize(build_moment_matrix(y, basis), jitter=jitter, max_tries=max_tries)
    elif solver == "qr":
        L, lam = _fit_qr(y, basis, jitter, max_tries)
    else:
        raise ValueError(f"unknown solver {solver!r}")
    if lam > 0:
        notes.append(f"jitter {lam:.3e} added to the moment matrix")

    model = ChristoffelModel(
        basis=basis,
        standardizer=amap,
        factor=L,
        degree=int(d),
        n=n,
        jitter=float(lam),
        train_box=(x.min(axis=0), x.max(axis=0)),
        notes=tuple(notes),
    )
    scores = christoffel(model, x)
    return dataclasses.replace(model, train_min_score=float(np.min(scores)))


def _fit_qr(y, basis, jitter, max_tries):
    n = y.shape[0]
    s = len(basis)
    v = np.empty((n, s))
    for start in range(0, n, CHUNK):
        v[start:start + CHUNK] = eval_monomials(basis, y[start:start + CHUNK])
    v /= np.sqrt(n)
    tol = max(n, s) * _EPS
    if n >= s:
        L = _qr_factor(v, tol)
        if L is not None:
            return L, 0.0
    if jitter == "auto":
        lam = 1e-12 * np.einsum("ij,ij->", v, v) / s
        for _ in range(max_tries):
            L = _qr_factor(np.vstack([v, np.sqrt(lam) * np.eye(s)]), tol)
            if L is not None:
                return L, float(lam)
            lam *= 10
    elif jitter != "off":
        raise ValueError(f"unknown jitter policy {jitter!r}")
    raise SingularMomentMatrixError(
        f"moment matrix of size {s} from {n} samples is numerically singular; "
        "use at least s(d) well-spread samples or lower the degree"
    )


# -- serialization ---------------------------------------------------------

def model_to_dict(model: ChristoffelModel) -> dict:
    box = model.train_box
    return {
        "format": MODEL_FORMAT,
        "version": MODEL_VERSION,
        "dimension": model.dimension,
        "degree": model.degree,
        "basis_order": ORDER_TAG,
        "n": model.n,
        "jitter": model.jitter,
        "standardizer": {
            "linear": model.standardizer.linear.tolist(),
            "offset": model.standardizer.offset.tolist(),
        },
        "factor": model.factor.tolist(),
        "train_min_score": model.train_min_score,
        "train_box": None if box is None else [np.asarray(box[0]).tolist(), np.asarray(box[1]).tolist()],
        "notes": list(model.notes),
    }


def model_from_dict(doc: dict) -> ChristoffelModel:
    if doc.get("format") != MODEL_FORMAT:
        raise ValueError(f"not a {MODEL_FORMAT} document")
    if doc.get("version") != MODEL_VERSION:
        raise ValueError(f"unsupported model version {doc.get('version')!r}")
    if doc.get("basis_order") != ORDER_TAG:
        raise ValueError(f"unsupported basis order {doc.get('basis_order')!r}")
    basis = enumerate_basis(doc["dimension"], doc["degree"])
    factor = np.array(doc["factor"], dtype=float).reshape(len(basis), len(basis))
    box = doc.get("train_box")
    return ChristoffelModel(
        basis=basis,
        standardizer=AffineMap(np.array(doc["standardizer"]["linear"]),
                               np.array(doc["standardizer"]["offset"])),
        factor=factor,
        degree=int(doc["degree"]),
        n=int(doc["n"]),
        jitter=float(doc["jitter"]),
        train_min_score=doc.get("train_min_score"),
        train_box=None if box is None else (np.array(box[0]), np.array(box[1])),
        notes=tuple(doc.get("notes", ())),
    )


def save_model(model: ChristoffelModel, path) -> None:
    """Write the model as a JSON document (floats are written round-trip exact)."""
    with open(path, "w") as fh:
        json.dump(model_to_dict(model), fh)
        fh.write("\n")


def load_model(path) -> ChristoffelModel:
    with open(path) as fh:
        return model_from_dict(json.load(fh))
