"""Analytic reference measures and executable versions of the support bounds.

The reference family is nu_r, with density c_r (1 - |z|^2)^r on the unit
ball of R^p.  Its moments are rational numbers for integer r,

    E[z^{2b}] = prod_i Gamma(b_i + 1/2) / pi^{p/2}
                * Gamma(p/2 + r + 1) / Gamma(|b| + p/2 + r + 1),

and vanish when any exponent is odd.  They are computed exactly with
:class:`fractions.Fraction` and rounded once, so the analytic moment matrix
is correct to the last bit before factorization.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
import numpy as np
import scipy.linalg

from .christoffel import MomentMatrix, build_moment_matrix, factorize
from .errors import OutOfHypothesisError, UnsupportedError
from .polybasis import (
    MultiIndex,
    enumerate_basis,
    eval_monomials,
    generalized_binomial,
)
from .thresholding import c_r_constant, omega_p


# -- the reference measure -------------------------------------------------

@dataclass(frozen=True)
class BallJacobiMeasure:
    """Probability measure with density c_r (1 - |z|^2)^r on the unit ball of R^p."""

    p: int
    r: float = 0

    def __post_init__(self):
        if int(self.p) != self.p or self.p < 1:
            raise ValueError("p must be an integer >= 1")
        if self.r < 0:
            raise ValueError("r must be >= 0")

    @property
    def ident(self) -> str:
        return f"ball-jacobi(p={self.p},r={self.r:g})"

    @property
    def integer_r(self) -> bool:
        return float(self.r).is_integer()

    def density(self, z) -> np.ndarray:
        z = np.atleast_2d(np.asarray(z, dtype=float))
        sq = np.einsum("ij,ij->i", z, z)
        out = c_r_constant(self.p, self.r) * np.clip(1 - sq, 0, None) ** self.r
        out[sq > 1] = 0.0
        return out

    def sample(self, n: int, rng) -> np.ndarray:
        """Exact draws: |z|^2 ~ Beta(p/2, r+1) times a uniform direction."""
        rng = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
        g = rng.standard_normal((n, self.p))
        g /= np.linalg.norm(g, axis=1, keepdims=True)
        rad = np.sqrt(rng.beta(self.p / 2, self.r + 1, size=n))
        return g * rad[:, None]


def _require_integer_r(r):
    if not float(r).is_integer() or r < 0:
        raise UnsupportedError(
            f"closed-form ball moments need an integer r >= 0, got {r!r}"
        )
    return int(r)


@lru_cache(maxsize=None)
def _moment_fraction(exps: tuple, p: int, r: int) -> Fraction:
    if any(a % 2 for a in exps):
        return Fraction(0)
    # Gamma(b + 1/2) / sqrt(pi) = (2b)! / (4^b b!)
    num = Fraction(1)
    for a in exps:
        b = a // 2
        num *= Fraction(math.factorial(2 * b), 4**b * math.factorial(b))
    # Gamma(p/2 + r + 1) / Gamma(|b| + p/2 + r + 1) as a product of |b| factors
    den = Fraction(1)
    for j in range(sum(exps) // 2):
        den *= Fraction(p, 2) + r + 1 + j
    return num / den


def ball_jacobi_moment_exact(alpha, measure: BallJacobiMeasure) -> Fraction:
    """Exact normalized moment of z^alpha under nu_r (integer r only)."""
    exps = alpha.exponents if isinstance(alpha, MultiIndex) else tuple(int(a) for a in alpha)
    if len(exps) != measure.p:
        raise ValueError(f"multi-index has length {len(exps)}, measure dimension is {measure.p}")
    return _moment_fraction(exps, measure.p, _require_integer_r(measure.r))


def ball_jacobi_moment(alpha, measure: BallJacobiMeasure) -> float:
    return float(ball_jacobi_moment_exact(alpha, measure))


@lru_cache(maxsize=64)
def _analytic_entries(p: int, d: int, r: int) -> np.ndarray:
    exps = enumerate_basis(p, d).exponents
    s = exps.shape[0]
    out = np.empty((s, s))
    for i in range(s):
        for j in range(i, s):
            out[i, j] = out[j, i] = float(_moment_fraction(tuple(exps[i] + exps[j]), p, r))
    out.setflags(write=False)
    return out


def analytic_moment_matrix(p: int, d: int, r=0) -> MomentMatrix:
    """Moment matrix of nu_r in the graded monomial basis of degree d."""
    r = _require_integer_r(r)
    return MomentMatrix(_analytic_entries(p, d, r), ("analytic", BallJacobiMeasure(p, r).ident),
                        enumerate_basis(p, d))


@lru_cache(maxsize=64)
def _analytic_factor(p, d, r):
    L, _ = factorize(analytic_moment_matrix(p, d, r), jitter="off")
    return L


def analytic_kernel_diag(p: int, d: int, r, x) -> np.ndarray:
    """kappa_{nu_r, d}(x, x) for one point or an (m, p) batch."""
    r = _require_integer_r(r)
    x = np.asarray(x, dtype=float)
    single = x.ndim == 0 or (x.ndim == 1 and p > 1)
    pts = x.reshape(1, p) if single else x.reshape(-1, p)
    v = eval_monomials(enumerate_basis(p, d), pts)
    z = scipy.linalg.solve_triangular(_analytic_factor(p, d, r), v.T, lower=True)
    k = np.einsum("ij,ij->j", z, z)
    return float(k[0]) if single else k


def christoffel_analytic(p: int, d: int, r, x):
    """Population Christoffel function of nu_r at x (scalar or batch)."""
    return 1.0 / analytic_kernel_diag(p, d, r, x)


def analytic_orthonormal_transform(p: int, d: int, r=0) -> np.ndarray:
    """T with T M T^T = I for the analytic moment matrix of nu_r."""
    L = _analytic_factor(p, d, _require_integer_r(r))
    return scipy.linalg.solve_triangular(L, np.eye(L.shape[0]), lower=True)


# -- closed forms and bounds -----------------------------------------------

def gegenbauer_boundary_kernel(p: int, d: int, r=0, spelling: str = "degree") -> float:
    """kappa_{nu_r, d} on the unit sphere: 2 binom(p+d+2r+1, d) - binom(p+d+2r, d).

    ``spelling="order"`` evaluates the same quantity with the complementary
    lower indices, 2 binom(p+d+2r+1, p+2r+1) - binom(p+d+2r, p+2r).
    """
    if d < 0:
        raise ValueError("degree must be >= 0")
    top = p + d + 2 * r
    if spelling == "degree":
        return 2 * generalized_binomial(top + 1, d) - generalized_binomial(top, d)
    if spelling == "order":
        k = p + 2 * r
        if not float(k).is_integer():
            raise UnsupportedError("the complementary spelling needs an integer p + 2r")
        return 2 * generalized_binomial(top + 1, int(k) + 1) - generalized_binomial(top, int(k))
    raise ValueError(f"unknown spelling {spelling!r}")


def _dimension(p, d):
    # s(d) as a plain number; no basis is built, so no size cap applies
    return math.comb(p + d, d)


def outside_upper_bound(delta: float, diam: float, d: int) -> float:
    """Upper bound 2^{3 - delta d / (delta + diam)} on Lambda at distance >= delta from S."""
    if delta <= 0 or diam <= 0:
        raise ValueError("delta and diam must be positive")
    return 2.0 ** (3 - delta * d / (delta + diam))


def inside_lower_bound(delta: float, p: int, r: float, C: float, d: int) -> float:
    """Lower bound on Lambda at depth >= delta inside S (valid for d >= 2)."""
    if d < 2:
        raise OutOfHypothesisError(f"the interior lower bound needs d >= 2, got d = {d}")
    if delta <= 0 or C <= 0:
        raise ValueError("delta and C must be positive")
    pre = C * omega_p(p) * delta ** (p + r) / 2 ** (p + r)
    ratio = (d + 1) * (d + 2) * (d + 3) / ((d + p + 1) * (d + p + 2) * (2 * d + p + 6))
    return pre * ratio / _dimension(p, d)


def sup_kernel_bound(d: int, p: int, r: float, C: float, R: float) -> float:
    """Upper bound m(d, p, S, w) on sup_S kappa(x, x) (valid for d >= 2)."""
    if d < 2:
        raise OutOfHypothesisError(f"the kernel supremum bound needs d >= 2, got d = {d}")
    if C <= 0 or R <= 0:
        raise ValueError("C and R must be positive")
    inner = (4 ** (p + r) * _dimension(p, d) / (C * omega_p(p) * R ** (p + r))
             * (d + p + 1) * (d + p + 2) * (2 * d + p + 6) / ((d + 1) * (d + 2) * (d + 3)))
    top = p + d + 2 * r
    edge = (2 ** (p + 2 * r) * c_r_constant(p, r) / (C * R ** (p + r))
            * (2 * generalized_binomial(top + 1, d) - generalized_binomial(top, d)))
    return inner + edge


def concentration_bound(m: float, n: int, s: int, alpha: float) -> float:
    """max(sqrt(t), t) with t = 16 m log(s / alpha) / (3 n)."""
    if m <= 0 or n < 1 or not 0 < alpha < 1:
        raise ValueError("need m > 0, n >= 1 and 0 < alpha < 1")
    t = 16 * m / (3 * n) * math.log(s / alpha)
    return max(math.sqrt(t), t)


def technical_gap(M) -> float:
    """Operator norm ||M - I|| of a moment matrix in a population-orthonormal basis."""
    a = M.entries if isinstance(M, MomentMatrix) else np.asarray(M, dtype=float)
    diff = (a + a.T) / 2 - np.eye(a.shape[0])
    return float(np.max(np.abs(scipy.linalg.eigvalsh(diff))))


def empirical_in_orthobasis(sample, p: int, d: int, r=0) -> MomentMatrix:
    """Empirical moment matrix of ``sample`` expressed in the nu_r-orthonormal basis."""
    T = analytic_orthonormal_transform(p, d, r)
    M = build_moment_matrix(np.asarray(sample, dtype=float).reshape(-1, p), enumerate_basis(p, d))
    return MomentMatrix(T @ M.entries @ T.T, M.provenance)


def empirical_christoffel_orthobasis(M_orth: MomentMatrix, p: int, d: int, r, x) -> np.ndarray:
    """Lambda_n at x computed in the nu_r-orthonormal basis (factor of M_orth)."""
    T = analytic_orthonormal_transform(p, d, r)
    L, _ = factorize(M_orth, jitter="off")
    v = eval_monomials(enumerate_basis(p, d), np.asarray(x, dtype=float).reshape(-1, p))
    z = scipy.linalg.solve_triangular(L, T @ v.T, lower=True)
    return 1.0 / np.einsum("ij,ij->j", z, z)


def ball_grid(p: int, per_axis: int = 50, radius: float = 0.95) -> np.ndarray:
    """Tensor grid of ``per_axis`` points per axis on [-radius, radius]^p, kept inside the ball."""
    ax = np.linspace(-radius, radius, per_axis)
    pts = np.stack([g.ravel() for g in np.meshgrid(*([ax] * p), indexing="ij")], axis=-1)
    return pts[np.linalg.norm(pts, axis=1) <= radius * (1 + 1e-12)]


# -- reports ---------------------------------------------------------------

@dataclass(frozen=True)
class BoundReport:
    """One evaluated inequality ``measured <= bound`` (or ``>=`` for lower bounds)."""

    name: str
    inputs: dict
    bound: float
    measured: float
    direction: str = "<="
    satisfied: bool = field(init=False)
    slack: float = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "bound", float(self.bound))
        object.__setattr__(self, "measured", float(self.measured))
        if self.direction == "<=":
            ok, slack = self.measured <= self.bound, self.bound - self.measured
        elif self.direction == ">=":
            ok, slack = self.measured >= self.bound, self.measured - self.bound
        else:
            raise ValueError(f"unknown direction {self.direction!r}")
        object.__setattr__(self, "satisfied", bool(ok))
        object.__setattr__(self, "slack", float(slack))

    def as_dict(self):
        return {"name": self.name, "inputs": self.inputs, "bound": self.bound,
                "measured": self.measured, "direction": self.direction,
                "satisfied": self.satisfied, "slack": self.slack}


def _grid(lo, hi, step):
    k = int(round((hi - lo) / step))
    return [round(lo + i * step, 10) for i in range(k + 1)]


def binomial_inequality_reports(max_mn=20):
    """binom(m+n, m) <= m^n (e/n)^n exp(n^2/m), compared in log space."""
    out = []
    for m in range(1, max_mn + 1):
        for n in range(1, max_mn + 1):
            lhs = math.log(math.comb(m + n, m))
            rhs = n * math.log(m) + n * (1 - math.log(n)) + n * n / m
            out.append(BoundReport("binomial", {"m": m, "n": n}, rhs, lhs))
    return out


def log_minimum_reports(qs=None, x_points=200001):
    """min_x [log(2) x - 2q log x] equals its closed form and dominates 2q(1 - log 3q)."""
    qs = _grid(0.1, 10.0, 0.1) if qs is None else qs
    out = []
    for q in qs:
        xstar = 2 * q / math.log(2)
        closed = 2 * q * (1 - math.log(xstar))
        # grid minimum over a window around the minimizer (the function is convex)
        x = np.linspace(xstar / 50, xstar * 50, x_points)
        gmin = float(np.min(math.log(2) * x - 2 * q * np.log(x)))
        tol = 1e-12 * max(1.0, abs(gmin))
        out.append(BoundReport("log-minimum/grid", {"q": q}, gmin + tol, closed, "<="))
        out.append(BoundReport("log-minimum/lower", {"q": q}, 2 * q * (1 - math.log(3 * q)), closed, ">="))
    return out


def power_decay_reports(ds=range(1, 101), epss=None, qs=None):
    """2^{3 - d^eps} <= 8 (3q)^{2q} / (e^{2q} d^{2 q eps}), compared in log space."""
    epss = _grid(0.1, 0.9, 0.1) if epss is None else epss
    qs = _grid(0.5, 10.0, 0.5) if qs is None else qs
    out = []
    for d in ds:
        for eps in epss:
            for q in qs:
                lhs = (3 - d**eps) * math.log(2)
                rhs = math.log(8) + 2 * q * math.log(3 * q) - 2 * q - 2 * q * eps * math.log(d)
                out.append(BoundReport("power-decay", {"d": d, "eps": eps, "q": q}, rhs, lhs))
    return out


def inequality_suite():
    return binomial_inequality_reports() + log_minimum_reports() + power_decay_reports()


def gegenbauer_equivalence_reports(ps=(1, 2, 3), ds=range(0, 7), rs=(0, 1, 2), points=20,
                                   seed=0, rtol=1e-8):
    """|kappa_closed * Lambda_analytic(x) - 1| <= rtol at random unit x."""
    rng = np.random.default_rng(seed)
    out = []
    for p in ps:
        for d in ds:
            for r in rs:
                x = rng.standard_normal((points, p))
                x /= np.linalg.norm(x, axis=1, keepdims=True)
                closed = gegenbauer_boundary_kernel(p, d, r)
                err = float(np.max(np.abs(closed * christoffel_analytic(p, d, r, x) - 1)))
                out.append(BoundReport("gegenbauer-equivalence", {"p": p, "d": d, "r": r}, rtol, err))
    return out


def binomial_spelling_reports(max_d=50, max_p=4, max_r=3):
    out = []
    for p in range(1, max_p + 1):
        for r in range(0, max_r + 1):
            for d in range(0, max_d + 1):
                a = gegenbauer_boundary_kernel(p, d, r, "degree")
                b = gegenbauer_boundary_kernel(p, d, r, "order")
                out.append(BoundReport("binomial-spelling", {"p": p, "d": d, "r": r}, 0.0, abs(a - b)))
    return out


def _exterior_points(p, radii, directions=8, seed=0):
    rng = np.random.default_rng(seed)
    u = rng.standard_normal((directions, p))
    u /= np.linalg.norm(u, axis=1, keepdims=True)
    return [(rad, u * rad) for rad in radii]


def sandwich_suite(ps=(1, 2), ds=range(2, 9), rs=(0, 1, 2), sup_ps=(1, 2, 3),
                   exterior_radii=(1.05, 1.25, 1.5, 2.0, 3.0, 5.0), grid_per_axis=41):
    """Interior, exterior and kernel-supremum bounds against exact ball values.

    nu_r satisfies the density condition with C = c_r (since
    (1 - |z|^2)^r >= (1 - |z|)^r), rolls a ball of radius R = 1 and has
    diameter 2.
    """
    out = []
    for p in ps:
        for r in rs:
            C = c_r_constant(p, r)
            for d in ds:
                lam0 = christoffel_analytic(p, d, r, np.zeros((1, p)))[0]
                out.append(BoundReport("inside-lower", {"p": p, "d": d, "r": r, "delta": 1.0},
                                       inside_lower_bound(1.0, p, r, C, d), lam0, ">="))
                for rad, pts in _exterior_points(p, exterior_radii):
                    lam = float(np.max(christoffel_analytic(p, d, r, pts)))
                    out.append(BoundReport("outside-upper",
                                           {"p": p, "d": d, "r": r, "distance": rad - 1},
                                           outside_upper_bound(rad - 1, 2.0, d), lam))
    for p in sup_ps:
        grid = ball_grid(p, grid_per_axis if p < 3 else 21, radius=1.0)
        sphere = np.random.default_rng(1).standard_normal((64, p))
        sphere /= np.linalg.norm(sphere, axis=1, keepdims=True)
        pts = np.vstack([grid, sphere])
        for r in rs:
            C = c_r_constant(p, r)
            for d in ds:
                kmax = float(np.max(analytic_kernel_diag(p, d, r, pts)))
                out.append(BoundReport("sup-kernel", {"p": p, "d": d, "r": r},
                                       sup_kernel_bound(d, p, r, C, 1.0), kmax))
    return out


def verify_all():
    """Every deterministic check used by ``verify-bounds``, in a fixed order."""
    return (inequality_suite() + gegenbauer_equivalence_reports()
            + binomial_spelling_reports() + sandwich_suite())
