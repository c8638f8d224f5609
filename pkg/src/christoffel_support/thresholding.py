"""Degree/threshold selection and support estimates as Christoffel sublevel sets.

The theoretical scheme picks a degree d_n and a threshold gamma_n from the
geometric constants of the support (rolling radius R, diameter) and of the
density (decay exponent r, constant C).  Its constants grow like
exp((p+2r+1)^2), so at feasible sample sizes it usually lands below the
range where its guarantees apply; :func:`scheme_estimate` then falls back to
the practical rule d = floor(2 n^{1/4}) with the minimum training score as
threshold, and says so in its flags.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .christoffel import ChristoffelModel, christoffel, fit
from .errors import ConstantOverflowError
from .polybasis import basis_size


def omega_p(p: int) -> float:
    """2 pi^{(p+1)/2} / Gamma(p/2 + 1), the constant used throughout the bounds.

    Note this differs from the surface area of the unit sphere in R^{p+1},
    which is :func:`sphere_area`.
    """
    _check_p(p)
    return 2 * math.pi ** ((p + 1) / 2) / math.gamma(p / 2 + 1)


def sphere_area(p: int) -> float:
    """Surface area 2 pi^{(p+1)/2} / Gamma((p+1)/2) of the unit sphere in R^{p+1}."""
    _check_p(p)
    return 2 * math.pi ** ((p + 1) / 2) / math.gamma((p + 1) / 2)


def c_r_constant(p: int, r: float) -> float:
    """Normalizer c_r of the density c_r (1 - |z|^2)^r on the unit ball of R^p."""
    _check_p(p)
    if r < 0:
        raise ValueError("r must be >= 0")
    return math.exp(math.lgamma(p / 2 + r + 1) - (p / 2) * math.log(math.pi) - math.lgamma(r + 1))


def _check_p(p):
    if int(p) != p or p < 1:
        raise ValueError(f"dimension p must be an integer >= 1, got {p!r}")


def C_pra(p: int, r: float, alpha: float) -> float:
    """The constant C_{p,r,alpha} that sets the degree and sample-size scales.

    Raises
    ------
    ConstantOverflowError
        If the value is not representable as a double (happens once
        (p+2r+1)^2 exceeds about 700).
    """
    _check_p(p)
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie in (0, 1)")
    if r < 0:
        raise ValueError("r must be >= 0")
    q = p + 2 * r + 1
    try:
        first = 2 ** (p + 1) * c_r_constant(p, r) * (math.e / q) ** q * math.exp(q * q)
        second = (4**p * (p + 2) * (p + 3) * (p + 8) / (24 * omega_p(p))
                  * (math.e / p) ** p * math.exp(p * p))
        tail = p + p * (1 - math.log(p)) + p * p - math.log(alpha)
        value = 4 ** (r + 2) / 3 * (first + second) * tail
    except OverflowError as exc:
        raise ConstantOverflowError(
            f"C_pra(p={p}, r={r}) overflows a double; the theoretical scheme is "
            "only usable for small p + 2r"
        ) from exc
    if not math.isfinite(value):
        raise ConstantOverflowError(f"C_pra(p={p}, r={r}) is not finite")
    return value


def _rate_exponent(p, r, eps):
    return p * (2 - eps) + (1 - eps) * r


def _rate_base(p, r, eps):
    return (3 * p * (2 - eps) + 3 * (1 - eps) * r) / (2 * eps * math.e)


def _rate_term(d, p, r, eps):
    # K^{e/eps} / d^e, evaluated in log space
    if d < 1:
        raise ValueError("degree must be >= 1")
    e = _rate_exponent(p, r, eps)
    try:
        return math.exp(e / eps * math.log(_rate_base(p, r, eps)) - e * math.log(d))
    except OverflowError as exc:
        raise ConstantOverflowError(f"threshold overflows at d={d}, p={p}, r={r}, eps={eps}") from exc


def gamma_d(d: int, p: int, r: float, eps: float, beta: float) -> float:
    """Threshold 8 (1+beta) K^{e/eps} / d^e for a fixed degree d."""
    return 8 * (1 + beta) * _rate_term(d, p, r, eps)


def gamma_for_degree(d: int, p: int, r: float, eps: float) -> float:
    """The scheme threshold 12 K^{e/eps} / d^e with K, e depending on (p, r, eps)."""
    return 12 * _rate_term(d, p, r, eps)


def E_function(d: int, beta: float, p: int, r: float, eps: float, C: float) -> float:
    """The bounded, decreasing factor E_{p,r,eps}(d, beta) in the inner radius delta2."""
    if d < 1:
        raise ValueError("degree must be >= 1")
    if not 0 <= beta < 1:
        raise ValueError("beta must lie in [0, 1)")
    e = _rate_exponent(p, r, eps)
    first = ((1 + beta) * (p + 2) * (p + 3) * (p + 8) / (3 * C * (1 - beta) * omega_p(p))) ** (1 / (p + r))
    second = math.exp(e / (eps * (p + r)) * math.log(_rate_base(p, r, eps)))
    third = (math.exp(1 + p / d) / p) ** (p / (p + r))
    return first * second * third


def delta1(d: int, diam: float, eps: float) -> float:
    """Outer radius diam / (d^{1-eps} - 1); undefined for d <= 1."""
    if d <= 1:
        raise ValueError("delta1 is undefined for d <= 1")
    return diam / (d ** (1 - eps) - 1)


def delta2(d: int, p: int, r: float, eps: float, C: float, beta: float = 0.5) -> float:
    """Inner radius (2 / d^{1-eps}) E(d, beta)."""
    return 2 / d ** (1 - eps) * E_function(d, beta, p, r, eps, C)


def practical_degree(n: int) -> int:
    """floor(2 n^{1/4}), computed exactly with an integer fourth root."""
    if n < 1:
        raise ValueError("n must be >= 1")
    # largest d with d^4 <= 16 n
    d = int(round(2 * n**0.25))
    while d**4 > 16 * n:
        d -= 1
    while (d + 1) ** 4 <= 16 * n:
        d += 1
    return d


@dataclass(frozen=True)
class SchemeParams:
    """Constants of the support and density that drive the theoretical scheme.

    p : dimension; r : density decay exponent (>= 0); C : decay constant (> 0);
    R : rolling-ball radius (> 0); eps, alpha : in (0, 1); diam : diameter of S.
    """

    p: int
    r: float
    C: float
    R: float
    eps: float
    alpha: float
    diam: float

    def __post_init__(self):
        _check_p(self.p)
        if self.r < 0:
            raise ValueError("r must be >= 0")
        for name in ("C", "R", "diam"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be > 0")
        for name in ("eps", "alpha"):
            if not 0 < getattr(self, name) < 1:
                raise ValueError(f"{name} must lie in (0, 1)")

    @classmethod
    def conservative(cls, box, eps=0.5, alpha=0.05) -> "SchemeParams":
        """Heuristic defaults from a bounding box: C = 0.1 / volume, r = 0, R = 0.1 diam.

        These are guesses, not guarantees: the scheme's conclusions only hold
        if the true constants are at least this favourable.
        """
        lo, hi = (np.atleast_1d(np.asarray(b, dtype=float)) for b in box)
        width = hi - lo
        if np.any(width <= 0):
            raise ValueError("box must have positive extent")
        diam = float(np.linalg.norm(width))
        return cls(p=lo.size, r=0.0, C=0.1 / float(np.prod(width)), R=0.1 * diam,
                   eps=eps, alpha=alpha, diam=diam)


@dataclass(frozen=True)
class SchemeOutputs:
    """Result of :func:`select_scheme`.  Fields are None where undefined."""

    n: int
    d_n: int
    gamma_n: Optional[float]
    delta1: Optional[float]
    delta2: Optional[float]
    delta_n: Optional[float]
    D: float
    n0: float
    n1: float
    C_pra: float
    m_bound: Optional[float]
    meets_n0: bool
    meets_n1: bool
    below_theory: bool

    def as_dict(self):
        return dict(self.__dict__)


def scheme_D(params: SchemeParams) -> float:
    P = params
    return max(
        2.0,
        (P.diam / P.R + 1) ** (1 / (1 - P.eps)),
        (2 / P.R * E_function(1, 0.5, P.p, P.r, P.eps, P.C)) ** (1 / (1 - P.eps)),
    )


def scheme_degree(n: int, params: SchemeParams, cpra: Optional[float] = None) -> int:
    P = params
    cpra = C_pra(P.p, P.r, P.alpha) if cpra is None else cpra
    base = P.C * P.R ** (P.p + P.r) * n / (4 * cpra)
    d = math.floor(base ** (1 / (P.p + 2 * P.r + 2)))
    # guard against the root landing a hair below an exact integer
    if (d + 1) ** (P.p + 2 * P.r + 2) <= base * (1 + 1e-12):
        d += 1
    return d


def select_scheme(n: int, params: SchemeParams) -> SchemeOutputs:
    """Degree d_n, threshold gamma_n and the radii / sample sizes that go with them."""
    from .oracles import sup_kernel_bound

    if n < 1:
        raise ValueError("n must be >= 1")
    P = params
    cpra = C_pra(P.p, P.r, P.alpha)
    d = scheme_degree(n, P, cpra)
    D = scheme_D(P)
    scale = P.C * P.R ** (P.p + P.r)
    n0 = 4 * (D + 1) ** (P.p + 2 * P.r + 2) * cpra / scale
    n1 = 2 ** (P.p + 2 * P.r + 4) * cpra / scale
    gam = gamma_for_degree(d, P.p, P.r, P.eps) if d >= 1 else None
    d1 = delta1(d, P.diam, P.eps) if d >= 2 else None
    d2 = delta2(d, P.p, P.r, P.eps, P.C) if d >= 1 else None
    dn = max(d1, d2) if d1 is not None else None
    m = sup_kernel_bound(d, P.p, P.r, P.C, P.R) if d >= 2 else None
    return SchemeOutputs(
        n=int(n), d_n=d, gamma_n=gam, delta1=d1, delta2=d2, delta_n=dn, D=D,
        n0=n0, n1=n1, C_pra=cpra, m_bound=m,
        meets_n0=n >= n0, meets_n1=n >= n1,
        below_theory=d <= 1 or n < n0,
    )


def min_score_threshold(model: ChristoffelModel, sample) -> float:
    """Smallest Christoffel value over the sample, so every sample point is kept."""
    scores = np.atleast_1d(christoffel(model, np.asarray(sample, dtype=float)))
    if scores.size == 0:
        raise ValueError("sample is empty")
    return float(scores.min())


@dataclass(frozen=True)
class SupportEstimate:
    """The closed sublevel set {x : Lambda(x) >= gamma} of a fitted model."""

    model: ChristoffelModel = field(repr=False)
    gamma: float
    notes: tuple = ()

    def __post_init__(self):
        if not self.gamma > 0:
            raise ValueError("threshold gamma must be > 0")

    def score(self, x):
        return christoffel(self.model, x)

    def contains(self, x):
        return self.score(x) >= self.gamma

    __call__ = contains

    def raster(self, box, resolution, coarse_factor=4):
        from .geometry import rasterize_level_set

        return rasterize_level_set(self.score, self.gamma, box, resolution,
                                   coarse_factor=coarse_factor)


def estimate_support(model: ChristoffelModel, gamma: float) -> SupportEstimate:
    return SupportEstimate(model, float(gamma))


def practical_estimate(sample, d=None) -> SupportEstimate:
    """Fit at d = floor(2 n^{1/4}) (unless given) and threshold at the minimum training score."""
    x = np.asarray(sample, dtype=float)
    d = practical_degree(x.shape[0]) if d is None else d
    model = fit(x, d)
    return SupportEstimate(model, model.train_min_score, notes=("practical rule",))


def scheme_estimate(sample, params: SchemeParams):
    """Support estimate from the theoretical scheme, with a flagged practical fallback.

    Returns
    -------
    estimate : SupportEstimate
    outputs : SchemeOutputs
    fallback : bool
        True when the scheme was below its theoretical range and the
        practical rule was used instead.
    """
    x = np.asarray(sample, dtype=float)
    out = select_scheme(x.shape[0], params)
    if out.below_theory:
        est = practical_estimate(x)
        note = (f"scheme below theoretical range (d_n = {out.d_n}, n0 = {out.n0:.3g}); "
                "used the practical rule")
        return SupportEstimate(est.model, est.gamma, notes=(note,)), out, True
    model = fit(x, out.d_n)
    return SupportEstimate(model, out.gamma_n, notes=("theoretical scheme",)), out, False
