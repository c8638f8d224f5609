import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import integrate

from christoffel_support.christoffel import fit
from christoffel_support.errors import ConstantOverflowError
from christoffel_support.thresholding import (
    C_pra,
    E_function,
    SchemeParams,
    c_r_constant,
    delta1,
    delta2,
    estimate_support,
    gamma_d,
    gamma_for_degree,
    min_score_threshold,
    omega_p,
    practical_degree,
    scheme_D,
    scheme_estimate,
    select_scheme,
    sphere_area,
)

from conftest import uniform_disk


def interval_params(eps=0.5, alpha=0.1):
    # uniform law on [-1, 1]: density 1/2, rolling radius 1, diameter 2
    return SchemeParams(p=1, r=0, C=0.5, R=1.0, eps=eps, alpha=alpha, diam=2.0)


# -- constants -------------------------------------------------------------

def test_omega_p_values():
    assert omega_p(2) == pytest.approx(2 * math.pi ** 1.5, rel=1e-15)
    assert omega_p(2) == pytest.approx(11.13665, abs=1e-5)
    assert omega_p(1) == pytest.approx(4 * math.sqrt(math.pi), rel=1e-15)
    assert omega_p(1) == pytest.approx(7.08982, abs=1e-5)
    assert omega_p(4) == pytest.approx(math.pi ** 2.5, rel=1e-15)
    assert omega_p(4) == pytest.approx(17.4934, abs=1e-4)


def test_sphere_area_is_the_geometric_quantity():
    assert sphere_area(1) == pytest.approx(2 * math.pi)
    assert sphere_area(2) == pytest.approx(4 * math.pi)
    assert sphere_area(3) == pytest.approx(2 * math.pi**2)
    assert omega_p(2) != pytest.approx(sphere_area(2))


def test_c_r_examples():
    assert c_r_constant(2, 0) == pytest.approx(1 / math.pi, rel=1e-15)
    assert c_r_constant(1, 1) == pytest.approx(0.75, rel=1e-15)
    assert c_r_constant(1, 0) == pytest.approx(0.5, rel=1e-15)


@pytest.mark.parametrize("p", [1, 2, 3])
@pytest.mark.parametrize("r", [0, 0.5, 1, 2, 3.7])
def test_c_r_normalizes_by_quadrature(p, r):
    # radial integral: |S^{p-1}| int_0^1 t^{p-1} (1 - t^2)^r dt
    area = 2 * math.pi ** (p / 2) / math.gamma(p / 2)
    val, _ = integrate.quad(lambda t: t ** (p - 1) * (1 - t * t) ** r, 0, 1, epsabs=0, epsrel=1e-13)
    assert c_r_constant(p, r) * area * val == pytest.approx(1.0, rel=1e-10)


def _C_pra_logspace(p, r, alpha):
    """Second transcription: every factor as a logarithm, combined at the end."""
    q = p + 2 * r + 1
    log_cr = math.lgamma(p / 2 + r + 1) - p / 2 * math.log(math.pi) - math.lgamma(r + 1)
    log_om = math.log(2) + (p + 1) / 2 * math.log(math.pi) - math.lgamma(p / 2 + 1)
    la = (p + 1) * math.log(2) + log_cr + q * (1 - math.log(q)) + q * q
    lb = (p * math.log(4) + math.log((p + 2) * (p + 3) * (p + 8)) - math.log(24) - log_om
          + p * (1 - math.log(p)) + p * p)
    top = max(la, lb)
    log_bracket = top + math.log(math.exp(la - top) + math.exp(lb - top))
    tail = p + p * (1 - math.log(p)) + p * p - math.log(alpha)
    return math.exp((r + 2) * math.log(4) - math.log(3) + log_bracket + math.log(tail))


@pytest.mark.parametrize("p,r,alpha", [(1, 0, 0.5), (1, 1, 0.1), (2, 0, 0.05), (2, 1, 0.01), (3, 2, 0.3)])
def test_C_pra_dual_transcription(p, r, alpha):
    assert C_pra(p, r, alpha) == pytest.approx(_C_pra_logspace(p, r, alpha), rel=1e-12)


def test_C_pra_linear_in_minus_log_alpha():
    a0 = 0.3
    c1, c2, c3 = C_pra(2, 1, a0), C_pra(2, 1, a0 / math.e), C_pra(2, 1, a0 / math.e**2)
    # each division of alpha by e adds the same bracket
    assert c2 - c1 == pytest.approx(c3 - c2, rel=1e-12)
    tail = 2 + 2 * (1 - math.log(2)) + 4 - math.log(a0)
    assert c2 - c1 == pytest.approx(c1 / tail, rel=1e-12)


def test_C_pra_monotone_in_alpha():
    vals = [C_pra(1, 0, a) for a in (0.9, 0.5, 0.1, 0.01, 1e-6)]
    assert all(b > a for a, b in zip(vals, vals[1:]))


def test_C_pra_errors():
    with pytest.raises(ConstantOverflowError):
        C_pra(30, 0, 0.1)
    with pytest.raises(ValueError):
        C_pra(1, 0, 1.0)
    with pytest.raises(ValueError):
        C_pra(1, -1, 0.5)


# -- scheme ----------------------------------------------------------------

def test_degree_one_is_below_theory():
    P0 = interval_params()
    n = 1000
    C = 4 * C_pra(1, 0, P0.alpha) / (P0.R ** 1 * n)
    P = SchemeParams(p=1, r=0, C=C, R=1.0, eps=0.5, alpha=0.1, diam=2.0)
    out = select_scheme(n, P)
    assert out.d_n == 1 and out.below_theory
    assert out.delta1 is None and out.delta_n is None and out.m_bound is None
    assert out.gamma_n == pytest.approx(gamma_for_degree(1, 1, 0, 0.5))


@given(d=st.integers(1, 200), p=st.integers(1, 4), r=st.integers(0, 3),
       eps=st.floats(0.05, 0.95))
def test_gamma_scheme_matches_fixed_degree_form(d, p, r, eps):
    try:
        gamma_for_degree(d, p, r, eps)
    except ConstantOverflowError:
        with pytest.raises(ConstantOverflowError):
            gamma_d(d, p, r, eps, 0.5)
        return
    assert gamma_for_degree(d, p, r, eps) / gamma_d(d, p, r, eps, 0.5) == pytest.approx(1, abs=1e-12)


@pytest.mark.parametrize("params", [interval_params(), SchemeParams(2, 0, 1 / math.pi, 1.0, 0.5, 0.1, 2.0),
                                    SchemeParams(2, 1, 0.3, 0.5, 0.3, 0.05, 3.0)])
def test_degree_non_decreasing_in_n(params):
    ns = np.unique(np.round(np.logspace(3, 9, 61)).astype(int))
    ds = [select_scheme(int(n), params).d_n for n in ns]
    assert all(b >= a for a, b in zip(ds, ds[1:]))
    assert ds[-1] > ds[0] or params.p > 1


def test_threshold_times_rate_is_constant():
    p, r, eps = 2, 1, 0.4
    e = p * (2 - eps) + (1 - eps) * r
    K = (3 * p * (2 - eps) + 3 * (1 - eps) * r) / (2 * eps * math.e)
    const = 12 * K ** (e / eps)
    for d in range(1, 60):
        assert gamma_for_degree(d, p, r, eps) * d**e == pytest.approx(const, rel=1e-12)


def test_gamma_overflow_is_typed():
    with pytest.raises(ConstantOverflowError):
        gamma_for_degree(1, 4, 1, 0.01)


def test_gamma_strictly_decreasing_in_degree():
    g = [gamma_for_degree(d, 2, 0, 0.5) for d in range(1, 40)]
    assert all(b < a for a, b in zip(g, g[1:]))


def test_radii_rates():
    p, r, eps, C, diam = 2, 0, 0.5, 1 / math.pi, 2.0
    for d in range(2, 51):
        assert delta1(d, diam, eps) * (d ** (1 - eps) - 1) == pytest.approx(diam, rel=1e-12)
        ratio = delta2(d, p, r, eps, C) * d ** (1 - eps) / (2 * E_function(d, 0.5, p, r, eps, C))
        assert ratio == pytest.approx(1, rel=1e-12)
    with pytest.raises(ValueError):
        delta1(1, diam, eps)


def test_E_decreasing_in_degree():
    vals = [E_function(d, 0.5, 2, 1, 0.5, 0.2) for d in range(1, 30)]
    assert all(b < a for a, b in zip(vals, vals[1:]))


def test_delta_n_is_max():
    out = select_scheme(10**12, interval_params())
    assert out.delta_n == max(out.delta1, out.delta2)


@pytest.mark.parametrize("factor", [1, 2, 50])
def test_applicability_implies_small_radius(factor):
    P = interval_params()
    n0 = select_scheme(10, P).n0
    out = select_scheme(int(math.ceil(n0)) * factor, P)
    assert out.meets_n0 and not out.below_theory
    assert out.d_n >= scheme_D(P)
    assert out.delta_n <= P.R
    assert out.meets_n1  # n1 <= n0 always


def test_m_bound_reported():
    out = select_scheme(10**9, interval_params())
    assert out.d_n >= 2 and out.m_bound > 0


@pytest.mark.parametrize("n,expected", [(10000, 20), (1, 2), (625, 10), (15, 3), (16, 4)])
def test_practical_degree(n, expected):
    assert practical_degree(n) == expected


@given(n=st.integers(1, 10**15))
def test_practical_degree_is_exact_floor(n):
    d = practical_degree(n)
    assert d**4 <= 16 * n < (d + 1) ** 4


def test_practical_degree_rejects_zero():
    with pytest.raises(ValueError):
        practical_degree(0)


@pytest.mark.parametrize("kwargs", [dict(p=0), dict(r=-1), dict(C=0), dict(R=-1), dict(eps=1),
                                    dict(alpha=0), dict(diam=0)])
def test_params_validation(kwargs):
    base = dict(p=1, r=0, C=0.5, R=1.0, eps=0.5, alpha=0.1, diam=2.0)
    base.update(kwargs)
    with pytest.raises(ValueError):
        SchemeParams(**base)


def test_conservative_params():
    P = SchemeParams.conservative(([-1, -2], [1, 2]))
    assert P.r == 0 and P.p == 2
    assert P.C == pytest.approx(0.1 / 8)
    assert P.R == pytest.approx(0.1 * math.sqrt(20))
    assert P.diam == pytest.approx(math.sqrt(20))


# -- estimates -------------------------------------------------------------

def test_min_score_threshold_examples():
    model = fit(np.array([[-1.0], [1.0]]), 1)
    assert min_score_threshold(model, np.array([[-1.0], [1.0]])) == pytest.approx(0.5)
    single = fit(np.array([[0.3, 0.4]]), 0, standardize_sample=False)
    assert min_score_threshold(single, np.array([[0.3, 0.4]])) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        min_score_threshold(model, np.empty((0, 1)))


def test_min_score_keeps_every_sample_point():
    x = uniform_disk(1500)
    model = fit(x, 6)
    est = estimate_support(model, min_score_threshold(model, x))
    assert np.all(est.contains(x))


def test_extreme_thresholds():
    model = fit(uniform_disk(800), 4)
    g = np.stack(np.meshgrid(np.linspace(-3, 3, 61), np.linspace(-3, 3, 61)), -1).reshape(-1, 2)
    assert not estimate_support(model, 1.0 + 1e-9).contains(g).any()
    assert estimate_support(model, 1e-300).contains(g).all()
    with pytest.raises(ValueError):
        estimate_support(model, 0.0)


def test_membership_is_closed_and_pure():
    model = fit(uniform_disk(500), 3)
    x0 = np.array([0.2, -0.1])
    est = estimate_support(model, model(x0))
    assert est.contains(x0)
    assert est.contains(x0) == est.contains(x0.copy())


def test_membership_independent_of_whitening(rng):
    x = uniform_disk(900) * [2.0, 0.3] + [5.0, 1.0]
    q = rng.uniform(-1.3, 1.3, size=(2000, 2)) * [2.0, 0.3] + [5.0, 1.0]
    a, b = fit(x, 4), fit(x, 4, standardize_sample=False)
    gamma = a.train_min_score
    la, lb = a(q), b(q)
    clear = np.abs(la - gamma) > 1e-8 * gamma
    np.testing.assert_array_equal((la >= gamma)[clear], (lb >= gamma)[clear])


def test_scheme_estimate_falls_back_with_flag():
    est, out, fallback = scheme_estimate(uniform_disk(2000), SchemeParams(2, 0, 1 / math.pi, 1.0, 0.5, 0.1, 2.0))
    assert fallback and out.below_theory
    assert est.model.degree == practical_degree(2000)
    assert "practical" in est.notes[0]
