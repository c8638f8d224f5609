import math
import warnings
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import integrate
from scipy.stats import special_ortho_group

from christoffel_support.errors import OutOfHypothesisError, UnsupportedError
from christoffel_support.oracles import (
    BallJacobiMeasure,
    BoundReport,
    analytic_kernel_diag,
    analytic_moment_matrix,
    analytic_orthonormal_transform,
    ball_grid,
    ball_jacobi_moment,
    ball_jacobi_moment_exact,
    binomial_inequality_reports,
    binomial_spelling_reports,
    christoffel_analytic,
    concentration_bound,
    empirical_christoffel_orthobasis,
    empirical_in_orthobasis,
    gegenbauer_boundary_kernel,
    gegenbauer_equivalence_reports,
    inequality_suite,
    inside_lower_bound,
    log_minimum_reports,
    outside_upper_bound,
    power_decay_reports,
    sandwich_suite,
    sup_kernel_bound,
    technical_gap,
)
from christoffel_support.polybasis import basis_size
from christoffel_support.thresholding import c_r_constant

from conftest import uniform_disk


# -- moments ---------------------------------------------------------------

def _quad_moment(alpha, p, r):
    c = c_r_constant(p, r)
    warnings.simplefilter("ignore", integrate.IntegrationWarning)
    if p == 1:
        val, _ = integrate.quad(lambda z: z ** alpha[0] * (1 - z * z) ** r, -1, 1,
                                epsabs=1e-14, epsrel=1e-12)
        return c * val
    a, b = alpha

    def f(theta, rho):
        return ((rho * math.cos(theta)) ** a * (rho * math.sin(theta)) ** b
                * (1 - rho * rho) ** r * rho)

    val, _ = integrate.dblquad(f, 0, 1, 0, 2 * math.pi, epsabs=1e-14, epsrel=1e-12)
    return c * val


_QUAD_CASES = ([(1, r, (a,)) for r in (0, 1, 2) for a in range(7)]
               + [(2, r, (a, b)) for r in (0, 1, 2) for a in range(7) for b in range(7 - a)])


@pytest.mark.parametrize("p,r,alpha", _QUAD_CASES)
def test_closed_form_moment_matches_quadrature(p, r, alpha):
    m = BallJacobiMeasure(p, r)
    assert ball_jacobi_moment(alpha, m) == pytest.approx(_quad_moment(alpha, p, r), abs=1e-8)


def test_moment_examples():
    m = BallJacobiMeasure(1, 0)
    assert ball_jacobi_moment_exact((0,), m) == 1
    assert ball_jacobi_moment_exact((2,), m) == Fraction(1, 3)
    assert ball_jacobi_moment((3,), m) == 0.0
    assert ball_jacobi_moment((2, 1, 4), BallJacobiMeasure(3, 2)) == 0.0
    for p in (1, 2, 3, 5):
        for r in (0, 1, 4):
            assert ball_jacobi_moment_exact((0,) * p, BallJacobiMeasure(p, r)) == 1


def test_non_integer_r_is_unsupported():
    m = BallJacobiMeasure(2, 0.5)
    assert not m.integer_r
    with pytest.raises(UnsupportedError):
        ball_jacobi_moment((2, 0), m)
    with pytest.raises(UnsupportedError):
        analytic_moment_matrix(2, 2, 0.5)
    with pytest.raises(UnsupportedError):
        christoffel_analytic(2, 2, 1.5, [0.0, 0.0])
    with pytest.raises(ValueError):
        BallJacobiMeasure(2, -1)


def test_analytic_moment_matrix_examples():
    np.testing.assert_array_equal(analytic_moment_matrix(1, 1, 0).entries, [[1, 0], [0, 1 / 3]])
    M = analytic_moment_matrix(2, 1, 0)
    np.testing.assert_allclose(M.entries, np.diag([1, 0.25, 0.25]), atol=1e-15)
    assert M.provenance[0] == "analytic"


def test_disk_second_moments_by_monte_carlo():
    z = BallJacobiMeasure(2, 0).sample(400_000, np.random.default_rng(7))
    v = np.column_stack([np.ones(len(z)), z])
    np.testing.assert_allclose(v.T @ v / len(z), analytic_moment_matrix(2, 1, 0).entries, atol=1e-3)


@pytest.mark.parametrize("p,d,r", [(1, 4, 0), (2, 3, 1), (3, 2, 2), (2, 6, 0)])
def test_analytic_moment_matrix_is_spd(p, d, r):
    a = analytic_moment_matrix(p, d, r).entries
    np.testing.assert_array_equal(a, a.T)
    assert np.linalg.eigvalsh(a).min() > 0


@pytest.mark.parametrize("p,r", [(1, 0), (2, 1), (3, 2)])
def test_sampler_matches_moments(p, r):
    m = BallJacobiMeasure(p, r)
    z = m.sample(200_000, np.random.default_rng(3))
    assert np.all(np.linalg.norm(z, axis=1) <= 1)
    alpha = (2,) + (0,) * (p - 1)
    se = np.std(z[:, 0] ** 2) / math.sqrt(len(z))
    assert abs(np.mean(z[:, 0] ** 2) - ball_jacobi_moment(alpha, m)) < 5 * se


# -- christoffel values ----------------------------------------------------

def test_christoffel_analytic_examples():
    assert christoffel_analytic(1, 1, 0, 0.0) == pytest.approx(1.0, rel=1e-14)
    assert christoffel_analytic(1, 1, 0, 1.0) == pytest.approx(0.25, rel=1e-14)
    assert christoffel_analytic(1, 2, 0, 0.0) == pytest.approx(4 / 9, rel=1e-14)
    assert analytic_kernel_diag(1, 2, 0, np.array([0.0, 1.0])).shape == (2,)


def test_orthonormal_transform_whitens():
    T = analytic_orthonormal_transform(2, 4, 1)
    M = analytic_moment_matrix(2, 4, 1).entries
    np.testing.assert_allclose(T @ M @ T.T, np.eye(basis_size(2, 4)), atol=1e-9)


@pytest.mark.parametrize("p,d,r", [(2, 3, 0), (2, 5, 1), (3, 3, 2)])
def test_rotational_symmetry(p, d, r):
    g = np.random.default_rng(11)
    x = g.uniform(-0.8, 0.8, size=(30, p)) / math.sqrt(p)
    base = christoffel_analytic(p, d, r, x)
    for _ in range(5):
        Q = special_ortho_group.rvs(p, random_state=g)
        np.testing.assert_allclose(christoffel_analytic(p, d, r, x @ Q.T), base, rtol=1e-9)


# -- gegenbauer closed form ------------------------------------------------

def test_gegenbauer_examples():
    assert gegenbauer_boundary_kernel(1, 1, 0) == 4
    assert gegenbauer_boundary_kernel(1, 0, 0) == 1
    assert gegenbauer_boundary_kernel(2, 2, 0) == 14
    assert 1 / christoffel_analytic(2, 2, 0, [1.0, 0.0]) == pytest.approx(14, rel=1e-12)
    with pytest.raises(ValueError):
        gegenbauer_boundary_kernel(1, -1, 0)
    with pytest.raises(ValueError):
        gegenbauer_boundary_kernel(1, 1, 0, spelling="other")


def test_gegenbauer_equivalence_sweep():
    reports = gegenbauer_equivalence_reports()
    assert len(reports) == 3 * 7 * 3
    assert all(rep.satisfied for rep in reports)


def test_binomial_spellings_agree():
    assert all(rep.measured == 0 for rep in binomial_spelling_reports())


# -- bounds ----------------------------------------------------------------

def test_outside_upper_bound_examples():
    assert outside_upper_bound(1.0, 1.0, 6) == 1.0
    assert outside_upper_bound(0.3, 2.0, 0) == 8.0
    assert outside_upper_bound(0.5, 2, 5) > outside_upper_bound(0.5, 2, 6)
    assert outside_upper_bound(0.5, 2, 5) > outside_upper_bound(0.6, 2, 5)
    with pytest.raises(ValueError):
        outside_upper_bound(0.0, 1.0, 3)


def test_inside_lower_bound_example():
    val = inside_lower_bound(1.0, 1, 0, 0.5, 2)
    assert val == pytest.approx(math.sqrt(math.pi) / 11, rel=1e-14)
    assert val == pytest.approx(0.16113, abs=1e-5)
    assert val <= christoffel_analytic(1, 2, 0, 0.0)
    with pytest.raises(OutOfHypothesisError):
        inside_lower_bound(1.0, 1, 0, 0.5, 1)


@pytest.mark.parametrize("p", [1, 2])
@pytest.mark.parametrize("d", range(2, 9))
def test_inside_lower_bound_below_center_value(p, d):
    lam0 = christoffel_analytic(p, d, 0, np.zeros((1, p)))[0]
    assert inside_lower_bound(1.0, p, 0, c_r_constant(p, 0), d) <= lam0


@pytest.mark.parametrize("p", [1, 2, 3])
@pytest.mark.parametrize("d", range(2, 9))
def test_sup_bound_dominates_sphere_value(p, d):
    assert sup_kernel_bound(d, p, 0, c_r_constant(p, 0), 1.0) >= gegenbauer_boundary_kernel(p, d, 0)


@pytest.mark.parametrize("p,r", [(1, 0), (2, 0), (1, 1), (2, 1)])
def test_sup_bound_growth_order(p, r):
    C = c_r_constant(p, r)
    ratio = sup_kernel_bound(64, p, r, C, 1.0) / sup_kernel_bound(32, p, r, C, 1.0)
    assert ratio == pytest.approx(2 ** (p + 2 * r + 1), rel=0.2)


@pytest.mark.parametrize("p,r", [(1, 2), (2, 2), (3, 0), (3, 2)])
def test_sup_bound_growth_order_higher_exponents(p, r):
    # larger p + 2r needs larger d before the leading power dominates
    C = c_r_constant(p, r)
    limit = 2 ** (p + 2 * r + 1)
    errs = [abs(sup_kernel_bound(2 * d, p, r, C, 1.0) / sup_kernel_bound(d, p, r, C, 1.0) / limit - 1)
            for d in (32, 128, 512, 2048)]
    assert all(b < a for a, b in zip(errs, errs[1:]))
    assert errs[-1] < 0.05


def _sup_bound_second(d, p, r, C, R):
    # log-space transcription with Gamma-based binomials
    def lbinom(a, k):
        return math.lgamma(a + 1) - math.lgamma(k + 1) - math.lgamma(a - k + 1)

    s = math.comb(p + d, d)
    log_om = math.log(2) + (p + 1) / 2 * math.log(math.pi) - math.lgamma(p / 2 + 1)
    log_first = ((p + r) * math.log(4) + math.log(s) - math.log(C) - log_om - (p + r) * math.log(R)
                 + math.log(d + p + 1) + math.log(d + p + 2) + math.log(2 * d + p + 6)
                 - math.log(d + 1) - math.log(d + 2) - math.log(d + 3))
    top = p + d + 2 * r
    kern = 2 * math.exp(lbinom(top + 1, d)) - math.exp(lbinom(top, d))
    log_cr = math.lgamma(p / 2 + r + 1) - p / 2 * math.log(math.pi) - math.lgamma(r + 1)
    second = math.exp((p + 2 * r) * math.log(2) + log_cr - math.log(C) - (p + r) * math.log(R)) * kern
    return math.exp(log_first) + second


@pytest.mark.parametrize("d,p,r,C,R", [(2, 1, 0, 0.5, 1.0), (5, 2, 1, 0.3, 0.7), (9, 3, 2, 1.1, 2.0)])
def test_sup_bound_dual_transcription(d, p, r, C, R):
    assert sup_kernel_bound(d, p, r, C, R) == pytest.approx(_sup_bound_second(d, p, r, C, R), rel=1e-12)


def test_sup_bound_hypothesis():
    with pytest.raises(OutOfHypothesisError):
        sup_kernel_bound(1, 1, 0, 0.5, 1.0)


def test_sandwich_suite_all_satisfied():
    reports = sandwich_suite()
    names = {rep.name for rep in reports}
    assert names == {"inside-lower", "outside-upper", "sup-kernel"}
    bad = [rep.as_dict() for rep in reports if not rep.satisfied]
    assert not bad


# -- concentration ---------------------------------------------------------

def test_concentration_examples():
    assert concentration_bound(3, 16, 1, 1 / math.e) == pytest.approx(1.0, rel=1e-14)
    assert concentration_bound(1, 10**6, 100, 0.05) == pytest.approx(
        math.sqrt(16 * math.log(2000) / 3e6), rel=1e-14)
    assert concentration_bound(1, 10**6, 100, 0.05) == pytest.approx(6.37e-3, abs=1e-5)


@given(m=st.floats(0.1, 100), n=st.integers(10**4, 10**8), s=st.integers(1, 500),
       alpha=st.floats(0.001, 0.5))
def test_concentration_root_branch_scaling(m, n, s, alpha):
    b1 = concentration_bound(m, n, s, alpha)
    if b1 < 1:
        assert concentration_bound(m, 2 * n, s, alpha) / b1 == pytest.approx(1 / math.sqrt(2), rel=1e-12)


def test_concentration_validation():
    for args in [(0, 10, 5, 0.1), (1, 0, 5, 0.1), (1, 10, 5, 1.0)]:
        with pytest.raises(ValueError):
            concentration_bound(*args)


def test_technical_gap_examples():
    assert technical_gap(np.eye(4)) == 0
    assert technical_gap(np.diag([1.0, 1.3])) == pytest.approx(0.3, rel=1e-14)
    assert technical_gap(np.diag([0.6, 1.1])) == pytest.approx(0.4, rel=1e-14)


def test_gap_majorant_on_uniform_disk():
    x = uniform_disk(10_000, seed=5)
    M = empirical_in_orthobasis(x, 2, 3, 0)
    gap = technical_gap(M)
    ax = np.linspace(-1, 1, 50)
    grid = np.stack(np.meshgrid(ax, ax), -1).reshape(-1, 2)
    lam = christoffel_analytic(2, 3, 0, grid)
    lam_n = empirical_christoffel_orthobasis(M, 2, 3, 0, grid)
    assert np.max(np.abs(lam_n - lam) / lam) <= gap + 1e-8
    assert 0 < gap < 0.5


# -- inequality suite ------------------------------------------------------

def test_binomial_example():
    rep = next(r for r in binomial_inequality_reports() if r.inputs == {"m": 2, "n": 2})
    assert math.exp(rep.measured) == pytest.approx(6)
    assert math.exp(rep.bound) == pytest.approx(math.e**4)
    assert rep.satisfied


def test_power_decay_at_degree_one():
    reps = power_decay_reports(ds=[1])
    assert all(r.satisfied for r in reps)
    assert all(math.exp(r.measured) == pytest.approx(4) for r in reps)


def test_log_minimum_closed_form_matches_grid():
    reps = [r for r in log_minimum_reports() if r.name == "log-minimum/grid"]
    for r in reps:
        assert r.measured == pytest.approx(r.bound, abs=1e-6 * max(1, abs(r.bound)))


def test_inequality_suite_grids_and_satisfaction():
    reps = inequality_suite()
    counts = {}
    for r in reps:
        counts[r.name] = counts.get(r.name, 0) + 1
    assert counts["binomial"] == 400
    assert counts["log-minimum/grid"] == counts["log-minimum/lower"] == 100
    assert counts["power-decay"] == 100 * 9 * 20
    assert all(r.satisfied for r in reps)


# -- reports ---------------------------------------------------------------

def test_bound_report_directions():
    up = BoundReport("x", {}, 2.0, 1.5)
    assert up.satisfied and up.slack == 0.5
    low = BoundReport("y", {}, 2.0, 1.5, ">=")
    assert not low.satisfied and low.slack == -0.5
    assert BoundReport("z", {}, np.float64(1.0), np.float32(1.0)).satisfied
    with pytest.raises(ValueError):
        BoundReport("w", {}, 1, 1, "<")
    assert set(up.as_dict()) == {"name", "inputs", "bound", "measured", "direction", "satisfied", "slack"}


def test_ball_grid():
    g = ball_grid(2, 50, 0.95)
    assert g.shape[1] == 2 and np.all(np.linalg.norm(g, axis=1) <= 0.95 + 1e-12)
    assert len(g) > 0.7 * 2500
