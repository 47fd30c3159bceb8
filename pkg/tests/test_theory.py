import math

import numpy as np
import pytest
from scipy import integrate, special, stats

from scatmoments._rng import derive_rng
from scatmoments.filters import BUMP, GaborFilter, WindowFunction, bump_window, midpoint_nodes, window_pnorm
from scatmoments.pointprocess import ChargeDistribution, IntensityModel, simulate_inhomogeneous
from scatmoments.scattering import pointwise_window_mc
from scatmoments.selfsimilar import FBM, AlphaStable
from scatmoments.theory import (
    ConvergenceError,
    Prediction,
    brownian_abs_moment,
    m_lambda,
    poisson_tail_moment,
    predict_first_order,
    predict_second_order_K,
    predict_selfsim,
    sample_rescaled_locations,
    scaling_exponent,
    singleton_terms,
    stable_abs_moment,
    taylor_error_decay,
    taylor_expansion,
    taylor_terms,
    two_point_expectation,
    two_point_rhs,
    two_point_sides,
)

W1, W2 = window_pnorm(BUMP, 1), window_pnorm(BUMP, 2)


def test_prediction_validation():
    with pytest.raises(ValueError):
        Prediction(1.0, "guess", 0.1)
    with pytest.raises(ValueError):
        Prediction(1.0, "closed_form", 0.0)


# first order


def test_predict_first_order_examples():
    assert predict_first_order(0.01, 1, ChargeDistribution.rademacher()).value == pytest.approx(0.01 * W1)
    g = predict_first_order(0.01, 2, ChargeDistribution.gaussian(math.pi / 2)).value
    assert g == pytest.approx(0.01 * math.pi / 2 * W2, rel=1e-12)
    a = predict_first_order(0.01, 1, ChargeDistribution.gaussian(1.0)).value
    b = predict_first_order(0.01 / math.sqrt(2), 1, ChargeDistribution.gaussian(2.0)).value
    assert a == pytest.approx(b, rel=1e-12)
    assert a / W1 == pytest.approx(0.00798, abs=5e-6)
    with pytest.raises(ValueError):
        predict_first_order(0.01, 0.5, ChargeDistribution.rademacher())


def test_rescaled_locations_uniform_for_constant_rate():
    v = sample_rescaled_locations(IntensityModel.constant(0.3, 100.0), 50.0, 2.0, 20000, np.random.default_rng(1))
    assert stats.kstest(v, "uniform").pvalue > 1e-3


def test_rescaled_location_density():
    # density s lambda(t - v s) / Lambda_s(t) integrates to 1 and matches the sampler
    model = IntensityModel.sinusoidal(0.5, 0.9, 3.0, horizon=10.0)
    t, s = 2.0, 1.5
    lam_s = float(model.window_count(t, s))
    dens = lambda v: s * float(model.rate(t - v * s)) / lam_s  # noqa: E731
    total, _ = integrate.quad(dens, 0.0, 1.0)
    assert total == pytest.approx(1.0, abs=1e-6)
    v = sample_rescaled_locations(model, t, s, 20000, np.random.default_rng(2))
    cdf = lambda x: (model.cumulative(t) - model.cumulative(t - x * s)) / lam_s  # noqa: E731
    assert stats.kstest(v, cdf).pvalue > 1e-3


def test_single_term_closed_form():
    model = IntensityModel.constant(0.5, 10.0)
    f = GaborFilter(0.6, 2.0)
    (term, se), = taylor_terms(f, 1, model, ChargeDistribution.constant(1.0), 5.0, 1, 400000, 3)
    lam = 0.3
    assert abs(term - math.exp(-lam) * lam * W1) < 4 * se


def test_taylor_expansion_converges_to_direct_estimate():
    model = IntensityModel.sinusoidal(0.6, 0.5, 4.0, horizon=10.0)
    dist = ChargeDistribution.gaussian(1.0)
    f = GaborFilter(1.0, 2.5)
    approx = taylor_expansion(f, 1.5, model, dist, 5.0, 8, 200000, 4)
    direct = pointwise_window_mc(f, 1.5, model, dist, 5.0, 10**6, 5)
    assert abs(approx.value - direct.value) < 3 * math.hypot(approx.tolerance, direct.std_error)


def test_taylor_expansion_rejects_large_window_mass():
    with pytest.raises(ValueError):
        taylor_expansion(GaborFilter(2.0), 1, IntensityModel.constant(0.6, 10.0), ChargeDistribution.constant(), 5.0,
                         1, 10, 0)


def test_taylor_error_zero_charges():
    model = IntensityModel.constant(1.0, 10.0)
    filt = [GaborFilter(0.3 * 2 ** (-k / 2), 1.0) for k in range(5)]
    dec = taylor_error_decay(filt, 1, model, ChargeDistribution.constant(0.0), 5.0, 1, 1000, 1000, 6)
    assert all(e == 0.0 for e in dec.eps)
    assert math.isnan(dec.slope)


def test_taylor_error_needs_five_scales():
    with pytest.raises(ValueError):
        taylor_error_decay([GaborFilter(0.1)] * 4, 1, IntensityModel.constant(1.0), ChargeDistribution.constant(),
                           0.5, 1, 10, 10, 0)


def test_taylor_error_slope_m1():
    model = IntensityModel.constant(1.0, 10.0)
    filt = [GaborFilter(0.16 * 2 ** (-k / 3), 1.0) for k in range(5)]
    dec = taylor_error_decay(filt, 1, model, ChargeDistribution.constant(1.0), 5.0, 1, 4 * 10**6, 10**6, 7)
    assert dec.slope >= 1.7


@pytest.mark.parametrize("lam,a,m,expected", [(0.5, 0.0, 0, 1 - math.exp(-0.5))])
def test_poisson_tail_moment_examples(lam, a, m, expected):
    assert poisson_tail_moment(lam, a, m) == pytest.approx(expected, rel=1e-14)


def test_poisson_tail_moment_leading_term():
    ratios = [poisson_tail_moment(lam, 2.0, 1) / lam**2 for lam in (1e-2, 1e-3, 1e-4)]
    assert ratios[-1] == pytest.approx(2.0, rel=1e-3)
    assert all(r < 2.5 for r in ratios)


def test_poisson_tail_moment_bounded_and_monotone():
    grid = np.linspace(0.01, 0.99, 50)
    for m in (0, 1, 2, 3):
        r = [poisson_tail_moment(lam, 1.5, m) / lam ** (m + 1) for lam in grid]
        assert max(r) < 10.0 * (m + 2) ** 1.5
    assert all(poisson_tail_moment(lam, 1.0, 3) < poisson_tail_moment(lam, 1.0, 2) for lam in grid)
    with pytest.raises(ValueError):
        poisson_tail_moment(1.0, 1.0, 1)


def test_poisson_tail_moment_against_scipy():
    lam, a, m = 0.7, 1.3, 2
    k = np.arange(m + 1, 80)
    ref = np.sum(stats.poisson.pmf(k, lam) * k**a)
    assert poisson_tail_moment(lam, a, m) == pytest.approx(ref, rel=1e-12)


# second order


def test_K_p1_p1_is_squared_l1_norm():
    assert predict_second_order_K(1, 1, 1.0, 0.0).value == pytest.approx(W1**2, rel=1e-6)


def test_K_zero_window():
    zero = WindowFunction.tabulated([0.0, 1.0], [0.0, 0.0])
    assert predict_second_order_K(1, 2, 1.0, 0.0, window=zero).value == 0.0


def test_K_grid_doubling_stability():
    a = predict_second_order_K(1, 2, 1.0, 0.0, n_quad=512).value
    b = predict_second_order_K(1, 2, 1.0, 0.0, n_quad=1024).value
    assert abs(a - b) <= 1e-4 * b


def test_K_matches_direct_double_integral():
    # independent oracle: scipy dblquad-free nested quad of the convolution
    c, L = 2.0, 1.5

    def inner(v):
        re, _ = integrate.quad(lambda u: bump_window((v - u) / c) * math.cos(L / c * (v - u)) * bump_window(u), 0, 1)
        im, _ = integrate.quad(lambda u: bump_window((v - u) / c) * math.sin(L / c * (v - u)) * bump_window(u), 0, 1)
        return re * re + im * im

    ref, _ = integrate.quad(inner, 0.0, 1.0 + c, limit=200)
    assert predict_second_order_K(1, 2, c, L).value == pytest.approx(ref, rel=1e-6)


def test_K_reports_nonconvergence():
    spiky = WindowFunction.tabulated([0.0, 0.5, 0.52, 0.54, 1.0], [0.0, 0.0, 1.0, 0.0, 0.0])
    with pytest.raises(ConvergenceError):
        predict_second_order_K(1, 2, 1.0, 0.0, window=spiky, n_quad=16)
    with pytest.raises(ValueError):
        predict_second_order_K(1, 2, 0.0)


def test_m_lambda_examples():
    sine = IntensityModel.sinusoidal(0.01, 0.5, 1000.0)
    assert m_lambda(sine, 1).value == 0.01
    assert m_lambda(sine, 2).value == pytest.approx(1e-4 * 1.125, rel=1e-14)
    ref, _ = integrate.quad(lambda t: float(sine.rate(t)) ** 2, 0.0, 1000.0, limit=200)
    assert m_lambda(sine, 2).value == pytest.approx(ref / 1000.0, rel=1e-10)
    assert m_lambda(IntensityModel.constant(0.02), 2).value == pytest.approx(4e-4)
    with pytest.raises(ValueError):
        m_lambda(sine, 3)


def test_two_point_constant_charges_p2():
    # E|w(U1) + w(U2)|^2 = 2 ||w||_2^2 + 2 ||w||_1^2
    est = two_point_expectation(2, ChargeDistribution.constant(1.0), 0.0, 10**6, 8)
    assert abs(est.value - 2 * (W2 + W1**2)) < 4 * est.std_error
    sine = IntensityModel.sinusoidal(0.01, 0.5, 1000.0)
    rhs, se = two_point_rhs(2, sine, ChargeDistribution.constant(1.0), 0.0, 10**6, 8)
    assert abs(rhs - 1.125e-4 * W1**2 / W2) < 4 * se


def test_two_point_rademacher_by_enumeration():
    # E|e1 w1 + e2 w2| = (E|w1 + w2| + E|w1 - w2|) / 2 over the four sign pairs
    u = midpoint_nodes(2000)
    w = bump_window(u)
    diff = np.abs(w[:, None] - w[None, :]).mean()
    ref = 0.5 * (2 * W1 + diff)
    est = two_point_expectation(1, ChargeDistribution.rademacher(), 0.0, 10**6, 9)
    assert abs(est.value - ref) < 4 * est.std_error + 1e-6


def test_singleton_terms_constant_rate():
    model = IntensityModel.constant(0.02, 1000.0)
    lam_bar, j = singleton_terms(model, 4.0, 2, 4.0, 996.0)
    assert lam_bar == pytest.approx(0.08, rel=1e-12)
    assert j / lam_bar == pytest.approx(W2, rel=1e-6)


def test_two_point_sides_constant_intensity():
    # constant rate: m2 = m1^2 and the left side is exact at every scale
    model = IntensityModel.constant(0.02, 20000.0)
    pats = [simulate_inhomogeneous(model, derive_rng(10, "r", r)) for r in range(30)]
    res = two_point_sides([GaborFilter(64.0), GaborFilter(32.0)], 2, model, ChargeDistribution.constant(1.0), 0.0,
                          pats, 200000, 11)
    assert res.rhs == pytest.approx(4e-4 * W1**2 / W2, rel=0.02)
    i = res.finest_usable
    assert i is not None
    assert res.lhs[i] == pytest.approx(res.rhs, rel=0.15)


# self-similar limits


def test_selfsim_brownian_closed_forms():
    assert predict_selfsim(FBM(0.5), 2).value == W2
    assert predict_selfsim(FBM(0.5), 1).value == pytest.approx(math.sqrt(W2) * math.sqrt(2 / math.pi), rel=1e-10)
    assert predict_selfsim(FBM(0.5), 2, L=3.0).value == pytest.approx(W2, rel=1e-10)


def test_brownian_abs_moment_against_gaussian_vector():
    L, p = 3.0, 1.0
    u = midpoint_nodes(4096)
    w = bump_window(u)
    cov = np.array([[np.mean(w * w * np.cos(L * u) ** 2), np.mean(w * w * np.cos(L * u) * np.sin(L * u))],
                    [0.0, np.mean(w * w * np.sin(L * u) ** 2)]])
    cov[1, 0] = cov[0, 1]
    z = np.random.default_rng(12).multivariate_normal([0, 0], cov, size=10**6)
    r = np.hypot(z[:, 0], z[:, 1]) ** p
    assert abs(brownian_abs_moment(p, L) - r.mean()) < 4 * r.std() / 1000


def test_selfsim_stable_at_zero_frequency():
    # int w dX for unit stable X is stable with scale (int |w|^alpha)^(1/alpha)
    alpha = 1.5
    pred = predict_selfsim(AlphaStable(alpha), 1, n_mc=100000, n_grid=512, seed=13)
    ref = window_pnorm(BUMP, alpha) ** (1 / alpha) * 2 * special.gamma(1 - 1 / alpha) / math.pi
    assert pred.method == "monte_carlo"
    assert pred.value == pytest.approx(ref, rel=0.03)


def test_selfsim_fbm_monte_carlo():
    pred = predict_selfsim(FBM(0.7), 2, n_mc=20000, n_grid=256, seed=14)
    # E|int w dX|^2 for fBM: double integral of w(u) w(v) H(2H-1)|u-v|^(2H-2)
    H = 0.7
    u = midpoint_nodes(400)
    w = bump_window(u)
    d = np.abs(u[:, None] - u[None, :])
    np.fill_diagonal(d, np.inf)
    ker = H * (2 * H - 1) * d ** (2 * H - 2)
    # diagonal cells: integrate the singularity exactly over each cell
    h = 1 / 400
    diag = 2 * H * (2 * H - 1) * h ** (2 * H) / ((2 * H - 1) * 2 * H) / h**2
    ref = (w @ ker @ w) * h * h + np.sum(w * w) * diag * h * h
    assert pred.value == pytest.approx(ref, rel=0.05)


def test_selfsim_rejects_p_at_least_alpha():
    with pytest.raises(ValueError):
        predict_selfsim(AlphaStable(1.5), 1.5)


def test_scaling_exponent():
    assert scaling_exponent(AlphaStable(1.5), 1) == pytest.approx(2 / 3)
    assert scaling_exponent(FBM(0.3), 2) == pytest.approx(0.6)


@pytest.mark.parametrize("alpha,p", [(1.5, 1.0), (1.8, 0.5), (2.0, 1.0)])
def test_stable_abs_moment(alpha, p):
    from scatmoments.selfsimilar import stable_variates

    x = np.abs(stable_variates(alpha, 10**6, np.random.default_rng(15))) ** p
    assert stable_abs_moment(alpha, p) == pytest.approx(x.mean(), rel=0.02)
