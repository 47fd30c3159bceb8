"""Reference values the estimators are checked against.

Closed forms where they exist, deterministic quadrature otherwise, and
Monte Carlo (on the ``"oracle"`` seed domain) for the expectations over
uniform/rescaled locations and limiting stochastic integrals.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from ._rng import derive_rng, sub_seed
from .filters import BUMP, midpoint_nodes, window_pnorm
from .fitting import TooFewPointsError, fit_loglog
from .scattering import _Pooled, first_order_invariant, pointwise_window_mc
from .selfsimilar import FBM, AlphaStable


_TINY = float(np.finfo(float).tiny)


class ConvergenceError(RuntimeError):
    """Quadrature refinement did not settle."""


@dataclass(frozen=True)
class Prediction:
    """A theoretical value; ``tolerance`` is the declared accuracy (for Monte
    Carlo, one standard error)."""

    value: float
    method: str
    tolerance: float

    def __post_init__(self):
        if self.method not in ("closed_form", "quadrature", "monte_carlo"):
            raise ValueError(f"unknown method {self.method!r}")
        if not self.tolerance > 0:
            raise ValueError("tolerance must be positive")


# first order


def predict_first_order(rate, p, dist, window=BUMP):
    """Small-scale limit ``rate * E|A|^p * ||w||_p^p`` of ``S/s``."""
    if p < 1:
        raise ValueError("p must be >= 1")
    val = rate * dist.abs_moment(p) * window_pnorm(window, p)
    return Prediction(val, "quadrature", max(1e-8 * abs(val), _TINY))


def sample_rescaled_locations(intensity, t, s, size, rng):
    """Draws of ``V = (t - Z) / s`` where ``Z`` has density ``lambda / Lambda_s(t)``
    on ``[t - s, t]``; uniform on (0, 1) for a constant intensity."""
    lo = float(intensity.cumulative(t - s))
    mass = float(intensity.cumulative(t)) - lo
    z = intensity.inverse_cumulative(lo + rng.random(size) * mass)
    return (t - z) / s


def taylor_terms(f, p, intensity, dist, t, m, n_mc, seed, chunk=2**20):
    """The ``m`` leading terms of the expansion of ``S_{gamma,p} Y(t)`` in the
    number of points inside the filter support.

    Term ``k`` is ``P(N_s(t) = k) * E|sum_{j<=k} A_j w(V_j) e^{i s xi V_j}|^p``.

    Returns:
        list of (term value, standard error)
    """
    s = f.scale
    if s * intensity.lam_max >= 1.0:
        raise ValueError("expansion needs s * max(lambda) < 1")
    lam_s = float(intensity.window_count(t, s))
    out = []
    for k in range(1, m + 1):
        weight = math.exp(-lam_s + k * math.log(lam_s) - math.lgamma(k + 1)) if lam_s > 0 else 0.0
        pool = _Pooled()
        done, c = 0, 0
        while done < n_mc:
            n = min(chunk, n_mc - done)
            rng = derive_rng(seed, "oracle-taylor", k, c)
            v = sample_rescaled_locations(intensity, t, s, (n, k), rng)
            a = dist.sample(n * k, rng).reshape(n, k)
            z = (a * f.window(v) * np.exp(1j * s * f.freq * v)).sum(axis=1)
            pool.add(np.abs(z) ** p)
            done += n
            c += 1
        out.append((weight * pool.mean, weight * math.sqrt(pool.m2 / max(pool.n - 1, 1) / pool.n)))
    return out


def taylor_expansion(f, p, intensity, dist, t, m, n_mc, seed):
    """``m``-term expansion of the pointwise moment as a Prediction."""
    terms = taylor_terms(f, p, intensity, dist, t, m, n_mc, seed)
    val = sum(v for v, _ in terms)
    se = math.sqrt(sum(e * e for _, e in terms))
    return Prediction(val, "monte_carlo", max(se, _TINY))


@dataclass(frozen=True)
class ErrorDecay:
    scales: list
    eps: list
    noise: list
    fit: object  # SlopeFit or None

    @property
    def slope(self):
        return self.fit.slope if self.fit is not None else math.nan


def taylor_error_decay(filters, p, intensity, dist, t, m, n_direct, n_mc, seed):
    """Remainder ``eps = S - (m-term expansion)`` along a scale ladder.

    ``S`` is the direct pointwise Monte Carlo estimate; scales where the
    joint Monte Carlo noise is not below ``|eps|`` are excluded from the
    log-log fit.
    """
    if len(filters) < 5:
        raise ValueError("need a ladder of at least 5 scales")
    scales, eps, noise = [], [], []
    for i, f in enumerate(filters):
        direct = pointwise_window_mc(f, p, intensity, dist, t, n_direct, sub_seed(seed, "rung", i))
        approx = taylor_expansion(f, p, intensity, dist, t, m, n_mc, sub_seed(seed, "rung", i))
        scales.append(f.scale)
        eps.append(direct.value - approx.value)
        noise.append(math.hypot(direct.std_error, approx.tolerance))
    try:
        fit = fit_loglog(scales, eps, noise, max_rel_se=1.0)
    except TooFewPointsError:
        fit = None
    return ErrorDecay(scales, eps, noise, fit)


def poisson_tail_moment(lam, alpha_exp, m):
    """``E[Z^alpha 1{Z > m}]`` for ``Z ~ Poisson(lam)``, summed until the terms
    drop below ``1e-16`` of the running total."""
    if not 0.0 < lam < 1.0:
        raise ValueError("lam must lie in (0, 1)")
    total = 0.0
    k = m + 1
    log_p = -lam + k * math.log(lam) - math.lgamma(k + 1)
    while True:
        term = math.exp(log_p + alpha_exp * math.log(k))
        total += term
        if term < 1e-16 * total and k > m + 2:
            return total
        k += 1
        log_p += math.log(lam) - math.log(k)


# second order


def _k_value(p, p2, c, L, window, n):
    du = 1.0 / n
    a = np.abs(window(midpoint_nodes(n))) ** p
    n_lag = int(math.ceil(c * n)) + 1
    lag = du * np.arange(n_lag)
    kern = window(lag / c) * np.exp(1j * (L / c) * lag)
    h = du * np.convolve(a, kern)  # at v_j = (j + 1/2) du, j = 0 .. n + n_lag - 2
    return float(du * np.sum(np.abs(h) ** p2))


def predict_second_order_K(p, p2, c, L=0.0, window=BUMP, n_quad=1024):
    """``K = || g_{c, L/c} * |g_{1,0}|^p ||_{p2}^{p2}`` by nested quadrature.

    The inner convolution is a lattice sum with spacing ``1 / n_quad`` and the
    outer norm a midpoint sum over ``(0, 1 + c)``; the result at ``n_quad``
    and ``2 n_quad`` must agree to ``1e-3`` relative.
    """
    if not c > 0:
        raise ValueError("c must be positive")
    coarse = _k_value(p, p2, c, L, window, n_quad)
    fine = _k_value(p, p2, c, L, window, 2 * n_quad)
    diff = abs(fine - coarse)
    if diff > 1e-3 * abs(fine):
        raise ConvergenceError(f"K changed by {diff:.3g} under refinement")
    return Prediction(fine, "quadrature", max(diff, 1e-15 * abs(fine), _TINY))


def m_lambda(intensity, order):
    """Period averages of ``lambda`` (order 1) and ``lambda^2`` (order 2)."""
    if order not in (1, 2):
        raise ValueError("order must be 1 or 2")
    a = intensity.a
    b = intensity.b if intensity.kind == "sinusoidal" else 0.0
    val = a if order == 1 else a * a * (1.0 + 0.5 * b * b)
    return Prediction(val, "closed_form", max(1e-15 * val, _TINY))


def two_point_expectation(p, dist, L, n_mc, seed, window=BUMP, chunk=2**20):
    """Monte Carlo ``E|A_1 w(U_1) e^{iLU_1} + A_2 w(U_2) e^{iLU_2}|^p``."""
    pool = _Pooled()
    done, c = 0, 0
    while done < n_mc:
        n = min(chunk, n_mc - done)
        rng = derive_rng(seed, "oracle-two-point", c)
        u = rng.random((n, 2))
        a = dist.sample(2 * n, rng).reshape(n, 2)
        z = (a * window(u) * np.exp(1j * L * u)).sum(axis=1)
        pool.add(np.abs(z) ** p)
        done += n
        c += 1
    return pool.estimate("pointwise")


@dataclass(frozen=True)
class TwoScaleComparison:
    scales: list
    lhs: list
    lhs_se: list
    rhs: float
    rhs_se: float
    usable: list

    @property
    def finest_usable(self):
        idx = [i for i, ok in enumerate(self.usable) if ok]
        if not idx:
            return None
        return min(idx, key=lambda i: self.scales[i])


def two_point_rhs(p, intensity, dist, L, n_mc, seed, window=BUMP):
    """Limit of the two-point correction to the invariant moment.

    ``m2 * (E|A_1 w(U_1) e^{iLU_1} + A_2 w(U_2) e^{iLU_2}|^p
    / (2 ||w||_p^p E|A|^p) - 1)``.  The ``-1`` is the contribution of
    ``(exp(-Lambda_s) - 1) Lambda_s``, which is of the same order ``s^2``.
    """
    m2 = m_lambda(intensity, 2).value
    two = two_point_expectation(p, dist, L, n_mc, seed, window)
    norm = 2.0 * window_pnorm(window, p) * dist.abs_moment(p)
    return m2 * (two.value / norm - 1.0), m2 * two.std_error / norm


def singleton_terms(intensity, s, p, t0, t1, window=BUMP, n_quad=4096):
    """Time averages over ``[t0, t1]`` of ``Lambda_s(t)`` and of
    ``Lambda_s(t) E|w(V_t)|^p`` (analytic in t, midpoint in v)."""
    width = t1 - t0
    ci = intensity.cumulative_integral
    lam_bar = float(ci(t1) - ci(t0) - ci(t1 - s) + ci(t0 - s)) / width
    v = midpoint_nodes(n_quad)
    inner = s * (intensity.cumulative(t1 - v * s) - intensity.cumulative(t0 - v * s)) / width
    j = float(np.mean(np.abs(window(v)) ** p * inner))
    return lam_bar, j


def two_point_sides(filters, p, intensity, dist, L, realizations, n_mc, seed, max_rel_noise=0.05):
    """Both sides of the second-order small-scale expansion of ``SY``.

    For each filter (scale ``s``, frequency ``L / s``) the left side is
    ``SY / (s^2 E|A|^p E|w(V)|^p) - mean_t Lambda_s(t) / s^2`` where ``SY`` is
    the invariant estimator over ``realizations`` and ``E|w(V)|^p`` is
    averaged over the same time range with weight ``Lambda_s(t)``.  Scales
    whose standard error exceeds ``max_rel_noise * |rhs|`` are flagged.
    """
    rhs, rhs_se = two_point_rhs(p, intensity, dist, L, n_mc, seed, filters[0].window)
    moment = dist.abs_moment(p)
    scales, lhs, lhs_se, usable = [], [], [], []
    for f in filters:
        s = f.scale
        h = s / 64.0
        est = first_order_invariant(f, p, realizations, h=h)
        horizon = realizations[0].horizon
        n_grid = int(math.floor((horizon - 2 * s) / h)) + 1
        t0, t1 = s, s + (n_grid - 1) * h
        lam_bar, j = singleton_terms(intensity, s, p, t0, t1, f.window)
        e_wv = j / lam_bar
        denom = s * s * moment * e_wv
        value = est.value / denom - lam_bar / (s * s)
        err = est.std_error / denom
        scales.append(s)
        lhs.append(value)
        lhs_se.append(err)
        usable.append(bool(err <= max_rel_noise * abs(rhs)))
    return TwoScaleComparison(scales, lhs, lhs_se, rhs, rhs_se, usable)


# self-similar limits


def brownian_abs_moment(p, L=0.0, window=BUMP, n_quad=2**14):
    """``E|int_0^1 w(u) e^{iLu} dB(u)|^p`` for Brownian motion.

    The integral is a centred Gaussian vector in the plane with covariance
    ``C`` built from ``int w^2 cos^2``, ``int w^2 sin^2`` and
    ``int w^2 cos sin``.  Writing it as ``R * (sigma_1 cos T, sigma_2 sin T)``
    with ``R`` Rayleigh and ``T`` uniform gives
    ``E R^p * mean_T (sigma_1^2 cos^2 T + sigma_2^2 sin^2 T)^{p/2}``; by
    symmetry the angular mean is taken over a quarter turn with adaptive
    quadrature.
    """
    u = midpoint_nodes(n_quad)
    w2 = np.abs(window(u)) ** 2
    c, s = np.cos(L * u), np.sin(L * u)
    cov = np.array([[np.mean(w2 * c * c), np.mean(w2 * c * s)], [np.mean(w2 * c * s), np.mean(w2 * s * s)]])
    sig2 = np.clip(np.linalg.eigvalsh(cov), 0.0, None)
    ang, _ = integrate.quad(
        lambda th: (sig2[0] * math.cos(th) ** 2 + sig2[1] * math.sin(th) ** 2) ** (0.5 * p),
        0.0,
        0.5 * math.pi,
        epsabs=0.0,
        epsrel=1e-12,
        limit=200,
    )
    ang /= 0.5 * math.pi
    radial = 2.0 ** (0.5 * p) * math.gamma(1.0 + 0.5 * p)
    return float(radial * ang)


def predict_selfsim(process, p, L=0.0, window=BUMP, n_mc=200_000, n_grid=1024, seed=0, chunk=8192):
    """``E|int_0^1 w(u) e^{iLu} dX(u)|^p`` for fBM or stable ``X``.

    Brownian motion with ``p = 2`` and ``L = 0`` returns ``||w||_2^2``
    (isometry), other Brownian cases use :func:`brownian_abs_moment`;
    everything else is Monte Carlo with left-endpoint sums on ``n_grid``
    cells.
    """
    if isinstance(process, AlphaStable) and p >= process.alpha:
        raise ValueError(f"moment p={p} must be below alpha={process.alpha}")
    if isinstance(process, FBM) and process.H == 0.5:
        if p == 2 and L == 0:
            return Prediction(window_pnorm(window, 2), "quadrature", 1e-10)
        val = brownian_abs_moment(p, L, window)
        return Prediction(val, "quadrature", max(1e-8 * val, _TINY))
    u = np.arange(n_grid) / n_grid
    weights = window(u) * np.exp(1j * L * u)
    pool = _Pooled()
    done, c = 0, 0
    while done < n_mc:
        n = min(chunk, n_mc - done)
        inc = process.increments(n_grid, 1.0 / n_grid, n, derive_rng(seed, "oracle-selfsim", c))
        pool.add(np.abs(inc @ weights) ** p)
        done += n
        c += 1
    est = pool.estimate("path")
    return Prediction(est.value, "monte_carlo", max(est.std_error, _TINY))


def scaling_exponent(process, p):
    """Exponent ``beta * p`` of the small-scale power law ``S ~ s^{beta p}``."""
    return process.exponent * p


def stable_abs_moment(alpha, p):
    """``E|X|^p`` for the standard symmetric stable law with cf
    ``exp(-|theta|^alpha)``, ``p < alpha``, ``p`` not an even integer."""
    return (
        2.0**p
        * math.gamma(0.5 * (1 + p))
        * math.gamma(1 - p / alpha)
        / (math.gamma(1 - 0.5 * p) * math.sqrt(math.pi))
    )
