"""Fractional Brownian motion and symmetric alpha-stable Levy motion on a grid.

fBM increments (fractional Gaussian noise) come from circulant embedding of
the fGn autocovariance, with a Cholesky fallback if the embedding spectrum
has a negative eigenvalue. Stable increments use the Chambers-Mallows-Stuck
transform.

Stable normalisation: with ``normalization="unit"`` (default) an increment
over a step ``dt`` has characteristic function ``exp(-dt |theta|^alpha)``; at
``alpha = 2`` that is Gaussian with variance ``2 dt``.  ``"brownian"``
divides the scale by ``2**(1/alpha)`` so that ``alpha = 2`` is standard
Brownian motion (variance ``dt``).  Only log-log intercepts depend on this
choice, never slopes.
"""

import json
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import linalg, stats

from ._rng import as_rng


class EmbeddingError(RuntimeError):
    """Circulant embedding produced a negative eigenvalue."""


def _is_pow2(n):
    return n >= 1 and (n & (n - 1)) == 0


def fgn_autocovariance(H, n):
    """Unit-step fGn autocovariance at lags ``0..n-1``."""
    k = np.arange(n, dtype=float)
    return 0.5 * (np.abs(k + 1) ** (2 * H) - 2 * k ** (2 * H) + np.abs(k - 1) ** (2 * H))


def _circulant_sqrt_eigs(H, n):
    gamma = fgn_autocovariance(H, n + 1)
    row = np.concatenate([gamma[: n + 1], gamma[n - 1 : 0 : -1]])
    eig = np.fft.fft(row).real
    if eig.min() < -1e-10 * eig.max():
        raise EmbeddingError(f"negative circulant eigenvalue {eig.min():.3g} for H={H}, n={n}")
    return np.sqrt(np.clip(eig, 0.0, None) / row.size)


def fgn(H, n, size, rng, method="circulant"):
    """``size`` independent fGn sequences of length ``n`` with unit step.

    Returns an array of shape ``(size, n)``.
    """
    if not 0.0 < H < 1.0:
        raise ValueError(f"Hurst parameter must lie in (0, 1), got {H}")
    rng = as_rng(rng)
    if method == "circulant":
        try:
            lam = _circulant_sqrt_eigs(H, n)
        except EmbeddingError as err:
            warnings.warn(f"{err}; falling back to Cholesky")
            method = "cholesky"
    if method == "cholesky":
        cov = linalg.toeplitz(fgn_autocovariance(H, n))
        chol = linalg.cholesky(cov, lower=True)
        return rng.standard_normal((size, n)) @ chol.T
    m = lam.size
    n_pairs = (size + 1) // 2
    z = rng.standard_normal((n_pairs, m)) + 1j * rng.standard_normal((n_pairs, m))
    y = np.fft.fft(lam * z, axis=1)[:, :n]
    # real and imaginary parts are independent copies
    return np.concatenate([y.real, y.imag])[:size]


def stable_variates(alpha, size, rng):
    """Standard symmetric alpha-stable draws, cf ``exp(-|theta|^alpha)``."""
    rng = as_rng(rng)
    v = rng.uniform(-0.5 * np.pi, 0.5 * np.pi, size)
    w = rng.exponential(1.0, size)
    if alpha == 1.0:
        return np.tan(v)
    return (
        np.sin(alpha * v)
        / np.cos(v) ** (1.0 / alpha)
        * (np.cos(v - alpha * v) / w) ** ((1.0 - alpha) / alpha)
    )


@dataclass(frozen=True)
class FBM:
    """Fractional Brownian motion with Hurst index ``H``."""

    H: float

    def __post_init__(self):
        if not 0.0 < self.H < 1.0:
            raise ValueError(f"Hurst parameter must lie in (0, 1), got {self.H}")

    @property
    def exponent(self):
        return self.H

    def increments(self, n, step, size, rng):
        return fgn(self.H, n, size, rng) * step**self.H

    def describe(self):
        return {"kind": "fbm", "H": self.H}


@dataclass(frozen=True)
class AlphaStable:
    """Symmetric alpha-stable Levy motion, ``1 < alpha <= 2``."""

    alpha: float
    normalization: str = "unit"

    def __post_init__(self):
        if not 1.0 < self.alpha <= 2.0:
            raise ValueError(f"alpha must lie in (1, 2], got {self.alpha}")
        if self.normalization not in ("unit", "brownian"):
            raise ValueError(f"unknown normalization {self.normalization!r}")

    @property
    def exponent(self):
        return 1.0 / self.alpha

    @property
    def unit_scale(self):
        return 1.0 if self.normalization == "unit" else 2.0 ** (-1.0 / self.alpha)

    def increments(self, n, step, size, rng):
        x = stable_variates(self.alpha, (size, n), rng)
        return x * (self.unit_scale * step ** (1.0 / self.alpha))

    def describe(self):
        return {"kind": "stable", "alpha": self.alpha, "normalization": self.normalization}


@dataclass(frozen=True, eq=False)
class SamplePath:
    """Grid values ``X(0), X(dt), X(2 dt), ...`` with ``X(0) = 0``."""

    step: float
    values: np.ndarray
    process: object

    def __post_init__(self):
        vals = np.array(self.values, dtype=float)
        if vals.ndim != 1 or vals.size < 2:
            raise ValueError("a path needs at least two grid values")
        if vals[0] != 0.0:
            raise ValueError("paths start at 0")
        if not self.step > 0:
            raise ValueError("grid step must be positive")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @property
    def times(self):
        return self.step * np.arange(self.values.size)

    @property
    def increments(self):
        return np.diff(self.values)

    def to_csv(self, path):
        with open(path, "w") as fh:
            fh.write("t,value\n")
            for t, x in zip(self.times, self.values):
                fh.write(f"{t:.17g},{x:.17g}\n")
        meta = dict(self.process.describe(), step=self.step, n=int(self.values.size - 1))
        with open(str(path) + ".json", "w") as fh:
            json.dump(meta, fh, indent=2)


def _path(process, n, step, rng):
    inc = process.increments(n, step, 1, rng)[0]
    return SamplePath(step, np.concatenate([[0.0], np.cumsum(inc)]), process)


def simulate_fbm(H, n, step, rng):
    """fBM path with ``n`` steps of size ``step`` (``n`` a power of two)."""
    if not _is_pow2(n):
        raise ValueError(f"grid size must be a power of two, got {n}")
    return _path(FBM(H), n, step, rng)


def simulate_alpha_stable(alpha, n, step, rng, normalization="unit"):
    """Symmetric alpha-stable path with ``n`` i.i.d. increments."""
    return _path(AlphaStable(alpha, normalization), n, step, rng)


def riemann_stieltjes(f_values, increments):
    """Left-endpoint sums ``sum_k f(u_k) (X(u_{k+1}) - X(u_k))``.

    ``increments`` may be 1-d or batched ``(size, n)``.
    """
    return increments @ np.asarray(f_values)


def check_scaling_relation(process, f, s, n_mc, rng, n_grid=1024):
    """Monte Carlo draws of both sides of the stochastic-integral scaling law.

    Left: ``int_0^s f(u) dX(u)``; right: ``s**beta int_0^1 f(s u) dX(u)``,
    each as a left-endpoint sum on ``n_grid`` cells from independent paths.

    Returns:
        (left, right, pvalue) with the two-sample KS p-value.
    """
    rng = as_rng(rng)
    beta = process.exponent
    u = np.arange(n_grid) / n_grid
    left = riemann_stieltjes(f(s * u), process.increments(n_grid, s / n_grid, n_mc, rng))
    right = s**beta * riemann_stieltjes(f(s * u), process.increments(n_grid, 1.0 / n_grid, n_mc, rng))
    if np.all(left == 0) and np.all(right == 0):
        return left, right, 1.0
    return left, right, float(stats.ks_2samp(left, right).pvalue)
