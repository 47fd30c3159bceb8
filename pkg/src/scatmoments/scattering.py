"""First- and second-order scattering moment estimators.

Convolutions of a filter with a point pattern are exact sums over the points
inside the filter support (found by binary search); only the second layer
and path integrals are quadratures.

Time averages use a lattice ``t0 + k h``.  Because the integrand vanishes
away from the points, only lattice nodes inside some filter support are
evaluated; the sum is still divided by the full lattice size.  Standard
errors of single-realisation averages come from batch means over
contiguous blocks of the lattice.
"""

import math
from dataclasses import dataclass

import numpy as np

from ._rng import derive_rng, ordered_map
from .filters import gabor_eval
from .pointprocess import PointPattern, simulate_window_batch

KINDS = ("pointwise", "invariant", "second_order", "path")


@dataclass(frozen=True)
class MomentEstimate:
    """Monte Carlo mean with its standard error.

    ``n_replicates`` counts the independent units averaged: realisations,
    fresh paths, or lattice blocks for a single long realisation.  For
    lattice averages ``value`` is the exact lattice mean (blocks may differ
    in size by one node) and ``std_error`` is the batch-means error.
    """

    value: float
    std_error: float
    n_replicates: int
    kind: str

    @classmethod
    def from_samples(cls, samples, kind):
        x = np.asarray(samples, dtype=float)
        n = x.size
        if n == 0:
            raise ValueError("no samples")
        if n > 1:
            # identical samples give exactly zero, not a rounding residue
            se = 0.0 if np.ptp(x) == 0 else float(x.std(ddof=1) / math.sqrt(n))
        else:
            se = math.nan
        return cls(float(x.mean()), se, n, kind)

    def scaled(self, factor):
        return MomentEstimate(self.value * factor, self.std_error * abs(factor), self.n_replicates, self.kind)


class _Pooled:
    """Chunk-wise mean/variance accumulation (Chan et al.), order-fixed."""

    def __init__(self):
        self.n, self.mean, self.m2 = 0, 0.0, 0.0

    def add(self, x):
        x = np.asarray(x, dtype=float)
        nb = x.size
        if nb == 0:
            return
        mb = float(x.mean())
        m2b = float(((x - mb) ** 2).sum())
        n = self.n + nb
        delta = mb - self.mean
        self.mean += delta * nb / n
        self.m2 += m2b + delta * delta * self.n * nb / n
        self.n = n

    def estimate(self, kind):
        se = math.sqrt(self.m2 / (self.n - 1) / self.n) if self.n > 1 else math.nan
        return MomentEstimate(self.mean, se, self.n, kind)


# exact point-pattern convolution


def conv_many(f, locations, charges, ts):
    """``(g * Y)(t) = sum_j A_j g(t - t_j)`` for every ``t`` in ``ts``.

    Only points with ``t - s < t_j < t`` contribute.
    """
    ts = np.asarray(ts, dtype=float)
    out = np.zeros(ts.shape, dtype=complex)
    if locations.size == 0 or ts.size == 0:
        return out
    lo = np.searchsorted(locations, ts - f.scale, side="right")
    hi = np.searchsorted(locations, ts, side="left")
    k = 0
    while True:
        idx = lo + k
        active = idx < hi
        if not active.any():
            break
        ia = idx[active]
        out[active] += charges[ia] * gabor_eval(f, ts[active] - locations[ia])
        k += 1
    return out


def conv_at(f, pattern, t):
    """Exact filter response of a point pattern at time ``t``."""
    return complex(conv_many(f, pattern.locations, pattern.charges, np.array([t]))[0])


def _clusters(locations, t0, h, width, k_max):
    """Merged lattice index ranges touched by ``(t_j, t_j + width)``.

    Returns (starts, ends), inclusive and clipped to ``[0, k_max]``.
    Ranges are padded by one node on each side against rounding.
    """
    kf = np.floor((locations - t0) / h).astype(np.int64)
    kl = np.ceil((locations + width - t0) / h).astype(np.int64)
    keep = (kl >= 0) & (kf <= k_max)
    kf, kl = np.clip(kf[keep], 0, k_max), np.clip(kl[keep], 0, k_max)
    if kf.size == 0:
        return kf, kl
    run = np.maximum.accumulate(kl)
    new = np.ones(kf.size, dtype=bool)
    new[1:] = kf[1:] > run[:-1] + 1
    first = np.flatnonzero(new)
    last = np.append(first[1:] - 1, kf.size - 1)
    return kf[first], run[last]


def _expand(starts, ends):
    lengths = ends - starts + 1
    offsets = np.repeat(np.cumsum(lengths) - lengths, lengths)
    return np.arange(lengths.sum()) - offsets + np.repeat(starts, lengths)


def _lattice(horizon, margin, h):
    n_grid = int(math.floor((horizon - 2.0 * margin) / h)) + 1
    if n_grid < 2:
        raise ValueError("observation window too short for the requested margin")
    return margin, n_grid


def lattice_first_order(f, p, pattern, t0, h, n_grid):
    """Nonzero terms of ``|g * Y(t0 + k h)|^p`` for ``0 <= k < n_grid``.

    Returns (k, values).
    """
    starts, ends = _clusters(pattern.locations, t0, h, f.scale, n_grid - 1)
    k = _expand(starts, ends)
    vals = np.abs(conv_many(f, pattern.locations, pattern.charges, t0 + h * k)) ** p
    return k, vals


def _block_sums(k, vals, n_grid, n_blocks):
    """Per-block sums and sizes of a lattice average over contiguous blocks."""
    if n_grid < n_blocks:
        raise ValueError(f"lattice of {n_grid} nodes cannot be split into {n_blocks} blocks")
    block = k * n_blocks // n_grid
    sums = np.bincount(block, weights=vals, minlength=n_blocks)
    # block b holds the k with ceil(b n / nb) <= k < ceil((b + 1) n / nb)
    edges = -((-np.arange(n_blocks + 1, dtype=np.int64) * n_grid) // n_blocks)
    return sums, np.diff(edges)


def _from_blocks(sums, sizes, kind):
    """Exact lattice mean, with the batch-means standard error."""
    sums, sizes = np.concatenate(sums), np.concatenate(sizes)
    means = sums / sizes
    se = float(means.std(ddof=1) / math.sqrt(means.size)) if means.size > 1 else math.nan
    return MomentEstimate(float(sums.sum() / sizes.sum()), se, int(means.size), kind)


def _as_list(realizations):
    if isinstance(realizations, PointPattern):
        return [realizations]
    return list(realizations)


def first_order_invariant(f, p, realizations, h=None, margin=None, n_blocks=32):
    """Time-averaged first-order moment ``SY(gamma, p)``.

    Averages ``|g * Y(t)|^p`` over the lattice ``margin + k h`` inside
    ``[margin, horizon - margin]`` of each realisation (margin defaults to
    the filter scale, ``h`` to ``scale / 32``). For periodic intensities,
    choose horizons that are whole periods.
    """
    pats = _as_list(realizations)
    s = f.scale
    h = s / 32.0 if h is None else h
    if h > s / 8.0:
        raise ValueError(f"lattice step {h} too coarse for scale {s} (need h <= s/8)")
    margin = s if margin is None else margin
    sums, sizes = [], []
    for pat in pats:
        if pat.horizon < 10.0 * s:
            raise ValueError(f"horizon {pat.horizon} shorter than 10 filter scales ({s})")
        t0, n_grid = _lattice(pat.horizon, margin, h)
        k, vals = lattice_first_order(f, p, pat, t0, h, n_grid)
        a, b = _block_sums(k, vals, n_grid, n_blocks)
        sums.append(a)
        sizes.append(b)
    return _from_blocks(sums, sizes, "invariant")


def _pointwise_value(f, p, pattern, t, halfwidth, h):
    if halfwidth == 0.0:
        return abs(conv_at(f, pattern, t)) ** p
    n_grid = int(round(2.0 * halfwidth / h)) + 1
    t0 = t - halfwidth
    k, vals = lattice_first_order(f, p, pattern, t0, 2.0 * halfwidth / (n_grid - 1), n_grid)
    return float(vals.sum()) / n_grid


def first_order_pointwise(f, p, generator, t, n_replicates, seed, halfwidth=0.0, h=None):
    """Monte Carlo estimate of ``E|g * Y(t)|^p`` over fresh realisations.

    Args:
        generator: callable ``rng -> PointPattern``; replicate ``r`` gets
            the stream ``derive_rng(seed, "estimator", r)``.
        halfwidth: if positive, each replicate contributes the lattice
            average of ``|g * Y|^p`` over ``[t - halfwidth, t + halfwidth]``
            instead of the single value at ``t``. This trades an
            ``O(halfwidth^2)`` smoothing bias for a variance reduction of
            order ``halfwidth / s``.
        h: lattice step for the local average (default ``scale / 32``).
    """
    if n_replicates < 2:
        raise ValueError("need at least two replicates")
    h = f.scale / 32.0 if h is None else h

    def one(r):
        pat = generator(derive_rng(seed, "estimator", r))
        return _pointwise_value(f, p, pat, t, halfwidth, h)

    return MomentEstimate.from_samples(ordered_map(one, range(n_replicates)), "pointwise")


def pointwise_window_mc(f, p, intensity, dist, t, n_replicates, seed, chunk=2**20):
    """Pointwise moment from realisations simulated only on ``[t - s, t]``.

    Exact in distribution (Poisson independence over disjoint sets) and
    vectorised, for replicate counts in the millions.
    """
    pool = _Pooled()
    s = f.scale
    done, c = 0, 0
    while done < n_replicates:
        n = min(chunk, n_replicates - done)
        rng = derive_rng(seed, "estimator-window", c)
        counts, loc = simulate_window_batch(intensity, t - s, t, n, rng)
        charges = dist.sample(loc.size, rng)
        ids = np.repeat(np.arange(n), counts)
        g = charges * gabor_eval(f, t - loc) if loc.size else np.zeros(0, complex)
        re = np.bincount(ids, weights=g.real, minlength=n)
        im = np.bincount(ids, weights=g.imag, minlength=n)
        pool.add(np.hypot(re, im) ** p)
        done += n
        c += 1
    return pool.estimate("pointwise")


def second_order_invariant(f, p, f2, p2, realizations, h=None, margin=None, n_blocks=32):
    """Time-averaged second-order moment ``SY(gamma, p, gamma2, p2)``.

    ``u(tau) = |g * Y(tau)|^p`` is evaluated on the lattice; the second
    filter is applied by the lattice quadrature
    ``(u * g2)(t_k) = h sum_j g2(j h) u(t_{k-j})`` (the trapezoid rule, as
    ``g2`` vanishes at both ends of its support), and ``|.|^p2`` is averaged
    over ``[margin, horizon - margin]``. ``h`` defaults to
    ``min(s, s2) / 256``; the margin to ``s + s2``.
    """
    pats = _as_list(realizations)
    s, s2 = f.scale, f2.scale
    h_max = min(s, s2) / 256.0
    h = h_max if h is None else h
    if h > h_max * (1 + 1e-12):
        raise ValueError(f"lattice step {h} too coarse (need <= min(s, s2)/256 = {h_max})")
    margin = s + s2 if margin is None else margin
    n_ker = int(math.ceil(s2 / h))
    kernel = gabor_eval(f2, h * np.arange(n_ker + 1))
    sums, sizes = [], []
    for pat in pats:
        if pat.horizon < 10.0 * max(s, s2):
            raise ValueError("horizon shorter than 10 filter scales")
        t0, n_grid = _lattice(pat.horizon, margin, h)
        starts, ends = _clusters(pat.locations, t0, h, s + s2, n_grid - 1)
        # u on each cluster, extended left by the kernel length
        u_starts = starts - n_ker
        ku = _expand(u_starts, ends)
        u = np.abs(conv_many(f, pat.locations, pat.charges, t0 + h * ku)) ** p
        ks, vals = [], []
        pos = 0
        for a, b in zip(starts, ends):
            m = b - a + 1
            seg = u[pos : pos + m + n_ker]
            pos += m + n_ker
            v = h * np.convolve(seg, kernel)[n_ker : n_ker + m]
            ks.append(np.arange(a, b + 1))
            vals.append(np.abs(v) ** p2)
        k = np.concatenate(ks) if ks else np.zeros(0, np.int64)
        vv = np.concatenate(vals) if vals else np.zeros(0)
        a, b = _block_sums(k, vv, n_grid, n_blocks)
        sums.append(a)
        sizes.append(b)
    return _from_blocks(sums, sizes, "second_order")


# integrals against the increments of a sample path


def _path_weights(f, step, n, t):
    u = step * np.arange(n)
    return gabor_eval(f, t - u)


def conv_at_path(f, path, t):
    """Left-endpoint Riemann-Stieltjes sum ``sum_i g(t - u_i) dX_i``."""
    if path.step > f.scale / 256.0 * (1 + 1e-12):
        raise ValueError(f"grid step {path.step} too coarse for scale {f.scale} (need <= s/256)")
    inc = path.increments
    return complex(_path_weights(f, path.step, inc.size, t) @ inc)


def first_order_invariant_path(f, p, process, n_replicates, seed, n_per_support=256, chunk=8192):
    """``E|g * dX(t)|^p`` from fresh paths of a stationary-increment process.

    Each replicate is a path on ``[0, 2s]`` with ``2 * n_per_support``
    steps, evaluated at the interior time ``t = 1.5 s``.
    """
    if n_per_support < 256:
        raise ValueError("need at least 256 grid cells per filter support")
    s = f.scale
    step = s / n_per_support
    n = 2 * n_per_support
    weights = _path_weights(f, step, n, 1.5 * s)
    pool = _Pooled()
    done, c = 0, 0
    while done < n_replicates:
        m = min(chunk, n_replicates - done)
        inc = process.increments(n, step, m, derive_rng(seed, "estimator-path", c))
        pool.add(np.abs(inc @ weights) ** p)
        done += m
        c += 1
    return pool.estimate("path")
