"""Homogeneous, inhomogeneous and compound Poisson point processes on [0, N].

Inhomogeneous patterns are generated by time rescaling: unit-rate
exponential increments are accumulated and mapped back through the inverse
of the cumulative intensity, which is analytic for both intensity families
used here.
"""

import csv
import io
import json
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from ._rng import as_rng

TWO_PI = 2.0 * np.pi


@dataclass(frozen=True)
class IntensityModel:
    """Intensity ``lambda(t)`` on ``[0, horizon]``.

    ``kind="constant"`` has rate ``a``; ``kind="sinusoidal"`` has
    ``a * (1 + b * sin(2 pi t / period))``.
    """

    kind: str
    a: float
    b: float = 0.0
    period: float = math.inf
    horizon: float = 1.0

    def __post_init__(self):
        if self.kind not in ("constant", "sinusoidal"):
            raise ValueError(f"unknown intensity kind {self.kind!r}")
        if not self.a > 0:
            raise ValueError("intensity level must be positive")
        if not self.horizon > 0:
            raise ValueError("horizon must be positive")
        if self.kind == "sinusoidal":
            if not abs(self.b) < 1:
                raise ValueError("sinusoidal intensity needs |b| < 1 so that lambda_min > 0")
            if not (self.period > 0 and math.isfinite(self.period)):
                raise ValueError("sinusoidal intensity needs a finite positive period")

    @classmethod
    def constant(cls, rate, horizon=1.0):
        return cls("constant", float(rate), horizon=float(horizon))

    @classmethod
    def sinusoidal(cls, a, b, period, horizon=None):
        horizon = period if horizon is None else horizon
        return cls("sinusoidal", float(a), float(b), float(period), float(horizon))

    def with_horizon(self, horizon):
        return IntensityModel(self.kind, self.a, self.b, self.period, float(horizon))

    @property
    def is_constant(self):
        return self.kind == "constant" or self.b == 0.0

    @property
    def lam_min(self):
        return self.a * (1.0 - abs(self.b)) if self.kind == "sinusoidal" else self.a

    @property
    def lam_max(self):
        return self.a * (1.0 + abs(self.b)) if self.kind == "sinusoidal" else self.a

    @property
    def _amp(self):
        # coefficient of (1 - cos) in the cumulative
        return self.a * self.b * self.period / TWO_PI

    def rate(self, t):
        t = np.asarray(t, dtype=float)
        if self.kind == "constant":
            return np.full(t.shape, self.a) if t.ndim else self.a
        return self.a * (1.0 + self.b * np.sin(TWO_PI * t / self.period))

    def cumulative(self, t):
        """``Lambda(t) = int_0^t lambda``."""
        t = np.asarray(t, dtype=float)
        if self.kind == "constant":
            return self.a * t
        return self.a * t + self._amp * (1.0 - np.cos(TWO_PI * t / self.period))

    def cumulative_integral(self, t):
        """``int_0^t Lambda(u) du``, used for time averages of window counts."""
        t = np.asarray(t, dtype=float)
        out = 0.5 * self.a * t * t
        if self.kind == "sinusoidal":
            T = self.period
            out = out + self._amp * (t - T / TWO_PI * np.sin(TWO_PI * t / T))
        return out

    def inverse_cumulative(self, v, tol=None):
        """Smallest ``t`` with ``Lambda(t) >= v``, vectorised over ``v``.

        Closed form for constant rates; bisection to ``tol`` (default
        ``1e-10 * horizon``) otherwise.
        """
        v = np.asarray(v, dtype=float)
        if self.is_constant:
            return v / self.a
        if tol is None:
            tol = 1e-10 * self.horizon
        spread = 2.0 * abs(self._amp)
        lo = (v - spread) / self.a
        hi = (v + spread) / self.a
        n_iter = int(np.ceil(np.log2(max(2.0 * spread / self.a, tol) / tol))) + 1
        for _ in range(n_iter):
            mid = 0.5 * (lo + hi)
            below = self.cumulative(mid) < v
            lo = np.where(below, mid, lo)
            hi = np.where(below, hi, mid)
        return hi

    def window_count(self, t, s):
        """Expected count ``Lambda_s(t)`` in ``[t - s, t]``."""
        return self.cumulative(t) - self.cumulative(np.asarray(t) - s)


@dataclass(frozen=True)
class ChargeDistribution:
    """I.i.d. charges: ``constant`` (value), ``gaussian`` (mean 0, variance) or
    ``rademacher``."""

    kind: str
    param: float = 1.0

    def __post_init__(self):
        if self.kind not in ("constant", "gaussian", "rademacher"):
            raise ValueError(f"unknown charge kind {self.kind!r}")
        if self.kind == "gaussian" and not self.param > 0:
            raise ValueError("gaussian charges need a positive variance")

    @classmethod
    def constant(cls, value=1.0):
        return cls("constant", float(value))

    @classmethod
    def gaussian(cls, variance=1.0):
        return cls("gaussian", float(variance))

    @classmethod
    def rademacher(cls):
        return cls("rademacher")

    def sample(self, n, rng):
        rng = as_rng(rng)
        if self.kind == "constant":
            return np.full(n, self.param)
        if self.kind == "gaussian":
            return rng.normal(0.0, math.sqrt(self.param), n)
        return rng.choice(np.array([-1.0, 1.0]), size=n)

    def abs_moment(self, p):
        """Closed-form ``E|A|^p``."""
        if self.kind == "constant":
            return abs(self.param) ** p
        if self.kind == "rademacher":
            return 1.0
        sigma = math.sqrt(self.param)
        return sigma**p * math.exp(0.5 * p * math.log(2.0) + gammaln(0.5 * (p + 1)) - 0.5 * math.log(math.pi))


@dataclass(frozen=True, eq=False)
class PointPattern:
    """Sorted event locations with real charges on ``[0, horizon]``."""

    locations: np.ndarray
    charges: np.ndarray
    horizon: float

    def __post_init__(self):
        loc = np.array(self.locations, dtype=float).ravel()
        ch = np.ones_like(loc) if self.charges is None else np.array(self.charges, dtype=float).ravel()
        if loc.shape != ch.shape:
            raise ValueError("locations and charges must have the same length")
        if not self.horizon > 0:
            raise ValueError("horizon must be positive")
        if loc.size and (np.any(np.diff(loc) <= 0)):
            raise ValueError("locations must be strictly increasing")
        if loc.size and (loc[0] < 0 or loc[-1] > self.horizon):
            raise ValueError("locations must lie in [0, horizon]")
        loc.setflags(write=False)
        ch.setflags(write=False)
        object.__setattr__(self, "locations", loc)
        object.__setattr__(self, "charges", ch)
        object.__setattr__(self, "horizon", float(self.horizon))

    def __len__(self):
        return self.locations.size

    def __eq__(self, other):
        if not isinstance(other, PointPattern):
            return NotImplemented
        return (
            self.horizon == other.horizon
            and np.array_equal(self.locations, other.locations)
            and np.array_equal(self.charges, other.charges)
        )

    def with_charges(self, charges):
        return PointPattern(self.locations, charges, self.horizon)

    def count(self, a, b):
        """Number of points in ``[a, b)``."""
        lo, hi = np.searchsorted(self.locations, [a, b], side="left")
        return int(hi - lo)

    # serialisation

    def to_csv(self, path=None):
        buf = io.StringIO()
        buf.write("t,charge\n")
        for t, c in zip(self.locations, self.charges):
            buf.write(f"{t:.17g},{c:.17g}\n")
        text = buf.getvalue()
        if path is not None:
            with open(path, "w") as fh:
                fh.write(text)
        return text

    @classmethod
    def from_csv(cls, source, horizon):
        """Read ``t,charge`` rows from a path or CSV text."""
        if "\n" in str(source):
            text = str(source)
        else:
            with open(source) as fh:
                text = fh.read()
        rows = list(csv.DictReader(io.StringIO(text)))
        loc = [float(r["t"]) for r in rows]
        ch = [float(r["charge"]) for r in rows]
        return cls(np.array(loc), np.array(ch), horizon)

    def to_json(self):
        return json.dumps(
            {
                "horizon": self.horizon,
                "locations": self.locations.tolist(),
                "charges": self.charges.tolist(),
            }
        )

    @classmethod
    def from_json(cls, text):
        d = json.loads(text)
        return cls(np.array(d["locations"], dtype=float), np.array(d["charges"], dtype=float), d["horizon"])


def _unit_exponential_arrivals(total, rng):
    """Partial sums of Exp(1) gaps (``-log U``) that do not exceed ``total``."""
    out = []
    last = 0.0
    chunk = int(total + 6.0 * math.sqrt(total) + 16)
    while True:
        u = 1.0 - rng.random(chunk)  # in (0, 1]
        arr = last + np.cumsum(-np.log(u))
        keep = arr[arr <= total]
        out.append(keep)
        if keep.size < arr.size:
            break
        last = arr[-1]
        chunk = max(16, chunk // 4)
    return np.concatenate(out)


def simulate_homogeneous(rate, horizon, rng):
    """Homogeneous Poisson pattern with gaps ``-log(U) / rate`` and unit charges."""
    if not rate > 0:
        raise ValueError(f"rate must be positive, got {rate}")
    if not horizon > 0:
        raise ValueError("horizon must be positive")
    rng = as_rng(rng)
    loc = _unit_exponential_arrivals(rate * horizon, rng) / rate
    loc = loc[loc <= horizon]
    return PointPattern(loc, np.ones(loc.size), horizon)


def simulate_inhomogeneous(intensity, rng):
    """Time-rescaled Poisson pattern on ``[0, intensity.horizon]``.

    ``V`` accumulates unit-rate exponential increments and each event is
    ``inf{t : Lambda(t) >= V}``.
    """
    rng = as_rng(rng)
    total = float(intensity.cumulative(intensity.horizon))
    v = _unit_exponential_arrivals(total, rng)
    loc = intensity.inverse_cumulative(v)
    loc = np.clip(loc, 0.0, intensity.horizon)
    # bisection can collapse two arrivals closer than its tolerance
    keep = np.concatenate(([True], np.diff(loc) > 0)) if loc.size else np.zeros(0, bool)
    loc = loc[keep]
    return PointPattern(loc, np.ones(loc.size), intensity.horizon)


def attach_charges(pattern, dist, rng):
    """Replace charges by i.i.d. draws from ``dist``."""
    return pattern.with_charges(dist.sample(len(pattern), as_rng(rng)))


def sgn_transform(pattern, absolute=False):
    """Signed skeleton of a compound pattern.

    ``absolute=False`` maps each charge to its sign; ``absolute=True`` puts
    charge 1 on every point, i.e. the unit-charge counting measure.
    """
    if absolute:
        return pattern.with_charges(np.ones(len(pattern)))
    return pattern.with_charges(np.sign(pattern.charges))


def expected_count(intensity, a, b):
    """``Lambda([a, b])`` from the analytic cumulative."""
    if a > b:
        raise ValueError(f"need a <= b, got [{a}, {b}]")
    return float(intensity.cumulative(b) - intensity.cumulative(a))


def superpose(*patterns):
    """Union of independent patterns on a common horizon."""
    horizon = patterns[0].horizon
    loc = np.concatenate([p.locations for p in patterns])
    ch = np.concatenate([p.charges for p in patterns])
    order = np.argsort(loc, kind="stable")
    return PointPattern(loc[order], ch[order], horizon)


def simulate_window_batch(intensity, a, b, n, rng):
    """Many independent realisations restricted to the window ``[a, b]``.

    Counts are Poisson(``Lambda([a, b])``); given the count, locations are
    i.i.d. with density ``lambda / Lambda([a, b])`` and are drawn by inverting
    the cumulative. By independence over disjoint sets this is exactly the
    restriction of the full process to the window.

    Returns:
        counts: int array of shape (n,)
        locations: flat array, grouped by realisation (unsorted within one)
    """
    rng = as_rng(rng)
    lam_a = float(intensity.cumulative(a))
    mass = float(intensity.cumulative(b)) - lam_a
    counts = rng.poisson(mass, size=n)
    u = rng.random(int(counts.sum()))
    loc = intensity.inverse_cumulative(lam_a + u * mass)
    return counts, loc
