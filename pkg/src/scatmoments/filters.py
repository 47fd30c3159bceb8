"""Windows, Gabor-type filters and the quadrature helpers built on them.

A filter with scale ``s`` and frequency ``xi`` is ``w(t / s) * exp(1j * xi * t)``
where the window ``w`` vanishes outside ``(0, 1)``.  All complex values are
numpy ``complex128``.
"""

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from ._rng import as_rng

TWO_PI = 2.0 * np.pi


def bump_window(t):
    """Smooth bump ``exp(-1 / (4t(1 - t)))`` on ``(0, 1)``, zero elsewhere.

    Accepts scalars or arrays; returns the same shape (a float for scalars).
    """
    t = np.asarray(t, dtype=float)
    out = np.zeros(t.shape)
    inside = (t > 0.0) & (t < 1.0)
    ti = t[inside]
    with np.errstate(divide="ignore", over="ignore"):
        # denormal denominators next to the endpoints give exp(-inf) = 0
        out[inside] = np.exp(-1.0 / (4.0 * ti * (1.0 - ti)))
    if out.ndim == 0:
        return float(out)
    return out


@dataclass(frozen=True, eq=False)
class WindowFunction:
    """Real window supported in the unit interval.

    Use :meth:`bump` for the smooth bump, or :meth:`tabulated` for a window
    given by node values (linearly interpolated, clamped to 0 outside
    ``(0, 1)``).
    """

    kind: str = "bump"
    nodes: np.ndarray = field(default=None, repr=False)
    values: np.ndarray = field(default=None, repr=False)

    @classmethod
    def bump(cls):
        return cls("bump")

    @classmethod
    def tabulated(cls, nodes, values):
        nodes = np.array(nodes, dtype=float)
        values = np.array(values, dtype=float)
        if nodes.ndim != 1 or nodes.shape != values.shape or nodes.size < 2:
            raise ValueError("nodes and values must be 1-d arrays of equal length >= 2")
        if np.any(np.diff(nodes) <= 0):
            raise ValueError("nodes must be strictly increasing")
        nodes.setflags(write=False)
        values.setflags(write=False)
        return cls("tabulated", nodes, values)

    def __call__(self, t):
        if self.kind == "bump":
            return bump_window(t)
        t = np.asarray(t, dtype=float)
        out = np.interp(t, self.nodes, self.values, left=0.0, right=0.0)
        out = np.where((t > 0.0) & (t < 1.0), out, 0.0)
        if out.ndim == 0:
            return float(out)
        return out

    def is_zero(self):
        return self.kind == "tabulated" and not np.any(self.values)


BUMP = WindowFunction.bump()


@dataclass(frozen=True)
class GaborFilter:
    """Gabor-type filter ``w(t/s) exp(i xi t)``, supported on ``(0, s)``."""

    scale: float
    freq: float = 0.0
    window: WindowFunction = BUMP

    def __post_init__(self):
        if not self.scale > 0:
            raise ValueError(f"filter scale must be positive, got {self.scale}")

    def __call__(self, t):
        return gabor_eval(self, t)

    def modulus(self, t):
        return self.window(np.asarray(t, dtype=float) / self.scale)


def gabor_eval(f, t):
    """Evaluate the filter at ``t`` (scalar or array) as complex values."""
    t = np.asarray(t, dtype=float)
    val = f.window(t / f.scale) * np.exp(1j * f.freq * t)
    if np.ndim(val) == 0:
        return complex(val)
    return val


def midpoint_nodes(n, a=0.0, b=1.0):
    """Nodes of the ``n``-point composite midpoint rule on ``[a, b]``."""
    return a + (b - a) * (np.arange(n) + 0.5) / n


@lru_cache(maxsize=256)
def _bump_pnorm(p, n_quad):
    u = midpoint_nodes(n_quad)
    return float(np.mean(np.abs(bump_window(u)) ** p))


def window_pnorm(w=BUMP, p=1.0, n_quad=2**14):
    """``int_0^1 |w(u)|^p du`` by the composite midpoint rule.

    The midpoint rule avoids evaluating the bump's exponent at the endpoints
    and converges very fast because every derivative of the bump vanishes
    there.
    """
    if p < 1:
        raise ValueError(f"p must be >= 1, got {p}")
    if n_quad < 2:
        raise ValueError("n_quad must be >= 2")
    if w.kind == "bump":
        return _bump_pnorm(float(p), int(n_quad))
    u = midpoint_nodes(n_quad)
    return float(np.mean(np.abs(w(u)) ** p))


def sample_frequency(rng):
    """Frequency drawn uniformly from the open interval ``(0, 2 pi)``."""
    rng = as_rng(rng)
    while True:
        xi = rng.uniform(0.0, TWO_PI)
        if xi > 0.0:
            return float(xi)


def scale_ladder(s_max, levels=range(1, 15)):
    """Dyadic ladder ``s_max * 2**-k`` for ``k`` in ``levels`` (decreasing)."""
    return [float(s_max) * 2.0 ** (-k) for k in levels]
