"""Log-log slope fits for convergence ladders."""

import csv
import math
import re
from dataclasses import dataclass, field

import numpy as np


class TooFewPointsError(ValueError):
    pass


@dataclass(frozen=True)
class SlopeFit:
    slope: float
    intercept: float
    r2: float
    scales: list
    excluded: list = field(default_factory=list)

    def as_dict(self):
        return {
            "slope": self.slope,
            "intercept": self.intercept,
            "r2": self.r2,
            "scales": list(self.scales),
            "excluded": list(self.excluded),
        }


def fit_loglog(scales, values, std_errors=None, max_rel_se=0.2, min_points=4):
    """Least-squares line through ``(log s, log value)``.

    Points with ``std_error / value > max_rel_se`` or non-positive values
    are dropped and listed in ``excluded`` as ``(scale, reason)``.
    """
    scales = np.asarray(scales, dtype=float)
    values = np.asarray(values, dtype=float)
    se = np.zeros_like(values) if std_errors is None else np.asarray(std_errors, dtype=float)
    keep = np.ones(scales.size, dtype=bool)
    excluded = []
    for i, (s, v, e) in enumerate(zip(scales, values, se)):
        if not v > 0:
            keep[i] = False
            excluded.append((float(s), "non-positive value"))
        elif not e / v <= max_rel_se:
            keep[i] = False
            excluded.append((float(s), f"relative std error {e / v:.3g} > {max_rel_se}"))
    if keep.sum() < min_points:
        raise TooFewPointsError(f"only {int(keep.sum())} usable points, need {min_points}")
    x, y = np.log(scales[keep]), np.log(values[keep])
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_tot = float(((y - y.mean()) ** 2).sum())
    r2 = 1.0 - float((resid**2).sum()) / ss_tot if ss_tot > 0 else 1.0
    return SlopeFit(float(slope), float(intercept), r2, scales[keep].tolist(), excluded)


_CLAUSE = re.compile(r"^\s*([A-Za-z_][A-Za-z0-9_]*)\s*(==|!=|=)\s*(.*?)\s*$")


def _parse_where(expr):
    clauses = []
    if not expr or not expr.strip():
        return clauses
    for part in re.split(r",|\band\b|&", expr):
        if not part.strip():
            continue
        m = _CLAUSE.match(part)
        if not m:
            raise ValueError(f"cannot parse filter clause {part.strip()!r}")
        key, op, val = m.groups()
        clauses.append((key, op != "!=", val.strip("'\"")))
    return clauses


def _matches(row, clauses):
    for key, equal, val in clauses:
        if key not in row:
            raise KeyError(f"unknown column {key!r}")
        cell = row[key]
        try:
            same = math.isclose(float(cell), float(val), rel_tol=1e-12)
        except ValueError:
            same = cell == val
        if same != equal:
            return False
    return True


def fit_slope(csv_path, where="", max_rel_se=0.2):
    """Fit ``log estimate`` against ``log s`` over the rows selected by ``where``.

    ``where`` is a conjunction of ``column=value`` (or ``!=``) clauses joined
    by commas or ``and``, e.g. ``"process=poisson, p=1"``.
    """
    clauses = _parse_where(where)
    with open(csv_path, newline="") as fh:
        rows = [r for r in csv.DictReader(fh) if _matches(r, clauses)]
    s = [float(r["s"]) for r in rows]
    est = [float(r["estimate"]) for r in rows]
    se = [float(r["std_error"]) if r["std_error"] not in ("", "nan") else 0.0 for r in rows]
    return fit_loglog(s, est, se, max_rel_se=max_rel_se)
