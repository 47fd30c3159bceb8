"""Experiment presets and config-driven sweeps.

Each experiment returns an :class:`ExperimentResult` holding CSV rows (one
per scale and moment) and named checks.  ``write`` emits ``<name>.csv`` and
``<name>.summary.json``; both are byte-identical for a fixed seed and any
worker count (``SCATTER_THREADS``).
"""

import csv
import io
import json
import math
import os
from dataclasses import dataclass, field
from importlib import resources

import jsonschema
import numpy as np

from . import __version__
from ._rng import derive_rng, ordered_map, sub_seed
from .filters import BUMP, GaborFilter, sample_frequency, scale_ladder, window_pnorm
from .fitting import TooFewPointsError, fit_loglog
from .pointprocess import (
    ChargeDistribution,
    IntensityModel,
    attach_charges,
    sgn_transform,
    simulate_inhomogeneous,
)
from .scattering import (
    first_order_invariant,
    first_order_invariant_path,
    first_order_pointwise,
    second_order_invariant,
)
from .selfsimilar import FBM, AlphaStable
from .theory import (
    m_lambda,
    predict_second_order_K,
    predict_selfsim,
    taylor_error_decay,
    two_point_sides,
    two_point_expectation,
)

COLUMNS = ("process", "p", "p2", "s", "xi", "s2", "xi2", "estimate", "std_error", "n", "predicted", "normalizer")
DEFAULT_SEED = 1729
SCHEMA_NAME = "experiment-config.v1.json"


@dataclass
class Check:
    name: str
    passed: bool
    value: float
    target: float
    tolerance: float
    detail: str = ""

    def as_dict(self):
        return {
            "name": self.name,
            "status": "pass" if self.passed else "fail",
            "value": _num(self.value),
            "target": _num(self.target),
            "tolerance": _num(self.tolerance),
            "detail": self.detail,
        }


def _num(x):
    if x is None:
        return None
    x = float(x)
    return x if math.isfinite(x) else str(x)


def relative_check(name, value, target, tol, detail=""):
    ok = bool(math.isfinite(value) and abs(value - target) <= tol * abs(target))
    return Check(name, ok, value, target, tol, detail or f"|value/target - 1| <= {tol}")


def range_check(name, value, target, tol, detail=""):
    ok = bool(math.isfinite(value) and abs(value - target) <= tol)
    return Check(name, ok, value, target, tol, detail or f"|value - target| <= {tol}")


def separation_check(name, a, se_a, b, se_b, n_sigma=3.0):
    z = abs(a - b) / math.hypot(se_a, se_b)
    return Check(name, bool(z > n_sigma), z, n_sigma, 0.0, "difference in joint standard errors must exceed target")


@dataclass
class ExperimentResult:
    name: str
    seed: int
    rows: list
    checks: list
    info: dict = field(default_factory=dict)

    @property
    def passed(self):
        return all(c.passed for c in self.checks)

    @property
    def failures(self):
        return [c.as_dict() for c in self.checks if not c.passed]

    def csv_text(self):
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=COLUMNS, lineterminator="\n")
        writer.writeheader()
        for row in self.rows:
            writer.writerow({k: _cell(row.get(k)) for k in COLUMNS})
        return buf.getvalue()

    def summary(self):
        return {
            "experiment": self.name,
            "seed": self.seed,
            "package_version": __version__,
            "status": "pass" if self.passed else "fail",
            "checks": [c.as_dict() for c in self.checks],
            "info": _jsonable(self.info),
        }

    def write(self, out_dir):
        os.makedirs(out_dir, exist_ok=True)
        csv_path = os.path.join(out_dir, f"{self.name}.csv")
        with open(csv_path, "w", newline="") as fh:
            fh.write(self.csv_text())
        sum_path = os.path.join(out_dir, f"{self.name}.summary.json")
        with open(sum_path, "w") as fh:
            json.dump(self.summary(), fh, indent=2, sort_keys=True)
            fh.write("\n")
        return csv_path, sum_path


def _cell(v):
    if v is None:
        return ""
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return _num(obj)
    return obj


def make_row(process, p, s, xi, est, predicted=None, normalizer=1.0, p2=None, s2=None, xi2=None):
    return {
        "process": process,
        "p": float(p),
        "p2": None if p2 is None else float(p2),
        "s": float(s),
        "xi": float(xi),
        "s2": None if s2 is None else float(s2),
        "xi2": None if xi2 is None else float(xi2),
        "estimate": est.value,
        "std_error": est.std_error,
        "n": est.n_replicates,
        "predicted": predicted,
        "normalizer": normalizer,
    }


def normalized(row):
    return row["estimate"] / row["normalizer"], row["std_error"] / row["normalizer"]


def _finest(rows, **match):
    sel = [r for r in rows if all(r[k] == v for k, v in match.items())]
    return min(sel, key=lambda r: r["s"])


def _slope_check(name, rows, target, tol, **match):
    sel = [r for r in rows if all(r[k] == v for k, v in match.items())]
    try:
        fit = fit_loglog([r["s"] for r in sel], [r["estimate"] for r in sel], [r["std_error"] for r in sel])
    except TooFewPointsError as err:
        return Check(name, False, math.nan, target, tol, str(err)), None
    return range_check(name, fit.slope, target, tol, f"log-log slope, r2={fit.r2:.6f}"), fit


def frequency_from_seed(seed):
    return sample_frequency(derive_rng(seed, "frequency"))


def _realization(seed, label, intensity, dist):
    pat = simulate_inhomogeneous(intensity, derive_rng(seed, "realization", label))
    return attach_charges(pat, dist, derive_rng(seed, "charges", label))


# presets


def _invariant_family(name, seed, processes, ladder, horizon, moments=(1, 2)):
    """Invariant first-order moments of several homogeneous compound processes."""
    xi = frequency_from_seed(seed)
    pats = {lab: _realization(seed, lab, IntensityModel.constant(rate, horizon), d) for lab, rate, d in processes}
    jobs = [(lab, rate, d, p, s) for lab, rate, d in processes for p in moments for s in ladder]

    def run(job):
        lab, rate, d, p, s = job
        est = first_order_invariant(GaborFilter(s, xi), p, pats[lab])
        norm = s * window_pnorm(BUMP, p)
        return make_row(lab, p, s, xi, est, rate * d.abs_moment(p) * norm, norm)

    rows = ordered_map(run, jobs)
    info = {
        "estimator": "invariant time average over one realization, batch-means std error (32 blocks)",
        "horizon": horizon,
        "scales": ladder,
        "xi": xi,
        "lattice_step": "s/32",
        "margin": "s",
        "processes": {lab: {"rate": rate, "charges": d.kind, "param": d.param} for lab, rate, d in processes},
    }
    return rows, info


def preset_same_intensity(seed, horizon=1e6, s_max=16.0):
    lam = 0.01
    procs = [
        ("ordinary", lam, ChargeDistribution.constant(1.0)),
        ("gaussian", lam, ChargeDistribution.gaussian(math.pi / 2)),
        ("rademacher", lam, ChargeDistribution.rademacher()),
    ]
    ladder = scale_ladder(s_max, range(0, 14))
    rows, info = _invariant_family("fig1", seed, procs, ladder, horizon)
    checks = []
    for lab, _, _ in procs:
        v, _ = normalized(_finest(rows, process=lab, p=1.0))
        checks.append(relative_check(f"p1_{lab}_to_0.01", v, lam, 0.1))
    fin = {lab: normalized(_finest(rows, process=lab, p=2.0)) for lab, _, _ in procs}
    checks.append(relative_check("p2_ordinary_to_0.01", fin["ordinary"][0], lam, 0.1))
    checks.append(relative_check("p2_rademacher_to_0.01", fin["rademacher"][0], lam, 0.1))
    checks.append(relative_check("p2_gaussian_to_0.01pi/2", fin["gaussian"][0], lam * math.pi / 2, 0.1))
    for other in ("ordinary", "rademacher"):
        checks.append(separation_check(f"p2_gaussian_separated_from_{other}", *fin["gaussian"], *fin[other]))
    return ExperimentResult("fig1", seed, rows, checks, info)


def preset_mixed_intensity(seed, horizon=1e6, s_max=16.0):
    lam1, lam2 = 0.01, 0.01 / math.sqrt(2.0)
    procs = [
        ("gaussian_var1", lam1, ChargeDistribution.gaussian(1.0)),
        ("gaussian_var2", lam2, ChargeDistribution.gaussian(2.0)),
    ]
    ladder = scale_ladder(s_max, range(0, 14))
    rows, info = _invariant_family("fig3", seed, procs, ladder, horizon)
    target1 = 0.01 * math.sqrt(2.0 / math.pi)
    a, _ = normalized(_finest(rows, process="gaussian_var1", p=1.0))
    b, _ = normalized(_finest(rows, process="gaussian_var2", p=1.0))
    checks = [
        relative_check("p1_var1_to_0.00798", a, target1, 0.1),
        relative_check("p1_var2_to_0.00798", b, target1, 0.1),
        relative_check("p1_var1_vs_var2", a, b, 0.1),
    ]
    f1 = normalized(_finest(rows, process="gaussian_var1", p=2.0))
    f2 = normalized(_finest(rows, process="gaussian_var2", p=2.0))
    checks.append(relative_check("p2_var1_to_0.01", f1[0], 0.01, 0.1))
    checks.append(relative_check("p2_var2_to_0.01414", f2[0], 0.01 * math.sqrt(2.0), 0.1))
    checks.append(separation_check("p2_var1_separated_from_var2", *f1, *f2))
    return ExperimentResult("fig3", seed, rows, checks, info)


def preset_sinusoidal_pointwise(seed, period=102400.0, n_replicates=1000, s_max=16.0, halfwidth=None):
    intensity = IntensityModel.sinusoidal(0.01, 0.5, period)
    halfwidth = period / 256.0 if halfwidth is None else halfwidth
    xi = frequency_from_seed(seed)
    ladder = scale_ladder(s_max, range(0, 8))
    times = [(0.25, 0.015), (0.5, 0.010), (0.75, 0.005)]

    def gen(rng):
        return simulate_inhomogeneous(intensity, rng)

    jobs = [(frac, s) for frac, _ in times for s in ladder]

    def run(job):
        frac, s = job
        t = frac * period
        est = first_order_pointwise(
            GaborFilter(s, xi), 1, gen, t, n_replicates, sub_seed(seed, "pointwise"), halfwidth=halfwidth
        )
        norm = s * window_pnorm(BUMP, 1)
        return make_row(f"sinusoidal_t{frac:g}N", 1, s, xi, est, float(intensity.rate(t)) * norm, norm)

    rows = ordered_map(run, jobs)
    checks = []
    for frac, lam_t in times:
        v, _ = normalized(_finest(rows, process=f"sinusoidal_t{frac:g}N"))
        checks.append(relative_check(f"t{frac:g}N_to_{lam_t:g}", v, lam_t, 0.1))
    info = {
        "estimator": "pointwise Monte Carlo over fresh realizations, each contributing a local time average",
        "period": period,
        "n_replicates": n_replicates,
        "halfwidth": halfwidth,
        "scales": ladder,
        "xi": xi,
        "intensity": "0.01 (1 + 0.5 sin(2 pi t / N))",
    }
    return ExperimentResult("fig4", seed, rows, checks, info)


def preset_brownian_vs_poisson(seed, horizon=1e6, n_paths=4000):
    xi = frequency_from_seed(seed)
    ladder = scale_ladder(1.0, range(2, 10))
    lam, charge = 0.01, 10.0
    bm = FBM(0.5)
    dist = ChargeDistribution.constant(charge)
    pat = _realization(seed, "poisson", IntensityModel.constant(lam, horizon), dist)
    w1, w2 = window_pnorm(BUMP, 1), window_pnorm(BUMP, 2)
    jobs = [(proc, p, i, s) for proc in ("brownian", "poisson") for p in (1, 2) for i, s in enumerate(ladder)]

    def run(job):
        proc, p, i, s = job
        f = GaborFilter(s, xi)
        if proc == "brownian":
            est = first_order_invariant_path(f, p, bm, n_paths, sub_seed(seed, "brownian", p, i))
            pred = predict_selfsim(bm, p, L=s * xi).value * s ** (0.5 * p)
            norm = math.sqrt(s) * w2 * math.sqrt(2.0 / math.pi) if p == 1 else s * w2
        else:
            est = first_order_invariant(f, p, pat)
            pred = lam * dist.abs_moment(p) * window_pnorm(BUMP, p) * s
            norm = s * lam * charge * w1 if p == 1 else s * w2
        return make_row(proc, p, s, xi, est, pred, norm)

    rows = ordered_map(run, jobs)
    checks, slopes = [], {}
    for proc, p, target in (("brownian", 1.0, 0.5), ("poisson", 1.0, 1.0), ("brownian", 2.0, 1.0), ("poisson", 2.0, 1.0)):
        chk, fit = _slope_check(f"slope_{proc}_p{p:g}", rows, target, 0.1, process=proc, p=p)
        checks.append(chk)
        slopes[f"{proc}_p{p:g}"] = fit.as_dict() if fit else None
    info = {
        "estimator": {
            "brownian": f"path Monte Carlo, {n_paths} fresh paths per scale, 256 grid cells per support",
            "poisson": "invariant time average over one realization",
        },
        "horizon": horizon,
        "scales": ladder,
        "xi": xi,
        "poisson": {"rate": lam, "charge": charge},
        "slopes": slopes,
    }
    return ExperimentResult("fig5", seed, rows, checks, info)


def preset_second_order_limit(seed, horizon=1e6, L=1.0, c=1.0, scales=(4.0, 2.0, 1.0, 0.5, 0.25)):
    lam, p, p2 = 0.01, 1.0, 2.0
    xi = frequency_from_seed(seed)
    dist = ChargeDistribution.constant(1.0)
    pat = _realization(seed, "poisson", IntensityModel.constant(lam, horizon), dist)
    K = predict_second_order_K(p, p2, c, L)

    def run(s):
        f, f2 = GaborFilter(s, xi), GaborFilter(c * s, L / (c * s))
        est = second_order_invariant(f, p, f2, p2, pat)
        norm = s ** (p2 + 1)
        pred = K.value * lam * dist.abs_moment(p * p2) * norm
        return make_row("ordinary", p, s, xi, est, pred, norm, p2=p2, s2=f2.scale, xi2=f2.freq)

    rows = ordered_map(run, list(scales))
    fin = _finest(rows, process="ordinary")
    v, _ = normalized(fin)
    checks = [relative_check("normalized_to_K_lambda_EA2", v, K.value * lam * dist.abs_moment(p * p2), 0.15)]
    # homogeneity in the charges on the same realization and lattice
    cc = 3.0
    s = fin["s"]
    f, f2 = GaborFilter(s, xi), GaborFilter(c * s, L / (c * s))
    scaled_est = second_order_invariant(f, p, f2, p2, pat.with_charges(cc * pat.charges))
    ratio = scaled_est.value / fin["estimate"]
    checks.append(relative_check("charge_homogeneity_c3", ratio, cc ** (p * p2), 1e-12, "ratio equals |c|^(p p2)"))
    rows.append(
        make_row("ordinary_charge3", p, s, xi, scaled_est, None, s ** (p2 + 1), p2=p2, s2=f2.scale, xi2=f2.freq)
    )
    info = {
        "estimator": "second-order invariant time average over one realization, lattice step min(s,s2)/256",
        "horizon": horizon,
        "L": L,
        "c": c,
        "K": K.value,
        "K_tolerance": K.tolerance,
        "scales": list(scales),
        "xi": xi,
    }
    return ExperimentResult("thm41", seed, rows, checks, info)


def preset_expansion_remainder(seed, n_direct=2 * 10**7, n_mc=2 * 10**6):
    intensity = IntensityModel.constant(1.0, 10.0)
    dist = ChargeDistribution.constant(1.0)
    xi = frequency_from_seed(seed)
    t = 5.0
    rows, checks, fits = [], [], {}
    for m, s_max in ((1, 0.16), (2, 0.32)):
        ladder = [s_max * 2.0 ** (-k / 3.0) for k in range(6)]
        filt = [GaborFilter(s, xi) for s in ladder]
        dec = taylor_error_decay(filt, 1, intensity, dist, t, m, n_direct, n_mc, sub_seed(seed, "remainder", m))
        for s, e, nz in zip(dec.scales, dec.eps, dec.noise):
            rows.append(
                {
                    "process": f"taylor_remainder_m{m}",
                    "p": 1.0,
                    "s": s,
                    "xi": xi,
                    "estimate": e,
                    "std_error": nz,
                    "n": n_direct,
                    "normalizer": 1.0,
                }
            )
        target = m + 1.0
        if dec.fit is None:
            checks.append(Check(f"m{m}_slope", False, math.nan, target - 0.3, 0.0, "too few usable scales"))
        else:
            ok = dec.slope >= target - 0.3
            checks.append(Check(f"m{m}_slope", ok, dec.slope, target, 0.3, "slope >= m + 1 - 0.3"))
        fits[f"m{m}"] = dec.fit.as_dict() if dec.fit else None
    info = {
        "estimator": "remainder = direct pointwise Monte Carlo (window-restricted) minus m-term expansion",
        "intensity": "constant 1.0",
        "charges": "constant 1",
        "t": t,
        "n_direct": n_direct,
        "n_expansion_mc": n_mc,
        "xi": xi,
        "fits": fits,
        "exclusion_rule": "scale dropped when joint Monte Carlo std error >= |remainder|",
    }
    return ExperimentResult("thm31-err", seed, rows, checks, info)


def preset_two_point_correction(seed, period=102400.0, n_realizations=200, n_mc=200_000, scales=(64.0, 32.0, 16.0, 8.0, 4.0)):
    intensity = IntensityModel.sinusoidal(0.01, 0.5, period)
    dist = ChargeDistribution.constant(1.0)
    p, L = 2.0, 0.0
    pats = [simulate_inhomogeneous(intensity, derive_rng(seed, "realization", r)) for r in range(n_realizations)]
    filt = [GaborFilter(s, L / s) for s in scales]
    res = two_point_sides(filt, p, intensity, dist, L, pats, n_mc, sub_seed(seed, "two-point-oracle"))
    rows = []
    for s, v, e in zip(res.scales, res.lhs, res.lhs_se):
        rows.append(
            {
                "process": "sinusoidal_const_charge",
                "p": p,
                "s": s,
                "xi": L / s,
                "estimate": v,
                "std_error": e,
                "n": n_realizations,
                "predicted": res.rhs,
                "normalizer": 1.0,
            }
        )
    idx = res.finest_usable
    if idx is None:
        checks = [Check("lhs_to_rhs_finest_usable", False, math.nan, res.rhs, 0.15, "no scale passes the noise rule")]
    else:
        checks = [
            relative_check(
                "lhs_to_rhs_finest_usable", res.lhs[idx], res.rhs, 0.15, f"scale {res.scales[idx]:g}, within 15%"
            )
        ]
    m2 = m_lambda(intensity, 2).value
    two = two_point_expectation(p, dist, L, n_mc, sub_seed(seed, "two-point-oracle"))
    info = {
        "estimator": "invariant time average, lattice step s/64, averaged over realizations of one period each",
        "period": period,
        "n_realizations": n_realizations,
        "scales": list(scales),
        "usable": res.usable,
        "noise_rule": "usable when lhs std error <= 0.05 |rhs|",
        "rhs": res.rhs,
        "rhs_std_error": res.rhs_se,
        "rhs_without_minus_one": m2 * two.value / (2.0 * window_pnorm(BUMP, p) * dist.abs_moment(p)),
        "m2": m2,
    }
    return ExperimentResult("thm33", seed, rows, checks, info)


def preset_stable_scaling(seed, alpha=1.5, n_paths=50_000, n_oracle=200_000):
    proc = AlphaStable(alpha)
    xi = frequency_from_seed(seed)
    ladder = scale_ladder(1.0, range(2, 10))
    p = 1.0

    def run(item):
        i, s = item
        return first_order_invariant_path(GaborFilter(s, xi), p, proc, n_paths, sub_seed(seed, "stable", i))

    ests = ordered_map(run, list(enumerate(ladder)))
    L = ladder[-1] * xi
    oracle = predict_selfsim(proc, p, L=L, n_mc=n_oracle, seed=sub_seed(seed, "stable-oracle"))
    beta = proc.exponent * p
    rows = []
    for s, est in zip(ladder, ests):
        pred = oracle.value * s**beta if s == ladder[-1] else None
        rows.append(make_row(f"stable{alpha:g}", p, s, xi, est, pred, s**beta))
    chk, fit = _slope_check("slope_p_over_alpha", rows, beta, 0.1, process=f"stable{alpha:g}")
    v, _ = normalized(rows[-1])
    checks = [chk, relative_check("normalized_limit_to_oracle", v, oracle.value, 0.15)]
    info = {
        "estimator": f"path Monte Carlo, {n_paths} fresh paths per scale, 256 grid cells per support",
        "alpha": alpha,
        "normalization": proc.normalization,
        "scales": ladder,
        "xi": xi,
        "oracle": {"value": oracle.value, "std_error": oracle.tolerance, "L": L, "n_mc": n_oracle},
        "slope_fit": fit.as_dict() if fit else None,
    }
    return ExperimentResult("thm51", seed, rows, checks, info)


def preset_sign_skeleton(seed, horizon=1e6, s_max=16.0):
    lam = 0.01
    dist = ChargeDistribution.gaussian(math.pi / 2)
    xi = frequency_from_seed(seed)
    ladder = scale_ladder(s_max, range(0, 14))
    pat = _realization(seed, "gaussian", IntensityModel.constant(lam, horizon), dist)
    skeleton = sgn_transform(pat, absolute=True)
    jobs = [(lab, s) for lab in ("compound", "skeleton") for s in ladder]

    def run(job):
        lab, s = job
        est = first_order_invariant(GaborFilter(s, xi), 1, pat if lab == "compound" else skeleton)
        norm = s * window_pnorm(BUMP, 1)
        pred = lam * (dist.abs_moment(1) if lab == "compound" else 1.0) * norm
        return make_row(lab, 1, s, xi, est, pred, norm)

    rows = ordered_map(run, jobs)
    ratio = _finest(rows, process="compound")["estimate"] / _finest(rows, process="skeleton")["estimate"]
    checks = [relative_check("ratio_to_E|A|", ratio, dist.abs_moment(1), 0.1)]
    info = {
        "estimator": "invariant time average, compound and unit-charge skeleton on the same realization",
        "horizon": horizon,
        "scales": ladder,
        "xi": xi,
        "ratio_finest": ratio,
    }
    return ExperimentResult("sgn", seed, rows, checks, info)


PRESETS = {
    "fig1": preset_same_intensity,
    "fig3": preset_mixed_intensity,
    "fig4": preset_sinusoidal_pointwise,
    "fig5": preset_brownian_vs_poisson,
    "thm41": preset_second_order_limit,
    "thm31-err": preset_expansion_remainder,
    "thm33": preset_two_point_correction,
    "thm51": preset_stable_scaling,
    "sgn": preset_sign_skeleton,
}


def run_preset(name, seed=DEFAULT_SEED):
    if name not in PRESETS:
        raise KeyError(f"unknown preset {name!r}; choose from {', '.join(PRESETS)}")
    return PRESETS[name](int(seed))


# config-driven sweeps


class ConfigError(ValueError):
    """Config failed validation; ``errors`` lists ``(json_pointer, message)``."""

    def __init__(self, errors):
        self.errors = errors
        super().__init__("; ".join(f"{ptr or '/'}: {msg}" for ptr, msg in errors))


def load_schema():
    text = resources.files("scatmoments").joinpath("schema", SCHEMA_NAME).read_text()
    return json.loads(text)


def _pointer(path):
    return "".join("/" + str(p).replace("~", "~0").replace("/", "~1") for p in path)


def _leaf_errors(err):
    """Replace a failed ``oneOf`` by the errors of the branch whose ``kind``
    matched, so the pointer names the offending field."""
    if err.validator != "oneOf" or not err.context:
        return [err]
    branches = {}
    for sub in err.context:
        branches.setdefault(sub.schema_path[0], []).append(sub)
    plausible = [
        errs
        for errs in branches.values()
        if not any(e.validator == "const" and list(e.relative_path) == ["kind"] for e in errs)
    ]
    if len(plausible) != 1:
        return [err]
    return [leaf for e in plausible[0] for leaf in _leaf_errors(e)]


def validate_config(cfg):
    validator = jsonschema.Draft202012Validator(load_schema())
    errors = [leaf for e in validator.iter_errors(cfg) for leaf in _leaf_errors(e)]
    errors.sort(key=lambda e: list(map(str, e.absolute_path)))
    problems = [(_pointer(e.absolute_path), e.message) for e in errors]
    if problems:
        raise ConfigError(problems)
    scales = _config_scales(cfg)
    if any(b >= a for a, b in zip(scales, scales[1:])):
        problems.append(("/filters", "scale ladder must be strictly decreasing"))
    horizon = cfg.get("horizon", 1e6)
    if cfg["process"]["kind"] == "poisson" and any(s >= horizon / 10.0 for s in scales):
        problems.append(("/filters", f"all scales must be below horizon/10 = {horizon / 10.0:g}"))
    if problems:
        raise ConfigError(problems)
    return cfg


def _config_scales(cfg):
    flt = cfg["filters"]
    if "scales" in flt:
        return [float(s) for s in flt["scales"]]
    return scale_ladder(flt["ladder"]["s_max"], flt["ladder"]["levels"])


def _config_process(cfg, horizon):
    pr = cfg["process"]
    if pr["kind"] == "fbm":
        return FBM(pr["H"]), None, None
    if pr["kind"] == "stable":
        return AlphaStable(pr["alpha"], pr.get("normalization", "unit")), None, None
    it = pr["intensity"]
    if it["kind"] == "constant":
        intensity = IntensityModel.constant(it["a"], horizon)
    else:
        intensity = IntensityModel.sinusoidal(it["a"], it.get("b", 0.0), it.get("period", horizon), horizon)
    ch = pr.get("charges", {"kind": "constant"})
    if ch["kind"] == "constant":
        dist = ChargeDistribution.constant(ch.get("value", 1.0))
    elif ch["kind"] == "gaussian":
        dist = ChargeDistribution.gaussian(ch.get("variance", 1.0))
    else:
        dist = ChargeDistribution.rademacher()
    return None, intensity, dist


def run_config(cfg, seed=None, name=None):
    """Run a validated sweep: one row per (moment, scale), moments outermost."""
    if seed is not None and isinstance(cfg, dict):
        cfg = dict(cfg, seed=int(seed))
    validate_config(cfg)
    seed = int(cfg["seed"])
    name = name or cfg.get("name", "config")
    horizon = float(cfg.get("horizon", 1e6))
    n_rep = int(cfg.get("n_replicates", 1000))
    scales = _config_scales(cfg)
    flt = cfg["filters"]
    xi = frequency_from_seed(seed) if flt.get("xi_from_seed") or "xi" not in flt else float(flt["xi"])
    selfsim, intensity, dist = _config_process(cfg, horizon)
    estimator = cfg["estimator"]
    pr = cfg["process"]
    label = pr.get("label", pr["kind"])
    oracle_mc = int(cfg.get("oracle_mc", 20_000))

    if selfsim is not None and estimator != "path":
        raise ConfigError([("/estimator", "self-similar processes need the 'path' estimator")])
    if selfsim is None and estimator == "path":
        raise ConfigError([("/estimator", "the 'path' estimator is for self-similar processes")])
    if selfsim is not None and any("p2" in m for m in cfg["moments"]):
        raise ConfigError([("/moments", "second-order moments are only implemented for point processes")])
    if estimator == "pointwise" and any("p2" in m for m in cfg["moments"]):
        raise ConfigError([("/moments", "second-order moments use the invariant estimator")])

    pattern = None
    if selfsim is None and estimator == "invariant":
        pattern = _realization(seed, "config", intensity, dist)
        mode = pr.get("sgn", "none")
        if mode != "none":
            pattern = sgn_transform(pattern, absolute=(mode == "absolute"))
    t_eval = float(cfg.get("t", 0.5 * horizon))

    jobs = [(j, m, i, s) for j, m in enumerate(cfg["moments"]) for i, s in enumerate(scales)]

    def run(job):
        j, m, i, s = job
        p = float(m["p"])
        f = GaborFilter(s, xi)
        rung_seed = sub_seed(seed, "config", j, i)
        if "p2" in m:
            p2, c, L = float(m["p2"]), float(m.get("c", 1.0)), float(m.get("L", 0.0))
            f2 = GaborFilter(c * s, L / (c * s))
            est = second_order_invariant(f, p, f2, p2, pattern)
            norm = s ** (p2 + 1)
            K = predict_second_order_K(p, p2, c, L).value
            pred = K * m_lambda(intensity, 1).value * dist.abs_moment(p * p2) * norm
            return make_row(label, p, s, xi, est, pred, norm, p2=p2, s2=f2.scale, xi2=f2.freq)
        if selfsim is not None:
            est = first_order_invariant_path(f, p, selfsim, n_rep, rung_seed)
            norm = s ** (selfsim.exponent * p)
            pred = None
            if oracle_mc > 0 or isinstance(selfsim, FBM):
                pred = predict_selfsim(selfsim, p, L=s * xi, n_mc=max(oracle_mc, 2), seed=rung_seed + 1).value * norm
            return make_row(label, p, s, xi, est, pred, norm)
        norm = s * window_pnorm(BUMP, p)
        if estimator == "pointwise":
            halfwidth = float(cfg.get("halfwidth", 0.0))

            def gen(rng):
                return attach_charges(simulate_inhomogeneous(intensity, rng), dist, rng)

            est = first_order_pointwise(f, p, gen, t_eval, n_rep, rung_seed, halfwidth=halfwidth)
            lam = float(intensity.rate(t_eval))
        else:
            est = first_order_invariant(f, p, pattern)
            lam = m_lambda(intensity, 1).value
        moment = 1.0 if pr.get("sgn", "none") != "none" else dist.abs_moment(p)
        return make_row(label, p, s, xi, est, lam * moment * norm, norm)

    rows = ordered_map(run, jobs)
    checks = []
    if "check" in cfg:
        tol = float(cfg["check"]["relative_tolerance"])
        for j, m in enumerate(cfg["moments"]):
            block = rows[j * len(scales) : (j + 1) * len(scales)]
            fin = min(block, key=lambda r: r["s"])
            if fin["predicted"] is not None:
                checks.append(relative_check(f"moment{j}_finest_to_prediction", fin["estimate"], fin["predicted"], tol))
    info = {"config": cfg, "xi": xi, "horizon": horizon, "estimator": estimator}
    return ExperimentResult(name, seed, rows, checks, info)
