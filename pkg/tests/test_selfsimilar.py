import json
import math

import numpy as np
import pytest
from scipy import linalg

from scatmoments import selfsimilar
from scatmoments.filters import BUMP
from scatmoments.selfsimilar import (
    FBM,
    AlphaStable,
    SamplePath,
    check_scaling_relation,
    fgn,
    fgn_autocovariance,
    riemann_stieltjes,
    simulate_alpha_stable,
    simulate_fbm,
    stable_variates,
)


@pytest.mark.parametrize("H", [0.2, 0.5, 0.75, 0.9])
def test_fgn_lag1_correlation(H):
    x = fgn(H, 256, 4000, np.random.default_rng(1))
    lag1 = np.mean(x[:, :-1] * x[:, 1:])
    var = np.mean(x * x)
    expected = 2.0 ** (2 * H - 1) - 1.0
    assert var == pytest.approx(1.0, abs=0.02)
    assert lag1 / var == pytest.approx(expected, abs=0.01)


def test_fgn_autocovariance_closed_form():
    g = fgn_autocovariance(0.5, 5)
    np.testing.assert_allclose(g, [1, 0, 0, 0, 0], atol=1e-15)


@pytest.mark.parametrize("H", [0.3, 0.8])
def test_circulant_and_cholesky_share_covariance(H):
    n = 16
    cov = linalg.toeplitz(fgn_autocovariance(H, n))
    for method in ("circulant", "cholesky"):
        x = fgn(H, n, 40000, np.random.default_rng(2), method=method)
        np.testing.assert_allclose(np.cov(x.T), cov, atol=0.035)


def test_cholesky_fallback_on_negative_eigenvalue(monkeypatch):
    def boom(H, n):
        raise selfsimilar.EmbeddingError("negative")

    monkeypatch.setattr(selfsimilar, "_circulant_sqrt_eigs", boom)
    with pytest.warns(UserWarning, match="Cholesky"):
        x = fgn(0.7, 8, 5, np.random.default_rng(3))
    assert x.shape == (5, 8)


def test_fgn_rejects_bad_hurst():
    with pytest.raises(ValueError):
        fgn(1.0, 8, 1, 0)
    with pytest.raises(ValueError):
        FBM(0.0)


@pytest.mark.parametrize("alpha", [1.2, 1.5, 1.8, 2.0])
def test_stable_characteristic_function(alpha):
    x = stable_variates(alpha, 200000, np.random.default_rng(4))
    for theta in (0.3, 1.0, 2.0):
        c = np.cos(theta * x)
        se = c.std(ddof=1) / math.sqrt(c.size)
        assert abs(c.mean() - math.exp(-(theta**alpha))) < 4 * se
        # symmetry: the imaginary part vanishes
        s = np.sin(theta * x)
        assert abs(s.mean()) < 4 * s.std(ddof=1) / math.sqrt(s.size)


def test_stable_alpha2_normalizations():
    rng = np.random.default_rng(5)
    unit = AlphaStable(2.0).increments(1, 1.0, 200000, rng)
    brown = AlphaStable(2.0, "brownian").increments(1, 1.0, 200000, rng)
    assert unit.var() == pytest.approx(2.0, rel=0.02)
    assert brown.var() == pytest.approx(1.0, rel=0.02)


def test_stable_validation():
    with pytest.raises(ValueError):
        AlphaStable(1.0)
    with pytest.raises(ValueError):
        AlphaStable(1.5, "other")


def test_exponents():
    assert FBM(0.3).exponent == 0.3
    assert AlphaStable(1.5).exponent == pytest.approx(2 / 3)


@pytest.mark.parametrize("process", [FBM(0.3), FBM(0.5), FBM(0.8), AlphaStable(1.5)], ids=repr)
@pytest.mark.parametrize("s", [0.05, 4.0])
def test_scaling_identity_ks(process, s):
    _, _, pvalue = check_scaling_relation(process, lambda u: BUMP(u / s) * np.cos(3.0 * u), s, 4000, 6, n_grid=256)
    assert pvalue > 1e-3


def test_scaling_identity_zero_integrand():
    left, right, pvalue = check_scaling_relation(FBM(0.5), lambda u: 0.0 * u, 1.0, 10, 0, n_grid=8)
    assert pvalue == 1.0 and not left.any() and not right.any()


def test_riemann_stieltjes_left_endpoint_on_ramp():
    n = 1000
    u = np.arange(n) / n
    inc = np.full(n, 1.0 / n)
    assert riemann_stieltjes(u**2, inc) == pytest.approx((n - 1) * (2 * n - 1) / (6 * n * n), rel=1e-12)


def test_sample_paths(tmp_path):
    path = simulate_fbm(0.7, 64, 0.01, np.random.default_rng(7))
    assert path.values[0] == 0.0 and path.values.size == 65
    np.testing.assert_allclose(np.cumsum(path.increments), path.values[1:], atol=1e-12)
    out = tmp_path / "fbm.csv"
    path.to_csv(out)
    assert out.read_text().splitlines()[0] == "t,value"
    meta = json.loads((tmp_path / "fbm.csv.json").read_text())
    assert meta == {"kind": "fbm", "H": 0.7, "step": 0.01, "n": 64}
    st = simulate_alpha_stable(1.5, 10, 0.1, 8)
    assert st.times[-1] == pytest.approx(1.0)


def test_sample_path_validation():
    with pytest.raises(ValueError):
        simulate_fbm(0.5, 100, 0.1, 0)
    with pytest.raises(ValueError):
        SamplePath(0.1, [1.0, 2.0], FBM(0.5))
    with pytest.raises(ValueError):
        SamplePath(0.0, [0.0, 2.0], FBM(0.5))


def test_fbm_variance_scales_with_step():
    x = FBM(0.3).increments(4, 0.01, 50000, np.random.default_rng(9))
    assert x.var() == pytest.approx(0.01**0.6, rel=0.03)
