import numpy as np
import pytest

from scatmoments.fitting import TooFewPointsError, _parse_where, fit_loglog, fit_slope


def test_exact_power_law():
    s = 2.0 ** -np.arange(1, 9)
    fit = fit_loglog(s, 3.0 * s**2)
    assert fit.slope == pytest.approx(2.0, abs=1e-6)
    assert fit.intercept == pytest.approx(np.log(3.0), abs=1e-6)
    assert fit.r2 == pytest.approx(1.0)


def test_noise_dominated_point_excluded():
    s = 2.0 ** -np.arange(1, 7)
    se = 0.01 * s
    se[2] = 0.5 * s[2]
    fit = fit_loglog(s, s, se)
    assert [x for x, _ in fit.excluded] == [s[2]]
    assert s[2] not in fit.scales
    assert "relative std error" in fit.excluded[0][1]


def test_nonpositive_value_excluded():
    fit = fit_loglog([1, 2, 3, 4, 5], [1, 2, -3, 4, 5])
    assert fit.excluded == [(3.0, "non-positive value")]


def test_too_few_points():
    with pytest.raises(TooFewPointsError):
        fit_loglog([1, 2, 3], [1, 2, 3])


def test_where_parser():
    assert _parse_where("process=poisson, p=1") == [("process", True, "poisson"), ("p", True, "1")]
    assert _parse_where("p != 2 and process == 'bm'") == [("p", False, "2"), ("process", True, "bm")]
    assert _parse_where("") == []
    with pytest.raises(ValueError):
        _parse_where("p > 1")


def test_fit_slope_from_csv(tmp_path):
    path = tmp_path / "rows.csv"
    lines = ["process,p,s,estimate,std_error"]
    for s in (2.0 ** -np.arange(1, 7)).tolist():
        lines.append(f"poisson,1.0,{s!r},{0.01 * s!r},{1e-4 * s!r}")
        lines.append(f"bm,1.0,{s!r},{s ** 0.5!r},")
    path.write_text("\n".join(lines) + "\n")
    assert fit_slope(path, "process=poisson, p=1").slope == pytest.approx(1.0, abs=1e-9)
    assert fit_slope(path, "process=bm").slope == pytest.approx(0.5, abs=1e-9)
    with pytest.raises(KeyError):
        fit_slope(path, "color=red")
