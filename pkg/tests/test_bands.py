import math

import numpy as np
import pytest
from scipy import stats

from phidiv.bands import band, band_covers, band_from_quantile
from phidiv.exact import quantile_exact
from phidiv.statistics import sn


def test_single_observation_band():
    b = band([0.4], 1.0, 0.1)
    assert np.allclose(b.lower, [0.0, 0.05], atol=1e-9)
    assert np.allclose(b.upper, [0.95, 1.0], atol=1e-9)


@pytest.mark.parametrize("s", [-1.0, 0.5, 1.0, 2.0])
def test_duality_with_statistic(s):
    rng = np.random.default_rng(7)
    x = np.sort(rng.random(25))
    q = quantile_exact(25, s, 0.1)
    b = band_from_quantile(x, s, q, alpha=0.1)
    for _ in range(60):
        a, c = rng.uniform(0.6, 1.6, size=2)
        F = stats.beta(a, c).cdf
        inside = band_covers(b, F)
        assert inside == (sn(s, F(x)).statistic <= q * (1 + 1e-12)) or abs(sn(s, F(x)).statistic - q) < 1e-9


def test_band_shape_and_export(tmp_path):
    x = np.array([0.1, 0.3, 0.35, 0.9])
    b = band(x, 0.5, 0.2)
    assert np.all(np.diff(b.lower) >= 0) and np.all(np.diff(b.upper) >= 0)
    assert np.all(b.lower <= b.upper)
    lo, hi = b.evaluate([0.05, 0.95])
    assert lo[0] == b.lower[0] and hi[1] == b.upper[-1]
    b.to_csv(tmp_path / "b.csv")
    rows = (tmp_path / "b.csv").read_text().splitlines()
    assert rows[0] == "x_left,x_right,L,U" and len(rows) == 6
    b.to_json(tmp_path / "b.json")


def test_small_order_needs_two_points():
    with pytest.raises(ValueError):
        band([0.5], 0.5, 0.1)


def test_ties_use_general_path():
    import warnings

    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        b = band([0.2, 0.2, 0.6, 0.7], 1.0, 0.1)
    assert b.breakpoints.size == 3 and math.isfinite(b.q)
