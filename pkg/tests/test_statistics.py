import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from phidiv.statistics import (
    Sample,
    TiesWarning,
    hc_star,
    segment_integral,
    sn,
    sn_plus,
    sn_unrestricted,
    sn_ur_minus,
    sn_ur_plus,
    tn,
)

from .conftest import S_GRID
from .oracles import hc_oracle, kernel_direct, sup_oracle, tn_oracle


def test_examples():
    assert sn(2, [0.5]).statistic == pytest.approx(0.5)
    assert tn(2, [0.5]).statistic == pytest.approx(math.log(2) - 0.5, rel=1e-13)
    assert sn_plus(1, [0.1, 0.6]).statistic == pytest.approx(0.5108256237659907, rel=1e-12)
    assert hc_star([0.1, 0.6], alpha0=1.0).statistic == pytest.approx(1.8856180831641267, rel=1e-12)
    assert sn_unrestricted(0.5, [0.5]).statistic == pytest.approx(1.1715728752538097, rel=1e-12)


def test_single_point_with_small_order_uses_point_value():
    x = 0.3
    assert sn(0.5, [x]).statistic == pytest.approx(float(kernel_direct(0.5, 1.0, x)))


def test_plotting_positions_give_small_statistic():
    n = 200
    x = (np.arange(1, n + 1) - 0.5) / n
    for s in S_GRID:
        assert n * sn(s, x).statistic < 2.0


def test_sample_validation():
    for bad in ([], [0.0, 0.5], [0.5, 1.0], [float("nan")], [1.2]):
        with pytest.raises(ValueError):
            Sample.from_values(bad)
    smp = Sample.from_values([0.7, 0.2])
    assert smp.n == 2 and np.all(np.diff(smp.values) > 0)


def test_ties_warn_and_use_cumulative_counts():
    with pytest.warns(TiesWarning):
        v = sn(1, [0.2, 0.2, 0.7]).statistic
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        assert v == pytest.approx(sup_oracle(1, [0.2, 0.2, 0.7], step=1e-4))


@pytest.mark.parametrize("s", S_GRID)
def test_reflection_swaps_sides(s):
    rng = np.random.default_rng(3)
    x = rng.random(15)
    smp = Sample.from_values(x)
    # sup over the whole range for s >= 1 is reflection invariant up to left/right limits
    if s >= 1:
        assert sn(s, smp).statistic == pytest.approx(sn(s, smp.reflect()).statistic, rel=1e-10)
    assert tn(s, smp).statistic == pytest.approx(tn(s, smp.reflect()).statistic, rel=1e-9)


def test_unrestricted_range_checks():
    with pytest.raises(ValueError):
        sn_unrestricted(1.0, [0.2, 0.5])
    x = [0.1, 0.35, 0.8]
    both = sn_unrestricted(0.5, x).statistic
    assert both == pytest.approx(max(sn_ur_plus(0.5, x).statistic, sn_ur_minus(0.5, x).statistic), rel=1e-12)


def test_hc_star_errors():
    with pytest.raises(ValueError):
        hc_star([0.2, 0.5], alpha0=0.2)
    with pytest.raises(ValueError):
        hc_star([0.2, 0.5], alpha0=1.5)


def test_sn_plus_empty_region_is_zero():
    assert sn_plus(1, [0.7, 0.9]).statistic == 0.0


samples = st.lists(st.floats(0.001, 0.999), min_size=2, max_size=12, unique=True)


@settings(max_examples=40, deadline=None)
@given(st.sampled_from(S_GRID), samples)
def test_sup_statistics_match_grid_oracle(s, x):
    for kind, stat in (("two", sn(s, x)), ("plus", sn_plus(s, x))):
        ref = sup_oracle(s, x, step=1e-3, kind=kind)
        assert stat.statistic == pytest.approx(ref, rel=1e-8, abs=1e-14)


@settings(max_examples=30, deadline=None)
@given(st.sampled_from(S_GRID), samples)
def test_integral_statistic_matches_quadrature(s, x):
    assert tn(s, x).statistic == pytest.approx(tn_oracle(s, x), rel=1e-8, abs=1e-14)


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(0.001, 0.999), min_size=4, max_size=12, unique=True))
def test_hc_star_matches_grid_oracle(x):
    assert hc_star(x).statistic == pytest.approx(hc_oracle(x, step=1e-3), rel=1e-8)


@pytest.mark.parametrize("s", [0.0, 1.0, 2.0, 0.5, -1.0, 3.0])
def test_segment_integral(s):
    from scipy.integrate import quad

    for c, a, b in ((0.0, 0.0, 0.2), (0.3, 0.2, 0.6), (1.0, 0.7, 1.0), (0.5, 0.4, 0.4)):
        if s <= 0 and (c in (0.0, 1.0)):
            continue
        ref = quad(lambda t: float(kernel_direct(s, c, t)), a, b, epsabs=0, epsrel=1e-12)[0] if b > a else 0.0
        assert segment_integral(s, c, a, b) == pytest.approx(ref, rel=1e-9, abs=1e-15)


def test_log_space_sample_far_below_double_range():
    smp = Sample.from_logs(np.array([-1e5, -2.0, -0.5]))
    v = sn(1, smp)
    assert v.finite and v.statistic > 1e4


def test_adjacent_doubles_are_not_ties():
    a = 0.001
    x = [a, float(np.nextafter(a, 1.0)), 0.25, 0.5]
    with warnings.catch_warnings():
        warnings.simplefilter("error", TiesWarning)
        assert hc_star(x).statistic == pytest.approx(hc_oracle(x, step=1e-3), rel=1e-8)
        assert sn(1, x).statistic == pytest.approx(sup_oracle(1, x, step=1e-3), rel=1e-8)
