import math

import numpy as np
import pytest

from phidiv.alternatives import (
    Mixture,
    MixtureParams,
    PoissonBoundary,
    TildeF0,
    Uniform,
    UserGrid,
    alt_quantile,
    kl_consistency_integral,
    consistency_integral,
    efficacy,
    boundary_limit_sampler,
    natural_parameter,
    rho_star,
    sup_ratio_exceeds,
    sup_ratio_tail,
)


@pytest.mark.parametrize(
    "alt",
    [Uniform(), PoissonBoundary(1.0), PoissonBoundary(2.0), PoissonBoundary(-1.0), TildeF0(), Mixture(0.1, 2.0)],
)
def test_quantile_round_trip(alt):
    p = np.array([1e-6, 0.01, 0.3, 0.7, 0.999])
    q = alt.quantile(p)
    ok = q > 0  # deep quantiles of the boundary family underflow; see the log-space test
    assert np.allclose(alt.cdf(q[ok]), p[ok], rtol=1e-9, atol=1e-14)


@pytest.mark.parametrize("s", [1.0, 2.0, -1.0])
def test_log_quantile_round_trip(s):
    alt = PoissonBoundary(s)
    p = np.array([1e-12, 1e-6, 0.5])
    lx, _ = alt.log_quantile(p)
    assert np.allclose(np.exp(alt._logcdf_from_log(lx, s)), p, rtol=1e-9)


def test_boundary_family_closed_forms():
    x = np.array([0.01, 0.2, 0.8])
    assert np.allclose(PoissonBoundary(1.0).cdf(x), 1 / (1 + np.log(1 / x)))
    assert np.allclose(TildeF0().cdf(x), np.exp(1 - 1 / x))
    with pytest.raises(ValueError):
        PoissonBoundary(0.5)


def test_sampling_reaches_below_double_range():
    smp = PoissonBoundary(1.0).sample(np.random.default_rng(0), 10_000)
    assert smp.logs.min() < -745  # smallest positive double is about exp(-745)


def test_mixture_sampler_matches_cdf():
    from scipy.stats import kstest

    alt = Mixture(0.2, 1.5)
    smp = alt.sample(np.random.default_rng(1), 5000)
    assert kstest(smp.values, alt.cdf).pvalue > 1e-3


def test_user_grid(tmp_path):
    path = tmp_path / "g.csv"
    path.write_text("x,F\n0.2,0.1\n0.5,0.6\n")
    g = UserGrid.from_csv(path)
    assert g.cdf(0.35) == pytest.approx(0.35)
    with pytest.raises(ValueError):
        UserGrid(np.array([0.5, 0.2]), np.array([0.1, 0.2]))


@pytest.mark.parametrize("s,expected", [(1.5, 1 / 1.5), (2.0, 0.5), (-1.0, 0.5), (-2.0, 1 / 3)])
def test_natural_parameter_boundary_family(s, expected):
    assert natural_parameter(s, PoissonBoundary(s)).value == pytest.approx(expected, abs=1e-6)


def test_natural_parameter_other_cases():
    assert natural_parameter(0.0, TildeF0()).value == pytest.approx(1.0, abs=1e-6)
    assert natural_parameter(1.0, Uniform()).value == pytest.approx(0.0, abs=1e-12)
    assert not natural_parameter(2.0, PoissonBoundary(1.0)).finite


def test_integrals():
    assert consistency_integral(2.0, Uniform()).value == pytest.approx(math.pi, rel=1e-4)
    assert not consistency_integral(2.0, PoissonBoundary(2.0)).finite
    assert kl_consistency_integral(Uniform()).value == pytest.approx(1.0, rel=1e-4)
    assert not kl_consistency_integral(PoissonBoundary(1.0)).finite


def test_efficacy_and_boundary():
    assert efficacy(0.5, 0.0) == 0.0
    assert efficacy(0.999, 1.0) == pytest.approx(1.0, rel=1e-2)
    assert rho_star(0.75) == pytest.approx(0.25)
    assert rho_star(0.6) == pytest.approx(0.1)
    assert rho_star(0.9) == pytest.approx((1 - math.sqrt(0.1)) ** 2)
    with pytest.raises(ValueError):
        rho_star(0.5)
    p = MixtureParams(10_000, 0.5, 0.2)
    assert p.eps == pytest.approx(0.01) and p.mu == pytest.approx(math.sqrt(0.4 * math.log(10_000)))


def test_sup_ratio_series_against_simulation():
    rng = np.random.default_rng(4)
    xs = [1.5, 3.0]
    mc = sup_ratio_exceeds(xs, rng, 40_000)
    for x, p in zip(xs, mc):
        ref = sup_ratio_tail(x)
        assert abs(p - ref) < 4 * math.sqrt(ref * (1 - ref) / 40_000)


def test_limit_sampler_support():
    rng = np.random.default_rng(2)
    assert boundary_limit_sampler(2.0, rng, size=2000).min() >= 0.5
    with pytest.raises(ValueError):
        boundary_limit_sampler(0.5, rng)


def test_alt_quantile_validates():
    with pytest.raises(ValueError):
        alt_quantile(Uniform(), 1.0)
