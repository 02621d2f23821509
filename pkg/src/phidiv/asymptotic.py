"""Large-sample null laws.

For the supremum statistic, ``n S_n(s) - r_n`` tends to a double-exponential
law with cdf ``exp(-4 exp(-x))``.  For the integral statistic, ``n T_n(s)``
tends to A^2/2, where A^2 = sum_j Z_j^2 / (j (j+1)) is the weighted
chi-square series sampled below.  Logs are natural and iterated: the
"log log n" below is ``log(log(n))``.
"""

from __future__ import annotations

import math
import os
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .divergence import _order

MIN_N = 16
AD_TRUNCATION = 10_000
CACHE_TRUNCATION = 1_000
CACHE_DRAWS = 1_000_000
CACHE_SEED = 20240601


@dataclass(frozen=True)
class CenteringConstants:
    n: float
    r_n: float
    b_n: float
    c_n: float


def centering(n: float) -> CenteringConstants:
    """Centering r_n and the auxiliary constants b_n, c_n.

    Real-valued n is accepted.  The constants need log log log n, so n must
    exceed e; values below 16 are allowed with a warning.
    """
    n = float(n)
    if not n > math.e:
        raise ValueError("centering constants need n > e")
    if n < MIN_N:
        warnings.warn(f"n={n:g} is below {MIN_N}; centering constants are unreliable", RuntimeWarning)
    l2 = math.log(math.log(n))
    l3 = math.log(l2)
    half_log_4pi = 0.5 * math.log(4.0 * math.pi)
    return CenteringConstants(
        n=n,
        r_n=l2 + 0.5 * l3 - half_log_4pi,
        b_n=math.sqrt(2.0 * l2),
        c_n=2.0 * l2 + 0.5 * l3 - half_log_4pi,
    )


def ev4_cdf(x):
    """exp(-4 exp(-x))."""
    out = np.exp(-4.0 * np.exp(-np.asarray(x, dtype=float)))
    return out[()] if out.ndim == 0 else out


def ev4_quantile(p):
    p_arr = np.asarray(p, dtype=float)
    if np.any((p_arr <= 0) | (p_arr >= 1)):
        raise ValueError("p must lie in (0, 1)")
    out = -np.log(-np.log(p_arr) / 4.0)
    return out[()] if out.ndim == 0 else out


def ev4_sf(x):
    """1 - ev4_cdf(x), accurate in the upper tail."""
    out = -np.expm1(-4.0 * np.exp(-np.asarray(x, dtype=float)))
    return out[()] if out.ndim == 0 else out


def _check_limit_range(s) -> float:
    s = _order(s).s
    if not (-1.0 <= s <= 2.0):
        raise ValueError("asymptotic p-values are only available for -1 <= s <= 2")
    return s


def pvalue_asymptotic(n: int, s, stat) -> float:
    """Upper-tail p-value of the supremum statistic from the double-exponential limit."""
    _check_limit_range(s)
    value = float(getattr(stat, "statistic", stat))
    return float(ev4_sf(n * value - centering(n).r_n))


def quantile_asymptotic(n: int, s, alpha: float) -> float:
    _check_limit_range(s)
    if not (0.0 < alpha < 1.0):
        raise ValueError("alpha must lie in (0, 1)")
    return float((centering(n).r_n + ev4_quantile(1.0 - alpha)) / n)


def ad_limit_sampler(rng: np.random.Generator, truncation: int = AD_TRUNCATION, size: int | None = None,
                     chunk: int = 2_000_000):
    """Draws of sum_{j<=J} Z_j^2 / (j (j+1)) + 1/(J+1).

    The constant replaces the omitted tail by its mean.  With ``size=None``
    a single float is returned.
    """
    if truncation < 1:
        raise ValueError("truncation must be at least 1")
    j = np.arange(1, truncation + 1, dtype=float)
    w = 1.0 / (j * (j + 1.0))
    m = 1 if size is None else int(size)
    out = np.empty(m)
    rows = max(1, chunk // truncation)
    for start in range(0, m, rows):
        stop = min(m, start + rows)
        z = rng.standard_normal((stop - start, truncation))
        out[start:stop] = (z * z) @ w
    out += 1.0 / (truncation + 1.0)
    return float(out[0]) if size is None else out


@dataclass
class ADCache:
    """Sorted draws of A^2/2 for integral-statistic p-values."""

    draws: np.ndarray
    seed: int
    truncation: int

    @classmethod
    def build(cls, size: int = CACHE_DRAWS, seed: int = CACHE_SEED, truncation: int = CACHE_TRUNCATION) -> "ADCache":
        rng = np.random.default_rng(seed)
        draws = 0.5 * ad_limit_sampler(rng, truncation, size)
        return cls(np.sort(draws), seed, truncation)

    def save(self, path: str | os.PathLike) -> None:
        np.savez(path, draws=self.draws, seed=self.seed, truncation=self.truncation)

    @classmethod
    def load(cls, path: str | os.PathLike) -> "ADCache":
        with np.load(path) as f:
            return cls(np.asarray(f["draws"]), int(f["seed"]), int(f["truncation"]))

    @classmethod
    def load_or_build(cls, path: str | os.PathLike | None, **kwargs) -> "ADCache":
        if path is not None and Path(path).exists():
            cache = cls.load(path)
            wanted = {k: kwargs[k] for k in ("seed", "truncation") if k in kwargs}
            if all(getattr(cache, k) == v for k, v in wanted.items()) and cache.draws.size >= kwargs.get("size", 0):
                return cache
        cache = cls.build(**kwargs)
        if path is not None:
            Path(path).parent.mkdir(parents=True, exist_ok=True)
            cache.save(path)
        return cache

    def sf(self, x: float) -> tuple[float, float]:
        """Empirical P(A^2/2 > x) and its binomial standard error."""
        m = self.draws.size
        p = (m - np.searchsorted(self.draws, x, side="right")) / m
        return float(p), float(math.sqrt(p * (1.0 - p) / m))


def tn_pvalue_asymptotic(n: int, s, stat, cache: ADCache) -> tuple[float, float]:
    """(p-value, Monte Carlo standard error) for the integral statistic."""
    if _order(s).s > 2:
        raise ValueError("the integral-statistic limit is established for s <= 2 only")
    value = float(getattr(stat, "statistic", stat))
    return cache.sf(n * value)
