"""Exact null distribution of the supremum statistic.

The event {S_n(s) <= lam} equals the event that every uniform order
statistic U_(i) stays inside an interval [a_i, b_i].  The containment
probability is computed by a forward recursion over the merged breakpoints:
the state is the number of observations at or below the current point, and
moving to the next breakpoint adds a binomial number of new observations.
Probabilities are carried as a float vector with a separate power-of-two
exponent so that large n cannot underflow.
"""

from __future__ import annotations

import csv
import math
import os
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.optimize import brentq
from scipy.special import gammaln

from .divergence import _order, invert_in_v

N_MAX = 3000
_TAIL_TRIM = 1e-30
_RENORM = 2.0 ** -512


@dataclass(frozen=True)
class OrderStatBand:
    """Bounds a_i <= U_(i) <= b_i for i = 1..n."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self) -> None:
        if self.lower.shape != self.upper.shape or self.lower.ndim != 1:
            raise ValueError("lower and upper must be 1-D arrays of equal length")

    @property
    def n(self) -> int:
        return int(self.lower.size)

    @property
    def feasible(self) -> bool:
        return bool(np.all(self.lower <= self.upper) and np.all(self.upper > 0) and np.all(self.lower < 1))

    def isotonized(self) -> "OrderStatBand":
        return OrderStatBand(
            np.maximum.accumulate(self.lower),
            np.minimum.accumulate(self.upper[::-1])[::-1],
        )

    def contains(self, u_sorted) -> np.ndarray:
        """Elementwise containment check for sorted uniform samples (last axis)."""
        u = np.asarray(u_sorted)
        return np.all((u >= self.lower) & (u <= self.upper), axis=-1)


def band_constraints(n: int, s, lam: float) -> OrderStatBand:
    """Order-statistic band equivalent to {S_n(s) <= lam}."""
    if n < 1:
        raise ValueError("n must be at least 1")
    if not lam > 0:
        raise ValueError("lambda must be positive")
    order = _order(s)
    levels = np.arange(n + 1) / n
    lo, hi = invert_in_v(order, levels, lam)
    a = np.array(lo[1:], dtype=float)
    b = np.array(hi[:-1], dtype=float)
    if order.s < 1 and n >= 2:
        # The restricted range drops the gaps before X_(1) and after X_(n).
        a[-1] = 0.0
        b[0] = 1.0
    elif order.s < 1:
        b[0] = 1.0
    return OrderStatBand(a, b).isotonized()


def _log_binom_table(n: int) -> np.ndarray:
    return gammaln(np.arange(n + 1, dtype=float) + 1.0)


def band_probability(band: OrderStatBand, *, log: bool = False) -> float:
    """P(a_i <= U_(i) <= b_i for all i) for n uniform order statistics."""
    a = np.asarray(band.lower, dtype=float)
    b = np.asarray(band.upper, dtype=float)
    n = a.size
    if n == 0:
        return 0.0 if log else 1.0
    if np.any(a > b) or np.any(b <= 0.0) or np.any(a >= 1.0):
        return -np.inf if log else 0.0
    a_sorted = np.sort(a)
    b_sorted = np.sort(b)
    points = np.unique(np.concatenate([a, b]))
    points = points[(points > 0.0) & (points < 1.0)]
    points = np.append(points, 1.0)
    G = _log_binom_table(n)

    q = np.array([1.0])  # distribution of the count at or below t, on [k0, k0 + len(q))
    k0 = 0
    exponent = 0
    t = 0.0
    for t_new in points:
        remaining = n - np.arange(k0, k0 + q.size)
        p = (t_new - t) / (1.0 - t)
        p = min(max(p, 0.0), 1.0)
        # Allowed counts at t_new: at least #{b_i <= t_new}, fewer than i obs below a_i.
        need = int(np.searchsorted(b_sorted, t_new, side="right"))
        cap = int(np.searchsorted(a_sorted, t_new, side="left"))
        if t_new >= 1.0:
            need = cap = n
        lo_k = max(need, k0)
        hi_k = min(cap, n)
        if lo_k > hi_k:
            return -np.inf if log else 0.0
        q_new = _advance(q, k0, remaining, p, n, lo_k, hi_k, G)
        if q_new.size == 0 or not np.any(q_new > 0):
            return -np.inf if log else 0.0
        # Trim negligible tails.
        big = q_new.max()
        nz = np.nonzero(q_new >= big * _TAIL_TRIM)[0]
        q = q_new[nz[0] : nz[-1] + 1]
        k0 = lo_k + int(nz[0])
        if big < _RENORM:
            m, e = math.frexp(big)
            q = q / math.ldexp(1.0, e)
            exponent += e
        t = t_new
    total = float(q.sum())
    if log:
        return math.log(total) + exponent * math.log(2.0) if total > 0 else -np.inf
    return math.ldexp(total, exponent)


def _advance(q, k0, remaining, p, n, lo_k, hi_k, G):
    """Convolve the count distribution with binomial increments and clip to [lo_k, hi_k]."""
    width = hi_k - lo_k + 1
    out = np.zeros(width)
    if p >= 1.0:
        # Every remaining observation falls below t_new.
        if lo_k <= n <= hi_k:
            out[n - lo_k] = q.sum()
        return out
    if p <= 0.0:
        ks = np.arange(k0, k0 + q.size)
        sel = (ks >= lo_k) & (ks <= hi_k)
        out[ks[sel] - lo_k] = q[sel]
        return out
    lp, l1p = math.log(p), math.log1p(-p)
    max_rem = int(remaining.max())
    mu = max_rem * p
    d_max = min(max_rem, hi_k - k0, int(math.ceil(mu + 12.0 * math.sqrt(mu) + 40.0)))
    if d_max < 0:
        return out
    d = np.arange(d_max + 1)
    ks = np.arange(k0, k0 + q.size)
    rem = remaining[:, None]
    valid = d[None, :] <= rem
    with np.errstate(invalid="ignore"):
        logpmf = (
            G[rem] - G[d[None, :]] - G[np.maximum(rem - d[None, :], 0)]
            + d[None, :] * lp + (rem - d[None, :]) * l1p
        )
    w = np.where(valid, np.exp(logpmf), 0.0) * q[:, None]
    target = ks[:, None] + d[None, :]
    sel = (target >= lo_k) & (target <= hi_k) & valid
    return np.bincount(target[sel] - lo_k, weights=w[sel], minlength=width)


def _check_n(n: int, n_max: int) -> None:
    if not (1 <= n <= n_max):
        raise ValueError(f"exact null distribution available for 1 <= n <= {n_max}, got n={n}")


def cdf_exact(n: int, s, lam: float, n_max: int = N_MAX) -> float:
    """P(S_n(s) <= lam) under uniform data."""
    _check_n(n, n_max)
    if lam == np.inf:
        return 1.0
    return band_probability(band_constraints(n, s, lam))


def quantile_exact(n: int, s, alpha: float, n_max: int = N_MAX, rtol: float = 1e-9) -> float:
    """Upper alpha quantile: the smallest lam with P(S_n(s) <= lam) >= 1 - alpha."""
    _check_n(n, n_max)
    if not (0.0 < alpha < 1.0):
        raise ValueError("alpha must lie in (0, 1)")
    target = 1.0 - alpha

    def f(lam: float) -> float:
        return cdf_exact(n, s, lam, n_max) - target

    lo, hi = 1e-8, 10.0 + math.log(n)
    while f(lo) >= 0:
        lo /= 10.0
        if lo < 1e-12:
            return lo
    while f(hi) < 0:
        lo, hi = hi, 2.0 * hi
    return float(brentq(f, lo, hi, rtol=rtol, xtol=1e-300))


class QuantileCache:
    """CSV-backed memo of exact quantiles with rows ``n,s,alpha,q``."""

    def __init__(self, path: str | os.PathLike | None):
        self.path = None if path is None else Path(path)
        self._table: dict[tuple[int, float, float], float] = {}
        if self.path is not None and self.path.exists():
            with open(self.path, newline="") as fh:
                for row in csv.DictReader(fh):
                    key = (int(row["n"]), float(row["s"]), float(row["alpha"]))
                    self._table[key] = float(row["q"])

    def get(self, n: int, s, alpha: float) -> float:
        key = (int(n), float(_order(s).s), float(alpha))
        if key not in self._table:
            self._table[key] = quantile_exact(n, s, alpha)
            self._append(key)
        return self._table[key]

    def _append(self, key) -> None:
        if self.path is None:
            return
        self.path.parent.mkdir(parents=True, exist_ok=True)
        new = not self.path.exists()
        with open(self.path, "a", newline="") as fh:
            if new:
                fh.write("n,s,alpha,q\n")
            n, s, alpha = key
            fh.write(f"{n},{s:.17g},{alpha:.17g},{self._table[key]:.17g}\n")


def quantile(n: int, s, alpha: float, method: str = "exact", n_max: int = N_MAX,
             cache: QuantileCache | None = None) -> tuple[float, str]:
    """Critical value and the method actually used (exact falls back above n_max)."""
    from .asymptotic import quantile_asymptotic

    if method == "exact" and n > n_max:
        warnings.warn(f"n={n} exceeds the exact limit {n_max}; using the asymptotic law", RuntimeWarning)
        method = "asymptotic"
    if method == "exact":
        q = cache.get(n, s, alpha) if cache is not None else quantile_exact(n, s, alpha, n_max)
        return q, "exact"
    if method == "asymptotic":
        return quantile_asymptotic(n, s, alpha), "asymptotic"
    raise ValueError(f"unknown method {method!r}")
