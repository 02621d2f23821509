"""Supremum and integral statistics of the empirical cdf against the uniform.

All suprema are computed exactly by enumerating segment endpoints: the
empirical cdf is constant on each gap between order statistics and
``K_s(c, .)`` is convex, so its maximum over a gap sits at one of the two
ends (the right end as a left limit).  Integrals use closed-form
antiderivatives segment by segment.

The private ``*_core`` functions operate on arrays whose last axis runs over
distinct sorted points; the harness feeds them 2-D batches directly.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.special import xlogy

from .divergence import DivergenceOrder, _order, kernel, kernel_log


class TiesWarning(UserWarning):
    """Raised when a sample contains repeated values."""


@dataclass(frozen=True)
class Sample:
    """Sorted observations in (0, 1) together with their logs.

    ``logs`` and ``log1m`` are the authoritative representation; ``values``
    may underflow to 0 for points below the double range.
    """

    logs: np.ndarray
    log1m: np.ndarray
    values: np.ndarray = field(repr=False)

    @classmethod
    def from_values(cls, x) -> "Sample":
        x = np.sort(np.asarray(x, dtype=float).ravel())
        if x.size == 0:
            raise ValueError("sample is empty")
        if not np.all(np.isfinite(x)):
            raise ValueError("sample contains non-finite values")
        if x[0] <= 0.0 or x[-1] >= 1.0:
            raise ValueError("sample values must lie strictly inside (0, 1)")
        return cls(np.log(x), np.log1p(-x), x)

    @classmethod
    def from_logs(cls, logx) -> "Sample":
        lx = np.sort(np.asarray(logx, dtype=float).ravel())
        if lx.size == 0:
            raise ValueError("sample is empty")
        if np.any(np.isnan(lx)) or lx[0] == -np.inf or lx[-1] >= 0.0:
            raise ValueError("log-values must be finite and negative")
        x = np.exp(lx)
        return cls(lx, np.log1p(-x), x)

    @property
    def n(self) -> int:
        return int(self.logs.size)

    def reflect(self) -> "Sample":
        """The sample 1 - X (computed from the values, not the logs)."""
        return Sample.from_values(1.0 - self.values)

    def distinct(self):
        """(log y, log(1-y), y, cumulative counts) over distinct values."""
        keep = np.ones(self.n, dtype=bool)
        # Distinct doubles can share a log; underflowed values can share 0.
        keep[:-1] = (self.logs[1:] != self.logs[:-1]) | (self.values[1:] != self.values[:-1])
        if not np.all(keep):
            warnings.warn(
                "sample contains tied values; statistics assume a continuous cdf",
                TiesWarning,
                stacklevel=3,
            )
        cum = np.nonzero(keep)[0] + 1
        return self.logs[keep], self.log1m[keep], self.values[keep], cum


def as_sample(data) -> Sample:
    return data if isinstance(data, Sample) else Sample.from_values(data)


@dataclass(frozen=True)
class StatValue:
    statistic: float
    s: float | None
    kind: str
    n: int

    @property
    def finite(self) -> bool:
        return bool(np.isfinite(self.statistic))

    def __float__(self) -> float:
        return self.statistic


def _levels(cum, n):
    ur = cum / n
    ul = np.concatenate([np.zeros(cum.shape[:-1] + (1,)), cum[..., :-1]], axis=-1) / n
    return ul, ur


def batch_levels(n: int):
    """Empirical-cdf levels (left, right) at the order statistics of a tie-free sample."""
    i = np.arange(1, n + 1, dtype=float)
    return (i - 1) / n, i / n


def _max_last(a):
    if a.shape[-1] == 0:
        return np.zeros(a.shape[:-1])
    return a.max(axis=-1)


def sup_core(s, lv, l1v, ul, ur, restricted: bool):
    """Max of K_s over segment endpoints.

    ``restricted`` limits the range to [first point, last point), the
    convention for s < 1.  A single distinct point then yields K_s(1, y).
    """
    order = _order(s)
    right = kernel_log(order, ur, lv, l1v)  # segment starting at each point
    left = kernel_log(order, ul, lv, l1v)  # left limit at each point
    if not restricted:
        return np.maximum(right.max(axis=-1), left.max(axis=-1))
    if lv.shape[-1] == 1:
        return right[..., 0]
    return np.maximum(right[..., :-1].max(axis=-1), left[..., 1:].max(axis=-1))


def _plus(order, u, lv, l1v):
    k = kernel_log(order, u, lv, l1v)
    return np.where(u > np.exp(lv), k, 0.0)


def _minus(order, u, lv, l1v):
    k = kernel_log(order, u, lv, l1v)
    return np.where(u < np.exp(lv), k, 0.0)


def plus_core(s, lv, l1v, ul, ur, x_cap: float = 0.5):
    """Max of the upper one-sided kernel over [first point, min(x_cap, last point))."""
    order = _order(s)
    ul, ur = np.broadcast_to(ul, lv.shape), np.broadcast_to(ur, lv.shape)
    m = lv.shape[-1]
    lcap = np.log(x_cap)
    below = lv <= lcap
    idx = np.arange(m)
    left_end = below & (idx < m - 1)
    right_lim = below & (idx >= 1)
    # Only columns up to the last point below the cap can contribute.
    k = int(np.max(np.sum(below, axis=-1), initial=0))
    lvk, l1vk = lv[..., :k], l1v[..., :k]
    vals = np.maximum(
        np.where(left_end[..., :k], _plus(order, ur[..., :k], lvk, l1vk), 0.0),
        np.where(right_lim[..., :k], _plus(order, ul[..., :k], lvk, l1vk), 0.0),
    )
    best = _max_last(vals)
    # The cap itself, when it falls inside [first point, last point).
    count = np.sum(below, axis=-1)
    inside = (count >= 1) & (count < m)
    u_cap = np.take_along_axis(ur, np.clip(count - 1, 0, m - 1)[..., None], axis=-1)[..., 0]
    cap_val = np.where(u_cap > x_cap, kernel(order, u_cap, x_cap), 0.0)
    return np.maximum(best, np.where(inside, cap_val, 0.0))


def _stat(value, s, kind, n):
    return StatValue(float(value), None if s is None else float(_order(s).s), kind, n)


def sn(s, data) -> StatValue:
    """Two-sided supremum statistic; the range is restricted to [X_(1), X_(n)) for s < 1."""
    order = _order(s)
    sample = as_sample(data)
    lv, l1v, _, cum = sample.distinct()
    ul, ur = _levels(cum.astype(float), sample.n)
    value = sup_core(order, lv, l1v, ul, ur, restricted=order.s < 1)
    return _stat(value, order, "sup-two-sided", sample.n)


def sn_plus(s, data, x_cap: float = 0.5) -> StatValue:
    """Upper one-sided supremum over [X_(1), x_cap], 0 when the region is empty."""
    order = _order(s)
    sample = as_sample(data)
    if not (0.0 < x_cap <= 1.0):
        raise ValueError("x_cap must lie in (0, 1]")
    lv, l1v, _, cum = sample.distinct()
    ul, ur = _levels(cum.astype(float), sample.n)
    value = plus_core(order, lv, l1v, ul, ur, x_cap)
    return _stat(value, order, "sup-plus", sample.n)


def _check_unrestricted(order: DivergenceOrder) -> None:
    if not (0.0 < order.s < 1.0):
        raise ValueError("unrestricted statistics are defined for 0 < s < 1 only")


def sn_unrestricted(s, data) -> StatValue:
    """Two-sided supremum over all of (0, 1), finite for 0 < s < 1."""
    order = _order(s)
    _check_unrestricted(order)
    sample = as_sample(data)
    lv, l1v, _, cum = sample.distinct()
    ul, ur = _levels(cum.astype(float), sample.n)
    return _stat(sup_core(order, lv, l1v, ul, ur, restricted=False), order, "sup-unrestricted", sample.n)


def sn_ur_plus(s, data) -> StatValue:
    """max_i K_s^+(F_n(X_(i)), X_(i)) over all order statistics."""
    order = _order(s)
    _check_unrestricted(order)
    sample = as_sample(data)
    lv, l1v, _, cum = sample.distinct()
    _, ur = _levels(cum.astype(float), sample.n)
    return _stat(_plus(order, ur, lv, l1v).max(), order, "sup-unrestricted-plus", sample.n)


def sn_ur_minus(s, data) -> StatValue:
    """Lower one-sided supremum over all of (0, 1): left limits at every point."""
    order = _order(s)
    _check_unrestricted(order)
    sample = as_sample(data)
    lv, l1v, _, cum = sample.distinct()
    ul, _ = _levels(cum.astype(float), sample.n)
    return _stat(_minus(order, ul, lv, l1v).max(), order, "sup-unrestricted-minus", sample.n)


def hc_star(data, alpha0: float = 0.5) -> StatValue:
    """Standardized one-sided empirical process sup over [X_(1), X_(k)), k = floor(alpha0 n)."""
    sample = as_sample(data)
    if not (0.0 < alpha0 <= 1.0):
        raise ValueError("alpha0 must lie in (0, 1]")
    n = sample.n
    k = int(np.floor(alpha0 * n))
    if k < 1:
        raise ValueError("floor(alpha0 * n) must be at least 1")
    lv, l1v, y, cum = sample.distinct()
    inrange = cum < k  # distinct points strictly below X_(k)
    if not np.any(inrange):
        raise ValueError("the range [X_(1), X_(k)) is empty")
    u = cum[inrange] / n
    z = (u - y[inrange]) / np.exp(0.5 * (lv[inrange] + l1v[inrange]))
    return _stat(np.sqrt(n) * z.max(), None, "hc-star", n)


def segment_integral(s, c, a, b):
    """Integral of K_s(c, x) over x in [a, b], vectorized; c is constant on the segment."""
    order = _order(s)
    s = order.s
    c, a, b = np.broadcast_arrays(*(np.asarray(t, dtype=float) for t in (c, a, b)))
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        if abs(s - 2.0) < order.switch:
            out = 0.5 * (xlogy(c * c, b / a) + xlogy((1 - c) ** 2, (1 - a) / (1 - b)) - (b - a))
        elif order.branch == "one":
            neg_entropy = xlogy(c, c) + xlogy(1 - c, 1 - c)
            out = (
                (b - a) * neg_entropy
                - c * (xlogy(b, b) - xlogy(a, a) - (b - a))
                + (1 - c) * (xlogy(1 - b, 1 - b) - xlogy(1 - a, 1 - a) + (b - a))
            )
        elif order.branch == "zero" and s <= 0:
            out = _zero_branch_integral(c, a, b)
        else:
            out = _generic_integral(s, c, a, b)
    return np.maximum(out, 0.0)


def _zero_branch_integral(c, a, b):
    def prim(x):
        y = 1.0 - x
        return 0.5 * xlogy(x * x, x) - 0.25 * x * x - (0.5 * xlogy(y * y, y) - 0.25 * y * y)

    return (
        prim(b)
        - prim(a)
        - 0.5 * np.log(c) * (b * b - a * a)
        + 0.5 * np.log1p(-c) * ((1 - b) ** 2 - (1 - a) ** 2)
    )


def _power_integral(p, lo, hi):
    """Integral of t^(p-1) over [lo, hi] with 0 <= lo <= hi."""
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        from_zero = np.where(p > 0, np.power(hi, p) / p, np.inf)
        general = np.power(lo, p) * np.expm1(p * (np.log(hi) - np.log(lo))) / p
    return np.where(lo == 0.0, from_zero, np.where(hi == lo, 0.0, general))


def _generic_integral(s, c, a, b):
    p = 2.0 - s
    d = np.where(c > 0, np.power(c, s) * _power_integral(p, a, b), 0.0)
    e = np.where(c < 1, np.power(1 - c, s) * _power_integral(p, 1 - b, 1 - a), 0.0)
    return ((b - a) - d - e) / (s * (1.0 - s))


def tn_core(s, y, cum, n):
    """Integral statistic from distinct sorted points ``y`` (last axis) and cumulative counts."""
    order = _order(s)
    y = np.asarray(y, dtype=float)
    level = np.broadcast_to(np.asarray(cum, dtype=float) / n, y.shape)
    if order.s > 0:
        lead = np.zeros(y.shape[:-1] + (1,))
        tail = np.ones(y.shape[:-1] + (1,))
        a = np.concatenate([lead, y], axis=-1)
        b = np.concatenate([y, tail], axis=-1)
        c = np.concatenate([lead, level], axis=-1)
    else:
        a, b, c = y[..., :-1], y[..., 1:], level[..., :-1]
    return segment_integral(order, c, a, b).sum(axis=-1)


def tn(s, data) -> StatValue:
    """Integral statistic over (0,1) for s > 0 and over [X_(1), X_(n)] for s <= 0."""
    order = _order(s)
    sample = as_sample(data)
    _, _, y, cum = sample.distinct()
    return _stat(tn_core(order, y, cum, sample.n), order, "integral", sample.n)
