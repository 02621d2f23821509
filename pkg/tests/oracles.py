"""Slow, independent reference implementations used as test oracles."""

from __future__ import annotations

import itertools
import math

import numpy as np
from scipy import integrate
from numpy.polynomial import Polynomial
from scipy.special import xlogy


def phi_direct(s, x):
    x = np.asarray(x, dtype=float)
    if s == 1.0:
        return xlogy(x, x) - x + 1.0
    if s == 0.0:
        with np.errstate(divide="ignore"):
            return -np.log(x) + x - 1.0
    with np.errstate(divide="ignore", invalid="ignore"):
        return (1.0 - s + s * x - np.power(x, s)) / (s * (1.0 - s))


def kernel_direct(s, u, v):
    """v phi(u/v) + (1-v) phi((1-u)/(1-v)) for v in (0, 1)."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    return v * phi_direct(s, u / v) + (1 - v) * phi_direct(s, (1 - u) / (1 - v))


def ecdf(x_sorted, t, left=False):
    side = "left" if left else "right"
    return np.searchsorted(x_sorted, t, side=side) / x_sorted.size


def sup_oracle(s, x, step=1e-6, kind="two", x_cap=0.5):
    """Max of the kernel over a dense grid plus both one-sided limits at each jump."""
    x = np.sort(np.asarray(x, dtype=float))
    n = x.size
    if kind == "plus":
        lo, hi = x[0], min(x_cap, x[-1])
        extra_right = [x_cap] if x_cap < x[-1] else []
    elif s < 1:
        lo, hi, extra_right = x[0], x[-1], []
    else:
        lo, hi, extra_right = step, 1 - step, []
    grid = np.arange(lo, hi, step)
    pts = np.concatenate([grid, x[(x >= lo) & (x < hi)], extra_right])
    u = ecdf(x, pts)
    # left limits at jumps inside (lo, hi], or any jump when the range is all of (0, 1)
    if kind == "plus":
        jumps = x[(x > lo) & (x <= hi)]
    elif s < 1:
        jumps = x[(x > lo) & (x <= hi)]
    else:
        jumps = x
    vals = [kernel_direct(s, u, pts)]
    vals.append(kernel_direct(s, ecdf(x, jumps, left=True), jumps))
    if s >= 1 and kind == "two":
        vals.append(kernel_direct(s, 1.0, x[-1:]))
    pts_all = np.concatenate([pts, jumps])
    u_all = np.concatenate([u, ecdf(x, jumps, left=True)])
    k_all = np.concatenate([v.ravel() for v in vals[:2]])
    if kind == "plus":
        k_all = np.where(u_all > pts_all, k_all, 0.0)
    out = float(np.max(k_all, initial=0.0))
    if len(vals) > 2:
        out = max(out, float(vals[2].max()))
    return out


def tn_oracle(s, x, epsrel=1e-12):
    """Adaptive quadrature of the kernel along the empirical cdf, segment by segment."""
    x = np.sort(np.asarray(x, dtype=float))
    n = x.size
    edges = np.concatenate([[0.0], x, [1.0]]) if s > 0 else x
    total = 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        if b <= a:
            continue
        c = np.searchsorted(x, a, side="right") / n
        val, _ = integrate.quad(lambda t: float(kernel_direct(s, c, t)), a, b, epsabs=0.0, epsrel=epsrel,
                                limit=200)
        total += val
    return total


def hc_oracle(x, alpha0=0.5, step=1e-6):
    x = np.sort(np.asarray(x, dtype=float))
    n = x.size
    k = int(math.floor(alpha0 * n))
    lo, hi = x[0], x[k - 1]
    pts = np.concatenate([np.arange(lo, hi, step), x[(x >= lo) & (x < hi)]])
    jumps = x[(x > lo) & (x <= hi)]
    u = np.concatenate([ecdf(x, pts), ecdf(x, jumps, left=True)])
    t = np.concatenate([pts, jumps])
    return float(np.max(math.sqrt(n) * (u - t) / np.sqrt(t * (1 - t))))


def simplex_probability(a, b):
    """P(a_i <= U_(i) <= b_i for all i) by exact piecewise-polynomial integration.

    Works backwards: h_k(t) = integral of h_{k+1} over [max(a_k, t), b_k], a
    polynomial on each cell of the partition by all a_i, b_i.  The answer is
    n! h_1(0).
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    n = a.size
    if np.any(a >= b):
        return 0.0
    knots = np.unique(np.concatenate([[0.0, 1.0], a, b]))
    cells = list(zip(knots[:-1], knots[1:]))
    h = [Polynomial([1.0]) for _ in cells]

    def integral_to(pieces, x):
        total = 0.0
        for (lo, hi), p in zip(cells, pieces):
            if x <= lo:
                break
            P = p.integ()
            total += P(min(x, hi)) - P(lo)
        return total

    for k in range(n - 1, -1, -1):
        hb = integral_to(h, b[k])
        ha = integral_to(h, a[k])
        new = []
        for (lo, hi), p in zip(cells, h):
            mid = 0.5 * (lo + hi)
            if mid >= b[k]:
                new.append(Polynomial([0.0]))
            elif mid <= a[k]:
                new.append(Polynomial([hb - ha]))
            else:
                P = p.integ()
                new.append(Polynomial([hb - integral_to(h, lo) + P(lo)]) - P)
        h = new
    return math.factorial(n) * float(h[0](0.0))


__all__ = ["kernel_direct", "sup_oracle", "tn_oracle", "hc_oracle", "simplex_probability", "itertools"]
