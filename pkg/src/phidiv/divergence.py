"""Power-divergence kernels between Bernoulli laws.

``phi(s, x)`` is the convex generator of the power-divergence family and
``kernel(s, u, v)`` the induced divergence between Bernoulli(u) and
Bernoulli(v).  Everything is vectorized over ``u`` and ``v``; the scalar
public entry points (``kdiv`` and friends) wrap results in
:class:`KernelValue` so that infinite values carry an explicit flag.

The workhorse is :func:`kernel_log`, which takes ``log v`` and ``log(1-v)``
instead of ``v``.  Samples from heavy-tailed alternatives can sit far below
the smallest positive double, and only their logarithms are representable.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.special import xlogy

#: Half-width of the window around s=0 and s=1 in which the limit branch is used.
S_SWITCH = 1e-8
#: Final bracket width (in log v) of the inversion bisection.
LOG_TOL = 1e-13

_EXP_SAFE = 700.0


@dataclass(frozen=True)
class DivergenceOrder:
    """The index ``s`` of the family together with its evaluation branch."""

    s: float
    switch: float = S_SWITCH

    def __post_init__(self) -> None:
        if not np.isfinite(self.s):
            raise ValueError(f"divergence order must be finite, got {self.s!r}")

    @property
    def branch(self) -> str:
        if abs(self.s) < self.switch:
            return "zero"
        if abs(self.s - 1.0) < self.switch:
            return "one"
        if self.s == 2.0:
            return "two"
        return "generic"

    def __float__(self) -> float:
        return float(self.s)


OrderLike = "float | DivergenceOrder"


def _order(s) -> DivergenceOrder:
    return s if isinstance(s, DivergenceOrder) else DivergenceOrder(float(s))


class KernelValue(NamedTuple):
    """A nonnegative extended real; ``finite`` is False exactly when value is +inf."""

    value: float
    finite: bool

    def __float__(self) -> float:
        return self.value

    @classmethod
    def of(cls, x: float) -> "KernelValue":
        x = float(x)
        return cls(x, bool(np.isfinite(x)))


def phi(s, x):
    """Generator phi_s(x) for x >= 0 (array-valued for array input)."""
    order = _order(s)
    x = np.asarray(x, dtype=float)
    if np.any(x < 0) or np.any(np.isnan(x)):
        raise ValueError("phi is defined for x >= 0 only")
    s = order.s
    with np.errstate(divide="ignore", invalid="ignore"):
        if order.branch == "one":
            out = xlogy(x, x) - x + 1.0
        elif order.branch == "zero":
            out = -np.log(x) + x - 1.0
        else:
            out = (1.0 - s + s * x - np.power(x, s)) / (s * (1.0 - s))
    return out[()] if out.ndim == 0 else out


def log1mexp(la):
    """log(1 - exp(la)) for la <= 0."""
    la = np.asarray(la, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(la > -0.6931471805599453, np.log(-np.expm1(la)), np.log1p(-np.exp(la)))
    return out[()] if out.ndim == 0 else out


def _log_absdiff(la, lb):
    """log|exp(la) - exp(lb)|."""
    hi = np.maximum(la, lb)
    lo = np.minimum(la, lb)
    with np.errstate(invalid="ignore"):
        return hi + log1mexp(lo - hi)


def _xlogratio(p, lp, lq):
    """p*(log p - log q) with the 0*anything = 0 convention."""
    with np.errstate(invalid="ignore"):
        t = p * (lp - lq)
    return np.where(p == 0.0, 0.0, t)


def _power_term(p, lp, lq, s: float):
    """q * ((p/q)**s - 1), evaluated from log p and log q."""
    q = np.exp(lq)
    with np.errstate(invalid="ignore", over="ignore"):
        z = s * (lp - lq)
        small = q * np.expm1(np.minimum(z, _EXP_SAFE))
        large = np.exp(lq + z) - q
    out = np.where((z > _EXP_SAFE) | (q == 0.0), large, small)
    # p = 0: the term is -q for s>0 and diverges for s<0 (unless q = 0 too).
    p0 = lp == -np.inf
    q0 = lq == -np.inf
    at_p0 = np.where(s > 0, -q, np.where(q0, 0.0, np.inf))
    out = np.where(p0, at_p0, out)
    # q = 0 < p: q**(1-s) p**s vanishes for s<1 and diverges for s>1.
    at_q0 = 0.0 if s < 1 else np.inf
    return np.where(q0 & ~p0, at_q0, out)


def kernel_log(s, u, logv, log1mv):
    """K_s(u, v) from u and the pair (log v, log(1-v)).

    Boundary values u in {0, 1} and v in {0, 1} (logs of -inf) follow the
    algebraic limits of the defining formula; the result may be +inf.
    """
    order = _order(s)
    s = order.s
    u, lv, l1v = np.broadcast_arrays(
        np.asarray(u, dtype=float), np.asarray(logv, dtype=float), np.asarray(log1mv, dtype=float)
    )
    w = 1.0 - u
    with np.errstate(divide="ignore"):
        lu = np.log(u)
        l1u = np.log1p(-u)
    branch = order.branch
    with np.errstate(invalid="ignore", divide="ignore", over="ignore"):
        if branch == "one":
            out = _xlogratio(u, lu, lv) + _xlogratio(w, l1u, l1v)
        elif branch == "zero":
            out = _xlogratio(np.exp(lv), lv, lu) + _xlogratio(np.exp(l1v), l1v, l1u)
        elif branch == "two":
            # (u-v)^2 / (2 v (1-v)) with |u-v| from whichever side is better resolved
            log_d = np.where(u >= 0.5, _log_absdiff(l1u, l1v), _log_absdiff(lu, lv))
            out = np.exp(2.0 * log_d - np.log(2.0) - lv - l1v)
        else:
            a = _power_term(u, lu, lv, s)
            b = _power_term(w, l1u, l1v, s)
            out = -(a + b) / (s * (1.0 - s))
    same = (lu == lv) & (l1u == l1v)
    out = np.where(same, 0.0, out)
    out = np.where(np.isnan(out), np.inf, out)
    return np.maximum(out, 0.0)


def _log_pair(v):
    v = np.asarray(v, dtype=float)
    with np.errstate(divide="ignore"):
        return np.log(v), np.log1p(-v)


def kernel(s, u, v):
    """Vectorized K_s(u, v) on the closed unit square (boundary limits included)."""
    lv, l1v = _log_pair(v)
    out = kernel_log(s, u, lv, l1v)
    return out[()] if out.ndim == 0 else out


def curvature(s, u, v):
    """Second derivative of K_s(., v) at u; D_s(u,v) = (u/v)^(s-2)/v + ((1-u)/(1-v))^(s-2)/(1-v)."""
    s = _order(s).s
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.power(u / v, s - 2.0) / v + np.power((1.0 - u) / (1.0 - v), s - 2.0) / (1.0 - v)
    return out[()] if out.ndim == 0 else out


def _check_uv(u: float, v: float) -> None:
    if not (0.0 <= u <= 1.0):
        raise ValueError(f"u must lie in [0, 1], got {u!r}")
    if not (0.0 < v < 1.0):
        raise ValueError(f"v must lie in (0, 1), got {v!r}")


def kdiv(s, u: float, v: float) -> KernelValue:
    """K_s(u, v) for u in [0,1] and v in (0,1)."""
    _check_uv(u, v)
    return KernelValue.of(kernel(s, u, v))


def kdiv_plus(s, u: float, v: float) -> KernelValue:
    """One-sided kernel: K_s(u, v) when u > v, otherwise 0."""
    _check_uv(u, v)
    return KernelValue.of(kernel(s, u, v) if u > v else 0.0)


def kdiv_minus(s, u: float, v: float) -> KernelValue:
    """One-sided kernel: K_s(u, v) when u < v, otherwise 0."""
    _check_uv(u, v)
    return KernelValue.of(kernel(s, u, v) if u < v else 0.0)


def _limit_at_zero(s: float, u):
    """lim_{v -> 0+} K_s(u, v), vectorized over u."""
    return kernel(s, u, 0.0)


def _lower_endpoint(s, u, lam):
    """Smallest v in [0, u] with K_s(u, v) <= lam (0 when the bound never binds)."""
    order = _order(s)
    u = np.asarray(u, dtype=float)
    lam = np.broadcast_to(np.asarray(lam, dtype=float), u.shape)
    out = np.zeros(u.shape)
    active = (_limit_at_zero(order, u) > lam) & (u > 0)
    if not np.any(active):
        return out
    ua, la = u[active], lam[active]
    hi = np.log(ua)

    def k(lv):
        return kernel_log(order, ua, lv, np.log1p(-np.exp(lv)))

    # Walk outward in log v until the bound is violated.
    step = np.ones_like(hi)
    lo = hi - step
    for _ in range(80):
        ok = k(lo) <= la
        if not np.any(ok):
            break
        step = np.where(ok, 2.0 * step, step)
        lo = np.where(ok, hi - step, lo)
    width = float(np.max(hi - lo))
    iters = int(np.ceil(np.log2(max(width, LOG_TOL) / LOG_TOL))) + 1
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        inside = k(mid) <= la
        hi = np.where(inside, mid, hi)
        lo = np.where(inside, lo, mid)
    out[active] = np.exp(hi)
    return out


def invert_in_v(s, u, lam):
    """Endpoints (v_lo, v_hi) of {v : K_s(u, v) <= lam}.

    Works elementwise on array ``u``.  Endpoints saturate at 0 or 1 when the
    bound does not bind on that side; ``lam = inf`` gives (0, 1).
    """
    order = _order(s)
    lam_arr = np.asarray(lam, dtype=float)
    if np.any(np.isnan(lam_arr)) or np.any(lam_arr < 0):
        raise ValueError("lambda must be nonnegative")
    u_arr = np.asarray(u, dtype=float)
    if np.any((u_arr < 0) | (u_arr > 1)):
        raise ValueError("u must lie in [0, 1]")
    lo = _lower_endpoint(order, u_arr, lam_arr)
    hi = 1.0 - _lower_endpoint(order, 1.0 - u_arr, lam_arr)
    if lo.ndim == 0:
        return float(lo), float(hi)
    return lo, hi


def invert_in_u(s, v, lam):
    """Endpoints (u_lo, u_hi) of {u : K_s(u, v) <= lam}, using K_s(u,v) = K_{1-s}(v,u)."""
    return invert_in_v(1.0 - _order(s).s, v, lam)


def tau_plus(s, x: float, a: float) -> float:
    """Smallest t >= x with K_s(t, x) >= a, or 1 if no such t below 1."""
    if a < 0:
        raise ValueError("a must be nonnegative")
    if not (0.0 < x < 1.0):
        raise ValueError("x must lie in (0, 1)")
    if a == 0:
        return float(x)
    return float(invert_in_u(s, x, a)[1])
