"""Alternative distributions on (0, 1) and the functionals used to study them.

Every alternative exposes its cdf, the log-cdf and log-survival pair, a
quantile function with a log-space variant, and a sampler returning a
:class:`~phidiv.statistics.Sample`.  Log-space matters: the heavy left tail
of the Poisson-boundary family puts order statistics around exp(-1e5),
which no double can hold.
"""

from __future__ import annotations

import csv
import math
import os
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad
from scipy.optimize import brentq, minimize_scalar
from scipy.special import gammaln, log_ndtr, ndtr, ndtri

from .divergence import _order, kernel_log, log1mexp
from .statistics import Sample

_TINY = np.finfo(float).tiny


def _open_uniform(rng: np.random.Generator, n: int) -> np.ndarray:
    return np.clip(rng.random(n), _TINY, 1.0 - 2.0 ** -53)


class Alternative:
    """Interface for a continuous cdf on [0, 1]."""

    kind: str = "abstract"

    def logcdf(self, x):
        raise NotImplementedError

    def cdf(self, x):
        out = np.exp(self.logcdf(np.asarray(x, dtype=float)))
        return out[()] if np.ndim(out) == 0 else out

    def logsf(self, x):
        return log1mexp(self.logcdf(x))

    def log_quantile(self, p):
        """(log x, log(1 - x)) of the p-quantile."""
        x = np.asarray(self.quantile(p), dtype=float)
        with np.errstate(divide="ignore"):
            return np.log(x), np.log1p(-x)

    def quantile(self, p):
        raise NotImplementedError

    def sample(self, rng: np.random.Generator, n: int) -> Sample:
        lx, _ = self.log_quantile(_open_uniform(rng, n))
        return Sample.from_logs(lx)

    def describe(self) -> dict:
        return {"kind": self.kind}

    def _validate(self) -> None:
        grid = np.linspace(1e-6, 1.0 - 1e-6, 1001)
        f = np.asarray(self.cdf(grid))
        if np.any(np.diff(f) < -1e-12) or np.any(f < 0) or np.any(f > 1):
            raise ValueError(f"{self.kind}: not a valid distribution function on [0, 1]")
        if abs(float(self.cdf(1.0)) - 1.0) > 1e-12:
            raise ValueError(f"{self.kind}: cdf(1) must equal 1")


@dataclass(frozen=True)
class Uniform(Alternative):
    kind = "uniform"

    def logcdf(self, x):
        with np.errstate(divide="ignore"):
            return np.log(np.asarray(x, dtype=float))

    def cdf(self, x):
        return np.asarray(x, dtype=float)[()]

    def logsf(self, x):
        with np.errstate(divide="ignore"):
            return np.log1p(-np.asarray(x, dtype=float))

    def quantile(self, p):
        return np.asarray(p, dtype=float)[()]


@dataclass(frozen=True)
class PoissonBoundary(Alternative):
    """The extremal family F_s, defined for s >= 1 and s < 0."""

    s: float
    kind = "poisson-boundary"

    def __post_init__(self) -> None:
        if not np.isfinite(self.s) or 0.0 <= self.s < 1.0:
            raise ValueError("the boundary family needs s >= 1 or s < 0")
        self._validate()

    def describe(self) -> dict:
        return {"kind": self.kind, "s": self.s}

    def logcdf(self, x):
        s = self.s
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            lx = np.log(np.asarray(x, dtype=float))
            return self._logcdf_from_log(lx, s)

    @staticmethod
    def _logcdf_from_log(lx, s):
        if s == 1.0:
            return -np.log1p(-lx)
        if s > 1.0:
            a = (1.0 - s) * lx - math.log(s - 1.0)
            return -(a + np.log1p((s - 2.0) / (s - 1.0) * np.exp(-a))) / s
        b = (s - 1.0) * lx + math.log(-s)
        return (b + np.log1p((1.0 + s) * np.exp(-b))) / s

    def log_quantile(self, p):
        s = self.s
        p = np.asarray(p, dtype=float)
        with np.errstate(divide="ignore"):
            lp = np.log(p)
        if s == 1.0:
            with np.errstate(divide="ignore"):
                lx = 1.0 - 1.0 / p
        elif s > 1.0:
            inner = math.log(s - 1.0) - s * lp + np.log1p((2.0 - s) / (s - 1.0) * np.exp(s * lp))
            lx = inner / (1.0 - s)
        else:
            inner = s * lp + np.log1p(-(1.0 + s) * np.exp(-s * lp)) - math.log(-s)
            lx = inner / (s - 1.0)
        lx = np.minimum(lx, 0.0)
        return lx[()], log1mexp(lx)

    def quantile(self, p):
        return np.exp(self.log_quantile(p)[0])


@dataclass(frozen=True)
class TildeF0(Alternative):
    """F(x) = exp(-(1/x - 1)), the light-tailed limit of the family as s -> 0-."""

    kind = "tilde-F0"

    def logcdf(self, x):
        with np.errstate(divide="ignore"):
            return 1.0 - 1.0 / np.asarray(x, dtype=float)

    def quantile(self, p):
        return 1.0 / (1.0 - np.log(np.asarray(p, dtype=float)))

    def log_quantile(self, p):
        lp = np.log(np.asarray(p, dtype=float))
        with np.errstate(divide="ignore"):
            return -np.log1p(-lp), np.log(-lp) - np.log1p(-lp)


@dataclass(frozen=True)
class Mixture(Alternative):
    """Null p-values contaminated by a shifted normal component.

    X = 1 - Phi(Y) with Y ~ (1 - eps) N(0, 1) + eps N(mu, 1), so that
    F(u) = (1 - eps) u + eps Phi(mu + Phi^{-1}(u)) >= u.
    """

    eps: float
    mu: float
    kind = "mixture"

    def __post_init__(self) -> None:
        if not (0.0 <= self.eps <= 1.0) or not np.isfinite(self.mu):
            raise ValueError("mixture needs 0 <= eps <= 1 and finite mu")
        self._validate()

    def describe(self) -> dict:
        return {"kind": self.kind, "eps": self.eps, "mu": self.mu}

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        out = (1.0 - self.eps) * x + self.eps * ndtr(self.mu + ndtri(x))
        return out[()]

    def logcdf(self, x):
        x = np.asarray(x, dtype=float)
        with np.errstate(divide="ignore"):
            parts = [np.log(x) + math.log1p(-self.eps) if self.eps < 1 else np.full(x.shape, -np.inf)]
            if self.eps > 0:
                parts.append(math.log(self.eps) + log_ndtr(self.mu + ndtri(x)))
        return np.logaddexp.reduce(parts, axis=0) if len(parts) > 1 else parts[0]

    def logsf(self, x):
        x = np.asarray(x, dtype=float)
        with np.errstate(divide="ignore"):
            parts = [np.log1p(-x) + math.log1p(-self.eps) if self.eps < 1 else np.full(x.shape, -np.inf)]
            if self.eps > 0:
                parts.append(math.log(self.eps) + log_ndtr(-self.mu - ndtri(x)))
        return np.logaddexp.reduce(parts, axis=0) if len(parts) > 1 else parts[0]

    def _quantile_scalar(self, p: float) -> float:
        if p <= 0.0:
            return 0.0
        if p >= 1.0:
            return 1.0
        if self.eps == 0.0 or self.mu == 0.0:
            return p
        z_hi = float(ndtri(p))
        z_lo = z_hi - abs(self.mu) - 1.0

        def g(z):
            return (1.0 - self.eps) * ndtr(z) + self.eps * ndtr(self.mu + z) - p

        z = brentq(g, z_lo, z_hi + abs(self.mu) + 1.0, xtol=1e-14, rtol=4 * np.finfo(float).eps)
        return float(ndtr(z))

    def quantile(self, p):
        p = np.asarray(p, dtype=float)
        out = np.vectorize(self._quantile_scalar, otypes=[float])(p)
        return out[()] if out.ndim == 0 else out

    def sample(self, rng: np.random.Generator, n: int) -> Sample:
        y = rng.standard_normal(n)
        if self.eps > 0:
            y = y + self.mu * (rng.random(n) < self.eps)
        lx = log_ndtr(-y)
        x = np.exp(lx)
        order = np.argsort(lx)
        return Sample(lx[order], log_ndtr(y)[order], x[order])


@dataclass(frozen=True)
class UserGrid(Alternative):
    """Piecewise-linear cdf through user-supplied points (0,0) and (1,1) implied."""

    x: np.ndarray
    F: np.ndarray
    kind = "user-grid"

    def __post_init__(self) -> None:
        x = np.asarray(self.x, dtype=float)
        F = np.asarray(self.F, dtype=float)
        if x.shape != F.shape or x.ndim != 1:
            raise ValueError("grid needs matching 1-D x and F columns")
        if np.any(np.diff(x) <= 0) or np.any(np.diff(F) < 0):
            raise ValueError("grid must have increasing x and nondecreasing F")
        if x[0] < 0 or x[-1] > 1 or F[0] < 0 or F[-1] > 1:
            raise ValueError("grid values must lie in [0, 1]")
        if x[0] > 0:
            x, F = np.r_[0.0, x], np.r_[0.0, F]
        if x[-1] < 1:
            x, F = np.r_[x, 1.0], np.r_[F, 1.0]
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "F", F)
        self._validate()

    @classmethod
    def from_csv(cls, path: str | os.PathLike) -> "UserGrid":
        xs, fs = [], []
        with open(path, newline="") as fh:
            for row in csv.reader(fh):
                if not row or row[0].lstrip().startswith("#"):
                    continue
                try:
                    xs.append(float(row[0]))
                    fs.append(float(row[1]))
                except ValueError:
                    if xs:
                        raise
                    continue  # header line
        return cls(np.array(xs), np.array(fs))

    def describe(self) -> dict:
        return {"kind": self.kind, "points": int(self.x.size)}

    def cdf(self, x):
        return np.interp(np.asarray(x, dtype=float), self.x, self.F)[()]

    def logcdf(self, x):
        with np.errstate(divide="ignore"):
            return np.log(self.cdf(x))

    def logsf(self, x):
        with np.errstate(divide="ignore"):
            return np.log1p(-self.cdf(x))

    def quantile(self, p):
        # Smallest x with F(x) >= p, by interpolation on the increasing parts.
        keep = np.r_[True, np.diff(self.F) > 0]
        return np.interp(np.asarray(p, dtype=float), self.F[keep], self.x[keep])[()]


AlternativeCdf = Alternative


def alt_cdf(alt: Alternative, x):
    return alt.cdf(x)


def alt_quantile(alt: Alternative, p):
    p_arr = np.asarray(p, dtype=float)
    if np.any((p_arr <= 0) | (p_arr >= 1)):
        raise ValueError("p must lie in (0, 1)")
    return alt.quantile(p)


def alt_sample(alt: Alternative, rng: np.random.Generator, n: int) -> Sample:
    return alt.sample(rng, n)


@dataclass(frozen=True)
class MixtureParams:
    """Sparse-mixture calibration eps = n^-beta, mu = sqrt(2 r log n).

    beta = 1/2 is accepted (the dense edge of the sparse regime).
    """

    n: int
    beta: float
    r: float

    def __post_init__(self) -> None:
        if self.n < 2:
            raise ValueError("n must be at least 2")
        if not (0.5 <= self.beta < 1.0):
            raise ValueError("beta must lie in [1/2, 1)")
        if not (0.0 < self.r < 1.0):
            raise ValueError("r must lie in (0, 1)")

    @property
    def eps(self) -> float:
        return float(self.n) ** (-self.beta)

    @property
    def mu(self) -> float:
        return math.sqrt(2.0 * self.r * math.log(self.n))

    def alternative(self) -> Mixture:
        return Mixture(self.eps, self.mu)


# ---------------------------------------------------------------------------
# Functionals of a fixed alternative


@dataclass(frozen=True)
class ExtendedValue:
    value: float
    finite: bool
    detail: dict = field(default_factory=dict)

    def __float__(self) -> float:
        return self.value


def _grid(points: int):
    """Log-spaced grid in x toward 0 and in 1 - x toward 1, as (x, log x, log(1-x))."""
    half = points // 2
    lx_low = np.linspace(math.log(1e-300), math.log(0.5), half)
    ld_high = np.linspace(math.log(0.5), math.log(1e-16), points - half + 1)[1:]
    lx = np.concatenate([lx_low, np.log1p(-np.exp(ld_high))])
    l1x = np.concatenate([np.log1p(-np.exp(lx_low)), ld_high])
    return np.exp(lx), lx, l1x


def _divergence_at(order, alt: Alternative, x):
    """K_s(F(x), x), evaluated as K_{1-s}(x, F(x)) so F may be tiny."""
    x = np.asarray(x, dtype=float)
    lf = np.asarray(alt.logcdf(x), dtype=float)
    lsf = np.asarray(alt.logsf(x), dtype=float)
    k = kernel_log(1.0 - order.s, x, lf, lsf)
    return np.where(np.isfinite(lf) & np.isfinite(lsf), k, np.nan)


def natural_parameter(s, alt: Alternative, points: int = 100_000, ceiling: float = 1e12) -> ExtendedValue:
    """sup_x K_s(F(x), x) by a boundary-concentrated grid scan and local refinement."""
    order = _order(s)
    x, lx, l1x = _grid(points)
    vals = _divergence_at(order, alt, x)
    ok = np.isfinite(vals)
    if not np.any(ok):
        return ExtendedValue(np.inf, False, {"reason": "no finite evaluations"})
    idx = np.nonzero(ok)[0]
    v = vals[idx]
    best = int(np.argmax(v))
    value = float(v[best])
    if value > ceiling or np.any(vals[~np.isnan(vals)] == np.inf):
        return ExtendedValue(np.inf, False, {"reason": "exceeds ceiling"})
    at_edge = best in (0, v.size - 1)
    if at_edge:
        # Growth check toward the boundary: increments over equal log-blocks.
        k = min(v.size // 20, 2000)
        blocks = v[:3 * k:k] if best == 0 else v[::-1][:3 * k:k]
        d1, d2 = blocks[1] - blocks[2], blocks[0] - blocks[1]
        if d2 > 1e-6 * max(abs(value), 1.0) and d2 > 0.5 * d1:
            return ExtendedValue(np.inf, False, {"reason": "still growing at the boundary"})
        return ExtendedValue(value, True, {"x": float(x[idx[best]]), "boundary": True})
    # Refine in the coordinate the grid was uniform in.
    j = idx[best]
    low_side = j < points // 2
    coord = lx if low_side else l1x
    a, b = coord[max(j - 1, 0)], coord[min(j + 1, x.size - 1)]
    a, b = min(a, b), max(a, b)

    def to_x(c):
        return math.exp(c) if low_side else -math.expm1(c)

    def neg(c):
        k = _divergence_at(order, alt, to_x(c))
        return -float(k) if np.isfinite(k) else 0.0

    res = minimize_scalar(neg, bounds=(a, b), method="bounded", options={"xatol": 1e-12})
    if -res.fun > value:
        return ExtendedValue(float(-res.fun), True, {"x": to_x(res.x), "boundary": False})
    return ExtendedValue(value, True, {"x": float(x[j]), "boundary": False})


def _shell_sum(f, edges, ceiling: float, ratio_cut: float = 0.99):
    """Accumulate quad over consecutive shells, detecting divergence by growth."""
    total, incs = 0.0, []
    for a, b in zip(edges[:-1], edges[1:]):
        lo, hi = min(a, b), max(a, b)
        inc = quad(f, lo, hi, limit=200)[0]
        total += inc
        incs.append(inc)
        if total > ceiling:
            return np.inf, incs
        if len(incs) >= 20 and inc <= 1e-14 * total:
            return total, incs
    if len(incs) >= 10 and incs[-1] > 0:
        ratio = float(np.mean(np.array(incs[-5:]) / np.array(incs[-6:-1])))
        if ratio >= ratio_cut:
            return np.inf, incs
        total += incs[-1] * ratio / (1.0 - ratio)
    return total, incs


def _dyadic_integral(f, ceiling: float, depth_low: int = 1000, depth_high: int = 50):
    low = [2.0 ** -k for k in range(1, depth_low + 1)]
    high = [1.0 - 2.0 ** -k for k in range(1, depth_high + 1)]
    left, _ = _shell_sum(f, low, ceiling)
    right, _ = _shell_sum(f, high, ceiling)
    return left + right


def consistency_integral(s, alt: Alternative, ceiling: float = 1e6) -> ExtendedValue:
    """Integral over u of (Q(u)(1 - Q(u)))^(-(s-1)/s), Q the quantile function; s > 1."""
    s = _order(s).s
    if s <= 1:
        raise ValueError("the integral condition applies to s > 1")
    power = (s - 1.0) / s

    def f(u):
        lq, l1q = alt.log_quantile(u)
        return math.exp(-power * (float(lq) + float(l1q)))

    total = _dyadic_integral(f, ceiling)
    return ExtendedValue(float(total), bool(np.isfinite(total)))


def kl_consistency_integral(alt: Alternative, ceiling: float = 1e6) -> ExtendedValue:
    """Integral of F(x)(1 - F(x)) / (x(1 - x)), the s = 1 diagnostic."""

    def f(x):
        return math.exp(float(alt.logcdf(x)) + float(alt.logsf(x))) / (x * (1.0 - x))

    total = _dyadic_integral(f, ceiling)
    return ExtendedValue(float(total), bool(np.isfinite(total)))


def efficacy(s: float, a: float) -> float:
    """Exponential p-value decay rate -log(1 - s(1-s) a) / (1 - s) for 0 < s < 1."""
    if not (0.0 < s < 1.0):
        raise ValueError("s must lie in (0, 1)")
    if not (0.0 <= a < 1.0 / (s * (1.0 - s))):
        raise ValueError("a must lie in [0, 1/(s(1-s)))")
    return -math.log1p(-s * (1.0 - s) * a) / (1.0 - s)


def rho_star(beta: float) -> float:
    """Detection boundary of the sparse normal mixture."""
    if not (0.5 < beta < 1.0):
        raise ValueError("beta must lie in (1/2, 1)")
    if beta <= 0.75:
        return beta - 0.5
    return (1.0 - math.sqrt(1.0 - beta)) ** 2


def sup_ratio_tail(x: float, rtol: float = 1e-15, max_terms: int = 10_000_000) -> float:
    """P(sup_{t >= S_1} t / N(t) > x) for a unit-rate Poisson process, x > 1."""
    if not x > 1.0:
        raise ValueError("x must exceed 1")
    total = math.exp(-x)
    log_x = math.log(x)
    start, chunk = 1, 4096
    prev_last = np.inf
    while start < max_terms:
        k = np.arange(start, start + chunk, dtype=float)
        km1 = k - 1.0
        log_term = np.where(km1 > 0, km1 * np.log(np.maximum(km1, 1.0)), 0.0) - gammaln(k + 1.0) + k * (log_x - x)
        terms = np.exp(log_term)
        total += float(terms.sum())
        last = float(terms[-1])
        if last < rtol * total and last <= prev_last:
            break
        prev_last = last
        start += chunk
    return total


def _gamma_tail_bound(k_next: int, m: float) -> float:
    """Union bound on P(S_{k+1} > m k for some k >= k_next), S_j the Poisson arrival times."""
    theta = m * k_next / (k_next + 1.0)
    if theta <= 1.0:
        return 1.0
    rate = theta - 1.0 - math.log(theta)
    return math.exp(-(k_next + 1.0) * rate) / -math.expm1(-rate)


def sup_ratio_path(rng: np.random.Generator, tol: float = 1e-9, max_steps: int = 1_000_000,
                   block: int = 1024) -> float:
    """One draw of sup_{t >= S_1} t / N(t) = max_k S_{k+1} / k.

    Arrivals are generated in blocks until the chance that a later k beats
    the running max is below ``tol`` (exponential union bound) or ``max_steps``
    arrivals have been simulated.
    """
    s_next = float(rng.standard_exponential())  # S_{k0+1}
    best = 0.0
    k0 = 0
    while k0 < max_steps:
        later = s_next + np.cumsum(rng.standard_exponential(block))  # S_{k0+2} .. S_{k0+block+1}
        best = max(best, float(np.max(later / np.arange(k0 + 1, k0 + block + 1))))
        s_next = float(later[-1])
        k0 += block
        if _gamma_tail_bound(k0 + 1, best) < tol:
            break
    return best


def sup_ratio_exceeds(xs, rng: np.random.Generator, paths: int, chunk: int = 10_000,
                      tol: float = 1e-9) -> np.ndarray:
    """Monte Carlo estimate of P(max_k S_{k+1}/k > x) for each x > 1 in ``xs``.

    Only exceedance of min(xs) matters, so each path is simulated to a fixed
    horizon beyond which exceeding min(xs) has probability below ``tol``.
    """
    xs = np.asarray(xs, dtype=float)
    x_min = float(xs.min())
    if x_min <= 1.0:
        raise ValueError("thresholds must exceed 1")
    horizon = 1
    while _gamma_tail_bound(horizon + 1, x_min) >= tol:
        horizon += 1
    hits = np.zeros(xs.size)
    done = 0
    while done < paths:
        m = min(chunk, paths - done)
        arr = np.cumsum(rng.standard_exponential((m, horizon + 1)), axis=1)
        sup = np.max(arr[:, 1:] / np.arange(1, horizon + 1), axis=1)
        hits += (sup[:, None] > xs[None, :]).sum(axis=0)
        done += m
    return hits / paths


def boundary_limit_sampler(s, rng: np.random.Generator, size: int | None = None):
    """Draws from the limit law of S_n(s) under the boundary family F_s.

    For s >= 1 this is 1/(s U^s); for s < 0 it is (sup t/N(t))^(-s) / (1 - s).
    """
    s = _order(s).s
    if 0.0 <= s < 1.0:
        raise ValueError("no boundary limit law for 0 <= s < 1")
    m = 1 if size is None else int(size)
    if s >= 1.0:
        u = _open_uniform(rng, m)
        out = 1.0 / (s * u ** s)
    else:
        out = np.array([sup_ratio_path(rng) ** (-s) / (1.0 - s) for _ in range(m)])
    return float(out[0]) if size is None else out
