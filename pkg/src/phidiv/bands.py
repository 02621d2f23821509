"""Simultaneous confidence bands from inverting the supremum statistic."""

from __future__ import annotations

import csv
import json
import os
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable

import numpy as np

from .divergence import _order, invert_in_v
from .exact import N_MAX, QuantileCache, quantile
from .statistics import as_sample


@dataclass(frozen=True)
class StepBand:
    """Piecewise-constant band; interval j is [x_left[j], x_right[j]).

    Interval 0 lies below the smallest observation and the last interval
    starts at the largest one.
    """

    breakpoints: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    s: float
    alpha: float
    q: float
    method: str
    n: int
    meta: dict = field(default_factory=dict)

    @property
    def x_left(self) -> np.ndarray:
        return np.concatenate([[0.0], self.breakpoints])

    @property
    def x_right(self) -> np.ndarray:
        return np.concatenate([self.breakpoints, [1.0]])

    def evaluate(self, x):
        """(L(x), U(x)) by table lookup."""
        idx = np.searchsorted(self.breakpoints, np.asarray(x, dtype=float), side="right")
        return self.lower[idx], self.upper[idx]

    def to_csv(self, path: str | os.PathLike) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["x_left", "x_right", "L", "U"])
            for row in zip(self.x_left, self.x_right, self.lower, self.upper):
                w.writerow([f"{v:.17g}" for v in row])

    def to_dict(self) -> dict:
        return {
            "s": self.s,
            "alpha": self.alpha,
            "method": self.method,
            "n": self.n,
            "q": self.q,
            **self.meta,
            "intervals": [
                {"x_left": a, "x_right": b, "L": lo, "U": hi}
                for a, b, lo, hi in zip(
                    self.x_left.tolist(), self.x_right.tolist(), self.lower.tolist(), self.upper.tolist()
                )
            ],
        }

    def to_json(self, path: str | os.PathLike) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2)


def _band_values(s: float, levels: np.ndarray, q: float):
    lo, hi = invert_in_v(s, levels, q)
    lo, hi = np.array(lo, dtype=float), np.array(hi, dtype=float)
    if s < 1:
        lo[0], hi[0] = 0.0, 1.0
        lo[-1], hi[-1] = 0.0, 1.0
    lo = np.maximum.accumulate(lo)
    hi = np.minimum.accumulate(hi[::-1])[::-1]
    return lo, hi


@lru_cache(maxsize=64)
def _tie_free_values(s: float, n: int, q: float):
    # Without ties the levels are 0, 1/n, ..., 1 whatever the data.
    lo, hi = _band_values(s, np.arange(n + 1) / n, q)
    lo.flags.writeable = False
    hi.flags.writeable = False
    return lo, hi


def band_from_quantile(data, s, q: float, *, alpha: float = float("nan"), method: str = "given") -> StepBand:
    """Band {F : S_n(s, F) <= q} for a given critical value q."""
    order = _order(s)
    sample = as_sample(data)
    _, _, y, cum = sample.distinct()
    n = sample.n
    if order.s < 1 and y.size < 2:
        raise ValueError("bands for s < 1 need at least two distinct observations")
    if y.size == n:
        lo, hi = _tie_free_values(float(order.s), n, float(q))
    else:
        lo, hi = _band_values(order.s, np.concatenate([[0.0], cum / n]), q)
    return StepBand(y.copy(), lo, hi, float(order.s), float(alpha), float(q), method, n)


def band(data, s, alpha: float, method: str = "exact", *, n_max: int = N_MAX,
         cache: QuantileCache | None = None) -> StepBand:
    """Simultaneous 1 - alpha band for the cdf of the data (on the unit interval)."""
    sample = as_sample(data)
    q, used = quantile(sample.n, s, alpha, method, n_max=n_max, cache=cache)
    meta = {}
    if cache is not None and cache.path is not None:
        meta["quantile_cache"] = str(cache.path)
    out = band_from_quantile(sample, s, q, alpha=alpha, method=used)
    return StepBand(**{**out.__dict__, "meta": meta})


def band_covers(b: StepBand, F: Callable[[np.ndarray], np.ndarray]) -> bool:
    """True when L <= F <= U on every interval, checked at interval ends.

    F is assumed continuous and nondecreasing, so its infimum on an interval
    is at the left end and its supremum is the limit at the right end.
    """
    f_left = np.asarray(F(b.x_left), dtype=float)
    f_right = np.asarray(F(b.x_right), dtype=float)
    return bool(np.all(f_left >= b.lower) and np.all(f_right <= b.upper))
