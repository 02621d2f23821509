"""Seeded Monte Carlo experiments.

Each replication draws its own generator from
``SeedSequence(master_seed, spawn_key=(stream, rep))``, so results depend
only on the plan and never on how replications are split across chunks or
worker processes.  Chunks are merged in replication order.
"""

from __future__ import annotations

import csv
import json
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
from scipy.stats import ks_2samp

from . import __version__
from .alternatives import MixtureParams, PoissonBoundary, boundary_limit_sampler, sup_ratio_tail
from .asymptotic import centering, quantile_asymptotic
from .bands import band_covers, band_from_quantile
from .exact import N_MAX, quantile_exact
from .statistics import Sample, batch_levels, plus_core, sup_core, tn_core

KINDS = ("null-calibration", "band-coverage", "poisson-boundary", "detection")

# Streams keep the draws of different roles independent.
STREAM_NULL = 0
STREAM_LIMIT = 1
STREAM_FIG_H0 = 50
STREAM_FIG_H1 = 51
STREAM_CELL = 100


@dataclass
class ExperimentPlan:
    kind: str
    n: int
    s_list: list[float]
    reps: int
    alpha: float = 0.05
    seed: int = 0
    method: str = "exact"
    alt: dict = field(default_factory=dict)
    workers: int = 1
    keep_draws: bool = False

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise ValueError(f"unknown experiment kind {self.kind!r}; expected one of {KINDS}")
        if self.reps < 1:
            raise ValueError("reps must be at least 1")
        if self.n < 1:
            raise ValueError("n must be at least 1")
        if not (0.0 <= self.alpha < 1.0):
            raise ValueError("alpha must lie in [0, 1)")
        if self.method not in ("exact", "asymptotic", "both"):
            raise ValueError("method must be exact, asymptotic or both")
        self.s_list = [float(s) for s in self.s_list]

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentPlan":
        d = dict(d)
        if "s" in d and "s_list" not in d:
            d["s_list"] = d.pop("s")
        return cls(**d)

    @classmethod
    def from_json(cls, path: str | os.PathLike) -> "ExperimentPlan":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class ExperimentResult:
    kind: str
    plan: dict
    summaries: dict
    runtime: float
    seeds: dict
    draws: dict = field(default_factory=dict)
    histograms: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "version": __version__,
            "kind": self.kind,
            "plan": self.plan,
            "summaries": self.summaries,
            "runtime_seconds": self.runtime,
            "seeds": self.seeds,
        }

    def write(self, outdir: str | os.PathLike) -> list[Path]:
        """Write summary JSON plus raw-draw and histogram CSVs; returns the paths."""
        out = Path(outdir)
        out.mkdir(parents=True, exist_ok=True)
        paths = [out / f"{self.kind}.json"]
        with open(paths[0], "w") as fh:
            json.dump(self.to_dict(), fh, indent=2, default=_jsonable)
        if self.draws:
            p = out / f"{self.kind}-draws.csv"
            names = sorted(self.draws)
            with open(p, "w", newline="") as fh:
                w = csv.writer(fh)
                w.writerow(["rep", *names])
                cols = [np.asarray(self.draws[k]) for k in names]
                for i in range(len(cols[0])):
                    w.writerow([i, *(f"{c[i]:.17g}" for c in cols)])
            paths.append(p)
        for name, rows in self.histograms.items():
            p = out / f"{self.kind}-hist-{name}.csv"
            write_histogram_csv(p, rows)
            paths.append(p)
        return paths


def _jsonable(x):
    if isinstance(x, (np.floating, np.integer)):
        return x.item()
    if isinstance(x, np.ndarray):
        return x.tolist()
    raise TypeError(type(x))


def rep_rng(seed: int, stream: int, rep: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(stream, rep)))


def rate_summary(hits, reps: int) -> dict:
    p = float(np.sum(hits)) / reps
    return {"rate": p, "se": math.sqrt(p * (1.0 - p) / reps), "reps": reps}


def write_histogram_csv(path: str | os.PathLike, rows: list[tuple]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["s", "hypothesis", "bin_left", "bin_right", "count"])
        for s, hyp, lo, hi, c in rows:
            w.writerow([f"{s:g}", hyp, f"{lo:.17g}", f"{hi:.17g}", int(c)])


def histogram_rows(s: float, samples: dict[str, np.ndarray], bins: int = 40) -> list[tuple]:
    """Shared-edge histograms of several labelled draw sets for one s."""
    pooled = np.concatenate([v[np.isfinite(v)] for v in samples.values()])
    edges = np.histogram_bin_edges(pooled, bins=bins)
    rows = []
    for label, v in samples.items():
        counts, _ = np.histogram(v[np.isfinite(v)], bins=edges)
        rows.extend((s, label, lo, hi, c) for lo, hi, c in zip(edges[:-1], edges[1:], counts))
    return rows


# ---------------------------------------------------------------------------
# Chunk workers: each returns {name: array over the chunk's replications}.


def _uniform_logs(rng, n):
    x = np.sort(rng.random(n))
    x[0] = max(x[0], np.finfo(float).tiny)
    return np.log(x), np.log1p(-x), x


def _chunk_null(plan: dict, start: int, stop: int) -> dict:
    n, s_list = plan["n"], plan["s_list"]
    rows = [_uniform_logs(rep_rng(plan["seed"], STREAM_NULL, r), n) for r in range(start, stop)]
    lv = np.stack([r[0] for r in rows])
    l1v = np.stack([r[1] for r in rows])
    x = np.stack([r[2] for r in rows])
    ul, ur = batch_levels(n)
    cum = np.arange(1, n + 1)
    out = {}
    for s in s_list:
        out[f"nS[{s:g}]"] = n * sup_core(s, lv, l1v, ul, ur, restricted=s < 1)
        if n >= 2 or s > 0:
            out[f"nT[{s:g}]"] = n * tn_core(s, x, cum, n)
    return out


def _chunk_band(plan: dict, start: int, stop: int) -> dict:
    n = plan["n"]
    qs = plan["_q"]
    out = {f"cover[{s:g}]": np.zeros(stop - start, dtype=bool) for s in plan["s_list"]}
    for i, r in enumerate(range(start, stop)):
        _, _, x = _uniform_logs(rep_rng(plan["seed"], STREAM_NULL, r), n)
        sample = Sample(np.log(x), np.log1p(-x), x)
        for s in plan["s_list"]:
            b = band_from_quantile(sample, s, qs[f"{s:g}"], alpha=plan["alpha"], method=plan["method"])
            out[f"cover[{s:g}]"][i] = band_covers(b, lambda t: t)
    return out


def _chunk_poisson(plan: dict, start: int, stop: int) -> dict:
    n = plan["n"]
    ul, ur = batch_levels(n)
    out = {f"S[{s:g}]": np.empty(stop - start) for s in plan["s_list"]}
    for s in plan["s_list"]:
        alt = PoissonBoundary(s)
        for i, r in enumerate(range(start, stop)):
            smp = alt.sample(rep_rng(plan["seed"], STREAM_NULL, r), n)
            out[f"S[{s:g}]"][i] = sup_core(s, smp.logs, smp.log1m, ul, ur, restricted=s < 1)
    return out


def _chunk_detection(plan: dict, start: int, stop: int) -> dict:
    n, s_list = plan["n"], plan["s_list"]
    ul, ur = batch_levels(n)
    cells = plan["alt"].get("cells", [])
    fig = plan["alt"].get("figure")
    out: dict[str, list] = {}

    def push(key, val):
        out.setdefault(key, []).append(val)

    for r in range(start, stop):
        lv, l1v, _ = _uniform_logs(rep_rng(plan["seed"], STREAM_NULL, r), n)
        for s in s_list:
            push(f"H0:nSplus[{s:g}]", n * plus_core(s, lv, l1v, ul, ur))
        for c, cell in enumerate(cells):
            alt = MixtureParams(n, cell["beta"], cell["r"]).alternative()
            smp = alt.sample(rep_rng(plan["seed"], STREAM_CELL + c, r), n)
            for s in s_list:
                push(f"cell{c}:nSplus[{s:g}]", n * plus_core(s, smp.logs, smp.log1m, ul, ur))
        if fig:
            alt = MixtureParams(n, fig["beta"], fig["r"]).alternative()
            for hyp, stream in (("H0", STREAM_FIG_H0), ("H1", STREAM_FIG_H1)):
                rng = rep_rng(plan["seed"], stream, r)
                if hyp == "H0":
                    flv, fl1v, _ = _uniform_logs(rng, n)
                else:
                    smp = alt.sample(rng, n)
                    flv, fl1v = smp.logs, smp.log1m
                for s in fig["s"]:
                    push(f"fig:{hyp}:nS[{s:g}]", n * sup_core(s, flv, fl1v, ul, ur, restricted=s < 1))
                    push(f"fig:{hyp}:nSplus[{s:g}]", n * plus_core(s, flv, fl1v, ul, ur))
    return {k: np.asarray(v, dtype=float) for k, v in out.items()}


_CHUNKERS = {
    "null-calibration": _chunk_null,
    "band-coverage": _chunk_band,
    "poisson-boundary": _chunk_poisson,
    "detection": _chunk_detection,
}


def _run_chunk(kind: str, plan: dict, start: int, stop: int) -> dict:
    return _CHUNKERS[kind](plan, start, stop)


def _chunk_size(kind: str, n: int) -> int:
    if kind == "null-calibration":
        return max(1, min(5000, 2_000_000 // n))
    return 50


def _map_reps(kind: str, plan: dict, reps: int, workers: int) -> dict:
    size = _chunk_size(kind, plan["n"])
    bounds = [(a, min(a + size, reps)) for a in range(0, reps, size)]
    if workers > 1 and len(bounds) > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            parts = list(ex.map(_run_chunk, [kind] * len(bounds), [plan] * len(bounds),
                                [a for a, _ in bounds], [b for _, b in bounds]))
    else:
        parts = [_run_chunk(kind, plan, a, b) for a, b in bounds]
    keys = parts[0].keys()
    return {k: np.concatenate([np.atleast_1d(p[k]) for p in parts]) for k in keys}


def _seeds(plan: ExperimentPlan) -> dict:
    return {"master": plan.seed, "per_replication": "SeedSequence(master, spawn_key=(stream, rep))"}


# ---------------------------------------------------------------------------
# Experiments


def run_null_calibration(plan: ExperimentPlan) -> ExperimentResult:
    """Null rejection rates at exact and/or asymptotic critical values."""
    t0 = time.perf_counter()
    n = plan.n
    draws = _map_reps(plan.kind, plan.to_dict(), plan.reps, plan.workers)
    methods = ["exact", "asymptotic"] if plan.method == "both" else [plan.method]
    r_n = centering(n).r_n if n > math.e else float("nan")
    summaries = {}
    for s in plan.s_list:
        ns = draws[f"nS[{s:g}]"]
        entry: dict = {"centered_quantiles": {}}
        for method in methods:
            if plan.alpha == 0.0:
                q = math.inf
            elif method == "exact":
                if n > N_MAX:
                    entry[method] = {"skipped": f"n > {N_MAX}"}
                    continue
                q = quantile_exact(n, s, plan.alpha)
            else:
                if not (-1.0 <= s <= 2.0) or n <= math.e:
                    entry[method] = {"skipped": "outside the asymptotic range"}
                    continue
                q = quantile_asymptotic(n, s, plan.alpha)
            entry[method] = {"critical_value": q, **rate_summary(ns > n * q, plan.reps)}
        centered = ns - r_n
        for p in (0.05, 0.25, 0.5, 0.75, 0.95):
            entry["centered_quantiles"][f"{p:g}"] = float(np.quantile(centered, p))
        key_t = f"nT[{s:g}]"
        if key_t in draws:
            t = draws[key_t]
            entry["nT_mean"] = float(t.mean())
            entry["nT_se"] = float(t.std(ddof=1) / math.sqrt(t.size)) if t.size > 1 else float("nan")
        summaries[f"{s:g}"] = entry
    return ExperimentResult(plan.kind, plan.to_dict(), summaries, time.perf_counter() - t0, _seeds(plan),
                            draws=draws if plan.keep_draws else {})


def run_band_coverage(plan: ExperimentPlan) -> ExperimentResult:
    """Fraction of null replications whose band contains the uniform cdf."""
    t0 = time.perf_counter()
    if plan.alpha == 0.0:
        qs = {f"{s:g}": math.inf for s in plan.s_list}
    elif plan.method == "asymptotic":
        qs = {f"{s:g}": quantile_asymptotic(plan.n, s, plan.alpha) for s in plan.s_list}
    else:
        qs = {f"{s:g}": quantile_exact(plan.n, s, plan.alpha) for s in plan.s_list}
    pd = {**plan.to_dict(), "_q": qs}
    draws = _map_reps(plan.kind, pd, plan.reps, plan.workers)
    summaries = {
        f"{s:g}": {"critical_value": qs[f"{s:g}"], "target": 1.0 - plan.alpha,
                   **rate_summary(draws[f"cover[{s:g}]"], plan.reps)}
        for s in plan.s_list
    }
    return ExperimentResult(plan.kind, plan.to_dict(), summaries, time.perf_counter() - t0, _seeds(plan),
                            draws={k: v.astype(float) for k, v in draws.items()} if plan.keep_draws else {})


def limit_tail(s: float, x: float) -> float:
    """P(limit variable > x) for the boundary family's limit law."""
    if s >= 1.0:
        return min(1.0, (s * x) ** (-1.0 / s))
    threshold = ((1.0 - s) * x) ** (-1.0 / s)
    return sup_ratio_tail(threshold) if threshold > 1.0 else 1.0


def run_poisson_boundary(plan: ExperimentPlan) -> ExperimentResult:
    """Law of S_n(s) under the boundary family against its Poisson-process limit."""
    t0 = time.perf_counter()
    draws = _map_reps(plan.kind, plan.to_dict(), plan.reps, plan.workers)
    thresholds = plan.alt.get("thresholds", [2.0, 4.0])
    limit_reps = int(plan.alt.get("limit_reps", min(plan.reps, 2000)))
    summaries = {}
    for s in plan.s_list:
        stat = draws[f"S[{s:g}]"]
        rng = rep_rng(plan.seed, STREAM_LIMIT, 0)
        limit = boundary_limit_sampler(s, rng, size=limit_reps)
        tails = {}
        for x in thresholds:
            hits = stat > x
            tails[f"{x:g}"] = {**rate_summary(hits, plan.reps), "limit": limit_tail(s, x)}
        summaries[f"{s:g}"] = {
            "tails": tails,
            "min": float(stat.min()),
            "ks_distance": float(ks_2samp(stat, limit).statistic),
            "limit_draws": limit_reps,
        }
    return ExperimentResult(plan.kind, plan.to_dict(), summaries, time.perf_counter() - t0, _seeds(plan),
                            draws=draws if plan.keep_draws else {})


def run_detection(plan: ExperimentPlan) -> ExperimentResult:
    """Power and size of the one-sided statistic against sparse normal mixtures.

    Rejection uses n S_n^+(s) >= log log n.  ``plan.alt`` holds ``cells``,
    a list of {beta, r}, and optionally ``figure`` = {beta, r, s, bins} for
    histograms of n S_n(s) - r_n and n S_n^+(s) under both hypotheses.
    """
    t0 = time.perf_counter()
    n = plan.n
    threshold = math.log(math.log(n))
    draws = _map_reps(plan.kind, plan.to_dict(), plan.reps, plan.workers)
    summaries: dict = {"threshold": threshold, "size": {}, "cells": []}
    for s in plan.s_list:
        summaries["size"][f"{s:g}"] = rate_summary(draws[f"H0:nSplus[{s:g}]"] >= threshold, plan.reps)
    for c, cell in enumerate(plan.alt.get("cells", [])):
        power = {f"{s:g}": rate_summary(draws[f"cell{c}:nSplus[{s:g}]"] >= threshold, plan.reps)
                 for s in plan.s_list}
        summaries["cells"].append({**cell, "power": power})
    histograms = {}
    fig = plan.alt.get("figure")
    if fig:
        r_n = centering(n).r_n
        bins = int(fig.get("bins", 40))
        centered, raw = [], []
        means = {}
        for s in fig["s"]:
            h0, h1 = draws[f"fig:H0:nS[{s:g}]"] - r_n, draws[f"fig:H1:nS[{s:g}]"] - r_n
            p0, p1 = draws[f"fig:H0:nSplus[{s:g}]"], draws[f"fig:H1:nSplus[{s:g}]"]
            centered += histogram_rows(s, {"H0": h0, "H1": h1}, bins)
            raw += histogram_rows(s, {"H0": p0, "H1": p1}, bins)
            means[f"{s:g}"] = {
                "centered_H0": float(h0.mean()), "centered_H1": float(h1.mean()),
                "plus_H0": float(p0.mean()), "plus_H1": float(p1.mean()),
            }
        histograms = {"centered": centered, "plus": raw}
        summaries["figure"] = {**fig, "r_n": r_n, "means": means}
    return ExperimentResult(plan.kind, plan.to_dict(), summaries, time.perf_counter() - t0, _seeds(plan),
                            draws=draws if plan.keep_draws else {}, histograms=histograms)


_RUNNERS = {
    "null-calibration": run_null_calibration,
    "band-coverage": run_band_coverage,
    "poisson-boundary": run_poisson_boundary,
    "detection": run_detection,
}


def run(plan: ExperimentPlan) -> ExperimentResult:
    return _RUNNERS[plan.kind](plan)
