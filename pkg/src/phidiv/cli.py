"""Command-line interface: ``phidiv {stat,pvalue,quantile,band,simulate}``.

Exit codes: 0 success, 1 usage error, 2 data error, 3 numeric failure.
Output is JSON unless ``--csv`` is given; every JSON document carries the
tool version, the resolved configuration, the seed and the method used.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import warnings
from pathlib import Path

import numpy as np
from scipy import stats as sps

from . import __version__
from .alternatives import UserGrid
from .asymptotic import ADCache, pvalue_asymptotic, tn_pvalue_asymptotic
from .bands import band_from_quantile
from .exact import N_MAX, QuantileCache, cdf_exact
from .exact import quantile as critical_value
from .harness import ExperimentPlan, run
from .statistics import Sample, hc_star, sn, sn_plus, sn_unrestricted, sn_ur_minus, sn_ur_plus, tn

CACHE_ENV = "PHIDIV_CACHE_DIR"

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 1, 2, 3


class UsageError(Exception):
    pass


class DataError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


# ---------------------------------------------------------------------------
# Input handling

_FAMILIES = {
    "normal": sps.norm,
    "logistic": sps.logistic,
    "exponential": sps.expon,
    "laplace": sps.laplace,
    "cauchy": sps.cauchy,
    "gumbel": sps.gumbel_r,
}


def parse_values(text: str) -> np.ndarray:
    """Newline (or comma) separated decimals; '#' starts a comment."""
    out = []
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        for tok in line.replace(",", " ").split():
            try:
                out.append(float(tok))
            except ValueError:
                raise DataError(f"line {lineno}: not a number: {tok!r}") from None
    if not out:
        raise DataError("no observations in input")
    arr = np.asarray(out)
    if not np.all(np.isfinite(arr)):
        raise DataError("input contains non-finite values")
    return arr


def null_transform(spec: str):
    """Probability integral transform for a ``--null`` spec.

    ``uniform`` is the identity; ``FAMILY[:loc,scale]`` uses a named
    location-scale family; ``grid:PATH`` reads ``x,F(x)`` rows.
    """
    name, _, rest = spec.partition(":")
    name = name.strip().lower()
    if name == "uniform" and not rest:
        return lambda y: y
    if name == "grid":
        grid = UserGrid.from_csv(rest)
        return grid.cdf
    if name in _FAMILIES:
        params = [float(t) for t in rest.split(",")] if rest else [0.0, 1.0]
        if len(params) != 2 or params[1] <= 0:
            raise UsageError(f"--null {spec!r}: expected {name}:loc,scale with scale > 0")
        dist = _FAMILIES[name](loc=params[0], scale=params[1])
        return dist.cdf
    raise UsageError(f"unknown --null spec {spec!r}")


def load_sample(args) -> Sample:
    if args.data is not None:
        text = args.data
    elif args.input in (None, "-"):
        text = sys.stdin.read()
    else:
        try:
            text = Path(args.input).read_text()
        except OSError as exc:
            raise DataError(f"cannot read {args.input}: {exc}") from None
    y = parse_values(text)
    x = np.asarray(null_transform(args.null)(y), dtype=float)
    if np.any(~np.isfinite(x)) or np.any(x <= 0.0) or np.any(x >= 1.0):
        raise DataError("values must lie strictly inside (0, 1) after the null transform")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return Sample.from_values(x)


def cache_dir(args) -> Path | None:
    d = args.cache_dir or os.environ.get(CACHE_ENV)
    return Path(d) if d else None


def _warn_range(s: float) -> None:
    if not (-1.0 <= s <= 2.0):
        print(f"warning: s={s:g} is outside [-1, 2]; p-values and critical values are not available there",
              file=sys.stderr)


# ---------------------------------------------------------------------------
# Commands

_STATS = {
    "sn": lambda s, x, a: sn(s, x),
    "tn": lambda s, x, a: tn(s, x),
    "plus": lambda s, x, a: sn_plus(s, x, a.x_cap),
    "unrestricted": lambda s, x, a: sn_unrestricted(s, x),
    "ur-plus": lambda s, x, a: sn_ur_plus(s, x),
    "ur-minus": lambda s, x, a: sn_ur_minus(s, x),
    "hc": lambda s, x, a: hc_star(x, a.alpha0),
}


def cmd_stat(args) -> tuple[dict, str]:
    sample = load_sample(args)
    if args.kind != "hc":
        _warn_range(args.s)
    st = _STATS[args.kind](args.s, sample, args)
    return {"statistic": st.statistic, "n_times_statistic": sample.n * st.statistic, "kind": st.kind,
            "n": st.n, "finite": st.finite}, "none"


def _resolve_method(method: str, n: int, n_max: int) -> str:
    if method == "auto":
        return "exact" if n <= n_max else "asymptotic"
    if method == "exact" and n > n_max:
        raise DataError(f"n={n} exceeds the exact limit {n_max}; use --method asymptotic or auto")
    return method


def cmd_pvalue(args) -> tuple[dict, str]:
    sample = load_sample(args)
    n = sample.n
    _warn_range(args.s)
    if args.kind == "tn":
        st = tn(args.s, sample)
        d = cache_dir(args)
        path = d / f"ad_draws_J{args.ad_truncation}_seed{args.seed}.npz" if d else None
        cache = ADCache.load_or_build(path, size=args.ad_draws, seed=args.seed, truncation=args.ad_truncation)
        p, se = tn_pvalue_asymptotic(n, args.s, st, cache)
        return {"statistic": st.statistic, "n": n, "kind": st.kind, "pvalue": p, "pvalue_se": se,
                "draws": int(cache.draws.size)}, "monte-carlo"
    st = sn(args.s, sample)
    method = _resolve_method(args.method, n, args.n_max)
    if method == "exact":
        p = 1.0 - cdf_exact(n, args.s, st.statistic, args.n_max) if st.finite else 0.0
    else:
        if n <= math.e:
            raise DataError("asymptotic p-values need n > e")
        p = pvalue_asymptotic(n, args.s, st)
    return {"statistic": st.statistic, "n": n, "kind": st.kind, "pvalue": p}, method


def _quantile_cache(args) -> QuantileCache | None:
    d = cache_dir(args)
    return QuantileCache(d / "quantiles.csv") if d else None


def cmd_quantile(args) -> tuple[dict, str]:
    _warn_range(args.s)
    if args.n < 1:
        raise UsageError("--n must be positive")
    if not (0.0 < args.alpha < 1.0):
        raise UsageError("--alpha must lie in (0, 1)")
    method = _resolve_method(args.method, args.n, args.n_max)
    q, used = critical_value(args.n, args.s, args.alpha, method, n_max=args.n_max, cache=_quantile_cache(args))
    return {"n": args.n, "s": args.s, "alpha": args.alpha, "quantile": q, "n_times_quantile": args.n * q}, used


def cmd_band(args) -> tuple[dict, str]:
    sample = load_sample(args)
    _warn_range(args.s)
    if not (0.0 < args.alpha < 1.0):
        raise UsageError("--alpha must lie in (0, 1)")
    method = _resolve_method(args.method, sample.n, args.n_max)
    q, used = critical_value(sample.n, args.s, args.alpha, method, n_max=args.n_max, cache=_quantile_cache(args))
    b = band_from_quantile(sample, args.s, q, alpha=args.alpha, method=used)
    if args.out:
        if args.out.endswith(".json"):
            b.to_json(args.out)
        else:
            b.to_csv(args.out)
    return {"band": b.to_dict(), "written": args.out}, used


def cmd_simulate(args) -> tuple[dict, str]:
    try:
        with open(args.plan) as fh:
            plan_dict = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise DataError(f"cannot read plan {args.plan}: {exc}") from None
    if args.seed_given:
        plan_dict["seed"] = args.seed
    if args.workers is not None:
        plan_dict["workers"] = args.workers
    try:
        plan = ExperimentPlan.from_dict(plan_dict)
    except (TypeError, ValueError) as exc:
        raise DataError(f"invalid plan: {exc}") from None
    result = run(plan)
    paths = result.write(args.outdir)
    return {"summaries": result.summaries, "files": [str(p) for p in paths],
            "runtime_seconds": result.runtime}, plan.method


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--csv", action="store_true", help="emit CSV instead of JSON")
    common.add_argument("--seed", type=int, default=None, help="random seed (default 12345)")
    common.add_argument("--cache-dir", default=None, help=f"cache directory (default ${CACHE_ENV})")
    common.add_argument("--n-max", type=int, default=N_MAX, help="largest n for the exact engine")

    data = _Parser(add_help=False)
    data.add_argument("input", nargs="?", default=None, help="data file (one value per line); '-' for stdin")
    data.add_argument("--data", default=None, help="inline comma-separated values")
    data.add_argument("--null", default="uniform", help="null cdf: uniform, FAMILY[:loc,scale] or grid:PATH")

    p = _Parser(prog="phidiv", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"phidiv {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    st = sub.add_parser("stat", parents=[common, data], help="compute a statistic")
    st.add_argument("--s", type=float, default=1.0)
    st.add_argument("--kind", choices=sorted(_STATS), default="sn")
    st.add_argument("--x-cap", type=float, default=0.5)
    st.add_argument("--alpha0", type=float, default=0.5)

    pv = sub.add_parser("pvalue", parents=[common, data], help="statistic and p-value")
    pv.add_argument("--s", type=float, default=1.0)
    pv.add_argument("--kind", choices=["sn", "tn"], default="sn")
    pv.add_argument("--method", choices=["exact", "asymptotic", "auto"], default="auto")
    pv.add_argument("--ad-draws", type=int, default=1_000_000)
    pv.add_argument("--ad-truncation", type=int, default=1_000)

    qu = sub.add_parser("quantile", parents=[common], help="critical value q_n(s, alpha)")
    qu.add_argument("--n", type=int, required=True)
    qu.add_argument("--s", type=float, default=1.0)
    qu.add_argument("--alpha", type=float, default=0.05)
    qu.add_argument("--method", choices=["exact", "asymptotic", "auto"], default="exact")

    bd = sub.add_parser("band", parents=[common, data], help="confidence band for the cdf")
    bd.add_argument("--s", type=float, default=1.0)
    bd.add_argument("--alpha", type=float, default=0.05)
    bd.add_argument("--method", choices=["exact", "asymptotic", "auto"], default="auto")
    bd.add_argument("--out", default=None, help="write the band to this .csv or .json file")

    sm = sub.add_parser("simulate", parents=[common], help="run a Monte Carlo plan")
    sm.add_argument("plan", help="JSON experiment plan")
    sm.add_argument("--outdir", default="results")
    sm.add_argument("--workers", type=int, default=None)
    return p


_COMMANDS = {
    "stat": cmd_stat,
    "pvalue": cmd_pvalue,
    "quantile": cmd_quantile,
    "band": cmd_band,
    "simulate": cmd_simulate,
}


def _config(args) -> dict:
    return {k: v for k, v in vars(args).items() if k not in ("seed_given",)}


def _emit(doc: dict, as_csv: bool, out) -> None:
    if not as_csv:
        json.dump(doc, out, indent=2, default=lambda o: o.item() if hasattr(o, "item") else str(o))
        out.write("\n")
        return
    result = doc["result"]
    if "band" in result:
        b = result["band"]
        w = csv.writer(out)
        w.writerow(["x_left", "x_right", "L", "U"])
        for row in b["intervals"]:
            w.writerow([f"{row[k]:.17g}" for k in ("x_left", "x_right", "L", "U")])
        return
    flat = {"version": doc["version"], "command": doc["config"]["command"], "method": doc["method"],
            "seed": doc["seed"]}
    flat.update({k: v for k, v in result.items() if not isinstance(v, (dict, list))})
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=list(flat))
    w.writeheader()
    w.writerow(flat)
    out.write(buf.getvalue())


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    args.seed_given = args.seed is not None
    if args.seed is None:
        args.seed = 12345
    try:
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            result, method = _COMMANDS[args.command](args)
        for w in caught:
            print(f"warning: {w.message}", file=sys.stderr)
    except UsageError as exc:
        print(f"phidiv: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DataError as exc:
        print(f"phidiv: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (ValueError, FloatingPointError, ArithmeticError, RuntimeError) as exc:
        print(f"phidiv: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    doc = {"tool": "phidiv", "version": __version__, "config": _config(args), "seed": args.seed,
           "method": method, "result": result}
    _emit(doc, args.csv, sys.stdout)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
