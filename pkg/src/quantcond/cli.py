"""Command-line interface.

Subcommands::

    quantcond qq          Q-Q plot data with bands and 20/60/20 markers
    quantcond tailstat    S_n of one series, optionally against a null table
    quantcond mc-null     simulate and save a null table for S_n
    quantcond backtest    rolling-window M vs CM Markowitz backtest
    quantcond recover-cov central-window covariance reconstruction

Windows are symmetric: ``--p`` sets ``(p, 1 - p)``. Exit status is 0 on
success, 2 for usage or configuration errors and 1 for data or numerical
failures.
"""

from __future__ import annotations

import argparse
import datetime as dt
import hashlib
import json
import sys
from pathlib import Path

from . import __version__
from .backtest import BacktestConfig, run_backtest, write_cumulative_csv, write_report
from .conditional_moments import (QuantileWindow, conditional_estimates, estimates_to_json,
                                  reconstruct_covariance, unconditional_estimates)
from .data_io import (align, align_prices, benchmark_from_table, compute_returns, load_prices,
                      load_returns, weighted_benchmark)
from .diagnostics import qq_dataset, write_qq
from .errors import ConfigurationError, QuantcondError
from .tail_statistic import compare_to_null, load_null_table, mc_null_table, s_n, save_null_table

DEFAULT_P = 0.198


def _sha256(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def manifest(command, config, inputs=(), seed=None):
    return {
        "command": command,
        "config": config,
        "inputs": [{"path": str(p), "sha256": _sha256(p)} for p in inputs],
        "seed": seed,
        "version": __version__,
        "timestamp": dt.datetime.now(dt.timezone.utc).isoformat(timespec="seconds"),
    }


def _dump(obj, path):
    Path(path).write_text(json.dumps(obj, indent=2) + "\n", encoding="utf-8")


def _window(p):
    if not 0.0 < p < 0.5:
        raise ConfigurationError(f"--p must satisfy 0 < p < 0.5 so that p < q = 1 - p, got {p}")
    return QuantileWindow.symmetric(p)


def _manifest_path(out):
    out = Path(out)
    return out.with_name(out.stem + ".manifest.json")


def _panel(path, series, kind, freq):
    if series == "returns":
        return load_returns(path, kind, freq)
    return compute_returns(load_prices(path), kind, freq)


def cmd_qq(args):
    window = _window(args.p)
    panel = _panel(args.input, args.series, args.kind, args.freq)
    values = panel.column(args.ticker)
    ds = qq_dataset(values, window, level=args.level, standardize=not args.raw)
    out = Path(args.out)
    config = {"input": str(args.input), "ticker": args.ticker, "freq": args.freq, "kind": args.kind,
              "series": args.series, "p": args.p, "level": args.level, "standardize": not args.raw}
    csv_path, meta_path = write_qq(ds, out, extra_meta={
        "ticker": args.ticker, "manifest": manifest("qq", config, [args.input])})
    print(f"wrote {csv_path} and {meta_path} (n = {ds.n})")
    return 0


def cmd_tailstat(args):
    window = _window(args.p)
    panel = _panel(args.input, args.series, args.kind, args.freq)
    column = args.column or panel.tickers[0]
    result = s_n(panel.column(column), window)
    payload = {"column": column, **result.to_json()}
    inputs = [args.input]
    if args.null_table:
        table = load_null_table(args.null_table)
        payload["comparison"] = {"table": table.label, **compare_to_null(result, table)}
        inputs.append(args.null_table)
    print(f"{column}: S_n = {result.s_n:.6g}  n = {result.n}  window = ({window.p:g}, {window.q:g})")
    if "comparison" in payload:
        cmp = payload["comparison"]
        print(f"vs {cmp['table']}: z = {cmp['z_score']:.4g}  percentile = {cmp['percentile']:.4g}")
    if args.out:
        _dump(payload, args.out)
        config = {k: v for k, v in vars(args).items() if k != "func"}
        _dump(manifest("tailstat", _jsonable(config), inputs), _manifest_path(args.out))
    return 0


def cmd_mc_null(args):
    window = _window(args.p)
    dist = "normal" if args.dist == "normal" else "student-t"
    table = mc_null_table(dist, args.n, args.reps, window, args.seed, df=args.df,
                          loc=args.loc, scale=args.scale, workers=args.workers)
    save_null_table(table, args.out)
    config = {"dist": dist, "df": args.df, "n": args.n, "reps": args.reps, "p": args.p,
              "loc": args.loc, "scale": args.scale}
    _dump(manifest("mc-null", config, seed=args.seed), _manifest_path(args.out))
    print(f"{table.label} n={table.n} reps={table.reps}: mean = {table.mean:.4f}  sd = {table.sd:.4f}")
    return 0


def _methods(text):
    methods = tuple(m.strip().upper() for m in text.split(",") if m.strip())
    if not methods or set(methods) - {"M", "CM"}:
        raise argparse.ArgumentTypeError(f"methods must be a comma list of m, cm; got {text!r}")
    return tuple(m for m in ("M", "CM") if m in methods)


def cmd_backtest(args):
    prices, index_prices = align_prices(load_prices(args.prices), load_prices(args.index))
    panel = compute_returns(prices, "simple", "daily")
    index = benchmark_from_table(compute_returns(index_prices, "simple", "daily"))
    if args.learn + args.hold > panel.n:
        raise ConfigurationError(
            f"--learn {args.learn} + --hold {args.hold} exceeds the {panel.n} available returns")
    config = BacktestConfig(learn_days=args.learn, hold_days=args.hold, window=_window(args.p),
                            methods=args.methods)
    report = run_backtest(panel, index, config)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_report(report, out / "report.json")
    write_cumulative_csv(report, out / "cumulative.csv")
    _dump(manifest("backtest", {**config.to_json(), "prices": str(args.prices),
                                "index": str(args.index)}, [args.prices, args.index]),
          out / "manifest.json")
    for m in config.methods:
        res = report[m]
        sr = "undefined" if res.sharpe is None else f"{res.sharpe:.4f}"
        print(f"{m}: Sharpe = {sr}  rebalances = {len(res.rebalances)}  skipped = {len(res.skipped)}")
    return 0


def _benchmark_arg(text):
    kind, _, value = text.partition(":")
    if kind not in ("external", "weights") or not value:
        raise argparse.ArgumentTypeError("expected external:<file> or weights:<w1,w2,...>")
    if kind == "weights":
        try:
            return kind, [float(v) for v in value.split(",")]
        except ValueError:
            raise argparse.ArgumentTypeError(f"bad weights {value!r}") from None
    return kind, value


def cmd_recover_cov(args):
    if not 0.0 < args.p < 0.5:
        raise ConfigurationError(f"reconstruction needs an interior window; --p {args.p} is not in (0, 0.5)")
    window = _window(args.p)
    kind, value = args.benchmark
    inputs = [args.input]
    if kind == "weights":
        panel = _panel(args.input, args.series, args.kind, args.freq)
        bench = weighted_benchmark(panel, value)
    else:
        inputs.append(value)
        if args.series == "returns":
            panel, bench = align(load_returns(args.input, args.kind, args.freq),
                                 benchmark_from_table(load_returns(value, args.kind, args.freq)))
        else:
            prices, index_prices = align_prices(load_prices(args.input), load_prices(value))
            panel = compute_returns(prices, args.kind, args.freq)
            bench = benchmark_from_table(compute_returns(index_prices, args.kind, args.freq))
    est = conditional_estimates(panel, bench, window)
    rec = reconstruct_covariance(est)
    full = unconditional_estimates(panel, bench)
    payload = {
        "tickers": list(panel.tickers),
        "benchmark": {"source": bench.source,
                      "loadings": None if bench.loadings is None else bench.loadings.tolist()},
        "window": window.to_list(),
        "s_value": rec.s_value,
        "conditional": estimates_to_json(est, rec.s_value),
        "sigma_bar": rec.sigma_bar.tolist(),
        "benchmark_sigma_bar": rec.benchmark_sigma_bar,
        "classical_cov": full.cov.tolist(),
        "classical_benchmark_variance": full.benchmark_variance,
    }
    _dump(payload, args.out)
    config = {"input": str(args.input), "benchmark": f"{kind}:{value}", "p": args.p,
              "series": args.series, "kind": args.kind, "freq": args.freq}
    _dump(manifest("recover-cov", _jsonable(config), inputs), _manifest_path(args.out))
    print(f"wrote {args.out} ({len(panel.tickers)} assets, {est.count} of {panel.n} rows in window)")
    return 0


def _jsonable(obj):
    return json.loads(json.dumps(obj, default=str))


def _add_series_flags(sp):
    sp.add_argument("--series", choices=("prices", "returns"), default="prices",
                    help="whether the file holds prices (default) or returns")
    sp.add_argument("--freq", choices=("daily", "weekly", "monthly"), default="daily")
    sp.add_argument("--kind", choices=("simple", "log"), default="simple")


def build_parser():
    parser = argparse.ArgumentParser(prog="quantcond", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("qq", help="Q-Q plot data")
    sp.add_argument("--input", required=True, type=Path)
    sp.add_argument("--ticker", required=True)
    _add_series_flags(sp)
    sp.add_argument("--p", type=float, default=DEFAULT_P)
    sp.add_argument("--level", type=float, default=0.95)
    sp.add_argument("--raw", action="store_true", help="do not standardize the sample")
    sp.add_argument("--out", required=True, type=Path, help="CSV path; metadata goes to <out>.json")
    sp.set_defaults(func=cmd_qq)

    sp = sub.add_parser("tailstat", help="tail statistic S_n")
    sp.add_argument("--input", required=True, type=Path)
    sp.add_argument("--column", help="ticker column (default: first)")
    _add_series_flags(sp)
    sp.add_argument("--p", type=float, default=DEFAULT_P)
    sp.add_argument("--null-table", type=Path)
    sp.add_argument("--out", type=Path)
    sp.set_defaults(func=cmd_tailstat)

    sp = sub.add_parser("mc-null", help="Monte Carlo null table for S_n")
    sp.add_argument("--dist", choices=("normal", "t"), required=True)
    sp.add_argument("--df", type=float)
    sp.add_argument("--n", type=int, default=2500)
    sp.add_argument("--reps", type=int, default=10_000)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--p", type=float, default=DEFAULT_P)
    sp.add_argument("--loc", type=float, default=0.0)
    sp.add_argument("--scale", type=float, default=1.0)
    sp.add_argument("--workers", type=int, default=1)
    sp.add_argument("--out", required=True, type=Path)
    sp.set_defaults(func=cmd_mc_null)

    sp = sub.add_parser("backtest", help="rolling-window M vs CM backtest")
    sp.add_argument("--prices", required=True, type=Path)
    sp.add_argument("--index", required=True, type=Path)
    sp.add_argument("--learn", type=int, default=120)
    sp.add_argument("--hold", type=int, default=60)
    sp.add_argument("--methods", type=_methods, default=("M", "CM"))
    sp.add_argument("--p", type=float, default=DEFAULT_P)
    sp.add_argument("--out-dir", required=True, type=Path)
    sp.set_defaults(func=cmd_backtest)

    sp = sub.add_parser("recover-cov", help="reconstruct covariance from the central window")
    sp.add_argument("--input", required=True, type=Path)
    sp.add_argument("--benchmark", required=True, type=_benchmark_arg)
    _add_series_flags(sp)
    sp.add_argument("--p", type=float, default=DEFAULT_P)
    sp.add_argument("--out", required=True, type=Path)
    sp.set_defaults(func=cmd_recover_cov)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "mc-null" and args.dist == "t" and args.df is None:
        parser.error("--dist t requires --df")
    try:
        return args.func(args)
    except ConfigurationError as exc:
        print(f"quantcond {args.command}: error: {exc}", file=sys.stderr)
        return 2
    except (QuantcondError, ArithmeticError, OSError) as exc:
        print(f"quantcond {args.command}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
