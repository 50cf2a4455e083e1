"""Batch command-line front end.

Subcommands:
  simulate      run a configured season and write summary + per-person records
  sweep         sensitivity sweep over error-term bounds, CSV + chart out
  oracle        closed-form exceedance probabilities for x/b/t grids
  gen-scenario  write an hourly ozone CSV (zero or synthetic)

Exit codes: 0 success, 1 configuration error, 2 runtime error.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
from dataclasses import replace
from datetime import date
from pathlib import Path

import yaml

from . import __version__
from .config import ConfigError, config_to_dict, parse_config
from .engine import aggregate_risk, prepare, run_prepared, write_person_records, write_summary
from .oracle import ExceedanceQuery, p_at_least_one, p_no_decrement
from .population import Season, OzoneSeries, synthetic_series, write_ozone_csv
from .sweep import SweepSpec, emit_chart, emit_table, run_sweep
from .variability import RedrawFrequency

THREADS_ENV = "OZRISK_THREADS"


def _default_threads() -> int:
    raw = os.environ.get(THREADS_ENV, "")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def _parse_float(text: str) -> float:
    s = text.strip().lower()
    if s in ("inf", "infinity", "unbounded"):
        return math.inf
    return float(text)


def _parse_float_list(text: str) -> list[float]:
    return [_parse_float(part) for part in text.split(",") if part.strip()]


def _parse_grid(text: str) -> tuple[float, ...]:
    """Either 'lo:hi:step' or a comma-separated list."""
    if ":" in text:
        lo, hi, step = (float(p) for p in text.split(":"))
        if step <= 0:
            raise ValueError("grid step must be > 0")
        vals = []
        v = lo
        while v <= hi + 1e-9:
            vals.append(round(v, 10))
            v += step
        return tuple(vals)
    return tuple(_parse_float_list(text))


def _parse_season(text: str) -> Season:
    try:
        start_s, end_s = text.split(":")
        return Season(start=date.fromisoformat(start_s), end=date.fromisoformat(end_s))
    except ValueError as exc:
        raise ConfigError(f"bad season {text!r} (expected YYYY-MM-DD:YYYY-MM-DD): {exc}") from None


def _load_config(args) -> "RunConfig":
    cfg = parse_config(args.config)
    if getattr(args, "seed", None) is not None:
        cfg = replace(cfg, seed=args.seed)
    if getattr(args, "n", None) is not None:
        cfg = replace(cfg, population=replace(cfg.population, n=args.n))
    return cfg


def cmd_simulate(args) -> int:
    cfg = _load_config(args)
    out_dir = Path(args.out_dir if args.out_dir else cfg.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    prep = prepare(cfg)
    results, n_negative = run_prepared(
        prep, cfg.variability, threads=args.threads, chunk_size=args.chunk_size
    )
    estimate = aggregate_risk(results, cfg.risk)

    echo = config_to_dict(cfg)
    with open(out_dir / "config_echo.yaml", "w") as fh:
        yaml.safe_dump(echo, fh, sort_keys=False)
    write_person_records(results, cfg.risk, out_dir / "persons.jsonl")
    diagnostics = {"negative_median_scale_persons": n_negative}
    write_summary(estimate, echo, diagnostics, out_dir / "summary.json")

    print(
        f"risk: {estimate.percent_of_population:.2f}% "
        f"({estimate.n_exceeding} of {estimate.n_total} persons with >= "
        f"{cfg.risk.min_days} day(s) at dFEV1 >= {cfg.risk.threshold}%)"
    )
    if n_negative:
        print(f"note: {n_negative} person(s) had a negative median-response scale")
    print(f"outputs: {out_dir}/summary.json, {out_dir}/persons.jsonl, {out_dir}/config_echo.yaml")
    return 0


def cmd_sweep(args) -> int:
    cfg = _load_config(args)
    terms = tuple(t.strip() for t in args.term.split(",") if t.strip())
    frequencies = tuple(
        RedrawFrequency(f.strip().lower()) for f in args.frequencies.split(",") if f.strip()
    )
    grid = _parse_grid(args.grid)
    spec = SweepSpec(config=cfg, terms=terms, grid=grid, frequencies=frequencies)

    out_dir = Path(args.out_dir if args.out_dir else cfg.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    result = run_sweep(spec, threads=args.threads)

    stem = f"sweep_{'_'.join(terms)}"
    table_path = out_dir / f"{stem}.csv"
    emit_table(result, table_path)
    wrote = [str(table_path)]
    if len(terms) == 1:
        chart_path = out_dir / f"{stem}.svg"
        emit_chart(result, chart_path)
        wrote.append(str(chart_path))

    for row in result.rows:
        bounds = f"u={row.bound_u:g} nu1={row.bound_nu1:g} nu2={row.bound_nu2:g}"
        print(f"{row.frequency.value:>6}  {bounds:<28} risk {row.risk_pct:6.2f}%")
    for label, message in result.failures:
        print(f"FAILED cell {label}: {message}", file=sys.stderr)
    print("wrote: " + ", ".join(wrote))
    return 2 if result.failures else 0


def cmd_oracle(args) -> int:
    if args.x is not None:
        xs = _parse_float_list(args.x)
    elif args.sigma is not None and args.threshold is not None:
        if args.sigma <= 0:
            raise ConfigError("--sigma must be > 0")
        xs = [args.threshold / args.sigma]
    else:
        raise ConfigError("oracle needs either --x or both --sigma and --threshold")
    bs = _parse_float_list(args.bound)
    ts = [int(t) for t in args.draws.split(",") if t.strip()]

    lines = []
    print(f"{'x_sd':>8} {'b_sd':>8} {'t':>6} {'p_no_decrement':>16} {'p_at_least_one':>16} {'risk_pct':>9}")
    for x in xs:
        for b in bs:
            for t in ts:
                q = ExceedanceQuery(x_sd=x, b_sd=b, t=t)
                pnd = p_no_decrement(q)
                pd = p_at_least_one(q)
                print(f"{x:8.4f} {b:8.4g} {t:6d} {pnd:16.12f} {pd:16.12f} {100*pd:9.4f}")
                lines.append((x, b, t, pnd, pd))
    if args.out:
        with open(args.out, "w") as fh:
            fh.write("x_sd,b_sd,t,p_no_decrement,p_at_least_one,risk_pct\n")
            for x, b, t, pnd, pd in lines:
                fh.write(f"{x!r},{b!r},{t},{pnd!r},{pd!r},{100*pd!r}\n")
        print(f"wrote: {args.out}")
    return 0


def cmd_gen_scenario(args) -> int:
    season = _parse_season(args.season)
    if args.zero_ozone:
        series = OzoneSeries.zeros(season)
    elif args.synthetic:
        series = synthetic_series(season, seed=args.seed, peak_ppb=args.peak_ppb)
    else:
        raise ConfigError("gen-scenario needs --zero-ozone or --synthetic")
    write_ozone_csv(series, args.out)
    print(f"wrote {season.n_hours} hourly rows to {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ozrisk",
        description="Population-level ozone lung-function risk microsimulator",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_sim = sub.add_parser("simulate", help="run one configured season simulation")
    p_sim.add_argument("--config", required=True, help="YAML run configuration")
    p_sim.add_argument("--seed", type=int, default=None, help="override the master seed")
    p_sim.add_argument("--threads", type=int, default=_default_threads(),
                       help=f"worker threads (default ${THREADS_ENV} or 1)")
    p_sim.add_argument("--out-dir", default=None, help="override the config's output dir")
    p_sim.add_argument("--n", type=int, default=None, help="override the population size")
    p_sim.add_argument("--chunk-size", type=int, default=None, help=argparse.SUPPRESS)
    p_sim.set_defaults(func=cmd_simulate)

    p_sweep = sub.add_parser("sweep", help="bound/frequency sensitivity sweep")
    p_sweep.add_argument("--config", required=True)
    p_sweep.add_argument("--term", required=True,
                         help="swept term(s): u, nu1, nu2, or a pair like nu1,nu2")
    p_sweep.add_argument("--grid", default="0:4:0.5",
                         help="bounds grid, 'lo:hi:step' or comma list (default 0:4:0.5)")
    p_sweep.add_argument("--frequencies", default="daily,hourly")
    p_sweep.add_argument("--seed", type=int, default=None)
    p_sweep.add_argument("--n", type=int, default=None, help="override the population size")
    p_sweep.add_argument("--threads", type=int, default=_default_threads())
    p_sweep.add_argument("--out-dir", default=None)
    p_sweep.set_defaults(func=cmd_sweep)

    p_or = sub.add_parser("oracle", help="closed-form zero-ozone exceedance probabilities")
    p_or.add_argument("--x", default=None, help="threshold(s) in sd units, comma list")
    p_or.add_argument("--sigma", type=float, default=None, help="additive-term sd (with --threshold)")
    p_or.add_argument("--threshold", type=float, default=None, help="decrement threshold %% (with --sigma)")
    p_or.add_argument("--bound", default="inf", help="bound(s) in sd units, comma list; 'inf' allowed")
    p_or.add_argument("--draws", default="275", help="draw count(s) t, comma list")
    p_or.add_argument("--out", default=None, help="also write a CSV table")
    p_or.set_defaults(func=cmd_oracle)

    p_gen = sub.add_parser("gen-scenario", help="write an hourly ozone CSV")
    group = p_gen.add_mutually_exclusive_group(required=True)
    group.add_argument("--zero-ozone", action="store_true")
    group.add_argument("--synthetic", action="store_true")
    p_gen.add_argument("--season", default="2017-03-01:2017-11-30",
                       help="YYYY-MM-DD:YYYY-MM-DD (default the 2017 season)")
    p_gen.add_argument("--seed", type=int, default=0)
    p_gen.add_argument("--peak-ppb", type=float, default=75.0)
    p_gen.add_argument("--out", required=True)
    p_gen.set_defaults(func=cmd_gen_scenario)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse uses exit code 2 for usage errors; those are config errors here
        return 0 if exc.code in (0, None) else 1
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 1
    except (ValueError, OSError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
