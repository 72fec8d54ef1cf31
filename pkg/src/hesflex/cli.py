"""Command line front end.

Subcommands:

- ``envelope``      print the flexibility envelope at one PV operating point
- ``track``         dispatch against a regulation signal and settle it
- ``bid-sweep``     seasonal/hourly capacity bids from PV statistics
- ``synth-signal``  write a synthetic regulation signal as CSV

Exit codes: 0 success, 2 configuration problems, 3 input data problems,
4 runtime failures (infeasible dispatch, battery bound violations).
Reports are deterministic: the same config and seed give identical
bytes.
"""

from __future__ import annotations

import argparse
import contextlib
import csv
import sys

import numpy as np

from .assets import SocBoundsError, pv_power, pv_power_interp, pv_power_series
from .config import (
    ConfigError,
    RunConfig,
    build_fleet,
    build_guard,
    config_from_mapping,
    config_mapping,
    load_config,
    parse_config_text,
)
from .data_io import (
    DataFormatError,
    export_trace,
    read_irradiance_csv,
    read_signal_csv,
    report_lines,
    resample_zoh,
    synth_irradiance,
    synth_signal,
    write_signal_csv,
)
from .dispatch import InfeasibleDispatchError, delivered_deviation
from .flexibility import Scenario, envelope
from .market import (
    STATISTICS,
    MarketPrices,
    RegSignal,
    decomposed_bid,
    group_by_season_hour,
    max_flex_bid,
    pv_statistic,
    settle,
)
from .oracle import OracleProblem, solve as solve_oracle
from .simulation import run_guarded, simulate

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_RUNTIME = 4

_SEASON_ORDER = ("winter", "spring", "summer", "fall")
_SWEEP_COLUMNS = (
    "season", "hour", "statistic", "n_samples",
    "pv_stat_mw", "capacity_mw", "score", "qualified", "payment_usd",
)


def _fmt(x: float) -> str:
    return format(float(x), ".15g")


@contextlib.contextmanager
def _open_out(path):
    if path is None:
        yield sys.stdout
    else:
        with open(path, "w", newline="") as fh:
            yield fh


def _emit_report(pairs: dict, path) -> None:
    with _open_out(path) as fh:
        fh.write("\n".join(report_lines(pairs)))
        fh.write("\n")


def _configure(args) -> RunConfig:
    mapping: dict[str, str] = {}
    if getattr(args, "config", None):
        with open(args.config) as fh:
            mapping.update(parse_config_text(fh.read(), args.config))
    for flag, key in (
        ("scenario", "scenario"),
        ("capacity", "market.capacity_mw"),
        ("hours", "signal.hours"),
        ("seed", "signal.seed"),
        ("bias", "signal.bias"),
    ):
        value = getattr(args, flag, None)
        if value is not None:
            mapping[key] = str(value)
    guard = getattr(args, "guard", None)
    if guard is not None:
        mapping["guard.enabled"] = "true" if guard else "false"
    for item in getattr(args, "set", None) or ():
        key, sep, value = item.partition("=")
        if not sep:
            raise ConfigError([f"--set expects key=value, got {item!r}"])
        mapping[key.strip()] = value.strip()
    return config_from_mapping(mapping, getattr(args, "config", None) or "<cli>")


def _load_signal(cfg: RunConfig, path):
    """Signal values at the configured cadence plus their timestamps."""
    if path:
        series = read_signal_csv(path)
        if series.cadence > cfg.dt_s + 1e-9:
            series = resample_zoh(series, cfg.dt_s)
        elif series.cadence < cfg.dt_s - 1e-9:
            raise DataFormatError(
                f"{path}: cadence {series.cadence}s is finer than the run step {cfg.dt_s}s"
            )
        return series
    n = int(round(cfg.hours * 3600.0 / cfg.dt_s))
    if n < 2:
        raise ConfigError(["signal.hours gives fewer than two steps"])
    return synth_signal(cfg.seed, n, cadence=cfg.dt_s, bias=cfg.bias)


def _load_pv(cfg: RunConfig, fleet, path, n: int):
    if path:
        irr = read_irradiance_csv(path)
        if irr.cadence > cfg.dt_s + 1e-9:
            irr = resample_zoh(irr, cfg.dt_s)
        if len(irr.values) < n:
            raise DataFormatError(
                f"{path}: {len(irr.values)} PV steps cannot cover a {n}-step signal"
            )
        return pv_power_series(fleet.pv, irr.values[:n])
    return [pv_power(fleet.pv, cfg.irradiance_wm2)] * n


def cmd_envelope(args) -> int:
    cfg = _configure(args)
    fleet = build_fleet(cfg)
    p_pv = args.pv_mw if args.pv_mw is not None else pv_power(fleet.pv, cfg.irradiance_wm2)
    env = envelope(Scenario[cfg.scenario], fleet, p_pv)
    _emit_report(
        {
            "scenario": cfg.scenario,
            "p_pv_mw": p_pv,
            "p0_mw": env.p0,
            "dp_lo_mw": env.dp_lo,
            "dp_hi_mw": env.dp_hi,
            "width_mw": env.width,
        },
        args.out,
    )
    return EXIT_OK


def cmd_synth_signal(args) -> int:
    cfg = _configure(args)
    series = synth_signal(cfg.seed, args.steps, cadence=cfg.dt_s, bias=cfg.bias)
    with _open_out(args.out) as fh:
        write_signal_csv(series, fh)
    return EXIT_OK


def cmd_track(args) -> int:
    cfg = _configure(args)
    fleet = build_fleet(cfg)
    guard = build_guard(cfg)
    scenario = Scenario[cfg.scenario]
    series = _load_signal(cfg, args.signal_csv)
    r = series.values
    n = len(r)
    pv = _load_pv(cfg, fleet, args.pv_csv, n)
    dp_req = cfg.capacity_mw * r
    if guard is not None:
        records = run_guarded(guard, fleet, scenario, dp_req, pv, cfg.soc0)
    else:
        records = simulate(fleet, scenario, dp_req, pv, cfg.soc0)
    sig = RegSignal(r, cfg.dt_s)
    outcome = settle(
        cfg.capacity_mw, sig, delivered_deviation(records),
        MarketPrices(cfg.lambda_capacity, cfg.lambda_mileage),
    )
    residual = max(
        abs(rec.p_hes - ((rec.p_pv - rec.p_curtailed) - rec.p_cl + rec.p_batt))
        for rec in records
    )
    reach = [
        max(abs(e.dp_lo), e.dp_hi)
        for e in (envelope(scenario, fleet, p) for p in pv)
    ]
    pairs: dict[str, object] = dict(config_mapping(cfg))
    pairs.update(
        steps=n,
        performance_score=max(0.0, outcome.score),
        performance_score_raw=outcome.score,
        mileage=outcome.mileage,
        qualified=outcome.qualified,
        payment_usd=outcome.payment,
        soc_final=records[-1].soc_after,
        max_balance_residual_mw=residual,
        max_flex_bid_mw=max_flex_bid(reach, sig),
    )
    if args.oracle:
        if scenario is not Scenario.S1:
            raise ConfigError(["--oracle compares against the baseline mode; use scenario S1"])
        problem = OracleProblem(fleet, cfg.capacity_mw, r, np.asarray(pv), cfg.soc0)
        warm = [rec.p_batt for rec in records]
        sol = solve_oracle(problem, warm_start_p_batt=warm)
        t = problem.targets()
        rule_obj = float(
            sum(abs(t[k] - (rec.p_hes - rec.p0)) for k, rec in enumerate(records))
        )
        pairs.update(
            rule_objective_mw=rule_obj,
            oracle_objective_mw=sol.objective,
            oracle_gap_mw=rule_obj - sol.objective,
            oracle_backend=sol.backend,
            oracle_lower_bound_mw=sol.lower_bound,
            oracle_certified=sol.certified_optimal,
        )
    if args.trace:
        export_trace(records, args.trace, times=series.timestamps, signal=r, dt_s=cfg.dt_s)
    _emit_report(pairs, args.out)
    return EXIT_OK


def bid_sweep_rows(cfg: RunConfig, days: int, eval_steps: int = 900, statistics=None):
    """Capacity bids and scored test tracking per (season, hour) bucket.

    One synthetic PV year (or ``days`` of it) is bucketed by season and
    UTC hour. Each bucket gets one capacity bid per PV statistic, and
    every bid in a bucket is scored against the same evaluation signal
    and the same constant PV (the bucket mean), so within a bucket the
    scores respond to the bid alone.
    """
    if days < 1:
        raise ConfigError(["bid sweep needs at least one day"])
    if eval_steps < 2:
        raise ConfigError(["bid sweep needs at least two evaluation steps"])
    if cfg.pv_rated_mw > cfg.load_max_mw + 1e-9:
        raise ConfigError(
            ["bid sweep runs the PV-following mode, which needs pv.rated_mw <= load.p_max_mw"]
        )
    stats = tuple(statistics) if statistics else STATISTICS
    for s in stats:
        if s not in STATISTICS:
            raise ConfigError([f"unknown statistic '{s}'"])
    fleet = build_fleet(cfg)
    prices = MarketPrices(cfg.lambda_capacity, cfg.lambda_mileage)
    irr = synth_irradiance(cfg.seed, days)
    pv_mw = pv_power_interp(fleet.pv, irr.values)
    groups = group_by_season_hour(irr.timestamps, pv_mw)
    ordered = sorted(groups, key=lambda k: (_SEASON_ORDER.index(k[0]), k[1]))
    rows = []
    for idx, key in enumerate(ordered):
        season, hour = key
        samples = groups[key]
        eval_sig = synth_signal(
            cfg.seed + 7919 * (idx + 1), eval_steps, cadence=cfg.dt_s, full_scale=True
        )
        sig = RegSignal(eval_sig.values, cfg.dt_s)
        pv_eval = [float(np.mean(samples))] * eval_steps
        for stat in stats:
            stat_mw = pv_statistic(samples, stat)
            bid = decomposed_bid(fleet.battery, stat_mw)
            records = simulate(fleet, Scenario.S2, bid * eval_sig.values, pv_eval, cfg.soc0)
            outcome = settle(bid, sig, delivered_deviation(records), prices)
            rows.append(
                (season, hour, stat, samples.size, stat_mw, bid,
                 outcome.score, outcome.qualified, outcome.payment)
            )
    return rows


def cmd_bid_sweep(args) -> int:
    cfg = _configure(args)
    stats = None if args.statistic == "all" else (args.statistic,)
    rows = bid_sweep_rows(cfg, args.days, args.eval_steps, stats)
    with _open_out(args.out) as fh:
        w = csv.writer(fh)
        w.writerow(_SWEEP_COLUMNS)
        for season, hour, stat, n, stat_mw, bid, score, qualified, pay in rows:
            w.writerow(
                (season, hour, stat, n, _fmt(stat_mw), _fmt(bid),
                 _fmt(score), "true" if qualified else "false", _fmt(pay))
            )
    return EXIT_OK


def _build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="flat key = value config file")
    common.add_argument("--set", action="append", metavar="KEY=VALUE",
                        help="override one config key (repeatable)")
    common.add_argument("--scenario", choices=sorted(Scenario.__members__))
    common.add_argument("--capacity", type=float, help="regulation capacity bid, MW")
    common.add_argument("--hours", type=float, help="synthetic signal duration")
    common.add_argument("--seed", type=int, help="random seed for synthetic inputs")
    common.add_argument("--bias", type=float, help="synthetic signal bias in [-1, 1]")
    guard = common.add_mutually_exclusive_group()
    guard.add_argument("--guard", dest="guard", action="store_true", default=None,
                       help="enable the SoC guard band")
    guard.add_argument("--no-guard", dest="guard", action="store_false", default=None)
    common.add_argument("--out", help="output file (default: stdout)")

    parser = argparse.ArgumentParser(
        prog="hesflex",
        description="Real-time flexibility of a PV + battery + controllable-load plant.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("envelope", parents=[common],
                       help="flexibility envelope at one PV operating point")
    p.add_argument("--pv-mw", type=float, help="PV power (default: from irradiance)")
    p.set_defaults(func=cmd_envelope)

    p = sub.add_parser("track", parents=[common],
                       help="dispatch against a regulation signal and settle it")
    p.add_argument("--signal-csv", help="timestamp,r input (default: synthetic)")
    p.add_argument("--pv-csv", help="timestamp,ghi_wm2 input (default: constant)")
    p.add_argument("--trace", help="write the per-step dispatch trace CSV here")
    p.add_argument("--oracle", action="store_true",
                   help="also solve the offline optimal benchmark (scenario S1)")
    p.set_defaults(func=cmd_track)

    p = sub.add_parser("bid-sweep", parents=[common],
                       help="seasonal/hourly capacity bids from PV statistics")
    p.add_argument("--days", type=int, default=365, help="synthetic PV days (default 365)")
    p.add_argument("--eval-steps", type=int, default=900,
                   help="evaluation signal length per bucket (default 900)")
    p.add_argument("--statistic", choices=STATISTICS + ("all",), default="all")
    p.set_defaults(func=cmd_bid_sweep)

    p = sub.add_parser("synth-signal", parents=[common],
                       help="write a synthetic regulation signal as CSV")
    p.add_argument("--steps", type=int, required=True, help="number of samples")
    p.set_defaults(func=cmd_synth_signal)

    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        for msg in exc.errors:
            print(f"error: {msg}", file=sys.stderr)
        return EXIT_CONFIG
    except DataFormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (InfeasibleDispatchError, SocBoundsError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
