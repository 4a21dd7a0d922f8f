"""Batch entry point: parse a run configuration, simulate, write CSV/plot data.

Usage::

    lemsim --config day.cfg --out results/ --scenario all \
           --mechanisms p2p,centralized,vcg --seeds 0..19 --jobs 4

The output directory may also be given via the ``LEMSIM_OUT`` environment
variable.  Exit status is 0 on success, nonzero with a diagnostic on any
failure; partially written outputs are removed.

Configuration file
------------------
INI-style sections with flat keys; unknown sections or keys are an error.
All keys are optional (defaults in parentheses)::

    [profiles]
    n_households = 100            ; population size
    n_prosumers = 37              ; households with PV + battery
    base_load = 0.004             ; kWh per minute
    appliance_event_rate = 0.5    ; events per hour
    appliance_event_energy = 0.2, 1.5   ; kWh per event, sampled uniformly
    pv_peak = 2.0, 3.5            ; kW, sampled uniformly per prosumer
    pv_noise = 0.15               ; multiplicative noise scale
    daylight_window = 330, 1110   ; sunrise/sunset minute of day

    [battery]
    capacity = 10.0               ; kWh
    max_charge = 0.0833333        ; kWh per minute
    max_discharge = 0.0833333     ; kWh per minute
    efficiency = 0.9              ; round trip
    initial_soc = 0.0             ; kWh at midnight

    [tariff]                      ; omit for the default ToU/FiT schedule
    segments =
        0, 0.13, 0.08             ; start_minute, buy $/kWh, sell $/kWh
        420, 0.25, 0.08
        840, 0.52, 0.08
        1200, 0.25, 0.08
        1320, 0.13, 0.08

    [market]
    scenario = all                ; 1, 2 or all
    mechanisms = p2p, centralized, vcg
    trading_hours = 8-15          ; period start hours; default per scenario
    t_d = 60                      ; trading period length, minutes
    lambda = 25.0                 ; arrivals/minute; default 10x agent count
    reserve_fraction = 0.5        ; scenario-2 battery share offered at peak
    seed = 0
    n_seed_replicates = 1
    hems_interval_minutes = 15
    soc_resolution = 0.1          ; kWh; default capacity/100

Output files
------------
``metrics.csv``
    ``scenario,mechanism,seed,hour,avg_price,energy_kwh,savings,profit`` --
    one row per trading hour per run.  Money columns are exact 8-decimal
    dollars; ``avg_price`` is the quantity-weighted mean transaction price.
``settlement.csv``
    ``scenario,mechanism,hour,savings_mean,savings_std,profit_mean,profit_std``
    across seed replicates, plus a ``total`` row per (scenario, mechanism).
``trades.csv``
    ``scenario,mechanism,seed,period,trader,role,quantity_kwh,money,unit_price``
    -- the raw fill log.
``tp_s<scenario>_<mechanism>.dat`` / ``qt_s<scenario>_<mechanism>.dat``
    gnuplot-ready hourly series (seed means) of the average transaction
    price and the energy traded.

Profile/tariff serialization (``profiles.write_profiles`` and friends) uses
a header row followed by one row per minute slot of comma-separated kWh
values; tariff files list segments as ``start_minute,buy,sell``.  The trade
log and clearing formats of the market modules are written by
``orderbook.write_trade_log`` and ``clearing.write_clearing_csv``.
"""

from __future__ import annotations

import argparse
import configparser
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import fields
from pathlib import Path
from statistics import mean, pstdev

from .hems import BatterySpec
from .profiles import ProfileGenParams, TariffSchedule, TariffSegment, default_tariff
from .sim import MECHANISMS, MetricsReport, ScenarioConfig, run_scenario
from .units import money_to_dollars, wh_to_kwh


class ConfigError(ValueError):
    """A configuration file failed to parse or validate."""


_PROFILE_KEYS = {
    "n_households": int,
    "n_prosumers": int,
    "base_load": float,
    "appliance_event_rate": float,
    "appliance_event_energy": "pair",
    "pv_peak": "pair",
    "pv_noise": float,
    "daylight_window": "intpair",
    "slots_per_day": int,
}
_BATTERY_KEYS = {
    "capacity": float,
    "max_charge": float,
    "max_discharge": float,
    "efficiency": float,
    "initial_soc": float,
}
_MARKET_KEYS = {
    "scenario": str,
    "mechanisms": str,
    "trading_hours": str,
    "t_d": int,
    "lambda": float,
    "reserve_fraction": float,
    "seed": int,
    "n_seed_replicates": int,
    "hems_interval_minutes": int,
    "soc_resolution": float,
}


def _parse_value(section: str, key: str, raw: str, kind):
    try:
        if kind == "pair":
            lo, hi = (float(v) for v in raw.split(","))
            return (lo, hi)
        if kind == "intpair":
            lo, hi = (int(v) for v in raw.split(","))
            return (lo, hi)
        return kind(raw)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"[{section}] {key}: cannot parse {raw!r}") from exc


def _section_values(parser: configparser.ConfigParser, section: str, schema: dict) -> dict:
    if section not in parser:
        return {}
    values = {}
    for key, raw in parser[section].items():
        if key not in schema:
            raise ConfigError(f"[{section}] unknown key {key!r}")
        values[key] = _parse_value(section, key, raw, schema[key])
    return values


def _parse_tariff(parser: configparser.ConfigParser) -> TariffSchedule:
    if "tariff" not in parser:
        return default_tariff()
    section = dict(parser["tariff"])
    raw = section.pop("segments", None)
    slots = int(section.pop("slots_per_day", 1440))
    if section:
        raise ConfigError(f"[tariff] unknown key {next(iter(section))!r}")
    if raw is None:
        return default_tariff()
    segments = []
    for line_no, line in enumerate(raw.strip().splitlines(), 1):
        try:
            start, buy, sell = (v.strip() for v in line.split(","))
            segments.append(TariffSegment(int(start), float(buy), float(sell)))
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"[tariff] segments line {line_no}: bad row {line!r}") from exc
    try:
        return TariffSchedule(tuple(segments), slots_per_day=slots)
    except ValueError as exc:
        raise ConfigError(f"[tariff] {exc}") from exc


def _parse_trading_hours(raw: str) -> tuple[int, ...]:
    hours: list[int] = []
    for part in raw.split(","):
        part = part.strip()
        if "-" in part:
            lo, hi = part.split("-")
            hours.extend(range(int(lo), int(hi) + 1))
        else:
            hours.append(int(part))
    return tuple(h * 60 for h in hours)


def parse_config(
    path: str | Path,
    scenario: str | None = None,
    mechanisms: list[str] | None = None,
    seed: int | None = None,
    n_seeds: int | None = None,
) -> list[ScenarioConfig]:
    """Parse a run configuration into one ScenarioConfig per (scenario,
    mechanism); command-line overrides take precedence over file values."""
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    try:
        parser.read_string(path.read_text(), source=str(path))
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {exc}") from exc

    known_sections = {"profiles", "battery", "tariff", "market"}
    unknown = set(parser.sections()) - known_sections
    if unknown:
        raise ConfigError(f"unknown section [{sorted(unknown)[0]}]")

    market = _section_values(parser, "market", _MARKET_KEYS)
    base_seed = seed if seed is not None else market.get("seed", 0)
    replicates = n_seeds if n_seeds is not None else market.get("n_seed_replicates", 1)

    profile_kwargs = _section_values(parser, "profiles", _PROFILE_KEYS)
    try:
        population = ProfileGenParams(seed=base_seed, **profile_kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"[profiles] {exc}") from exc

    battery_kwargs = _section_values(parser, "battery", _BATTERY_KEYS)
    try:
        battery = (
            BatterySpec(**battery_kwargs)
            if battery_kwargs
            else None
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"[battery] {exc}") from exc

    tariff = _parse_tariff(parser)

    scenario_raw = scenario if scenario is not None else str(market.get("scenario", "all"))
    if scenario_raw == "all":
        scenarios = [1, 2]
    elif scenario_raw in ("1", "2"):
        scenarios = [int(scenario_raw)]
    else:
        raise ConfigError(f"scenario must be 1, 2 or all, got {scenario_raw!r}")

    if mechanisms is None:
        raw = market.get("mechanisms", ",".join(MECHANISMS))
        mechanisms = [m.strip() for m in str(raw).split(",") if m.strip()]
    for m in mechanisms:
        if m not in MECHANISMS:
            raise ConfigError(f"unknown mechanism {m!r} (choose from {MECHANISMS})")

    trading = market.get("trading_hours")
    starts = _parse_trading_hours(trading) if trading is not None else None

    configs = []
    for scen in scenarios:
        for mech in mechanisms:
            kwargs = dict(
                scenario=scen,
                mechanism=mech,
                population=population,
                tariff=tariff,
                trading_starts=starts,
                seed=base_seed,
                n_seed_replicates=replicates,
            )
            if battery is not None:
                kwargs["battery"] = battery
            if "t_d" in market:
                kwargs["t_d"] = market["t_d"]
            if "lambda" in market:
                kwargs["lam"] = market["lambda"]
            if "reserve_fraction" in market:
                kwargs["reserve_fraction"] = market["reserve_fraction"]
            if "hems_interval_minutes" in market:
                kwargs["hems_interval_minutes"] = market["hems_interval_minutes"]
            if "soc_resolution" in market:
                kwargs["soc_resolution"] = market["soc_resolution"]
            try:
                configs.append(ScenarioConfig(**kwargs))
            except ValueError as exc:
                raise ConfigError(str(exc)) from exc
    return configs


def _dollars(money: int) -> str:
    return f"{money / 1e8:.8f}"


def _write_metrics(out, reports: list[MetricsReport]) -> None:
    out.write("scenario,mechanism,seed,hour,avg_price,energy_kwh,savings,profit\n")
    for rep in reports:
        for run in rep.runs:
            for h in run.hours:
                price = "" if h.avg_price is None else f"{h.avg_price:.6f}"
                out.write(
                    f"{rep.scenario},{rep.mechanism},{run.seed},{h.hour},"
                    f"{price},{wh_to_kwh(h.q_t_wh):.3f},"
                    f"{_dollars(h.savings)},{_dollars(h.profit)}\n"
                )


def _write_settlement(out, reports: list[MetricsReport]) -> None:
    out.write(
        "scenario,mechanism,hour,savings_mean,savings_std,profit_mean,profit_std\n"
    )
    for rep in reports:
        hours = sorted({h.hour for run in rep.runs for h in run.hours})
        for hour in hours:
            sav = [
                money_to_dollars(h.savings)
                for run in rep.runs
                for h in run.hours
                if h.hour == hour
            ]
            pro = [
                money_to_dollars(h.profit)
                for run in rep.runs
                for h in run.hours
                if h.hour == hour
            ]
            out.write(
                f"{rep.scenario},{rep.mechanism},{hour},"
                f"{mean(sav):.8f},{pstdev(sav) if len(sav) > 1 else 0:.8f},"
                f"{mean(pro):.8f},{pstdev(pro) if len(pro) > 1 else 0:.8f}\n"
            )
        s_mean, s_std = rep.savings_summary
        p_mean, p_std = rep.profit_summary
        out.write(
            f"{rep.scenario},{rep.mechanism},total,"
            f"{s_mean:.8f},{s_std:.8f},{p_mean:.8f},{p_std:.8f}\n"
        )


def _write_trades(out, reports: list[MetricsReport]) -> None:
    out.write(
        "scenario,mechanism,seed,period,trader,role,quantity_kwh,money,unit_price\n"
    )
    for rep in reports:
        for run in rep.runs:
            for r in run.records:
                out.write(
                    f"{rep.scenario},{rep.mechanism},{run.seed},{r.period_start // 60},"
                    f"{r.trader},{r.role},{wh_to_kwh(r.quantity_wh):.3f},"
                    f"{_dollars(r.money)},{r.unit_price:.6f}\n"
                )


def _write_series(out_dir: Path, rep: MetricsReport, created: list[Path]) -> None:
    hours = sorted({h.hour for run in rep.runs for h in run.hours})
    tp = out_dir / f"tp_s{rep.scenario}_{rep.mechanism}.dat"
    qt = out_dir / f"qt_s{rep.scenario}_{rep.mechanism}.dat"
    with open(tp, "w") as f_tp, open(qt, "w") as f_qt:
        created.extend([tp, qt])
        f_tp.write(f"# avg transaction price, scenario {rep.scenario}, {rep.mechanism}\n")
        f_tp.write("# hour price_dollars_per_kwh\n")
        f_qt.write(f"# energy traded, scenario {rep.scenario}, {rep.mechanism}\n")
        f_qt.write("# hour energy_kwh\n")
        for hour in hours:
            prices = [
                h.avg_price
                for run in rep.runs
                for h in run.hours
                if h.hour == hour and h.avg_price is not None
            ]
            energy = [
                wh_to_kwh(h.q_t_wh)
                for run in rep.runs
                for h in run.hours
                if h.hour == hour
            ]
            if prices:
                f_tp.write(f"{hour} {mean(prices):.6f}\n")
            f_qt.write(f"{hour} {mean(energy):.3f}\n")


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="lemsim", description="Local energy market simulator"
    )
    parser.add_argument("--config", required=True, help="run configuration file")
    parser.add_argument(
        "--out",
        default=os.environ.get("LEMSIM_OUT"),
        help="output directory (or set LEMSIM_OUT)",
    )
    parser.add_argument("--scenario", choices=["1", "2", "all"], default=None)
    parser.add_argument(
        "--mechanisms", default=None, help="comma-separated subset of " + ",".join(MECHANISMS)
    )
    seeds = parser.add_mutually_exclusive_group()
    seeds.add_argument("--seed", type=int, default=None, help="single seed")
    seeds.add_argument("--seeds", default=None, help="seed range N..M, inclusive")
    parser.add_argument("--jobs", type=int, default=1, help="parallel scenario runs")
    parser.add_argument("--verbose", action="store_true")
    args = parser.parse_args(argv)

    if args.out is None:
        print("lemsim: no output directory (--out or LEMSIM_OUT)", file=sys.stderr)
        return 2

    seed = args.seed
    n_seeds = None
    if args.seeds is not None:
        try:
            lo, hi = args.seeds.split("..")
            seed, n_seeds = int(lo), int(hi) - int(lo) + 1
        except ValueError:
            print(f"lemsim: bad --seeds range {args.seeds!r}", file=sys.stderr)
            return 2
        if n_seeds < 1:
            print(f"lemsim: empty --seeds range {args.seeds!r}", file=sys.stderr)
            return 2

    mechanisms = None
    if args.mechanisms is not None:
        mechanisms = [m.strip() for m in args.mechanisms.split(",") if m.strip()]

    try:
        configs = parse_config(
            args.config,
            scenario=args.scenario,
            mechanisms=mechanisms,
            seed=seed,
            n_seeds=n_seeds,
        )
    except ConfigError as exc:
        print(f"lemsim: {exc}", file=sys.stderr)
        return 2

    out_dir = Path(args.out)
    created: list[Path] = []
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        if args.jobs > 1:
            with ProcessPoolExecutor(max_workers=args.jobs) as pool:
                reports = list(pool.map(run_scenario, configs))
        else:
            reports = []
            for cfg in configs:
                if args.verbose:
                    print(
                        f"lemsim: scenario {cfg.scenario} {cfg.mechanism} "
                        f"seeds {cfg.seed}..{cfg.seed + cfg.n_seed_replicates - 1}",
                        file=sys.stderr,
                    )
                reports.append(run_scenario(cfg))

        for name, writer in (
            ("metrics.csv", _write_metrics),
            ("settlement.csv", _write_settlement),
            ("trades.csv", _write_trades),
        ):
            path = out_dir / name
            with open(path, "w") as f:
                created.append(path)
                writer(f, reports)
        for rep in reports:
            _write_series(out_dir, rep, created)
    except Exception as exc:  # noqa: BLE001 - deliberate cleanup barrier
        for path in created:
            try:
                path.unlink()
            except OSError:
                pass
        print(f"lemsim: {exc}", file=sys.stderr)
        return 1

    if args.verbose:
        print(f"lemsim: wrote {len(created)} files to {out_dir}", file=sys.stderr)
    return 0


if __name__ == "__main__":
    sys.exit(main())
