"""Scenario orchestration: profiles -> battery dispatch -> hourly markets.

A day runs like this: prosumers optimize self-consumption against the
tariff, state the periods in which they have surplus to trade, and each
trading period runs one market under the configured mechanism.  Buyers
enter with their period demand and a price ceiling at the retail (ToU)
rate; sellers enter with their surplus and a floor at the feed-in rate.
Consumers buy their raw demand; prosumers participate with their net
position in a period (seller when surplus exceeds their own grid import,
and in scenario 2 buyer when it does not), which keeps any household on a
single side of each market.

Settlement follows the buyer/seller perspective: savings are what buyers
avoided paying the retailer, profit is what sellers earned above the
feed-in incentive.  Money is integer 1e-8 dollars throughout, so report
totals equal the sum of their per-hour entries exactly.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from statistics import mean, pstdev

import numpy as np

from . import clearing, traders
from .hems import BatterySpec, NetLoadProfile, SurplusSchedule, extract_surplus, optimize_self_consumption
from .orderbook import OrderBook
from .profiles import (
    HouseholdProfile,
    ProfileGenParams,
    TariffSchedule,
    default_tariff,
    generate_population,
)
from .units import money_to_dollars, to_ticks, to_wh, trade_money, wh_to_kwh

MECHANISMS = ("p2p", "centralized", "vcg")
_MECH_INDEX = {m: i for i, m in enumerate(MECHANISMS)}

SCENARIO_TRADING_STARTS = {
    1: tuple(h * 60 for h in range(8, 16)),   # 08:00 .. 15:00 period starts
    2: tuple(h * 60 for h in range(7, 20)),   # 07:00 .. 19:00 period starts
}


def default_battery() -> BatterySpec:
    """10 kWh / 5 kW battery, 90% round-trip efficient, empty at midnight.

    Starting empty is the steady daily cycle: the evening discharge runs the
    battery down before midnight, so each simulated day begins where the
    previous one ended.
    """
    return BatterySpec(
        capacity=10.0,
        max_charge=5.0 / 60,
        max_discharge=5.0 / 60,
        efficiency=0.9,
        initial_soc=0.0,
    )


@dataclass(frozen=True)
class ScenarioConfig:
    scenario: int
    mechanism: str
    population: ProfileGenParams
    battery: BatterySpec = field(default_factory=default_battery)
    tariff: TariffSchedule = field(default_factory=default_tariff)
    trading_starts: tuple[int, ...] | None = None   # period start minutes
    t_d: int = 60                                   # period length, minutes
    lam: float | None = None                        # arrivals/minute; None -> 10x agents
    reserve_fraction: float = 0.5
    seed: int = 0
    n_seed_replicates: int = 1
    hems_interval_minutes: int = 15
    soc_resolution: float | None = None
    zip_params: traders.ZipParams = field(default_factory=traders.ZipParams)

    def __post_init__(self) -> None:
        if self.scenario not in (1, 2):
            raise ValueError(f"scenario must be 1 or 2, got {self.scenario}")
        if self.mechanism not in MECHANISMS:
            raise ValueError(f"unknown mechanism {self.mechanism!r}")
        if not 0 <= self.reserve_fraction <= 1:
            raise ValueError("reserve_fraction must be in [0, 1]")
        if self.t_d <= 0 or self.t_d % self.hems_interval_minutes:
            raise ValueError("t_d must be a positive multiple of the HEMS interval")
        if self.n_seed_replicates < 1:
            raise ValueError("n_seed_replicates must be at least 1")
        if self.lam is not None and self.lam <= 0:
            raise ValueError("lam must be positive")
        starts = self.periods()
        day = self.tariff.slots_per_day
        prev_end = 0
        for s in sorted(starts):
            if s % self.hems_interval_minutes:
                raise ValueError("trading periods must align to the HEMS interval")
            if s < prev_end:
                raise ValueError("trading periods overlap")
            if s + self.t_d > day:
                raise ValueError("trading period extends past the end of the day")
            prev_end = s + self.t_d

    def periods(self) -> tuple[int, ...]:
        if self.trading_starts is not None:
            return self.trading_starts
        return SCENARIO_TRADING_STARTS[self.scenario]


@dataclass(frozen=True)
class TradeRecord:
    """One trader's fill in one period; money is what the buyer paid or the
    seller received (1e-8 $)."""

    period_start: int
    trader: str
    role: str          # "buy" | "sell"
    quantity_wh: int
    money: int

    @property
    def unit_price(self) -> float:
        """Average $/kWh for this fill."""
        return money_to_dollars(self.money) / wh_to_kwh(self.quantity_wh)


@dataclass
class HourMetrics:
    period_start: int
    q_t_wh: int
    buy_money: int
    savings: int
    profit: int
    n_trades: int

    @property
    def hour(self) -> int:
        return self.period_start // 60

    @property
    def avg_price(self) -> float | None:
        """Quantity-weighted mean transaction price, $/kWh."""
        if self.q_t_wh == 0:
            return None
        return money_to_dollars(self.buy_money) / wh_to_kwh(self.q_t_wh)


@dataclass
class RunMetrics:
    """Metrics for one (scenario, mechanism, seed) day."""

    scenario: int
    mechanism: str
    seed: int
    hours: list[HourMetrics]
    records: list[TradeRecord]
    replacement_grid_cost: int  # grid cost of re-buying sold battery reserves

    @property
    def total_q_t_wh(self) -> int:
        return sum(h.q_t_wh for h in self.hours)

    @property
    def total_savings(self) -> int:
        return sum(h.savings for h in self.hours)

    @property
    def total_profit(self) -> int:
        return sum(h.profit for h in self.hours)


@dataclass
class MetricsReport:
    """Per-seed runs plus mean/std of the daily totals across seeds."""

    scenario: int
    mechanism: str
    runs: list[RunMetrics]

    @property
    def seeds(self) -> list[int]:
        return [r.seed for r in self.runs]

    def _summary(self, values: list[float]) -> tuple[float, float]:
        return mean(values), pstdev(values) if len(values) > 1 else 0.0

    @property
    def savings_summary(self) -> tuple[float, float]:
        return self._summary([money_to_dollars(r.total_savings) for r in self.runs])

    @property
    def profit_summary(self) -> tuple[float, float]:
        return self._summary([money_to_dollars(r.total_profit) for r in self.runs])

    @property
    def energy_summary(self) -> tuple[float, float]:
        return self._summary([wh_to_kwh(r.total_q_t_wh) for r in self.runs])


@dataclass
class DayContext:
    """Mechanism-independent inputs for one simulated day."""

    config: ScenarioConfig
    seed: int
    profiles: list[HouseholdProfile]
    netloads: dict[str, NetLoadProfile]
    surplus: dict[str, SurplusSchedule]


def prepare_day(config: ScenarioConfig, seed: int | None = None) -> DayContext:
    """Generate the population and run every prosumer's battery dispatch."""
    seed = config.seed if seed is None else seed
    params = dataclasses.replace(config.population, seed=seed)
    profiles = generate_population(params)
    netloads: dict[str, NetLoadProfile] = {}
    surplus: dict[str, SurplusSchedule] = {}
    for p in profiles:
        if not p.is_prosumer:
            continue
        net = optimize_self_consumption(
            p,
            config.battery,
            config.tariff,
            interval_minutes=config.hems_interval_minutes,
            soc_resolution=config.soc_resolution,
        )
        netloads[p.id] = net
        surplus[p.id] = extract_surplus(
            net, config.scenario, config.reserve_fraction, tariff=config.tariff
        )
    return DayContext(config, seed, profiles, netloads, surplus)


def run_period(
    buyers: list[tuple[str, int]],
    sellers: list[tuple[str, int]],
    mechanism: str,
    s_plus_ticks: int,
    s_minus_ticks: int,
    rng: np.random.Generator,
    t_d: int = 60,
    lam: float | None = None,
    zip_params: traders.ZipParams = traders.ZipParams(),
) -> list[TradeRecord]:
    """Run one trading period and return uniform per-trader fill records.

    Buyers' limit is the period's retail price, sellers' floor the feed-in
    price.  Empty or one-sided markets yield no records.
    """
    buyers = [(t, q) for t, q in buyers if q > 0]
    sellers = [(t, q) for t, q in sellers if q > 0]
    if not buyers and not sellers:
        return []

    if mechanism == "p2p":
        entries = [(t, "buy", s_plus_ticks, q) for t, q in buyers]
        entries += [(t, "sell", s_minus_ticks, q) for t, q in sellers]
        agents = traders.make_agents(
            entries, s_minus_ticks, s_plus_ticks, rng, zip_params
        )
        rate = lam if lam is not None else 10.0 * len(entries) / t_d
        trades = traders.session(agents, OrderBook(), t_d, rate, rng, zip_params)
        records = []
        for fill in trades:
            money = trade_money(fill.price, fill.quantity)
            records.append(TradeRecord(0, fill.buyer, "buy", fill.quantity, money))
            records.append(TradeRecord(0, fill.seller, "sell", fill.quantity, money))
        return records

    order_set = clearing.LimitOrderSet(
        buys=tuple(clearing.LimitOrder(t, s_plus_ticks, q) for t, q in buyers),
        sells=tuple(clearing.LimitOrder(t, s_minus_ticks, q) for t, q in sellers),
    )
    if mechanism == "centralized":
        result = clearing.clear_equilibrium(order_set)
    elif mechanism == "vcg":
        result = clearing.vcg(order_set)
    else:
        raise ValueError(f"unknown mechanism {mechanism!r}")

    records = []
    for t, _ in buyers:
        if result.allocations[t] > 0:
            records.append(
                TradeRecord(0, t, "buy", result.allocations[t], result.payments[t])
            )
    for t, _ in sellers:
        if result.allocations[t] > 0:
            records.append(
                TradeRecord(0, t, "sell", result.allocations[t], -result.payments[t])
            )
    return records


def compute_settlement(
    records: list[TradeRecord], tariff: TariffSchedule
) -> tuple[int, int]:
    """(savings, profit) in 1e-8 $: buyers' avoided retail cost and sellers'
    earnings above the feed-in incentive, from fill records alone."""
    savings = 0
    profit = 0
    for r in records:
        buy_price, sell_price = tariff.lookup(r.period_start)
        if r.role == "buy":
            savings += trade_money(to_ticks(buy_price), r.quantity_wh) - r.money
        else:
            profit += r.money - trade_money(to_ticks(sell_price), r.quantity_wh)
    return savings, profit


def _period_demand_wh(profile: HouseholdProfile, start: int, end: int) -> int:
    return to_wh(float(profile.demand[start:end].sum()))


def _period_import_wh(net: NetLoadProfile, start: int, end: int) -> int:
    mps = net.minutes_per_slot
    return to_wh(float(net.x_plus[start // mps : end // mps].sum()))


def run_day(day: DayContext, mechanism: str, seed: int | None = None) -> RunMetrics:
    """Run every trading period of a prepared day under one mechanism."""
    config = day.config
    seed = day.seed if seed is None else seed
    hours: list[HourMetrics] = []
    all_records: list[TradeRecord] = []
    replacement_cost = 0

    for start in config.periods():
        end = start + config.t_d
        buy_price, sell_price = config.tariff.lookup(start)
        s_plus, s_minus = to_ticks(buy_price), to_ticks(sell_price)

        buyers: list[tuple[str, int]] = []
        sellers: list[tuple[str, int]] = []
        offer_parts: dict[str, tuple[int, int]] = {}  # seller -> (offer, withheld)
        for p in day.profiles:
            if not p.is_prosumer:
                qty = _period_demand_wh(p, start, end)
                if qty > 0:
                    buyers.append((p.id, qty))
                continue
            offer = to_wh(day.surplus[p.id].quantity_between(start, end))
            grid_import = _period_import_wh(day.netloads[p.id], start, end)
            if config.scenario == 2:
                net_position = offer - grid_import
                if net_position > 0:
                    withheld = to_wh(day.surplus[p.id].withheld_between(start, end))
                    sellers.append((p.id, net_position))
                    offer_parts[p.id] = (net_position, min(withheld, net_position))
                elif net_position < 0:
                    buyers.append((p.id, -net_position))
            elif offer > 0:
                sellers.append((p.id, offer))
                offer_parts[p.id] = (offer, 0)

        rng = np.random.default_rng(
            np.random.SeedSequence((seed, config.scenario, _MECH_INDEX[mechanism], start))
        )
        records = run_period(
            buyers,
            sellers,
            mechanism,
            s_plus,
            s_minus,
            rng,
            t_d=config.t_d,
            lam=config.lam,
            zip_params=config.zip_params,
        )
        records = [dataclasses.replace(r, period_start=start) for r in records]
        savings, profit = compute_settlement(records, config.tariff)

        sold: dict[str, int] = {}
        for r in records:
            if r.role == "sell":
                sold[r.trader] = sold.get(r.trader, 0) + r.quantity_wh
        for trader, sold_wh in sold.items():
            offer, withheld = offer_parts[trader]
            withheld_sold = max(0, sold_wh - (offer - withheld))
            replacement_cost += trade_money(s_plus, withheld_sold)

        q_t = sum(r.quantity_wh for r in records if r.role == "buy")
        buy_money = sum(r.money for r in records if r.role == "buy")
        n_trades = sum(1 for r in records if r.role == "buy")
        hours.append(HourMetrics(start, q_t, buy_money, savings, profit, n_trades))
        all_records.extend(records)

    return RunMetrics(
        scenario=config.scenario,
        mechanism=mechanism,
        seed=seed,
        hours=hours,
        records=all_records,
        replacement_grid_cost=replacement_cost,
    )


def run_scenario(config: ScenarioConfig) -> MetricsReport:
    """Run ``n_seed_replicates`` days (seeds seed, seed+1, ...) and report."""
    runs = []
    for i in range(config.n_seed_replicates):
        seed = config.seed + i
        day = prepare_day(config, seed)
        runs.append(run_day(day, config.mechanism, seed))
    return MetricsReport(scenario=config.scenario, mechanism=config.mechanism, runs=runs)
