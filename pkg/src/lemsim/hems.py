"""Per-household self-consumption cost minimization and surplus extraction.

The day is aggregated from minute slots into fixed decision intervals
(default 15 minutes) and the battery dispatch is solved exactly by forward
dynamic programming over a discretized state-of-charge grid.  The objective
is the grid bill: sum over intervals of buy_price * import - sell_price *
export.  Charging and discharging each lose sqrt(efficiency), per-interval
power caps and SOC bounds are hard constraints, and demand is fixed (no
schedulable appliances).  The terminal SOC is free.

The battery serves the household only: discharge in an interval is capped
at the household's own net demand, so grid exports are PV surplus alone
(the usual feed-in eligibility rule).  Without this cap a free terminal
SOC would have every household dump its stored energy to the grid for the
feed-in price at the end of the day.

Because the DP accumulates stage costs left-to-right, its optimal value is
bit-identical to the minimum over explicitly enumerated state paths whose
costs are accumulated the same way; tests exploit this for exact checks.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .profiles import HouseholdProfile, TariffSchedule

BALANCE_TOL = 1e-9


@dataclass(frozen=True)
class BatterySpec:
    """Battery parameters; energy in kWh, caps per minute slot."""

    capacity: float
    max_charge: float      # kWh per minute slot, measured at the bus
    max_discharge: float   # kWh per minute slot, measured at the bus
    efficiency: float      # round-trip fraction in (0, 1]
    initial_soc: float

    def __post_init__(self) -> None:
        if self.capacity < 0:
            raise ValueError("capacity must be non-negative")
        if not 0 <= self.initial_soc <= self.capacity:
            raise ValueError(
                f"initial_soc {self.initial_soc} outside [0, {self.capacity}]"
            )
        if self.max_charge <= 0 or self.max_discharge <= 0:
            raise ValueError("charge/discharge caps must be positive")
        if not 0 < self.efficiency <= 1:
            raise ValueError("efficiency must be in (0, 1]")


@dataclass
class NetLoadProfile:
    """Optimized grid flows at the DP's decision-interval resolution.

    All arrays have one entry per interval except ``soc`` which has the
    start-of-interval trajectory plus the terminal state (length n+1).
    ``charge``/``discharge`` are bus-side energies; the battery stores
    eta*charge and releases discharge/eta with eta = sqrt(efficiency).
    """

    x_plus: np.ndarray     # grid import, kWh >= 0
    x_minus: np.ndarray    # grid export, kWh >= 0
    soc: np.ndarray
    charge: np.ndarray
    discharge: np.ndarray
    demand: np.ndarray     # aggregated interval demand
    pv: np.ndarray
    minutes_per_slot: int
    cost: float

    def __post_init__(self) -> None:
        residual = (self.demand + self.charge + self.x_minus
                    - self.pv - self.discharge - self.x_plus)
        if np.any(np.abs(residual) > BALANCE_TOL):
            raise ValueError("interval energy balance violated")
        if np.any(self.x_plus < 0) or np.any(self.x_minus < 0):
            raise ValueError("grid flows must be non-negative")
        if np.any((self.x_plus > 0) & (self.x_minus > 0)):
            raise ValueError("simultaneous import and export")


def _interval_prices(
    tariff: TariffSchedule, interval_minutes: int
) -> tuple[np.ndarray, np.ndarray]:
    """Per-interval (buy, sell) prices; segments must align to intervals."""
    if tariff.slots_per_day % interval_minutes:
        raise ValueError("interval_minutes must divide the day length")
    buy = tariff.buy_prices().reshape(-1, interval_minutes)
    sell = tariff.sell_prices().reshape(-1, interval_minutes)
    if np.any(buy != buy[:, :1]) or np.any(sell != sell[:, :1]):
        raise ValueError("tariff segment boundaries must align to decision intervals")
    return buy[:, 0].copy(), sell[:, 0].copy()


def _soc_grid(battery: BatterySpec, soc_resolution: float | None) -> np.ndarray:
    if battery.capacity == 0:
        return np.array([0.0])
    step = battery.capacity / 100 if soc_resolution is None else soc_resolution
    if step <= 0:
        raise ValueError("soc_resolution must be positive")
    n = int(np.floor(battery.capacity / step + 1e-9)) + 1
    return step * np.arange(n)


def _transition_tables(
    grid: np.ndarray, battery: BatterySpec, interval_minutes: int
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Bus-side charge/discharge and feasibility for every SOC transition."""
    eta = np.sqrt(battery.efficiency)
    delta = grid[None, :] - grid[:, None]
    charge = np.where(delta > 0, delta / eta, 0.0)
    discharge = np.where(delta < 0, -delta * eta, 0.0)
    feasible = (charge <= battery.max_charge * interval_minutes + 1e-12) & (
        discharge <= battery.max_discharge * interval_minutes + 1e-12
    )
    return charge, discharge, feasible


def stage_cost(demand: float, pv: float, charge: float, discharge: float,
               buy: float, sell: float) -> float:
    """Grid bill for one interval given the battery action."""
    net = demand - pv + charge - discharge
    return buy * net if net > 0 else sell * net


def no_battery_cost(demand: np.ndarray, pv: np.ndarray, buy: np.ndarray,
                    sell: np.ndarray) -> float:
    """Bill with no battery, accumulated in the DP's summation order."""
    total = 0.0
    for d, p, b, s in zip(demand, pv, buy, sell):
        total = total + stage_cost(d, p, 0.0, 0.0, b, s)
    return total


def optimize_self_consumption(
    profile: HouseholdProfile,
    battery: BatterySpec,
    tariff: TariffSchedule,
    interval_minutes: int = 15,
    soc_resolution: float | None = None,
) -> NetLoadProfile:
    """Exact cost-minimizing battery dispatch over the discretized SOC grid.

    Returns the optimal grid flows and SOC trajectory at interval
    resolution.  The optimum is exact for the discretized problem: every
    reachable plan is a path through the SOC grid and the DP scans all of
    them.  The cost never exceeds the no-battery bill because the
    stay-put path is always feasible.
    """
    if not profile.is_prosumer:
        raise ValueError("self-consumption optimization expects a prosumer profile")
    if len(profile.demand) % interval_minutes:
        raise ValueError("interval_minutes must divide the profile length")

    demand = profile.demand.reshape(-1, interval_minutes).sum(axis=1)
    pv = profile.pv.reshape(-1, interval_minutes).sum(axis=1)
    buy, sell = _interval_prices(tariff, interval_minutes)
    n_intervals = len(demand)

    grid = _soc_grid(battery, soc_resolution)
    charge_t, discharge_t, feasible = _transition_tables(grid, battery, interval_minutes)
    start = int(np.argmin(np.abs(grid - battery.initial_soc)))

    # stage costs for all (interval, from-state, to-state) transitions
    action_net = charge_t - discharge_t
    net = (demand - pv)[:, None, None] + action_net[None, :, :]
    costs = np.where(net > 0, buy[:, None, None] * net, sell[:, None, None] * net)
    costs[:, ~feasible] = np.inf
    # no battery export: discharge at most the interval's own net demand
    self_use_cap = np.maximum(demand - pv, 0.0)
    costs[discharge_t[None, :, :] > self_use_cap[:, None, None] + 1e-12] = np.inf

    n_states = len(grid)
    value = np.full(n_states, np.inf)
    value[start] = 0.0
    parents = np.empty((n_intervals, n_states), dtype=np.intp)
    state_idx = np.arange(n_states)
    for i in range(n_intervals):
        reach = value[:, None] + costs[i]
        # ties broken toward the highest previous SOC, i.e. charge as early
        # as possible among cost-equal plans (greedy self-consumption)
        parents[i] = n_states - 1 - np.argmin(reach[::-1], axis=0)
        value = reach[parents[i], state_idx]

    # backtrack the optimal path
    path = np.empty(n_intervals + 1, dtype=np.intp)
    path[-1] = int(np.argmin(value))
    for i in range(n_intervals - 1, -1, -1):
        path[i] = parents[i, path[i + 1]]

    charge = charge_t[path[:-1], path[1:]]
    discharge = discharge_t[path[:-1], path[1:]]
    net_flow = demand - pv + charge - discharge
    x_plus = np.where(net_flow > 0, net_flow, 0.0)
    x_minus = np.where(net_flow < 0, -net_flow, 0.0)

    total = 0.0
    for i in range(n_intervals):
        total = total + costs[i, path[i], path[i + 1]]

    return NetLoadProfile(
        x_plus=x_plus,
        x_minus=x_minus,
        soc=grid[path],
        charge=charge,
        discharge=discharge,
        demand=demand,
        pv=pv,
        minutes_per_slot=interval_minutes,
        cost=float(total),
    )


@dataclass
class SurplusSchedule:
    """Tradeable energy and the seller's floor price, per netload slot."""

    quantity: np.ndarray      # kWh >= 0 offered to the market
    limit_price: np.ndarray   # $/kWh floor (the slot's feed-in price)
    withheld: np.ndarray      # battery energy diverted from self-use (kWh)
    minutes_per_slot: int

    def __post_init__(self) -> None:
        if np.any(self.quantity < 0) or np.any(self.withheld < 0):
            raise ValueError("surplus quantities must be non-negative")

    def quantity_between(self, start_minute: int, end_minute: int) -> float:
        """Offered kWh in [start, end); bounds must align to slots."""
        return float(self.quantity[self._slice(start_minute, end_minute)].sum())

    def withheld_between(self, start_minute: int, end_minute: int) -> float:
        return float(self.withheld[self._slice(start_minute, end_minute)].sum())

    def _slice(self, start_minute: int, end_minute: int) -> slice:
        mps = self.minutes_per_slot
        if start_minute % mps or end_minute % mps:
            raise ValueError("bounds must align to slot boundaries")
        return slice(start_minute // mps, end_minute // mps)


def extract_surplus(
    netload: NetLoadProfile,
    scenario: int,
    reserve_fraction: float = 0.5,
    *,
    tariff: TariffSchedule,
) -> SurplusSchedule:
    """Tradeable quantities for a prosumer under the two market scenarios.

    Scenario 1 offers only the PV export.  Scenario 2 additionally withholds
    ``reserve_fraction`` of the battery energy that the dispatch would have
    discharged to cover the household's own net demand during peak-price
    slots, and offers it there instead; the foregone self-use is later bought
    from the grid when (and only when) the market clears the sale.
    """
    if scenario not in (1, 2):
        raise ValueError(f"scenario must be 1 or 2, got {scenario}")
    if not 0 <= reserve_fraction <= 1:
        raise ValueError(f"reserve_fraction {reserve_fraction} outside [0, 1]")

    quantity = netload.x_minus.copy()
    withheld = np.zeros_like(quantity)
    mps = netload.minutes_per_slot
    buy, sell = _interval_prices(tariff, mps)
    if len(buy) != len(quantity):
        raise ValueError("netload resolution does not match the tariff day")

    if scenario == 2:
        peak = buy == buy.max()
        self_use = np.minimum(
            netload.discharge, np.maximum(netload.demand - netload.pv, 0.0)
        )
        withheld = np.where(peak, reserve_fraction * self_use, 0.0)
        quantity = quantity + withheld

    return SurplusSchedule(
        quantity=quantity,
        limit_price=sell,
        withheld=withheld,
        minutes_per_slot=mps,
    )
