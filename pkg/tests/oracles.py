"""Independent brute-force oracles used by the test suite.

These deliberately re-derive expected results by exhaustive enumeration
instead of calling the library's solvers, so each test compares two
independent routes to the same answer.
"""

from __future__ import annotations

import numpy as np


def battery_min_cost(
    demand: np.ndarray,
    pv: np.ndarray,
    buy: np.ndarray,
    sell: np.ndarray,
    capacity: float,
    soc_step: float,
    start_soc_index: int,
    max_charge: float,
    max_discharge: float,
    efficiency: float,
) -> float:
    """Minimum dispatch cost by enumerating every SOC-grid path.

    Stage costs accumulate left to right along each path, matching the
    order in which a forward dynamic program adds them, so the minimum is
    bit-identical to the DP optimum.
    """
    eta = np.sqrt(efficiency)
    if capacity == 0:
        grid = np.array([0.0])
    else:
        n = int(np.floor(capacity / soc_step + 1e-9)) + 1
        grid = soc_step * np.arange(n)
    n_states = len(grid)
    n_stages = len(demand)

    # enumerate every state path as a base-n_states integer
    paths = np.arange(n_states**n_stages)
    total = np.zeros(len(paths))
    feasible = np.ones(len(paths), dtype=bool)
    prev = np.full(len(paths), start_soc_index)
    for k in range(n_stages):
        state = (paths // n_states ** (n_stages - 1 - k)) % n_states
        delta = grid[state] - grid[prev]
        charge = np.where(delta > 0, delta / eta, 0.0)
        discharge = np.where(delta < 0, -delta * eta, 0.0)
        feasible &= charge <= max_charge + 1e-12
        feasible &= discharge <= max_discharge + 1e-12
        feasible &= discharge <= max(demand[k] - pv[k], 0.0) + 1e-12
        net = (demand[k] - pv[k]) + (charge - discharge)
        cost = np.where(net > 0, buy[k] * net, sell[k] * net)
        total = total + cost
        prev = state
    return float(total[feasible].min())


def best_welfare_exhaustive(
    buys: list[tuple[int, int]],
    sells: list[tuple[int, int]],
    grid_wh: int,
) -> int:
    """Maximum trade surplus by enumerating per-order fills on a quantity grid.

    Orders are (price_ticks, quantity_wh) with quantities multiples of
    ``grid_wh``.  Returns welfare in 1e-8 dollar units.
    """

    def side_table(orders: list[tuple[int, int]], maximize: bool) -> dict[int, int]:
        # best (max or min) total money for every achievable side total
        table: dict[int, int] = {0: 0 if maximize else 0}
        for price, qty in orders:
            new = dict(table)
            for fill in range(grid_wh, qty + 1, grid_wh):
                money = price * fill * 10
                for total, val in table.items():
                    cand = val + money
                    key = total + fill
                    if key not in new:
                        new[key] = cand
                    elif maximize and cand > new[key]:
                        new[key] = cand
                    elif not maximize and cand < new[key]:
                        new[key] = cand
            table = new
        return table

    value = side_table(buys, maximize=True)
    cost = side_table(sells, maximize=False)
    best = 0
    for total, val in value.items():
        if total in cost:
            best = max(best, val - cost[total])
    return best


def max_matched_quantity_scan(
    buys: list[tuple[int, int]],
    sells: list[tuple[int, int]],
    price_step_ticks: int = 50,
) -> int:
    """Maximum feasible matched quantity over a uniform price scan.

    Evaluates min(demand-at-or-above p, supply-at-or-below p) on a price
    grid covering all order prices (the 0.005 $/kWh grid when prices are
    multiples of it).
    """
    prices = [p for p, _ in buys] + [p for p, _ in sells]
    if not prices:
        return 0
    lo, hi = min(prices), max(prices)
    best = 0
    for p in range(lo, hi + price_step_ticks, price_step_ticks):
        demand = sum(q for price, q in buys if price >= p)
        supply = sum(q for price, q in sells if price <= p)
        best = max(best, min(demand, supply))
    return best
