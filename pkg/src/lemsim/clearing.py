"""Centralized per-period mechanisms: welfare-optimal allocation, a uniform
equilibrium price from the supply/demand step-curve overlap, and VCG
payments.

Buyer utility and seller cost are linear in quantity at the submitted limit
prices, so the welfare maximum is the greedy merge of the demand curve
(buyers by descending price) against the supply curve (sellers by ascending
price), with fractional fills of the marginal orders.  When several orders
are marginal at the same price, the marginal quantity is rationed
proportionally to submitted size (largest-remainder rounding in whole Wh,
so totals balance exactly).

All arithmetic is integer: prices in ticks, quantities in Wh, money in 1e-8
dollar units, with the clearing price carried at half-tick resolution.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from .units import halftick_money, trade_money


@dataclass(frozen=True)
class LimitOrder:
    trader: str
    price: int     # ticks
    quantity: int  # Wh

    def __post_init__(self) -> None:
        if self.price <= 0 or self.quantity <= 0:
            raise ValueError(
                f"order for {self.trader}: price and quantity must be positive"
            )


@dataclass(frozen=True)
class LimitOrderSet:
    """All limit orders for one trading period, one per trader."""

    buys: tuple[LimitOrder, ...]
    sells: tuple[LimitOrder, ...]

    def __post_init__(self) -> None:
        traders = [o.trader for o in self.buys] + [o.trader for o in self.sells]
        if len(set(traders)) != len(traders):
            raise ValueError("each trader may appear in at most one order")


@dataclass(frozen=True)
class ClearingResult:
    """Allocations (Wh) and payments (1e-8 $; positive pays, negative receives).

    ``mcp_twice_ticks`` is twice the uniform clearing price, or None when the
    mechanism has no uniform price (VCG) or nothing trades.
    """

    allocations: dict[str, int]
    payments: dict[str, int]
    cleared_wh: int
    mcp_twice_ticks: Optional[int] = None

    @property
    def mcp(self) -> Optional[float]:
        """Uniform clearing price in $/kWh, if one exists."""
        if self.mcp_twice_ticks is None:
            return None
        return self.mcp_twice_ticks / 20_000


def _ration(orders: list[LimitOrder], total: int) -> dict[str, int]:
    """Fill orders best-price-first up to ``total`` Wh.

    ``orders`` must already be sorted best first.  Orders strictly better
    than the marginal price fill completely; the marginal price level shares
    the remainder proportionally to submitted quantity, rounded by largest
    remainder (deterministic tie-break on trader id).
    """
    alloc = {o.trader: 0 for o in orders}
    remaining = total
    i = 0
    while i < len(orders) and remaining > 0:
        level_price = orders[i].price
        level = [o for o in orders[i:] if o.price == level_price]
        level_qty = sum(o.quantity for o in level)
        if level_qty <= remaining:
            for o in level:
                alloc[o.trader] = o.quantity
            remaining -= level_qty
        else:
            shares = [(o, remaining * o.quantity) for o in level]
            given = 0
            floors = []
            for o, num in shares:
                f = num // level_qty
                alloc[o.trader] = f
                given += f
                floors.append((-(num % level_qty), o.trader, o))
            floors.sort()
            for _, _, o in floors[: remaining - given]:
                alloc[o.trader] += 1
            remaining = 0
        i += len(level)
    return alloc


def max_welfare_allocation(orders: LimitOrderSet) -> dict[str, int]:
    """Welfare-maximizing per-trader fills (Wh), buy total == sell total.

    Greedy merge: match the highest-price buyers against the lowest-price
    sellers while the buyer's price is at least the seller's, allowing
    fractional fills of the marginal orders.  Returns a zero allocation when
    either side is empty or no prices cross.
    """
    buys = sorted(orders.buys, key=lambda o: (-o.price, o.trader))
    sells = sorted(orders.sells, key=lambda o: (o.price, o.trader))
    alloc = {o.trader: 0 for o in buys + sells}
    if not buys or not sells:
        return alloc

    matched = 0
    bi = si = 0
    b_left = buys[0].quantity if buys else 0
    s_left = sells[0].quantity if sells else 0
    while bi < len(buys) and si < len(sells) and buys[bi].price >= sells[si].price:
        q = min(b_left, s_left)
        matched += q
        b_left -= q
        s_left -= q
        if b_left == 0:
            bi += 1
            b_left = buys[bi].quantity if bi < len(buys) else 0
        if s_left == 0:
            si += 1
            s_left = sells[si].quantity if si < len(sells) else 0

    alloc.update(_ration(buys, matched))
    alloc.update(_ration(sells, matched))
    return alloc


def allocation_welfare(orders: LimitOrderSet, alloc: dict[str, int]) -> int:
    """Total surplus of an allocation in 1e-8 $: buyer value minus seller cost."""
    total = 0
    for o in orders.buys:
        total += trade_money(o.price, alloc.get(o.trader, 0))
    for o in orders.sells:
        total -= trade_money(o.price, alloc.get(o.trader, 0))
    return total


def _zero_trade(orders: LimitOrderSet) -> ClearingResult:
    traders = [o.trader for o in orders.buys + orders.sells]
    return ClearingResult(
        allocations={t: 0 for t in traders},
        payments={t: 0 for t in traders},
        cleared_wh=0,
        mcp_twice_ticks=None,
    )


def clear_equilibrium(orders: LimitOrderSet) -> ClearingResult:
    """Uniform-price clearing at the supply/demand intersection.

    The cleared quantity is the welfare maximum; the price interval is the
    set of prices at which that quantity is feasible on both curves
    (cumulative demand at-or-above and supply at-or-below the price), and
    the clearing price is its midpoint.  Every cleared buyer pays and every
    cleared seller receives the clearing price; payments sum to zero
    exactly.  Markets with no crossing return a zero-trade result.
    """
    alloc = max_welfare_allocation(orders)
    cleared = sum(alloc[o.trader] for o in orders.buys)
    if cleared == 0:
        return _zero_trade(orders)

    def demand_at(p: int) -> int:
        return sum(o.quantity for o in orders.buys if o.price >= p)

    def supply_at(p: int) -> int:
        return sum(o.quantity for o in orders.sells if o.price <= p)

    candidates = sorted({o.price for o in orders.buys + orders.sells})
    feasible = [p for p in candidates if demand_at(p) >= cleared and supply_at(p) >= cleared]
    mcp_twice = feasible[0] + feasible[-1]

    payments = {}
    for o in orders.buys:
        payments[o.trader] = halftick_money(mcp_twice, alloc[o.trader])
    for o in orders.sells:
        payments[o.trader] = -halftick_money(mcp_twice, alloc[o.trader])
    return ClearingResult(
        allocations=alloc,
        payments=payments,
        cleared_wh=cleared,
        mcp_twice_ticks=mcp_twice,
    )


def _without(orders: LimitOrderSet, trader: str) -> LimitOrderSet:
    return LimitOrderSet(
        buys=tuple(o for o in orders.buys if o.trader != trader),
        sells=tuple(o for o in orders.sells if o.trader != trader),
    )


def write_clearing_csv(out, period: int, mechanism: str, orders: LimitOrderSet,
                       result: ClearingResult) -> None:
    """CSV rows ``period,mechanism,trader,role,quantity,payment,mcp``.

    Quantity in kWh, payment in dollars (positive pays), mcp in $/kWh or
    empty when the mechanism has no uniform price.
    """
    out.write("period,mechanism,trader,role,quantity,payment,mcp\n")
    mcp = "" if result.mcp is None else f"{result.mcp:.5f}"
    for role, side in (("buy", orders.buys), ("sell", orders.sells)):
        for o in side:
            qty = result.allocations.get(o.trader, 0)
            pay = result.payments.get(o.trader, 0)
            out.write(
                f"{period},{mechanism},{o.trader},{role},"
                f"{qty / 1_000:.3f},{pay / 1e8:.8f},{mcp}\n"
            )


def vcg(orders: LimitOrderSet) -> ClearingResult:
    """Welfare-optimal allocation with Clarke-pivot payments on both sides.

    Each trader pays the welfare the others lose from its presence:
    ``payment_i = W(-i) - (W(full) - w_i)`` with W(-i) the optimal welfare
    without trader i and w_i the trader's own gross surplus at the full
    allocation.  Buyers never pay more than their bid value and sellers
    never receive less than their cost (truthful participation has
    non-negative utility); the buy side typically pays less in total than
    the sell side receives, so the mechanism runs a budget deficit.
    """
    alloc = max_welfare_allocation(orders)
    cleared = sum(alloc[o.trader] for o in orders.buys)
    if cleared == 0:
        return _zero_trade(orders)
    w_full = allocation_welfare(orders, alloc)

    payments = {}
    for o in orders.buys + orders.sells:
        others = _without(orders, o.trader)
        w_minus = allocation_welfare(others, max_welfare_allocation(others))
        own = trade_money(o.price, alloc[o.trader])
        if o in orders.sells:
            own = -own
        payments[o.trader] = w_minus - (w_full - own)

    return ClearingResult(
        allocations=alloc,
        payments=payments,
        cleared_wh=cleared,
        mcp_twice_ticks=None,
    )
