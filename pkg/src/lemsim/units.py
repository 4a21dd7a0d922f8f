"""Fixed-point unit conventions shared by the market modules.

All book-keeping that must satisfy exact conservation identities is done in
integers:

* prices:   ticks of 0.0001 $/kWh (a hundredth of a cent per kWh)
* energy:   watt-hours
* money:    units of 1e-8 dollars

One tick times one watt-hour is 1e-7 dollars, i.e. ten money units, so any
trade value is an exact integer.  Clearing prices that fall on the midpoint
of two tick prices are carried as twice-the-price ("half-tick" resolution);
half a tick times a watt-hour is five money units, still exact.
"""

from __future__ import annotations

TICKS_PER_DOLLAR = 10_000
WH_PER_KWH = 1_000
MONEY_PER_DOLLAR = 100_000_000

# money units for (1 tick) x (1 Wh) and (0.5 tick) x (1 Wh)
_MONEY_PER_TICK_WH = MONEY_PER_DOLLAR // (TICKS_PER_DOLLAR * WH_PER_KWH)
_MONEY_PER_HALFTICK_WH = _MONEY_PER_TICK_WH // 2


def to_ticks(dollars_per_kwh: float) -> int:
    """Quantize a $/kWh price to integer ticks (nearest)."""
    return round(dollars_per_kwh * TICKS_PER_DOLLAR)


def ticks_to_dollars(ticks: float) -> float:
    return ticks / TICKS_PER_DOLLAR


def to_wh(kwh: float) -> int:
    """Quantize an energy amount to integer watt-hours (nearest)."""
    return round(kwh * WH_PER_KWH)


def wh_to_kwh(wh: float) -> float:
    return wh / WH_PER_KWH


def money_to_dollars(money: float) -> float:
    return money / MONEY_PER_DOLLAR


def trade_money(price_ticks: int, qty_wh: int) -> int:
    """Exact money value of ``qty_wh`` at a tick price."""
    return price_ticks * qty_wh * _MONEY_PER_TICK_WH


def halftick_money(price_twice_ticks: int, qty_wh: int) -> int:
    """Exact money value of ``qty_wh`` at a price given in 2x ticks."""
    return price_twice_ticks * qty_wh * _MONEY_PER_HALFTICK_WH
