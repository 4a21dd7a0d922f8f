"""Price-time-priority order book for one continuous-auction trading period.

Prices are integer ticks and quantities integer watt-hours (see ``units``),
so fill conservation is exact.  An incoming order matches the best resting
order on the opposite side while the prices cross, trading at the resting
order's price; any remainder rests at its own price-time position.  Orders
are good till period close; there is no cancellation.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field
from typing import Literal, Optional

Side = Literal["buy", "sell"]


@dataclass
class Order:
    """A limit order; ``quantity`` is the unfilled remainder in Wh."""

    id: str
    trader: str
    side: Side
    price: int      # ticks
    quantity: int   # Wh remaining
    timestamp: int = -1  # assigned by the book on submission


@dataclass(frozen=True)
class Trade:
    """One fill between a buy and a sell order, at the resting price."""

    buy_order_id: str
    sell_order_id: str
    buyer: str
    seller: str
    price: int      # ticks
    quantity: int   # Wh
    timestamp: int


class OrderBook:
    """One trading period's resting orders and trade log.

    Bids are ranked highest price first, asks lowest price first; ties go to
    the earlier arrival.  The strictly monotone event clock doubles as the
    timestamp, so no two orders ever tie on (price, time).
    """

    def __init__(self) -> None:
        self._bids: list[tuple[int, int, Order]] = []  # (-price, time, order)
        self._asks: list[tuple[int, int, Order]] = []  # (price, time, order)
        self.trade_log: list[Trade] = []
        self.clock = 0
        self._seen_ids: set[str] = set()
        self._live: dict[str, Order] = {}

    def best_bid(self) -> Optional[Order]:
        return self._bids[0][2] if self._bids else None

    def best_ask(self) -> Optional[Order]:
        return self._asks[0][2] if self._asks else None

    def is_live(self, order_id: str) -> bool:
        """True while the order rests in the book with unfilled quantity."""
        return order_id in self._live

    def submit(self, order: Order) -> list[Trade]:
        """Match an incoming order and rest any remainder.

        Returns the fills produced by this submission, oldest first.  A
        partially filled resting order keeps its original price-time
        priority.  Rejects non-positive prices/quantities and reused ids.
        """
        if order.price <= 0:
            raise ValueError(f"order {order.id}: price must be positive")
        if order.quantity <= 0:
            raise ValueError(f"order {order.id}: quantity must be positive")
        if order.id in self._seen_ids:
            raise ValueError(f"duplicate order id: {order.id}")
        self._seen_ids.add(order.id)
        self.clock += 1
        order.timestamp = self.clock

        book, opposite = (
            (self._bids, self._asks) if order.side == "buy" else (self._asks, self._bids)
        )
        trades: list[Trade] = []
        while order.quantity > 0 and opposite:
            resting = opposite[0][2]
            crossed = (
                order.price >= resting.price
                if order.side == "buy"
                else order.price <= resting.price
            )
            if not crossed:
                break
            qty = min(order.quantity, resting.quantity)
            buy, sell = (order, resting) if order.side == "buy" else (resting, order)
            trades.append(
                Trade(
                    buy_order_id=buy.id,
                    sell_order_id=sell.id,
                    buyer=buy.trader,
                    seller=sell.trader,
                    price=resting.price,
                    quantity=qty,
                    timestamp=self.clock,
                )
            )
            order.quantity -= qty
            resting.quantity -= qty
            if resting.quantity == 0:
                heapq.heappop(opposite)
                del self._live[resting.id]

        if order.quantity > 0:
            rank = -order.price if order.side == "buy" else order.price
            heapq.heappush(book, (rank, order.timestamp, order))
            self._live[order.id] = order

        self.trade_log.extend(trades)
        return trades


def total_traded(trades: list[Trade]) -> int:
    """Total traded energy in Wh: the sum of fill quantities."""
    return sum(t.quantity for t in trades)


def write_trade_log(out, period: int, trades: list[Trade]) -> None:
    """Write fills as CSV rows ``period,timestamp,buy_id,sell_id,price,quantity``.

    Price is in $/kWh, quantity in kWh.
    """
    out.write("period,timestamp,buy_id,sell_id,price,quantity\n")
    for t in trades:
        out.write(
            f"{period},{t.timestamp},{t.buy_order_id},{t.sell_order_id},"
            f"{t.price / 10_000:.4f},{t.quantity / 1_000:.3f}\n"
        )
