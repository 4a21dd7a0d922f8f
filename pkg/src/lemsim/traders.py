"""Adaptive-margin (ZIP) trading agents and the auction session loop.

Every agent shades its limit price by a profit margin: a buyer quotes
``limit * (1 - margin)``, a seller ``limit * (1 + margin)``, clamped to the
period's price corridor [l_min, l_max] (the feed-in and retail tariffs).
After each order event the margin adapts by a Widrow-Hoff rule with
momentum toward a randomly perturbed target around the event price:

* a fill at price q raises the margin of every buyer quoting >= q and of
  every seller quoting <= q (they left money on the table);
* a fill initiated by the opposite side lowers the margin of active agents
  priced out of it (buyers quoting <= q, sellers quoting >= q);
* a buy order that fails to trade lowers active buyers quoting <= its
  price; symmetrically for sellers.

Agents are activated by a Poisson process; each activation submits at most
one order, and an agent whose previous order still rests does not stack a
second one.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .orderbook import Order, OrderBook, Side, Trade


@dataclass(frozen=True)
class ZipParams:
    """Adaptation parameter ranges, sampled once per agent per period."""

    beta_range: tuple[float, float] = (0.1, 0.5)      # learning rate
    gamma_range: tuple[float, float] = (0.0, 0.1)     # momentum
    margin_range: tuple[float, float] = (0.05, 0.35)  # initial margin
    relative_perturb: float = 0.05   # target price multiplier spread
    absolute_perturb: float = 0.05   # additive spread, as a fraction of price


@dataclass
class MarketEvent:
    """What the last submission did: its side, whether it traded, at what price.

    ``price`` is the transaction price of the last fill when matched,
    otherwise the unmatched order's own price (ticks).
    """

    side: Side
    matched: bool
    price: int

    def __post_init__(self) -> None:
        if self.price <= 0:
            raise ValueError("event price must be positive")


@dataclass
class ZipAgentState:
    """One trader's quoting state for a single trading period."""

    trader: str
    side: Side
    limit_price: int          # ticks; buyer ceiling or seller floor
    margin: float             # mu >= 0
    beta: float
    gamma: float
    remaining_quantity: int   # Wh left to trade
    l_min: int                # period price corridor, ticks
    l_max: int
    last_delta: float = 0.0   # previous quote move, ticks
    active: bool = True


def quote(agent: ZipAgentState) -> int:
    """Margin-shaded price in ticks, clamped to the period corridor."""
    if not agent.active or agent.remaining_quantity <= 0:
        raise ValueError(f"agent {agent.trader} is not active")
    if agent.side == "buy":
        raw = agent.limit_price * (1.0 - agent.margin)
    else:
        raw = agent.limit_price * (1.0 + agent.margin)
    return int(round(min(max(raw, agent.l_min), agent.l_max)))


def _target_up(price: float, params: ZipParams, rng: np.random.Generator) -> float:
    scale = rng.uniform(1.0, 1.0 + params.relative_perturb)
    shift = rng.uniform(0.0, params.absolute_perturb * price)
    return scale * price + shift


def _target_down(price: float, params: ZipParams, rng: np.random.Generator) -> float:
    scale = rng.uniform(1.0 - params.relative_perturb, 1.0)
    shift = rng.uniform(0.0, params.absolute_perturb * price)
    return scale * price - shift


def _move_toward(agent: ZipAgentState, target: float) -> None:
    """Widrow-Hoff step of the quote toward ``target``; margin floored at 0."""
    current = float(quote(agent))
    move = agent.beta * (target - current) + agent.gamma * agent.last_delta
    if move == 0.0:
        return
    agent.last_delta = move
    new_quote = current + move
    if agent.side == "buy":
        agent.margin = max(0.0, 1.0 - new_quote / agent.limit_price)
    else:
        agent.margin = max(0.0, new_quote / agent.limit_price - 1.0)


def update_margin(
    agent: ZipAgentState,
    event: MarketEvent,
    rng: np.random.Generator,
    params: ZipParams = ZipParams(),
) -> ZipAgentState:
    """Apply the margin-adaptation rule for one market event.

    Mutates ``agent`` in place and returns it.  Raising a buyer's margin
    moves its bid down; raising a seller's margin moves its ask up.
    """
    if agent.remaining_quantity <= 0:
        return agent
    price = event.price
    my_quote = quote(agent)
    if agent.side == "buy":
        if event.matched:
            if my_quote >= price:
                _move_toward(agent, _target_down(price, params, rng))
            elif event.side == "sell" and agent.active and my_quote <= price:
                _move_toward(agent, _target_up(price, params, rng))
        elif event.side == "buy" and agent.active and my_quote <= price:
            _move_toward(agent, _target_up(price, params, rng))
    else:
        if event.matched:
            if my_quote <= price:
                _move_toward(agent, _target_up(price, params, rng))
            elif event.side == "buy" and agent.active and my_quote >= price:
                _move_toward(agent, _target_down(price, params, rng))
        elif event.side == "sell" and agent.active and my_quote >= price:
            _move_toward(agent, _target_down(price, params, rng))
    return agent


def next_activation(rng: np.random.Generator, lam: float) -> float:
    """Exponential inter-arrival time for a Poisson(lam) activation process."""
    if lam <= 0:
        raise ValueError(f"arrival rate must be positive, got {lam}")
    return float(rng.exponential(1.0 / lam))


def select_trader(
    agents: list[ZipAgentState], rng: np.random.Generator
) -> ZipAgentState | None:
    """Uniform draw among agents that still have quantity to trade."""
    eligible = [a for a in agents if a.remaining_quantity > 0]
    if not eligible:
        return None
    return eligible[int(rng.integers(len(eligible)))]


def make_agents(
    entries: list[tuple[str, Side, int, int]],
    l_min: int,
    l_max: int,
    rng: np.random.Generator,
    params: ZipParams = ZipParams(),
) -> list[ZipAgentState]:
    """Build period agents from (trader, side, limit_ticks, quantity_wh)."""
    agents = []
    for trader, side, limit, qty in entries:
        agents.append(
            ZipAgentState(
                trader=trader,
                side=side,
                limit_price=limit,
                margin=rng.uniform(*params.margin_range),
                beta=rng.uniform(*params.beta_range),
                gamma=rng.uniform(*params.gamma_range),
                remaining_quantity=qty,
                l_min=l_min,
                l_max=l_max,
            )
        )
    return agents


def session(
    agents: list[ZipAgentState],
    book: OrderBook,
    t_d: float,
    lam: float,
    rng: np.random.Generator,
    params: ZipParams = ZipParams(),
) -> list[Trade]:
    """Run one trading period and return the book's trade log.

    Activations arrive for ``t_d`` minutes at rate ``lam`` per minute.  The
    selected agent quotes and submits its remaining quantity unless its
    previous order is still resting; every submission is broadcast to all
    agents for margin updates.
    """
    by_trader = {a.trader: a for a in agents}
    if len(by_trader) != len(agents):
        raise ValueError("agent trader ids must be unique within a session")
    live_order: dict[str, str] = {}
    order_seq = 0

    t = next_activation(rng, lam)
    while t < t_d:
        agent = select_trader(agents, rng)
        if agent is None:
            break
        if not book.is_live(live_order.get(agent.trader, "")):
            order_seq += 1
            order = Order(
                id=f"{agent.trader}#{order_seq}",
                trader=agent.trader,
                side=agent.side,
                price=quote(agent),
                quantity=agent.remaining_quantity,
            )
            live_order[agent.trader] = order.id
            trades = book.submit(order)
            for fill in trades:
                for name in (fill.buyer, fill.seller):
                    counterpart = by_trader[name]
                    counterpart.remaining_quantity -= fill.quantity
                    counterpart.active = counterpart.remaining_quantity > 0
            event = MarketEvent(
                side=order.side,
                matched=bool(trades),
                price=trades[-1].price if trades else order.price,
            )
            for other in agents:
                update_margin(other, event, rng, params)
        t += next_activation(rng, lam)

    return book.trade_log
