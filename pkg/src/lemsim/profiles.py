"""Synthetic household demand/PV profiles and the retail tariff schedule.

Demand is a constant base load plus Poisson-arriving appliance events
(rectangular pulses with random duration and energy).  Event arrivals follow
an inhomogeneous Poisson process with a fixed diurnal intensity (quiet
nights, morning and evening peaks) whose mean equals the configured rate,
mimicking the bursty evening-heavy shape of measured household demand.  PV
generation is a half-sine bell over a daylight window, scaled by a
per-household peak and multiplied by clipped Gaussian noise.  Everything is
generated at one-minute resolution from a single seed, so identical
parameters give bit-identical populations.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field
from typing import Iterable, TextIO

import numpy as np

SLOTS_PER_DAY = 1440
MINUTES_PER_HOUR = 60


@dataclass(frozen=True)
class TariffSegment:
    """One piecewise-constant stretch of the daily tariff."""

    start_slot: int
    buy: float   # retail import price s+ ($/kWh)
    sell: float  # export incentive s-  ($/kWh)


@dataclass(frozen=True)
class TariffSchedule:
    """Time-of-use buy prices and feed-in sell prices over one day.

    Segments are half-open [start, next_start) intervals and must cover
    [0, slots_per_day) without gaps; within every segment buy > sell > 0 so
    the local-market price corridor is non-degenerate.
    """

    segments: tuple[TariffSegment, ...]
    slots_per_day: int = SLOTS_PER_DAY

    def __post_init__(self) -> None:
        if not self.segments:
            raise ValueError("tariff needs at least one segment")
        starts = [s.start_slot for s in self.segments]
        if starts[0] != 0:
            raise ValueError("first tariff segment must start at slot 0")
        if any(b >= a for a, b in zip(starts[1:], starts)):
            raise ValueError("tariff segment starts must be strictly increasing")
        if starts[-1] >= self.slots_per_day:
            raise ValueError("tariff segment starts beyond the day")
        for seg in self.segments:
            if not seg.buy > seg.sell > 0:
                raise ValueError(
                    f"segment at slot {seg.start_slot}: need buy > sell > 0, "
                    f"got buy={seg.buy}, sell={seg.sell}"
                )

    def lookup(self, k: int) -> tuple[float, float]:
        """(buy, sell) prices for slot ``k``; raises on out-of-range slots."""
        if not 0 <= k < self.slots_per_day:
            raise ValueError(f"slot {k} outside [0, {self.slots_per_day})")
        seg = self.segments[0]
        for cand in self.segments[1:]:
            if cand.start_slot <= k:
                seg = cand
            else:
                break
        return seg.buy, seg.sell

    def buy_prices(self) -> np.ndarray:
        """Per-slot buy price array of length slots_per_day."""
        out = np.empty(self.slots_per_day)
        bounds = [s.start_slot for s in self.segments] + [self.slots_per_day]
        for seg, lo, hi in zip(self.segments, bounds, bounds[1:]):
            out[lo:hi] = seg.buy
        return out

    def sell_prices(self) -> np.ndarray:
        """Per-slot sell price array of length slots_per_day."""
        out = np.empty(self.slots_per_day)
        bounds = [s.start_slot for s in self.segments] + [self.slots_per_day]
        for seg, lo, hi in zip(self.segments, bounds, bounds[1:]):
            out[lo:hi] = seg.sell
        return out


def tariff_lookup(schedule: TariffSchedule, k: int) -> tuple[float, float]:
    """(s+, s-) for slot ``k`` of the schedule."""
    return schedule.lookup(k)


def default_tariff() -> TariffSchedule:
    """Australian-style ToU with a flat feed-in incentive.

    Off-peak 0.13 $/kWh until 07:00 and after 22:00, shoulder 0.25,
    peak 0.52 from 14:00 to 20:00; exports earn a flat 0.08 $/kWh.
    """
    return TariffSchedule(
        segments=(
            TariffSegment(0, 0.13, 0.08),
            TariffSegment(7 * 60, 0.25, 0.08),
            TariffSegment(14 * 60, 0.52, 0.08),
            TariffSegment(20 * 60, 0.25, 0.08),
            TariffSegment(22 * 60, 0.13, 0.08),
        )
    )


@dataclass(frozen=True)
class HouseholdProfile:
    """Per-minute demand and PV generation for one household (kWh/slot)."""

    id: str
    demand: np.ndarray
    pv: np.ndarray
    is_prosumer: bool

    def __post_init__(self) -> None:
        if self.demand.shape != self.pv.shape or self.demand.ndim != 1:
            raise ValueError("demand and pv must be 1-d arrays of equal length")
        if np.any(self.demand < 0) or np.any(self.pv < 0):
            raise ValueError("demand and pv must be non-negative")
        if not self.is_prosumer and np.any(self.pv > 0):
            raise ValueError("consumer profiles must have zero pv")


@dataclass(frozen=True)
class ProfileGenParams:
    """Knobs for the synthetic population generator."""

    seed: int
    n_households: int = 100
    n_prosumers: int = 37
    base_load: float = 0.004                       # kWh per minute (~0.24 kW)
    appliance_event_rate: float = 0.5              # events per hour
    appliance_event_energy: tuple[float, float] = (0.2, 1.5)   # kWh per event
    pv_peak: tuple[float, float] = (2.0, 3.5)      # kW
    pv_noise: float = 0.15
    daylight_window: tuple[int, int] = (330, 1110)  # sunrise/sunset slots
    slots_per_day: int = SLOTS_PER_DAY

    def __post_init__(self) -> None:
        if self.n_prosumers > self.n_households:
            raise ValueError(
                f"n_prosumers ({self.n_prosumers}) exceeds "
                f"n_households ({self.n_households})"
            )
        if min(self.n_households, self.n_prosumers) < 0:
            raise ValueError("household counts must be non-negative")
        if self.base_load < 0 or self.appliance_event_rate < 0:
            raise ValueError("rates and loads must be non-negative")
        lo, hi = self.appliance_event_energy
        if not 0 <= lo <= hi:
            raise ValueError("appliance_event_energy must be 0 <= lo <= hi")
        lo, hi = self.pv_peak
        if not 0 <= lo <= hi:
            raise ValueError("pv_peak must be 0 <= lo <= hi")
        if self.pv_noise < 0:
            raise ValueError("pv_noise must be non-negative")
        rise, set_ = self.daylight_window
        if not 0 <= rise < set_ <= self.slots_per_day:
            raise ValueError("daylight_window must satisfy 0 <= rise < set <= day")


# relative appliance activity by hour of day: quiet nights, a morning bump,
# and a strong evening peak (cooking, lighting)
_DIURNAL_WEIGHT = np.array(
    [0.25, 0.25, 0.25, 0.25, 0.25, 0.25,   # 00-05
     1.2, 1.2, 1.2,                        # 06-08
     0.7, 0.7, 0.7, 0.7, 0.7, 0.7, 0.7,    # 09-15
     1.2,                                  # 16
     2.2, 2.2, 2.2, 2.2, 2.2,              # 17-21
     0.8, 0.8]                             # 22-23
)


def _demand_curve(params: ProfileGenParams, rng: np.random.Generator) -> np.ndarray:
    k = params.slots_per_day
    demand = np.full(k, params.base_load)
    hours = k / MINUTES_PER_HOUR
    n_events = rng.poisson(params.appliance_event_rate * hours)
    lo, hi = params.appliance_event_energy
    slot_weight = np.repeat(_DIURNAL_WEIGHT, 60)[:k].astype(float)
    start_cdf = np.cumsum(slot_weight)
    for _ in range(n_events):
        start = int(np.searchsorted(start_cdf, rng.uniform(0.0, start_cdf[-1])))
        duration = int(rng.integers(5, 61))
        energy = rng.uniform(lo, hi)
        stop = min(start + duration, k)
        demand[start:stop] += energy / duration
    return demand


def _pv_curve(params: ProfileGenParams, rng: np.random.Generator) -> np.ndarray:
    k = params.slots_per_day
    rise, set_ = params.daylight_window
    peak_kw = rng.uniform(*params.pv_peak)
    bell = np.zeros(k)
    span = np.arange(rise, set_)
    bell[span] = np.sin(np.pi * (span - rise) / (set_ - rise))
    noise = np.clip(rng.normal(1.0, params.pv_noise, size=k), 0.0, None)
    return peak_kw * bell * noise / MINUTES_PER_HOUR


def generate_population(params: ProfileGenParams) -> list[HouseholdProfile]:
    """Generate the household population; the first n_prosumers own PV.

    Each household draws from its own child RNG stream, so the output is a
    pure function of ``params`` (identical seed, identical profiles).
    """
    streams = np.random.SeedSequence(params.seed).spawn(params.n_households)
    profiles = []
    for i, stream in enumerate(streams):
        rng = np.random.default_rng(stream)
        is_prosumer = i < params.n_prosumers
        demand = _demand_curve(params, rng)
        pv = _pv_curve(params, rng) if is_prosumer else np.zeros(params.slots_per_day)
        profiles.append(
            HouseholdProfile(id=f"h{i:03d}", demand=demand, pv=pv, is_prosumer=is_prosumer)
        )
    return profiles


# ---------------------------------------------------------------------------
# serialization: line-oriented CSV, full float precision for exact round trips
# ---------------------------------------------------------------------------

def write_profiles(out: TextIO, profiles: Iterable[HouseholdProfile]) -> None:
    """Write profiles as CSV: header row, then one row of kWh values per slot.

    Prosumers contribute ``<id>.demand`` and ``<id>.pv`` columns, consumers
    only ``<id>.demand``; the pv column's presence marks prosumer status.
    """
    profiles = list(profiles)
    columns: list[str] = ["slot"]
    series: list[np.ndarray] = []
    for p in profiles:
        columns.append(f"{p.id}.demand")
        series.append(p.demand)
        if p.is_prosumer:
            columns.append(f"{p.id}.pv")
            series.append(p.pv)
    out.write(",".join(columns) + "\n")
    n_slots = len(profiles[0].demand) if profiles else 0
    for k in range(n_slots):
        row = [str(k)] + [repr(float(s[k])) for s in series]
        out.write(",".join(row) + "\n")


def read_profiles(src: TextIO) -> list[HouseholdProfile]:
    """Inverse of :func:`write_profiles`."""
    header = src.readline().strip().split(",")
    if header[:1] != ["slot"]:
        raise ValueError("profile file must start with a 'slot' header column")
    names = header[1:]
    rows = [line.strip().split(",") for line in src if line.strip()]
    data = np.array([[float(v) for v in row[1:]] for row in rows])
    by_id: dict[str, dict[str, np.ndarray]] = {}
    order: list[str] = []
    for j, name in enumerate(names):
        hid, _, kind = name.rpartition(".")
        if kind not in ("demand", "pv") or not hid:
            raise ValueError(f"bad profile column name: {name!r}")
        if hid not in by_id:
            by_id[hid] = {}
            order.append(hid)
        by_id[hid][kind] = data[:, j]
    out = []
    for hid in order:
        cols = by_id[hid]
        is_prosumer = "pv" in cols
        pv = cols["pv"] if is_prosumer else np.zeros_like(cols["demand"])
        out.append(HouseholdProfile(hid, cols["demand"], pv, is_prosumer))
    return out


def write_tariff(out: TextIO, schedule: TariffSchedule) -> None:
    """Write a tariff as CSV rows ``start_minute,buy,sell``."""
    out.write("start_minute,buy,sell\n")
    for seg in schedule.segments:
        out.write(f"{seg.start_slot},{seg.buy!r},{seg.sell!r}\n")


def read_tariff(src: TextIO, slots_per_day: int = SLOTS_PER_DAY) -> TariffSchedule:
    """Inverse of :func:`write_tariff`."""
    header = src.readline().strip()
    if header != "start_minute,buy,sell":
        raise ValueError("tariff file must start with 'start_minute,buy,sell'")
    segments = []
    for line in src:
        line = line.strip()
        if not line:
            continue
        start, buy, sell = line.split(",")
        segments.append(TariffSegment(int(start), float(buy), float(sell)))
    return TariffSchedule(tuple(segments), slots_per_day=slots_per_day)


def profiles_to_string(profiles: Iterable[HouseholdProfile]) -> str:
    buf = io.StringIO()
    write_profiles(buf, profiles)
    return buf.getvalue()
