import numpy as np
import pytest

from lemsim.hems import (
    BatterySpec,
    extract_surplus,
    no_battery_cost,
    optimize_self_consumption,
)
from lemsim.profiles import (
    HouseholdProfile,
    ProfileGenParams,
    TariffSchedule,
    TariffSegment,
    default_tariff,
    generate_population,
)
from oracles import battery_min_cost


def toy_tariff(n_slots, prices=((0.25, 0.08), (0.52, 0.08)), switch=None):
    """Two-price tariff over an n-slot day."""
    switch = switch if switch is not None else max(1, n_slots // 2)
    (b1, s1), (b2, s2) = prices
    return TariffSchedule(
        (TariffSegment(0, b1, s1), TariffSegment(switch, b2, s2)),
        slots_per_day=n_slots,
    )


def toy_profile(demand, pv):
    return HouseholdProfile(
        "toy", np.asarray(demand, dtype=float), np.asarray(pv, dtype=float), True
    )


def solve_toy(demand, pv, battery, tariff, soc_resolution):
    return optimize_self_consumption(
        toy_profile(demand, pv),
        battery,
        tariff,
        interval_minutes=1,
        soc_resolution=soc_resolution,
    )


def oracle_cost(demand, pv, battery, tariff, soc_resolution):
    cap = battery.capacity
    if cap == 0:
        n, start = 1, 0
    else:
        n = int(np.floor(cap / soc_resolution + 1e-9)) + 1
        grid = soc_resolution * np.arange(n)
        start = int(np.argmin(np.abs(grid - battery.initial_soc)))
    return battery_min_cost(
        np.asarray(demand, dtype=float),
        np.asarray(pv, dtype=float),
        tariff.buy_prices(),
        tariff.sell_prices(),
        cap,
        soc_resolution,
        start,
        battery.max_charge,
        battery.max_discharge,
        battery.efficiency,
    )


class TestBatterySpec:
    def test_initial_soc_above_capacity_rejected(self):
        with pytest.raises(ValueError):
            BatterySpec(5.0, 0.1, 0.1, 0.9, initial_soc=6.0)

    def test_nonpositive_caps_rejected(self):
        with pytest.raises(ValueError):
            BatterySpec(5.0, 0.0, 0.1, 0.9, 0.0)

    def test_efficiency_range(self):
        with pytest.raises(ValueError):
            BatterySpec(5.0, 0.1, 0.1, 0.0, 0.0)
        with pytest.raises(ValueError):
            BatterySpec(5.0, 0.1, 0.1, 1.2, 0.0)


class TestOptimizerBasics:
    def test_zero_capacity_battery_is_passthrough(self):
        demand = [1.0, 0.5, 0.2, 0.9, 0.1, 0.3]
        pv = [0.0, 1.2, 0.8, 0.0, 0.4, 0.0]
        t = toy_tariff(6)
        bat = BatterySpec(0.0, 0.5, 0.5, 0.9, 0.0)
        net = solve_toy(demand, pv, bat, t, soc_resolution=1.0)
        np.testing.assert_allclose(net.x_plus, np.maximum(np.subtract(demand, pv), 0))
        np.testing.assert_allclose(net.x_minus, np.maximum(np.subtract(pv, demand), 0))
        assert net.cost == no_battery_cost(
            net.demand, net.pv, t.buy_prices(), t.sell_prices()
        )

    def test_flat_tariff_no_arbitrage(self):
        demand = [0.4, 0.4, 0.4, 0.4, 0.8, 0.8]
        pv = [0.0, 1.5, 1.5, 0.5, 0.0, 0.0]
        t = TariffSchedule((TariffSegment(0, 0.25, 0.08),), slots_per_day=6)
        bat = BatterySpec(2.0, 1.0, 1.0, 0.9, 0.0)
        net = solve_toy(demand, pv, bat, t, soc_resolution=0.25)
        nb = no_battery_cost(net.demand, net.pv, t.buy_prices(), t.sell_prices())
        assert net.cost <= nb
        # exporting then re-importing never helps: imports only shrink
        assert net.x_plus.sum() <= np.maximum(np.subtract(demand, pv), 0).sum() + 1e-12

    def test_six_slot_instance_matches_enumeration(self):
        demand = [0.5, 0.2, 0.0, 0.7, 1.0, 0.6]
        pv = [0.0, 0.9, 1.1, 0.2, 0.0, 0.0]
        t = toy_tariff(6, switch=3)
        bat = BatterySpec(1.5, 0.6, 0.6, 0.85, 0.5)
        net = solve_toy(demand, pv, bat, t, soc_resolution=0.25)
        assert net.cost == oracle_cost(demand, pv, bat, t, soc_resolution=0.25)

    def test_random_toys_match_enumeration_exactly(self):
        rng = np.random.default_rng(42)
        for _ in range(60):
            k = int(rng.integers(2, 7))
            n_states = int(rng.integers(2, 11))
            cap = float(rng.uniform(0.5, 4.0))
            step = cap / (n_states - 1)
            demand = rng.uniform(0, 2, k)
            pv = rng.uniform(0, 2, k) * (rng.random(k) < 0.7)
            t = toy_tariff(
                k,
                prices=(
                    (float(rng.uniform(0.2, 0.6)), float(rng.uniform(0.02, 0.1))),
                    (float(rng.uniform(0.2, 0.6)), float(rng.uniform(0.02, 0.1))),
                ),
                switch=int(rng.integers(1, k)),
            )
            bat = BatterySpec(
                cap,
                float(rng.uniform(0.2, 1.5)),
                float(rng.uniform(0.2, 1.5)),
                float(rng.uniform(0.5, 1.0)),
                float(rng.uniform(0, cap)),
            )
            net = solve_toy(demand, pv, bat, t, soc_resolution=step)
            assert net.cost == oracle_cost(demand, pv, bat, t, soc_resolution=step)

    def test_rejects_consumer_profile(self):
        p = HouseholdProfile("c", np.ones(6), np.zeros(6), False)
        with pytest.raises(ValueError):
            optimize_self_consumption(
                p, BatterySpec(1, 0.5, 0.5, 0.9, 0), toy_tariff(6), interval_minutes=1
            )

    def test_rejects_misaligned_tariff(self):
        prof = toy_profile(np.ones(60), np.zeros(60))
        t = TariffSchedule(
            (TariffSegment(0, 0.2, 0.1), TariffSegment(7, 0.3, 0.1)), slots_per_day=60
        )
        with pytest.raises(ValueError, match="align"):
            optimize_self_consumption(
                prof, BatterySpec(1, 0.5, 0.5, 0.9, 0), t, interval_minutes=15
            )


class TestOptimizerProperties:
    def test_capacity_monotonicity_same_resolution(self):
        rng = np.random.default_rng(5)
        step = 0.25
        for _ in range(10):
            k = int(rng.integers(3, 7))
            demand = rng.uniform(0, 2, k)
            pv = rng.uniform(0, 2, k) * (rng.random(k) < 0.6)
            t = toy_tariff(k, switch=max(1, k // 2))
            costs = []
            for cap_steps in (2, 4, 8):
                bat = BatterySpec(cap_steps * step, 1.0, 1.0, 0.9, 0.0)
                net = solve_toy(demand, pv, bat, t, soc_resolution=step)
                costs.append(net.cost)
            assert costs[0] >= costs[1] >= costs[2]

    def test_full_day_balance_and_soc_bounds(self):
        profiles = generate_population(
            ProfileGenParams(seed=11, n_households=3, n_prosumers=3)
        )
        t = default_tariff()
        bat = BatterySpec(8.0, 5 / 60, 5 / 60, 0.9, 0.0)
        for p in profiles:
            net = optimize_self_consumption(p, bat, t)
            residual = (
                net.demand + net.charge + net.x_minus
                - net.pv - net.discharge - net.x_plus
            )
            assert np.max(np.abs(residual)) <= 1e-9
            assert np.all(net.soc >= -1e-12)
            assert np.all(net.soc <= bat.capacity + 1e-12)
            assert np.all(net.charge <= bat.max_charge * 15 + 1e-9)
            assert np.all(net.discharge <= bat.max_discharge * 15 + 1e-9)
            assert not np.any((net.x_plus > 0) & (net.x_minus > 0))
            nb = no_battery_cost(net.demand, net.pv, *_interval_prices15(t))
            assert net.cost <= nb


def _interval_prices15(tariff):
    buy = tariff.buy_prices().reshape(-1, 15)[:, 0]
    sell = tariff.sell_prices().reshape(-1, 15)[:, 0]
    return buy, sell


class TestExtractSurplus:
    def _netload(self, seed=2):
        profiles = generate_population(
            ProfileGenParams(seed=seed, n_households=1, n_prosumers=1)
        )
        t = default_tariff()
        bat = BatterySpec(10.0, 5 / 60, 5 / 60, 0.9, 0.0)
        return optimize_self_consumption(profiles[0], bat, t), t

    def test_scenario1_no_pv_no_surplus(self):
        demand = np.full(6, 0.5)
        t = toy_tariff(6)
        prof = HouseholdProfile("p", demand, np.zeros(6), True)
        net = optimize_self_consumption(
            prof, BatterySpec(1.0, 0.5, 0.5, 0.9, 0.5), t, interval_minutes=1,
            soc_resolution=0.25,
        )
        sched = extract_surplus(net, 1, tariff=t)
        assert sched.quantity.sum() == 0

    def test_scenario1_is_pv_export_and_daylight_only(self):
        net, t = self._netload()
        sched = extract_surplus(net, 1, tariff=t)
        np.testing.assert_array_equal(sched.quantity, net.x_minus)
        active = np.nonzero(sched.quantity)[0] * net.minutes_per_slot
        assert active.size > 0
        assert active.min() >= 330 - net.minutes_per_slot
        assert active.max() < 1110

    def test_scenario2_adds_peak_battery_reserve(self):
        net, t = self._netload()
        s1 = extract_surplus(net, 1, tariff=t)
        s2 = extract_surplus(net, 2, 0.5, tariff=t)
        extra = s2.quantity - s1.quantity
        assert np.all(extra >= -1e-12)
        peak_start = 14 * 60 // net.minutes_per_slot
        peak_end = 20 * 60 // net.minutes_per_slot
        assert extra[:peak_start].sum() == 0
        assert extra[peak_end:].sum() == 0
        assert extra.sum() > 0
        np.testing.assert_allclose(extra, s2.withheld)

    def test_zero_reserve_fraction_equals_scenario1(self):
        net, t = self._netload()
        s1 = extract_surplus(net, 1, tariff=t)
        s2 = extract_surplus(net, 2, 0.0, tariff=t)
        np.testing.assert_array_equal(s1.quantity, s2.quantity)

    def test_reserve_fraction_range_enforced(self):
        net, t = self._netload()
        with pytest.raises(ValueError):
            extract_surplus(net, 2, 1.5, tariff=t)
        with pytest.raises(ValueError):
            extract_surplus(net, 3, 0.5, tariff=t)

    def test_limit_price_is_feed_in_floor(self):
        net, t = self._netload()
        sched = extract_surplus(net, 1, tariff=t)
        sells = t.sell_prices().reshape(-1, net.minutes_per_slot)[:, 0]
        np.testing.assert_array_equal(sched.limit_price, sells)

    def test_quantity_between_requires_alignment(self):
        net, t = self._netload()
        sched = extract_surplus(net, 1, tariff=t)
        assert sched.quantity_between(0, 1440) == pytest.approx(sched.quantity.sum())
        with pytest.raises(ValueError):
            sched.quantity_between(7, 67)
