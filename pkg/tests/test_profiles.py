import io

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lemsim.profiles import (
    HouseholdProfile,
    ProfileGenParams,
    TariffSchedule,
    TariffSegment,
    default_tariff,
    generate_population,
    read_profiles,
    read_tariff,
    tariff_lookup,
    write_profiles,
    write_tariff,
)


def linear_scan_lookup(schedule, k):
    """Independent segment lookup: walk every slot boundary."""
    match = None
    for seg in schedule.segments:
        if seg.start_slot <= k:
            match = seg
    return match.buy, match.sell


class TestTariff:
    def test_default_midnight_is_offpeak(self):
        assert tariff_lookup(default_tariff(), 0) == (0.13, 0.08)

    def test_segment_boundary_is_half_open(self):
        t = default_tariff()
        assert tariff_lookup(t, 14 * 60 - 1) == (0.25, 0.08)
        assert tariff_lookup(t, 14 * 60) == (0.52, 0.08)

    def test_single_segment(self):
        t = TariffSchedule((TariffSegment(0, 0.3, 0.1),))
        for k in (0, 700, 1439):
            assert tariff_lookup(t, k) == (0.3, 0.1)

    def test_out_of_range_rejected(self):
        t = default_tariff()
        with pytest.raises(ValueError):
            tariff_lookup(t, -1)
        with pytest.raises(ValueError):
            tariff_lookup(t, t.slots_per_day)

    def test_lookup_total_and_agrees_with_linear_scan(self):
        t = default_tariff()
        for k in range(t.slots_per_day):
            assert tariff_lookup(t, k) == linear_scan_lookup(t, k)

    def test_price_arrays_match_lookup(self):
        t = default_tariff()
        buy, sell = t.buy_prices(), t.sell_prices()
        for k in range(0, t.slots_per_day, 97):
            assert (buy[k], sell[k]) == tariff_lookup(t, k)

    def test_corridor_must_be_nonempty(self):
        with pytest.raises(ValueError):
            TariffSchedule((TariffSegment(0, 0.08, 0.08),))
        with pytest.raises(ValueError):
            TariffSchedule((TariffSegment(0, 0.10, -0.01),))

    def test_gapless_coverage_enforced(self):
        with pytest.raises(ValueError):
            TariffSchedule((TariffSegment(5, 0.2, 0.1),))
        with pytest.raises(ValueError):
            TariffSchedule((TariffSegment(0, 0.2, 0.1), TariffSegment(0, 0.3, 0.1)))


class TestGeneratePopulation:
    def test_paper_population_shape(self):
        profiles = generate_population(
            ProfileGenParams(seed=7, n_households=100, n_prosumers=37)
        )
        assert len(profiles) == 100
        assert sum(p.is_prosumer for p in profiles) == 37
        assert len({p.id for p in profiles}) == 100

    def test_degenerate_single_consumer(self):
        params = ProfileGenParams(
            seed=1,
            n_households=1,
            n_prosumers=0,
            appliance_event_rate=0.0,
            base_load=0.01,
        )
        (p,) = generate_population(params)
        assert not p.is_prosumer
        assert np.all(p.demand == 0.01)
        assert np.all(p.pv == 0)

    def test_identical_seed_identical_output(self):
        a = generate_population(ProfileGenParams(seed=7, n_households=6, n_prosumers=3))
        b = generate_population(ProfileGenParams(seed=7, n_households=6, n_prosumers=3))
        for x, y in zip(a, b):
            assert x.id == y.id and x.is_prosumer == y.is_prosumer
            np.testing.assert_array_equal(x.demand, y.demand)
            np.testing.assert_array_equal(x.pv, y.pv)

    def test_different_seed_differs(self):
        a = generate_population(ProfileGenParams(seed=1, n_households=2, n_prosumers=1))
        b = generate_population(ProfileGenParams(seed=2, n_households=2, n_prosumers=1))
        assert not np.array_equal(a[0].demand, b[0].demand)

    def test_rejects_more_prosumers_than_households(self):
        with pytest.raises(ValueError, match="n_prosumers.*n_households"):
            ProfileGenParams(seed=0, n_households=3, n_prosumers=4)

    @settings(max_examples=25, deadline=None)
    @given(
        seed=st.integers(0, 2**31),
        n=st.integers(1, 6),
        rate=st.floats(0, 3),
        base=st.floats(0, 0.05),
        noise=st.floats(0, 0.6),
    )
    def test_profiles_nonnegative_and_pv_daylight_only(self, seed, n, rate, base, noise):
        params = ProfileGenParams(
            seed=seed,
            n_households=n,
            n_prosumers=n,
            appliance_event_rate=rate,
            base_load=base,
            pv_noise=noise,
        )
        rise, set_ = params.daylight_window
        for p in generate_population(params):
            assert np.all(p.demand >= 0)
            assert np.all(p.pv >= 0)
            assert np.all(p.pv[:rise] == 0)
            assert np.all(p.pv[set_:] == 0)


class TestHouseholdProfileInvariants:
    def test_consumer_with_pv_rejected(self):
        z = np.zeros(10)
        with pytest.raises(ValueError):
            HouseholdProfile("x", z, np.ones(10), is_prosumer=False)

    def test_negative_values_rejected(self):
        z = np.zeros(10)
        with pytest.raises(ValueError):
            HouseholdProfile("x", z - 1, z, is_prosumer=False)

    def test_shape_mismatch_rejected(self):
        with pytest.raises(ValueError):
            HouseholdProfile("x", np.zeros(10), np.zeros(9), is_prosumer=True)


class TestSerialization:
    def test_profiles_round_trip(self):
        profiles = generate_population(
            ProfileGenParams(seed=3, n_households=4, n_prosumers=2)
        )
        buf = io.StringIO()
        write_profiles(buf, profiles)
        buf.seek(0)
        back = read_profiles(buf)
        assert [p.id for p in back] == [p.id for p in profiles]
        for x, y in zip(profiles, back):
            assert x.is_prosumer == y.is_prosumer
            np.testing.assert_array_equal(x.demand, y.demand)
            np.testing.assert_array_equal(x.pv, y.pv)

    def test_tariff_round_trip(self):
        t = default_tariff()
        buf = io.StringIO()
        write_tariff(buf, t)
        buf.seek(0)
        back = read_tariff(buf)
        assert back == t

    def test_bad_header_rejected(self):
        with pytest.raises(ValueError):
            read_profiles(io.StringIO("bogus\n"))
        with pytest.raises(ValueError):
            read_tariff(io.StringIO("bogus\n"))
