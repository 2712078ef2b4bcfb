"""Core arithmetic tests against an independent rational-arithmetic oracle."""

from __future__ import annotations

from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from laissez_sim.core import (
    AcceleratorType,
    CompletedWorkload,
    DuplicateEntry,
    EmptyLaunchTable,
    FunctionalCluster,
    IncompatibleHardware,
    LaunchEntry,
    LaunchTable,
    MoneyError,
    UnknownHardware,
    WorkloadProfile,
    break_even_bid,
    cost_to_complete,
    floor_to_tick,
    format_money,
    is_inert,
    parse_money,
    parse_rate,
    rate_times,
    remaining_time,
    validate_launch_table,
)

MS_PER_HOUR = 3_600_000

# Canonical cluster: A10 $0.606/hr (1x), L4 $0.469/hr, Trainium $0.804/hr.
A10 = AcceleratorType("a10", "NVIDIA A10", 606_000, 1)
L4 = AcceleratorType("l4", "NVIDIA L4", 469_000, 3)
TRAINIUM = AcceleratorType("trainium", "Trainium", 804_000, 3)


def make_cluster() -> FunctionalCluster:
    return FunctionalCluster("gemm-pool", "gemm", [A10, L4, TRAINIUM])


# App A: 0.35h / 0.51h / 0.30h. App B: 0.23h / 0.32h, no Trainium.
PROFILE_A = WorkloadProfile(
    execution_ms={"a10": 1_260_000, "l4": 1_836_000, "trainium": 1_080_000},
    checkpoint_interval=Fraction(1, 4),
    restart_surcharge=53_000,
    load_delay_ms=5_000,
)
PROFILE_B = WorkloadProfile(
    execution_ms={"a10": 828_000, "l4": 1_152_000},
    checkpoint_interval=Fraction(1, 5),
    restart_surcharge=25_300,
    load_delay_ms=5_000,
)


# ---------------------------------------------------------------------------
# Independent oracle: pure Fraction arithmetic, no reuse of core helpers.
# ---------------------------------------------------------------------------

def oracle_half_up(value: Fraction) -> int:
    assert value >= 0
    return int(value) + (1 if value - int(value) >= Fraction(1, 2) else 0)


def oracle_remaining(total_ms: int, progress: Fraction) -> int:
    return oracle_half_up((1 - progress) * total_ms)


def oracle_cost(rate: int, duration_ms: int) -> int:
    return oracle_half_up(Fraction(rate * duration_ms, MS_PER_HOUR))


def oracle_break_even(alt_rate: int, rem_alt: int, switch: int,
                      rem_target: int, tick: int = 1_000) -> int:
    exact = Fraction(alt_rate * rem_alt + switch * MS_PER_HOUR, rem_target)
    ticks = exact / tick
    return int(ticks) * tick  # floor to tick


# ---------------------------------------------------------------------------
# Money / Rate plumbing
# ---------------------------------------------------------------------------

def test_parse_money_exact_decimal():
    assert parse_money("0.6065") == 606_500
    assert parse_rate("0.606") == 606_000
    assert parse_money("0") == 0
    assert parse_money(2) == 2_000_000
    assert parse_money("0.000001") == 1


@pytest.mark.parametrize("bad", ["-0.01", "abc", "0.0000001", 0.5, None])
def test_parse_money_rejects(bad):
    with pytest.raises(MoneyError):
        parse_money(bad)


def test_format_money_round_trips():
    assert format_money(150_080) == "0.150080"
    assert format_money(0) == "0.000000"
    assert parse_money(format_money(227_179)) == 227_179


def test_rate_times_half_up():
    # 0.606/hr for 5s: 841.66... micro-$ rounds up to 842.
    assert rate_times(606_000, 5_000) == 842
    # 0.804/hr for 0.075h is exact.
    assert rate_times(804_000, 270_000) == 60_300
    assert rate_times(687_000, 0) == 0


@given(rate=st.integers(0, 2_000_000), duration=st.integers(0, 10**8))
def test_rate_times_matches_oracle(rate, duration):
    assert rate_times(rate, duration) == oracle_cost(rate, duration)


@given(rate=st.integers(0, 2_000_000),
       d1=st.integers(0, 10**7), d2=st.integers(0, 10**7))
def test_rate_times_never_negative_and_nearly_additive(rate, d1, d2):
    combined = rate_times(rate, d1 + d2)
    split = rate_times(rate, d1) + rate_times(rate, d2)
    assert combined >= 0 and split >= 0
    # Half-up rounding can differ by at most one micro-dollar per split point.
    assert abs(combined - split) <= 1


# ---------------------------------------------------------------------------
# remaining_time / cost_to_complete
# ---------------------------------------------------------------------------

def test_remaining_time_paper_rows():
    assert remaining_time(PROFILE_A, "a10", 0) == 1_260_000  # 0.35h
    assert remaining_time(PROFILE_A, "trainium", Fraction(1, 2)) == 540_000  # 0.15h
    assert remaining_time(PROFILE_B, "a10", 1) == 0


def test_remaining_time_incompatible():
    with pytest.raises(IncompatibleHardware):
        remaining_time(PROFILE_B, "trainium", 0)


@given(progress=st.fractions(min_value=0, max_value=1))
def test_remaining_time_monotone(progress):
    total = remaining_time(PROFILE_A, "l4", progress)
    assert total == oracle_remaining(1_836_000, Fraction(progress))
    later = min(progress + Fraction(1, 17), Fraction(1))
    assert remaining_time(PROFILE_A, "l4", later) <= total
    assert remaining_time(PROFILE_A, "l4", 1) == 0


def test_cost_to_complete_frozen_values():
    # Oracle-computed expectations, frozen:
    assert oracle_cost(804_000, 1_080_000) == 241_200
    assert cost_to_complete(PROFILE_A, "trainium", 0, 804_000) == 241_200
    # B on L4 at $0.469/hr: exactly $0.150080 (Table cell $0.15).
    assert oracle_cost(469_000, 1_152_000) == 150_080
    assert cost_to_complete(PROFILE_B, "l4", 0, 469_000) == 150_080
    assert cost_to_complete(PROFILE_A, "a10", 1, 999_000) == 0


@given(progress=st.fractions(min_value=0, max_value=1),
       rate=st.integers(0, 1_500_000))
def test_cost_equals_rate_times_remaining(progress, rate):
    for accel in ("a10", "l4", "trainium"):
        rem = remaining_time(PROFILE_A, accel, progress)
        assert cost_to_complete(PROFILE_A, accel, progress, rate) == oracle_cost(rate, rem)


# ---------------------------------------------------------------------------
# break_even_bid
# ---------------------------------------------------------------------------

def test_break_even_app_a_initial_bid():
    # Completing on Trainium at $0.804/hr vs bidding for the A10:
    # exact arithmetic gives $0.689142.../hr, floored to $0.689.
    bid = break_even_bid(PROFILE_A, "a10", "trainium", 0, 804_000, 0)
    assert bid == 689_000
    assert bid == oracle_break_even(804_000, 1_080_000, 0, 1_260_000)
    # Within 0.5% of the reported $0.687/hr.
    assert abs(bid - 687_000) / 687_000 < 0.005


def test_break_even_app_b_with_restart_surcharge():
    bid = break_even_bid(PROFILE_B, "a10", "l4", 0, 469_000, 25_300)
    assert bid == 762_000
    assert bid == oracle_break_even(469_000, 1_152_000, 25_300, 828_000)


def test_break_even_app_b_at_checkpoint():
    # At a boundary the surcharge drops; progress cancels out of the ratio.
    for progress in (0, Fraction(1, 5), Fraction(2, 5)):
        bid = break_even_bid(PROFILE_B, "a10", "l4", progress, 469_000, 0)
        assert bid == 652_000


def test_break_even_errors():
    with pytest.raises(CompletedWorkload):
        break_even_bid(PROFILE_A, "a10", "trainium", 1, 804_000, 0)
    with pytest.raises(IncompatibleHardware):
        break_even_bid(PROFILE_B, "trainium", "l4", 0, 469_000, 0)
    with pytest.raises(MoneyError):
        break_even_bid(PROFILE_B, "a10", "l4", 0, 469_000, -1)


@given(rate=st.integers(1, 1_500).map(lambda t: t * 1_000),
       progress=st.sampled_from([Fraction(0), Fraction(1, 5), Fraction(3, 5)]))
def test_break_even_identity(rate, progress):
    # Same target and alternative, no switch cost: returns the rate exactly
    # (rates here are tick-aligned).
    assert break_even_bid(PROFILE_B, "a10", "a10", progress, rate, 0) == rate


@given(alt_rate=st.integers(100_000, 1_500_000),
       switch=st.integers(0, 200_000),
       bump_rate=st.integers(0, 100_000),
       bump_switch=st.integers(0, 100_000))
def test_break_even_monotone_in_alt_rate_and_switch_cost(alt_rate, switch,
                                                         bump_rate, bump_switch):
    base = break_even_bid(PROFILE_B, "a10", "l4", 0, alt_rate, switch)
    assert break_even_bid(PROFILE_B, "a10", "l4", 0, alt_rate + bump_rate, switch) >= base
    assert break_even_bid(PROFILE_B, "a10", "l4", 0, alt_rate, switch + bump_switch) >= base
    assert base == oracle_break_even(alt_rate, 1_152_000, switch, 828_000)


def test_break_even_decreasing_in_target_remaining():
    # More work left on the target makes the same alternative worth less per hour.
    slow = WorkloadProfile({"a10": 2_000_000, "l4": 1_152_000},
                           Fraction(1, 5), 0, 0)
    fast = WorkloadProfile({"a10": 500_000, "l4": 1_152_000},
                           Fraction(1, 5), 0, 0)
    assert (break_even_bid(slow, "a10", "l4", 0, 469_000, 0)
            < break_even_bid(fast, "a10", "l4", 0, 469_000, 0))


def test_floor_to_tick():
    assert floor_to_tick(689_142) == 689_000
    assert floor_to_tick(652_521) == 652_000
    assert floor_to_tick(652_000) == 652_000


# ---------------------------------------------------------------------------
# Launch-table validation
# ---------------------------------------------------------------------------

def table(*pairs) -> LaunchTable:
    return LaunchTable(tuple(LaunchEntry(t, r) for t, r in pairs))


def test_validate_launch_table_app_a():
    cluster = make_cluster()
    lt = table(("a10", 687_000), ("trainium", 804_000))
    assert validate_launch_table(lt, cluster, PROFILE_A) is lt
    assert lt.type_ids() == ["a10", "trainium"]
    assert lt.priority_of("a10") == 0


def test_validate_launch_table_errors():
    cluster = make_cluster()
    with pytest.raises(EmptyLaunchTable):
        validate_launch_table(LaunchTable(()), cluster, PROFILE_A)
    with pytest.raises(IncompatibleHardware):
        validate_launch_table(table(("a10", 762_000), ("trainium", 804_000)),
                              cluster, PROFILE_B)
    with pytest.raises(UnknownHardware):
        validate_launch_table(table(("h100", 900_000)), cluster, PROFILE_A)
    with pytest.raises(DuplicateEntry):
        validate_launch_table(table(("a10", 687_000), ("a10", 700_000)),
                              cluster, PROFILE_A)


def test_inert_entry_below_base():
    cluster = make_cluster()
    lt = table(("a10", 500_000), ("trainium", 804_000))
    validate_launch_table(lt, cluster, PROFILE_A)  # accepted, not rejected
    assert is_inert(lt.entries[0], cluster)
    assert not is_inert(lt.entries[1], cluster)


def test_profile_validation():
    with pytest.raises(ValueError):
        WorkloadProfile({}, Fraction(1, 4), 0, 0)
    with pytest.raises(ValueError):
        WorkloadProfile({"a10": 0}, Fraction(1, 4), 0, 0)
    with pytest.raises(ValueError):
        WorkloadProfile({"a10": 1000}, Fraction(3, 7), 0, 0)  # does not divide 1
    with pytest.raises(ValueError):
        WorkloadProfile({"a10": 1000}, Fraction(1, 4), -1, 0)
