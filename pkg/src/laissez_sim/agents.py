"""Tenant-side economic agents, progress/checkpoint model and migration policies.

An agent is a pure function of (tenant state, market view): it may keep
running, move a standing bid, re-queue for migration, or terminate. The
built-in strategies bid each launch-table entry at its break-even rate
against the cheapest alternative path, clamped to [base rate, launch-table
max]. Abandoning a partially-run interval costs the profile's restart
surcharge, which the checkpoint-aware strategy folds into its off-boundary
bids and drops exactly at checkpoints.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

from .core import (
    Duration,
    Instance,
    LaunchEntry,
    LaunchTable,
    Money,
    Rate,
    SimTime,
    SimulationError,
    WorkloadProfile,
    break_even_bid,
    rate_times,
    remaining_time,
)


class UnknownStrategy(SimulationError):
    pass


class IncompatibleDestination(SimulationError):
    pass


class Phase(enum.Enum):
    QUEUED = "queued"
    LOADING = "loading"
    RUNNING = "running"
    MIGRATING = "migrating"
    COMPLETED = "completed"
    TERMINATED = "terminated"


LIVE_PHASES = (Phase.QUEUED, Phase.LOADING, Phase.RUNNING, Phase.MIGRATING)


class MigrationMode(enum.Enum):
    CHECKPOINT_STORE = "checkpoint-store"
    LIVE_OVERLAP = "live-overlap"


@dataclass(frozen=True)
class MigrationPolicy:
    """How a tenant moves between accelerators.

    checkpoint-store: stop, roll back to the last checkpoint, release the
    source, reload on the destination after the load delay. live-overlap:
    hold source and destination simultaneously for the transfer window,
    double-paying instead of losing progress.
    """

    mode: MigrationMode
    load_delay_ms: Duration | None = None  # None: use the profile's delay
    transfer_cost: Money = 0

    def __post_init__(self) -> None:
        if self.load_delay_ms is not None and self.load_delay_ms < 0:
            raise ValueError("load delay must be >= 0")
        if self.transfer_cost < 0:
            raise ValueError("transfer cost must be >= 0")

    def effective_delay(self, profile: WorkloadProfile) -> Duration:
        if self.load_delay_ms is not None:
            return self.load_delay_ms
        return profile.load_delay_ms


@dataclass
class Holding:
    instance: Instance
    rate: Rate
    since: SimTime


@dataclass
class TenantState:
    """Everything the simulator tracks about one tenant."""

    tenant_id: str
    profile: WorkloadProfile
    launch_table: LaunchTable
    strategy_id: str
    policy: MigrationPolicy
    progress: Fraction = Fraction(0)       # at the last resume/update point
    last_checkpoint: Fraction = Fraction(0)
    holdings: list[Holding] = field(default_factory=list)
    phase: Phase = Phase.QUEUED
    spent: Money = 0                        # tenant-internal costs (transfers)
    resume_time: SimTime | None = None      # when execution last (re)started
    running_type: str | None = None
    pending_request_id: str | None = None   # queued migration, if any
    completion_time: SimTime | None = None
    migrations: int = 0
    rollback_progress: Fraction = Fraction(0)

    def current_progress(self, now: SimTime) -> Fraction:
        if self.resume_time is None or self.running_type is None:
            return self.progress
        total = self.profile.total_ms(self.running_type)
        return min(Fraction(1),
                   self.progress + Fraction(now - self.resume_time, total))

    def at_checkpoint_boundary(self, now: SimTime) -> bool:
        return self.current_progress(now) == self.last_checkpoint


class DecisionKind(enum.Enum):
    STAY = "stay"
    REBID = "rebid"
    MIGRATE = "migrate"
    TERMINATE = "terminate"


@dataclass(frozen=True)
class AgentDecision:
    kind: DecisionKind
    type_id: str | None = None
    rate: Rate | None = None
    table: LaunchTable | None = None

    @classmethod
    def stay(cls) -> "AgentDecision":
        return cls(DecisionKind.STAY)

    @classmethod
    def rebid(cls, type_id: str, rate: Rate) -> "AgentDecision":
        return cls(DecisionKind.REBID, type_id=type_id, rate=rate)

    @classmethod
    def migrate(cls, table: LaunchTable) -> "AgentDecision":
        return cls(DecisionKind.MIGRATE, table=table)

    @classmethod
    def terminate(cls) -> "AgentDecision":
        return cls(DecisionKind.TERMINATE)


class MarketView:
    """Read-only exchange and availability snapshot handed to agents."""

    def __init__(self, exchange, cache):
        self._exchange = exchange
        self._cache = cache
        self.tick: Rate = exchange.tick

    def base_rate(self, type_id: str) -> Rate:
        return self._exchange.entry(type_id).base_rate

    def entitled(self, type_id: str) -> str | None:
        return self._exchange.entitled(type_id)

    def bid_rate(self, tenant_id: str, type_id: str) -> Rate | None:
        return self._exchange.bid_rate(tenant_id, type_id)

    def acquisition_rate(self, tenant_id: str, type_id: str) -> Rate:
        return self._exchange.acquisition_rate(tenant_id, type_id)

    def free_count(self, type_id: str) -> int:
        return self._cache.free_count(type_id) if self._cache else 0


# ---------------------------------------------------------------------------
# Progress
# ---------------------------------------------------------------------------

def advance_progress(state: TenantState, dt: Duration,
                     accel: str) -> list[tuple]:
    """Advance execution by dt on the given accelerator.

    Returns the emitted events: ("checkpoint", boundary) for every crossed
    multiple of the checkpoint interval (updating last_checkpoint), then
    ("complete",) when progress caps at 1.
    """
    total = state.profile.total_ms(accel)
    events: list[tuple] = []
    if dt == 0:
        return events
    new = min(Fraction(1), state.progress + Fraction(dt, total))
    interval = state.profile.checkpoint_interval
    k = math.floor(state.progress / interval) + 1
    while k * interval <= new:
        boundary = k * interval
        if boundary > state.progress:
            state.last_checkpoint = boundary
            events.append(("checkpoint", boundary))
        k += 1
    state.progress = new
    if new == 1:
        events.append(("complete",))
    return events


def rollback_to_checkpoint(state: TenantState, now: SimTime) -> Fraction:
    """Roll progress back to the last checkpoint; returns the lost fraction."""
    current = state.current_progress(now)
    lost = current - state.last_checkpoint
    state.progress = state.last_checkpoint
    state.resume_time = None
    state.rollback_progress += lost
    return lost


# ---------------------------------------------------------------------------
# Bidding
# ---------------------------------------------------------------------------

def compute_entry_bid(state: TenantState, market: MarketView,
                      entry: LaunchEntry, progress: Fraction,
                      switch_cost: Money) -> Rate | None:
    """Break-even bid for one launch entry, clamped to [base, launch max].

    The alternative is the other table entry with the cheapest completion
    path at its current acquisition rate; abandoning the currently occupied
    type costs ``switch_cost`` on top, staying on it costs nothing. Returns
    None for inert or already-completed entries.
    """
    base = market.base_rate(entry.type_id)
    if entry.max_bid < base:
        return None  # inert: can never be posted
    if remaining_time(state.profile, entry.type_id, progress) == 0:
        return None

    others = [e for e in state.launch_table if e.type_id != entry.type_id]
    if not others:
        return entry.max_bid  # no alternative path to price against

    def move_cost(e: LaunchEntry) -> Money:
        return 0 if e.type_id == state.running_type else switch_cost

    def path_cost(e: LaunchEntry) -> tuple:
        rate = market.acquisition_rate(state.tenant_id, e.type_id)
        rem = remaining_time(state.profile, e.type_id, progress)
        return (rate_times(rate, rem) + move_cost(e),
                state.launch_table.priority_of(e.type_id))

    alt = min(others, key=path_cost)
    computed = break_even_bid(
        state.profile, entry.type_id, alt.type_id, progress,
        market.acquisition_rate(state.tenant_id, alt.type_id),
        move_cost(alt), market.tick)
    return max(base, min(computed, entry.max_bid))


def _decide(state: TenantState, market: MarketView, now: SimTime,
            switch_cost: Money, migrate_on_lost_entitlement: bool) -> AgentDecision:
    if state.pending_request_id is not None:
        return AgentDecision.stay()
    progress = state.current_progress(now)

    # First settle standing bids: one adjustment per wake; follow-up wakes
    # triggered by the resulting price events handle the rest.
    for entry in state.launch_table:
        computed = compute_entry_bid(state, market, entry, progress, switch_cost)
        if computed is None:
            continue
        standing = market.bid_rate(state.tenant_id, entry.type_id)
        if standing is None or abs(computed - standing) > market.tick:
            return AgentDecision.rebid(entry.type_id, computed)

    if state.running_type is None or progress != state.last_checkpoint:
        return AgentDecision.stay()

    # At a boundary with nothing to rebid: consider moving.
    if migrate_on_lost_entitlement and market.entitled(state.running_type) != state.tenant_id:
        for entry in state.launch_table:
            if (entry.type_id != state.running_type
                    and market.entitled(entry.type_id) == state.tenant_id):
                return AgentDecision.migrate(LaunchTable((entry,)))

    try:
        cur_priority = state.launch_table.priority_of(state.running_type)
    except SimulationError:
        cur_priority = len(state.launch_table)
    higher = state.launch_table.entries[:cur_priority]
    if any(market.entitled(e.type_id) == state.tenant_id for e in higher):
        return AgentDecision.migrate(LaunchTable(higher))
    return AgentDecision.stay()


def break_even_decide(state: TenantState, market: MarketView,
                      now: SimTime) -> AgentDecision:
    """Bid break-even; migrate to a higher-priority entitlement at boundaries.

    Off a checkpoint boundary the restart surcharge is added to the cost of
    abandoning the current run; at any boundary (including the start) it is
    zero.
    """
    off_boundary = state.current_progress(now) != state.last_checkpoint
    switch = state.profile.restart_surcharge if off_boundary else 0
    return _decide(state, market, now, switch, migrate_on_lost_entitlement=False)


def checkpoint_aware_decide(state: TenantState, market: MarketView,
                            now: SimTime) -> AgentDecision:
    """Like break-even, but prices the restart risk into every bid.

    The surcharge is dropped only at checkpoints actually reached, so the
    very first bid already carries it; when the surcharge-free checkpoint
    rebid loses the occupied type, the agent moves to its best entitled
    alternative.
    """
    progress = state.current_progress(now)
    at_reached_checkpoint = (progress == state.last_checkpoint and progress > 0)
    switch = 0 if at_reached_checkpoint else state.profile.restart_surcharge
    return _decide(state, market, now, switch, migrate_on_lost_entitlement=True)


def static_decide(state: TenantState, market: MarketView,
                  now: SimTime) -> AgentDecision:
    """First-come, fixed-price baseline: never rebids, never moves."""
    return AgentDecision.stay()


Strategy = Callable[[TenantState, MarketView, SimTime], AgentDecision]

_STRATEGIES: dict[str, Strategy] = {}


def register_strategy(name: str, fn: Strategy) -> None:
    _STRATEGIES[name] = fn


def strategy(name: str) -> Strategy:
    try:
        return _STRATEGIES[name]
    except KeyError:
        raise UnknownStrategy(name) from None


register_strategy("break-even", break_even_decide)
register_strategy("checkpoint-aware", checkpoint_aware_decide)
register_strategy("static", static_decide)


# ---------------------------------------------------------------------------
# Operator baseline
# ---------------------------------------------------------------------------

def naive_operator_directive(tenants: list[TenantState],
                             freed_type: str) -> tuple[str, str] | None:
    """Blind operator policy: chase speed the moment capacity frees up.

    When an instance of ``freed_type`` is released, the first running tenant
    (by id) for which that type is strictly faster than its current one is
    told to checkpoint-store migrate immediately, whatever its progress
    phase. Returns (tenant_id, target_type) or None.
    """
    for state in sorted(tenants, key=lambda s: s.tenant_id):
        if state.phase is not Phase.RUNNING or state.running_type is None:
            continue
        if state.running_type == freed_type or state.pending_request_id:
            continue
        if not state.profile.compatible(freed_type):
            continue
        if state.profile.total_ms(freed_type) < state.profile.total_ms(state.running_type):
            return (state.tenant_id, freed_type)
    return None
