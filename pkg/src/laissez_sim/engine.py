"""Deterministic discrete-event kernel, billing ledger and simulation loop.

The kernel is a priority queue ordered by (time, sequence); sequence numbers
are assigned at scheduling time, so replaying a scenario yields the same
event order and therefore byte-identical traces. All state mutation happens
in this single loop: the exchange, scheduler and agents are invoked
synchronously from event handlers, and every consequential transition is
appended to the trace.

Billing is interval-based: every allocated instance carries one open ledger
interval; a clearing-rate change closes it and opens a new one at the new
rate, so each entry's cost is exactly rate x duration at micro-dollar
precision.
"""

from __future__ import annotations

import enum
import heapq
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction

from . import agents as ag
from . import scheduler as sched
from .core import (
    Duration,
    FunctionalCluster,
    Instance,
    LaunchEntry,
    LaunchTable,
    Money,
    Rate,
    SimTime,
    SimulationError,
    UserRequest,
    rate_times,
)
from .exchange import ExchangeTable, PriceCause, PriceEvent


class TimeTravel(SimulationError):
    pass


class OverlapViolation(SimulationError):
    pass


class NegativeInterval(SimulationError):
    pass


class EventKind(enum.Enum):
    REQUEST_ARRIVAL = "RequestArrival"
    PRICE_SWEEP = "PriceRecompute"
    AGENT_WAKE = "AgentWake"
    CHECKPOINT = "CheckpointReached"
    LOAD_COMPLETE = "LoadComplete"
    MIGRATION_COMPLETE = "MigrationComplete"
    WORKLOAD_COMPLETE = "WorkloadComplete"
    TIMEOUT = "Timeout"
    RATE_APPLY = "RateApply"


@dataclass(frozen=True)
class SimEvent:
    time: SimTime
    seq: int
    kind: EventKind
    data: dict


class Kernel:
    """Priority queue of events totally ordered by (time, sequence)."""

    def __init__(self) -> None:
        self.clock: SimTime = 0
        self._seq = 0
        self._heap: list[tuple[SimTime, int, SimEvent]] = []
        self._cancelled: set[int] = set()

    def schedule(self, time: SimTime, kind: EventKind, **data) -> int:
        if time < self.clock:
            raise TimeTravel(f"{kind.value} at {time} < clock {self.clock}")
        seq = self._seq
        self._seq += 1
        heapq.heappush(self._heap, (time, seq, SimEvent(time, seq, kind, data)))
        return seq

    def cancel(self, seq: int | None) -> None:
        if seq is not None:
            self._cancelled.add(seq)

    def _skip_dead(self) -> None:
        while self._heap and self._heap[0][1] in self._cancelled:
            self._cancelled.discard(self._heap[0][1])
            heapq.heappop(self._heap)

    def peek_time(self) -> SimTime | None:
        self._skip_dead()
        return self._heap[0][0] if self._heap else None

    def pop(self) -> SimEvent | None:
        self._skip_dead()
        if not self._heap:
            return None
        _, _, event = heapq.heappop(self._heap)
        self.clock = event.time
        return event


# ---------------------------------------------------------------------------
# Billing
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LedgerEntry:
    tenant_id: str
    type_id: str
    index: int
    rate: Rate
    start: SimTime
    end: SimTime
    kind: str  # compute | overlap | load
    cost: Money


@dataclass
class _OpenInterval:
    tenant_id: str
    rate: Rate
    start: SimTime
    kind: str


class BillingLedger:
    """Append-only record of rated holding intervals, one open per instance."""

    def __init__(self) -> None:
        self.entries: list[LedgerEntry] = []
        self._open: dict[tuple[str, int], _OpenInterval] = {}
        self._last_end: dict[tuple[str, int], SimTime] = {}
        self._totals: dict[str, Money] = {}

    def accrue(self, tenant_id: str, type_id: str, index: int, rate: Rate,
               start: SimTime, end: SimTime, kind: str) -> LedgerEntry:
        if end < start:
            raise NegativeInterval(f"{type_id}#{index}: {end} < {start}")
        key = (type_id, index)
        if start < self._last_end.get(key, start):
            raise OverlapViolation(
                f"{type_id}#{index}: interval [{start},{end}] overlaps earlier use")
        entry = LedgerEntry(tenant_id, type_id, index, rate, start, end, kind,
                            rate_times(rate, end - start))
        self.entries.append(entry)
        self._last_end[key] = end
        self._totals[tenant_id] = self._totals.get(tenant_id, 0) + entry.cost
        return entry

    def open_interval(self, tenant_id: str, instance: Instance, rate: Rate,
                      start: SimTime, kind: str) -> None:
        key = instance.key
        if key in self._open:
            raise OverlapViolation(f"{key} already has an open interval")
        if start < self._last_end.get(key, start):
            raise OverlapViolation(f"{key}: open at {start} overlaps earlier use")
        self._open[key] = _OpenInterval(tenant_id, rate, start, kind)

    def close_interval(self, instance: Instance, end: SimTime) -> LedgerEntry:
        interval = self._open.pop(instance.key)
        return self.accrue(interval.tenant_id, instance.type_id, instance.index,
                           interval.rate, interval.start, end, interval.kind)

    def rotate(self, instance: Instance, now: SimTime, new_rate: Rate) -> None:
        interval = self._open.get(instance.key)
        if interval is None or interval.rate == new_rate:
            return
        kind = interval.kind
        tenant = interval.tenant_id
        self.close_interval(instance, now)
        self.open_interval(tenant, instance, new_rate, now, kind)

    def open_rate(self, instance: Instance) -> Rate | None:
        interval = self._open.get(instance.key)
        return interval.rate if interval else None

    def close_all(self, now: SimTime) -> None:
        for key in list(self._open):
            type_id, index = key
            interval = self._open.pop(key)
            self.accrue(interval.tenant_id, type_id, index, interval.rate,
                        interval.start, now, interval.kind)

    def total(self, tenant_id: str) -> Money:
        return self._totals.get(tenant_id, 0)

    def grand_total(self) -> Money:
        return sum(self._totals.values())


# ---------------------------------------------------------------------------
# Trace
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TraceRecord:
    time_ms: SimTime
    event: str
    tenant: str
    accel: str
    instance: int | None
    rate: Rate | None
    progress: Fraction | None
    cumulative: Money | None


@dataclass
class RunResult:
    scenario: "object"
    trace: list[TraceRecord]
    ledger: BillingLedger
    tenants: dict[str, ag.TenantState]
    quiescent: bool
    end_time: SimTime
    seed: int


# ---------------------------------------------------------------------------
# Simulation
# ---------------------------------------------------------------------------

class Simulation:
    """One scenario wired together: cluster, exchange, scheduler, agents."""

    def __init__(self, scenario, seed: int | None = None):
        self.scenario = scenario
        self.seed = scenario.engine.seed if seed is None else seed
        self.cluster = FunctionalCluster(scenario.cluster_id, scenario.function,
                                         list(scenario.accelerators))
        self.exchange = ExchangeTable(
            {a.type_id: a.base_rate for a in scenario.accelerators},
            tick=scenario.engine.rate_tick)
        self.cache = sched.AvailabilityCache(self.cluster)
        self.queue = sched.RequestQueue()
        self.kernel = Kernel()
        self.ledger = BillingLedger()
        self.trace: list[TraceRecord] = []
        self.market = ag.MarketView(self.exchange, self.cache)

        self.tenants: dict[str, ag.TenantState] = {}
        self._requests: dict[str, UserRequest] = {}
        self._timeout_seq: dict[str, int] = {}
        self._timers: dict[str, dict[str, int]] = {}
        self._migration_n: dict[str, int] = {}
        self._pass_needed = False
        self._eval_queue: deque[str] = deque()
        self._eval_set: set[str] = set()
        self._sweeping = False

        for spec_tenant in scenario.tenants:
            state = ag.TenantState(
                tenant_id=spec_tenant.tenant_id,
                profile=spec_tenant.profile,
                launch_table=spec_tenant.launch_table,
                strategy_id=spec_tenant.strategy_id,
                policy=spec_tenant.policy,
            )
            self.tenants[spec_tenant.tenant_id] = state
            self._timers[spec_tenant.tenant_id] = {}
            self._migration_n[spec_tenant.tenant_id] = 0
            request = UserRequest(
                tenant_id=spec_tenant.tenant_id,
                launch_table=spec_tenant.launch_table,
                strategy_id=spec_tenant.strategy_id,
                migration_policy_id=spec_tenant.policy.mode.value,
                timeout_ms=spec_tenant.timeout_ms,
                payload=spec_tenant.payload,
                resume_from=spec_tenant.resume_from,
            )
            self._requests[request.request_id] = request
            self.kernel.schedule(spec_tenant.arrival_ms,
                                 EventKind.REQUEST_ARRIVAL,
                                 request_id=request.request_id)
        if scenario.engine.sweep_period_ms > 0:
            self.kernel.schedule(scenario.engine.sweep_period_ms,
                                 EventKind.PRICE_SWEEP)

    # -- plumbing -------------------------------------------------------------

    @property
    def now(self) -> SimTime:
        return self.kernel.clock

    def _emit(self, kind: str, tenant_id: str | None = None,
              accel: str | None = None, instance: int | None = None,
              rate: Rate | None = None, progress: Fraction | None = None) -> None:
        cumulative = self.ledger.total(tenant_id) if tenant_id else None
        self.trace.append(TraceRecord(self.now, kind, tenant_id or "",
                                      accel or "", instance, rate, progress,
                                      cumulative))

    def _set_timer(self, tenant_id: str, name: str, time: SimTime,
                   kind: EventKind, **data) -> None:
        timers = self._timers[tenant_id]
        self.kernel.cancel(timers.pop(name, None))
        timers[name] = self.kernel.schedule(time, kind, tenant_id=tenant_id, **data)

    def _clear_timer(self, tenant_id: str, name: str) -> None:
        self.kernel.cancel(self._timers[tenant_id].pop(name, None))

    def _live(self) -> bool:
        return (len(self.queue) > 0
                or any(t.phase in ag.LIVE_PHASES for t in self.tenants.values()))

    def _queue_eval(self, tenant_id: str) -> None:
        if tenant_id not in self._eval_set:
            self._eval_set.add(tenant_id)
            self._eval_queue.append(tenant_id)

    # -- main loop -------------------------------------------------------------

    def run(self, until: SimTime | None = None) -> RunResult:
        while True:
            next_time = self.kernel.peek_time()
            if next_time is None:
                break
            if until is not None and next_time > until:
                break
            event = self.kernel.pop()
            self._handle(event)
            self._drain()
        quiescent = not self._live()
        if quiescent:
            end_time = self.trace[-1].time_ms if self.trace else 0
        else:
            end_time = until if until is not None else self.now
            self.ledger.close_all(end_time)
        return RunResult(self.scenario, self.trace, self.ledger, self.tenants,
                         quiescent, end_time, self.seed)

    def _drain(self) -> None:
        for _ in range(100_000):
            if self._pass_needed:
                self._pass_needed = False
                self._run_pass()
                continue
            if self._eval_queue:
                tenant_id = self._eval_queue.popleft()
                self._eval_set.discard(tenant_id)
                self._evaluate_agent(tenant_id)
                continue
            return
        raise AssertionError("event cascade did not settle")

    def _handle(self, event: SimEvent) -> None:
        kind = event.kind
        if kind is EventKind.REQUEST_ARRIVAL:
            self._handle_arrival(self._requests[event.data["request_id"]])
        elif kind is EventKind.PRICE_SWEEP:
            self._handle_sweep()
        elif kind is EventKind.AGENT_WAKE:
            self._handle_wake(event.data["tenant_id"])
        elif kind is EventKind.CHECKPOINT:
            self._handle_checkpoint(event.data["tenant_id"], event.data["boundary"])
        elif kind is EventKind.LOAD_COMPLETE:
            self._handle_load_complete(event.data["tenant_id"])
        elif kind is EventKind.MIGRATION_COMPLETE:
            self._handle_migration_complete(event.data["tenant_id"])
        elif kind is EventKind.WORKLOAD_COMPLETE:
            self._handle_workload_complete(event.data["tenant_id"])
        elif kind is EventKind.TIMEOUT:
            self._handle_timeout()
        elif kind is EventKind.RATE_APPLY:
            self._rotate_type(event.data["type_id"])

    # -- handlers ---------------------------------------------------------------

    def _handle_arrival(self, request: UserRequest) -> None:
        tenant = self.tenants[request.tenant_id]
        tenant.progress = request.resume_from
        tenant.last_checkpoint = request.resume_from
        tenant.phase = ag.Phase.QUEUED
        self._emit("RequestArrival", tenant.tenant_id, progress=request.resume_from)
        events = sched.enqueue(self.queue, request, self.now, self.exchange,
                               self.cluster, tenant.profile)
        self._timeout_seq[request.request_id] = self.kernel.schedule(
            self.now + request.timeout_ms + 1, EventKind.TIMEOUT)
        self._after_price_events(events)
        self._pass_needed = True

    def _handle_sweep(self) -> None:
        events = self.exchange.recompute_all(self.now, PriceCause.PERIODIC)
        self._after_price_events(events)
        if self._live():
            self.kernel.schedule(self.now + self.scenario.engine.sweep_period_ms,
                                 EventKind.PRICE_SWEEP)

    def _handle_wake(self, tenant_id: str) -> None:
        tenant = self.tenants[tenant_id]
        if tenant.phase in (ag.Phase.COMPLETED, ag.Phase.TERMINATED):
            return
        if tenant.phase is ag.Phase.RUNNING:
            self._queue_eval(tenant_id)
        self._set_timer(tenant_id, "wake",
                        self.now + self.scenario.engine.wake_period_ms,
                        EventKind.AGENT_WAKE)

    def _handle_checkpoint(self, tenant_id: str, boundary: Fraction) -> None:
        tenant = self.tenants[tenant_id]
        if tenant.phase not in (ag.Phase.RUNNING, ag.Phase.MIGRATING):
            return
        assert tenant.current_progress(self.now) >= boundary
        tenant.last_checkpoint = boundary
        # Re-anchor exactly on the boundary; for millisecond-aligned scenarios
        # this is a no-op, otherwise it absorbs the sub-ms scheduling overshoot.
        tenant.progress = boundary
        tenant.resume_time = self.now
        self._emit("CheckpointReached", tenant_id, accel=tenant.running_type,
                   rate=self.exchange.clearing_rate(tenant.running_type),
                   progress=boundary)
        self._schedule_progress_events(tenant)
        if tenant.phase is ag.Phase.RUNNING:
            self._queue_eval(tenant_id)

    def _handle_load_complete(self, tenant_id: str) -> None:
        tenant = self.tenants[tenant_id]
        if tenant.phase is not ag.Phase.LOADING or not tenant.holdings:
            return
        holding = tenant.holdings[0]
        instance = holding.instance
        tenant.running_type = instance.type_id
        tenant.resume_time = self.now
        tenant.phase = ag.Phase.RUNNING
        rate = self.exchange.clearing_rate(instance.type_id)
        self.ledger.close_interval(instance, self.now)
        self.ledger.open_interval(tenant_id, instance, rate, self.now, "compute")
        holding.rate = rate
        self._emit("LoadComplete", tenant_id, accel=instance.type_id,
                   instance=instance.index, rate=rate, progress=tenant.progress)
        self._schedule_progress_events(tenant)
        self._set_timer(tenant_id, "wake",
                        self.now + self.scenario.engine.wake_period_ms,
                        EventKind.AGENT_WAKE)

    def _handle_migration_complete(self, tenant_id: str) -> None:
        tenant = self.tenants[tenant_id]
        if tenant.phase is not ag.Phase.MIGRATING or len(tenant.holdings) != 2:
            return
        source, dest = tenant.holdings[0], tenant.holdings[1]
        tenant.progress = tenant.current_progress(self.now)
        tenant.resume_time = None
        self._release_holding(tenant, source)
        self.ledger.close_interval(dest.instance, self.now)
        rate = self.exchange.clearing_rate(dest.instance.type_id)
        self.ledger.open_interval(tenant_id, dest.instance, rate, self.now, "compute")
        dest.rate = rate
        tenant.running_type = dest.instance.type_id
        tenant.resume_time = self.now
        tenant.phase = ag.Phase.RUNNING
        self._emit("MigrationComplete", tenant_id, accel=dest.instance.type_id,
                   instance=dest.instance.index, rate=rate,
                   progress=tenant.progress)
        self._schedule_progress_events(tenant)
        self._queue_eval(tenant_id)

    def _handle_workload_complete(self, tenant_id: str) -> None:
        tenant = self.tenants[tenant_id]
        if tenant.phase not in (ag.Phase.RUNNING, ag.Phase.MIGRATING):
            return
        assert tenant.current_progress(self.now) == 1
        tenant.progress = Fraction(1)
        tenant.last_checkpoint = Fraction(1)
        tenant.resume_time = None
        tenant.completion_time = self.now
        tenant.phase = ag.Phase.COMPLETED
        self._emit("WorkloadComplete", tenant_id, accel=tenant.running_type,
                   progress=Fraction(1))
        for holding in list(tenant.holdings):
            self._release_holding(tenant, holding)
        tenant.running_type = None
        self._drop_pending_request(tenant)
        for name in ("wake", "checkpoint", "complete", "migration"):
            self._clear_timer(tenant_id, name)
        events = self.exchange.expire_tenant_bids(tenant_id, self.now)
        self._after_price_events(events)

    def _handle_timeout(self) -> None:
        for item in sched.sweep_timeouts(self.queue, self.now):
            request = item.request
            tenant = self.tenants[request.tenant_id]
            self.kernel.cancel(self._timeout_seq.pop(request.request_id, None))
            self._emit("Timeout", request.tenant_id,
                       progress=tenant.current_progress(self.now))
            self._expire_request_bids(tenant, request)

    def cancel_request(self, request_id: str) -> bool:
        """Tenant-initiated cancellation: same cleanup path as a timeout."""
        item = self.queue.remove(request_id)
        if item is None:
            return False
        request = item.request
        tenant = self.tenants[request.tenant_id]
        self.kernel.cancel(self._timeout_seq.pop(request_id, None))
        self._emit("Cancel", request.tenant_id,
                   progress=tenant.current_progress(self.now))
        self._expire_request_bids(tenant, request)
        self._drain()
        return True

    def _expire_request_bids(self, tenant: ag.TenantState,
                             request: UserRequest) -> None:
        if tenant.holdings:
            # A parked migration: the tenant keeps running where it is and
            # only the unused migration bids lapse.
            tenant.pending_request_id = None
            held = {h.instance.type_id for h in tenant.holdings}
            types = [e.type_id for e in request.launch_table
                     if e.type_id not in held]
            events = self.exchange.expire_tenant_bids(tenant.tenant_id, self.now,
                                                      type_ids=types)
        else:
            tenant.phase = ag.Phase.TERMINATED
            events = self.exchange.expire_tenant_bids(tenant.tenant_id, self.now)
        self._after_price_events(events)

    # -- price propagation -------------------------------------------------------

    def _after_price_events(self, events: list[PriceEvent]) -> None:
        grace = self.scenario.engine.grace_ms
        for event in events:
            self._emit("PriceRecompute", event.new_entitled, accel=event.type_id,
                       rate=event.new_rate)
            if event.new_rate != event.old_rate:
                if grace == 0:
                    self._rotate_type(event.type_id)
                else:
                    self.kernel.schedule(self.now + grace, EventKind.RATE_APPLY,
                                         type_id=event.type_id)
            for tenant_id in sorted(self.tenants):
                tenant = self.tenants[tenant_id]
                if (tenant.phase is ag.Phase.RUNNING
                        and event.type_id in tenant.launch_table.type_ids()):
                    self._queue_eval(tenant_id)

    def _rotate_type(self, type_id: str) -> None:
        rate = self.exchange.clearing_rate(type_id)
        for tenant in self.tenants.values():
            for holding in tenant.holdings:
                if holding.instance.type_id == type_id:
                    self.ledger.rotate(holding.instance, self.now, rate)
                    holding.rate = rate

    # -- scheduling pass -----------------------------------------------------------

    def _run_pass(self) -> None:
        while True:
            assignment = sched.match_head(self.queue, self.cache, self.exchange,
                                          self.now)
            if assignment is None:
                return
            self._dispatch(assignment)

    def _dispatch(self, assignment: sched.Assignment) -> None:
        item = self.queue.remove(assignment.request_id)
        request = item.request
        tenant = self.tenants[request.tenant_id]
        self.kernel.cancel(self._timeout_seq.pop(request.request_id, None))
        tenant.pending_request_id = None
        self._emit("Assignment", tenant.tenant_id,
                   accel=assignment.instance.type_id,
                   instance=assignment.instance.index, rate=assignment.rate,
                   progress=request.resume_from)
        if tenant.holdings:
            self._apply_migration(tenant, request, assignment)
        else:
            tenant.launch_table = request.launch_table
            tenant.progress = request.resume_from
            tenant.last_checkpoint = request.resume_from
            tenant.phase = ag.Phase.LOADING
            self._allocate(tenant, assignment, "load")
            self._set_timer(tenant.tenant_id, "load",
                            self.now + tenant.profile.load_delay_ms,
                            EventKind.LOAD_COMPLETE)

    def _apply_migration(self, tenant: ag.TenantState, request: UserRequest,
                         assignment: sched.Assignment) -> None:
        held = [h.instance for h in tenant.holdings]
        if assignment.instance in held:
            return  # moving onto an instance it already holds: nothing to do
        policy = tenant.policy
        delay = policy.effective_delay(tenant.profile)
        tenant.migrations += 1
        tenant.spent += policy.transfer_cost
        tenant.launch_table = request.launch_table
        if policy.mode is ag.MigrationMode.CHECKPOINT_STORE:
            ag.rollback_to_checkpoint(tenant, self.now)
            for holding in list(tenant.holdings):
                self._release_holding(tenant, holding)
            tenant.running_type = None
            self._clear_timer(tenant.tenant_id, "checkpoint")
            self._clear_timer(tenant.tenant_id, "complete")
            tenant.phase = ag.Phase.LOADING
            self._allocate(tenant, assignment, "load")
            self._set_timer(tenant.tenant_id, "load", self.now + delay,
                            EventKind.LOAD_COMPLETE)
        else:
            # live-overlap: keep computing on the source while both accrue.
            self.cache.set_draining(tenant.holdings[0].instance,
                                    tenant.tenant_id)
            tenant.phase = ag.Phase.MIGRATING
            self._allocate(tenant, assignment, "overlap", draining_source=True)
            self._set_timer(tenant.tenant_id, "migration", self.now + delay,
                            EventKind.MIGRATION_COMPLETE)

    def _allocate(self, tenant: ag.TenantState, assignment: sched.Assignment,
                  kind: str, draining_source: bool = False) -> None:
        instance = assignment.instance
        self.cache.allocate(instance, tenant.tenant_id, assignment.rate, self.now)
        tenant.holdings.append(ag.Holding(instance, assignment.rate, self.now))
        self.ledger.open_interval(tenant.tenant_id, instance, assignment.rate,
                                  self.now, kind)

    def _release_holding(self, tenant: ag.TenantState, holding: ag.Holding) -> None:
        instance = holding.instance
        self.ledger.close_interval(instance, self.now)
        tenant.holdings.remove(holding)
        self.cache.release(instance)
        self._emit("Release", tenant.tenant_id, accel=instance.type_id,
                   instance=instance.index,
                   progress=tenant.current_progress(self.now))
        self._pass_needed = True
        if self.scenario.engine.operator == "naive-migration":
            self._operator_scan(instance.type_id)

    # -- agents ---------------------------------------------------------------------

    def _evaluate_agent(self, tenant_id: str) -> None:
        tenant = self.tenants[tenant_id]
        if tenant.phase is not ag.Phase.RUNNING or tenant.pending_request_id:
            return
        decision = ag.strategy(tenant.strategy_id)(tenant, self.market, self.now)
        if decision.kind is ag.DecisionKind.STAY:
            return
        if decision.kind is ag.DecisionKind.REBID:
            standing = self.exchange.bid_rate(tenant_id, decision.type_id)
            if standing is None:
                events = self.exchange.post_bid(tenant_id, decision.type_id,
                                                decision.rate, self.now)
            else:
                events = self.exchange.update_bid(tenant_id, decision.type_id,
                                                  decision.rate, self.now)
            self._emit("BidUpdated", tenant_id, accel=decision.type_id,
                       rate=decision.rate,
                       progress=tenant.current_progress(self.now))
            self._after_price_events(events)
        elif decision.kind is ag.DecisionKind.MIGRATE:
            self._requeue_migration(tenant, decision.table)
        elif decision.kind is ag.DecisionKind.TERMINATE:
            self._terminate(tenant)

    def _requeue_migration(self, tenant: ag.TenantState,
                           table: LaunchTable) -> None:
        self._migration_n[tenant.tenant_id] += 1
        request = UserRequest(
            tenant_id=tenant.tenant_id,
            launch_table=table,
            strategy_id=tenant.strategy_id,
            migration_policy_id=tenant.policy.mode.value,
            timeout_ms=self._requests[tenant.tenant_id].timeout_ms,
            resume_from=tenant.last_checkpoint,
            request_id=f"{tenant.tenant_id}/m{self._migration_n[tenant.tenant_id]}",
        )
        self._requests[request.request_id] = request
        self._emit("MigrationStart", tenant.tenant_id, accel=tenant.running_type,
                   progress=tenant.current_progress(self.now))
        events = sched.enqueue(self.queue, request, self.now, self.exchange,
                               self.cluster, tenant.profile)
        tenant.pending_request_id = request.request_id
        self._timeout_seq[request.request_id] = self.kernel.schedule(
            self.now + request.timeout_ms + 1, EventKind.TIMEOUT)
        self._after_price_events(events)
        self._pass_needed = True

    def _terminate(self, tenant: ag.TenantState) -> None:
        tenant.progress = tenant.last_checkpoint
        tenant.resume_time = None
        tenant.phase = ag.Phase.TERMINATED
        self._emit("Terminate", tenant.tenant_id, accel=tenant.running_type,
                   progress=tenant.progress)
        for holding in list(tenant.holdings):
            self._release_holding(tenant, holding)
        tenant.running_type = None
        self._drop_pending_request(tenant)
        for name in ("wake", "checkpoint", "complete", "migration", "load"):
            self._clear_timer(tenant.tenant_id, name)
        events = self.exchange.expire_tenant_bids(tenant.tenant_id, self.now)
        self._after_price_events(events)

    def _drop_pending_request(self, tenant: ag.TenantState) -> None:
        if tenant.pending_request_id:
            self.queue.remove(tenant.pending_request_id)
            self.kernel.cancel(self._timeout_seq.pop(tenant.pending_request_id, None))
            tenant.pending_request_id = None

    def _operator_scan(self, freed_type: str) -> None:
        directive = ag.naive_operator_directive(list(self.tenants.values()),
                                                freed_type)
        if directive is None:
            return
        tenant_id, target = directive
        tenant = self.tenants[tenant_id]
        entry = tenant.launch_table.entry_for(target)
        max_bid = entry.max_bid if entry else self.cluster.base_rate(target)
        self._requeue_migration(tenant,
                                LaunchTable((LaunchEntry(target, max_bid),)))

    # -- progress scheduling -----------------------------------------------------------

    def _schedule_progress_events(self, tenant: ag.TenantState) -> None:
        total = tenant.profile.total_ms(tenant.running_type)
        interval = tenant.profile.checkpoint_interval
        progress = tenant.progress
        k = int(progress / interval) + 1
        boundary = k * interval
        if boundary < 1:
            dt = (boundary - progress) * total
            dt_ms = -((-dt.numerator) // dt.denominator)  # ceil
            self._set_timer(tenant.tenant_id, "checkpoint", self.now + dt_ms,
                            EventKind.CHECKPOINT, boundary=boundary)
        else:
            self._clear_timer(tenant.tenant_id, "checkpoint")
        remaining = (1 - progress) * total
        rem_ms = -((-remaining.numerator) // remaining.denominator)
        self._set_timer(tenant.tenant_id, "complete", self.now + rem_ms,
                        EventKind.WORKLOAD_COMPLETE)
