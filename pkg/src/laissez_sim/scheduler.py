"""FIFO work scheduler: queue, availability cache and head matching.

The scheduler walks the head request's launch table in priority order and
assigns the first type where the tenant holds exchange entitlement and a free
instance exists; otherwise the request waits. Matching is strictly FIFO: a
non-head request never matches while the head cannot (head-of-line blocking
is deliberate). All mutation happens inside the simulation event loop.
"""

from __future__ import annotations

from dataclasses import dataclass

from .core import (
    Duration,
    FunctionalCluster,
    Instance,
    InstanceState,
    Rate,
    SimTime,
    SimulationError,
    UserRequest,
    WorkloadProfile,
    is_inert,
    validate_launch_table,
)
from .exchange import ExchangeTable, PriceCause, PriceEvent


class DuplicateRequestId(SimulationError):
    pass


class InstanceNotFree(SimulationError):
    pass


@dataclass
class QueuedRequest:
    request: UserRequest
    enqueued: SimTime

    @property
    def deadline(self) -> SimTime:
        return self.enqueued + self.request.timeout_ms


class RequestQueue:
    """Pending requests, FIFO by enqueue time with request-id tie-break."""

    def __init__(self) -> None:
        self._items: list[QueuedRequest] = []
        self._ids: set[str] = set()

    def __len__(self) -> int:
        return len(self._items)

    def __iter__(self):
        return iter(self._items)

    def push(self, request: UserRequest, now: SimTime) -> QueuedRequest:
        if request.request_id in self._ids:
            raise DuplicateRequestId(request.request_id)
        item = QueuedRequest(request, now)
        self._items.append(item)
        self._items.sort(key=lambda q: (q.enqueued, q.request.request_id))
        self._ids.add(request.request_id)
        return item

    def head(self) -> QueuedRequest | None:
        return self._items[0] if self._items else None

    def remove(self, request_id: str) -> QueuedRequest | None:
        for i, item in enumerate(self._items):
            if item.request.request_id == request_id:
                self._ids.discard(request_id)
                return self._items.pop(i)
        return None


class AvailabilityCache:
    """Free-instance counts per type, kept transactionally with every
    allocation and release."""

    def __init__(self, cluster: FunctionalCluster):
        self.cluster = cluster
        self._free: dict[str, list[Instance]] = {t: [] for t in cluster.types}
        for inst in cluster.instances:
            if inst.state is InstanceState.FREE:
                self._free[inst.type_id].append(inst)

    def free_count(self, type_id: str) -> int:
        return len(self._free[type_id])

    def peek_free(self, type_id: str) -> Instance | None:
        free = self._free.get(type_id)
        return free[0] if free else None

    def allocate(self, instance: Instance, tenant_id: str, rate: Rate,
                 now: SimTime) -> None:
        if instance.state is not InstanceState.FREE:
            raise InstanceNotFree(f"{instance.type_id}#{instance.index}")
        self._free[instance.type_id].remove(instance)
        instance.state = InstanceState.ALLOCATED
        instance.tenant_id = tenant_id
        instance.rate = rate
        instance.since = now

    def release(self, instance: Instance) -> None:
        instance.state = InstanceState.FREE
        instance.tenant_id = None
        instance.rate = None
        instance.since = None
        self._free[instance.type_id].append(instance)
        self._free[instance.type_id].sort(key=lambda i: i.index)

    def set_draining(self, instance: Instance, tenant_id: str) -> None:
        instance.state = InstanceState.DRAINING
        instance.tenant_id = tenant_id

    def verify(self) -> None:
        for type_id in self.cluster.types:
            actual = sum(1 for i in self.cluster.instances
                         if i.type_id == type_id and i.state is InstanceState.FREE)
            assert actual == self.free_count(type_id), type_id


@dataclass(frozen=True)
class Assignment:
    request_id: str
    tenant_id: str
    instance: Instance
    rate: Rate  # clearing rate of the instance's type at decision time
    decided_at: SimTime


def enqueue(queue: RequestQueue, request: UserRequest, now: SimTime,
            exchange: ExchangeTable, cluster: FunctionalCluster,
            profile: WorkloadProfile) -> list[PriceEvent]:
    """Validate, queue, and post launch-table bids the tenant lacks.

    Migration re-queues keep their standing bids open, so only entries
    without a live bid are posted; inert entries (max bid below base) are
    never posted.
    """
    validate_launch_table(request.launch_table, cluster, profile)
    queue.push(request, now)
    events: list[PriceEvent] = []
    for entry in request.launch_table:
        if is_inert(entry, cluster):
            continue
        if exchange.bid_rate(request.tenant_id, entry.type_id) is not None:
            continue
        events.extend(exchange.post_bid(request.tenant_id, entry.type_id,
                                        entry.max_bid, now))
    return events


def match_head(queue: RequestQueue, cache: AvailabilityCache,
               exchange: ExchangeTable, now: SimTime) -> Assignment | None:
    """Try to place the head request; None means it keeps waiting."""
    head = queue.head()
    if head is None:
        return None
    request = head.request
    for entry in request.launch_table:
        if exchange.entitled(entry.type_id) != request.tenant_id:
            continue
        instance = cache.peek_free(entry.type_id)
        if instance is None:
            continue
        return Assignment(request.request_id, request.tenant_id, instance,
                          exchange.clearing_rate(entry.type_id), now)
    return None


def sweep_timeouts(queue: RequestQueue, now: SimTime) -> list[QueuedRequest]:
    """Remove requests whose enqueue time + timeout lies strictly before now."""
    expired = [item for item in queue if item.deadline < now]
    for item in expired:
        queue.remove(item.request.request_id)
    return expired
