"""Cluster-local exchange: bid lifecycle and continuous second-price clearing.

One ``ExchangeEntry`` per accelerator type tracks the open bids, the entitled
(highest-bidding) tenant and the clearing rate the entitled tenant pays:
max(base rate, best competing bid). Entitlement ties break toward the
incumbent, then earlier submission, then lexicographic tenant id, which keeps
replay deterministic. Entitlement is advisory until the work scheduler binds
it to a concrete instance; the exchange never touches instances.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

from .core import RATE_TICK, Rate, SimTime, SimulationError


class BidBelowBase(SimulationError):
    pass


class DuplicateBid(SimulationError):
    pass


class NoSuchBid(SimulationError):
    pass


class UnknownType(SimulationError):
    pass


class BidStatus(enum.Enum):
    OPEN = "open"
    ENTITLED = "entitled"
    WITHDRAWN = "withdrawn"
    EXPIRED = "expired"


LIVE = (BidStatus.OPEN, BidStatus.ENTITLED)


class PriceCause(enum.Enum):
    BID_POSTED = "bid-posted"
    BID_WITHDRAWN = "bid-withdrawn"
    BID_EXPIRED = "bid-expired"
    PERIODIC = "periodic"


@dataclass
class Bid:
    tenant_id: str
    type_id: str
    rate: Rate
    submitted: SimTime
    status: BidStatus = BidStatus.OPEN


@dataclass(frozen=True)
class PriceEvent:
    """Emitted whenever an entry's clearing rate or entitlement changes."""

    time: SimTime
    type_id: str
    old_rate: Rate
    new_rate: Rate
    cause: PriceCause
    old_entitled: str | None
    new_entitled: str | None


class ExchangeEntry:
    """Market state for one accelerator type."""

    def __init__(self, type_id: str, base_rate: Rate):
        self.type_id = type_id
        self.base_rate = base_rate
        self.bids: dict[str, Bid] = {}  # live + dead, latest per tenant
        self.entitled: str | None = None
        self.clearing_rate: Rate = base_rate

    def live_bids(self) -> list[Bid]:
        return [b for b in self.bids.values() if b.status in LIVE]

    def live_bid(self, tenant_id: str) -> Bid | None:
        bid = self.bids.get(tenant_id)
        if bid is not None and bid.status in LIVE:
            return bid
        return None

    def recompute(self, now: SimTime, cause: PriceCause) -> PriceEvent | None:
        """Re-derive entitlement and clearing rate; idempotent."""
        live = self.live_bids()
        if live:
            def rank(bid: Bid):
                return (-bid.rate,
                        0 if bid.tenant_id == self.entitled else 1,
                        bid.submitted,
                        bid.tenant_id)

            winner = min(live, key=rank)
            competing = [b.rate for b in live if b is not winner]
            new_entitled = winner.tenant_id
            new_rate = max(self.base_rate, max(competing, default=self.base_rate))
        else:
            new_entitled = None
            new_rate = self.base_rate

        changed = (new_entitled != self.entitled or new_rate != self.clearing_rate)
        event = None
        if changed:
            event = PriceEvent(now, self.type_id, self.clearing_rate, new_rate,
                               cause, self.entitled, new_entitled)
        self.entitled = new_entitled
        self.clearing_rate = new_rate
        for bid in live:
            bid.status = (BidStatus.ENTITLED if bid.tenant_id == new_entitled
                          else BidStatus.OPEN)
        return event

    def price_quote(self, tick: Rate = RATE_TICK) -> Rate:
        """Minimum rate a new bidder must post to take entitlement."""
        live = self.live_bids()
        if not live:
            return self.base_rate
        return max(self.base_rate, max(b.rate for b in live) + tick)


class ExchangeTable:
    """All per-type entries of one functional cluster."""

    def __init__(self, base_rates: dict[str, Rate], tick: Rate = RATE_TICK):
        self.entries = {type_id: ExchangeEntry(type_id, rate)
                        for type_id, rate in base_rates.items()}
        self.tick = tick

    def entry(self, type_id: str) -> ExchangeEntry:
        try:
            return self.entries[type_id]
        except KeyError:
            raise UnknownType(type_id) from None

    # -- mutations -----------------------------------------------------------

    def post_bid(self, tenant_id: str, type_id: str, rate: Rate,
                 now: SimTime) -> list[PriceEvent]:
        entry = self.entry(type_id)
        if rate < entry.base_rate:
            raise BidBelowBase(f"{tenant_id}@{type_id}: {rate} < base {entry.base_rate}")
        if entry.live_bid(tenant_id) is not None:
            raise DuplicateBid(f"{tenant_id} already has an open bid on {type_id}")
        entry.bids[tenant_id] = Bid(tenant_id, type_id, rate, now)
        event = entry.recompute(now, PriceCause.BID_POSTED)
        return [event] if event else []

    def update_bid(self, tenant_id: str, type_id: str, rate: Rate,
                   now: SimTime) -> list[PriceEvent]:
        entry = self.entry(type_id)
        bid = entry.live_bid(tenant_id)
        if bid is None:
            raise NoSuchBid(f"{tenant_id} has no open bid on {type_id}")
        if rate < entry.base_rate:
            raise BidBelowBase(f"{tenant_id}@{type_id}: {rate} < base {entry.base_rate}")
        if rate == bid.rate:
            return []
        bid.rate = rate
        event = entry.recompute(now, PriceCause.BID_POSTED)
        return [event] if event else []

    def expire_tenant_bids(self, tenant_id: str, now: SimTime,
                           cause: PriceCause = PriceCause.BID_EXPIRED,
                           type_ids: list[str] | None = None) -> list[PriceEvent]:
        """Expire a tenant's live bids (optionally only on some types)."""
        dead_status = (BidStatus.WITHDRAWN if cause is PriceCause.BID_WITHDRAWN
                       else BidStatus.EXPIRED)
        events: list[PriceEvent] = []
        for entry in self.entries.values():
            if type_ids is not None and entry.type_id not in type_ids:
                continue
            bid = entry.live_bid(tenant_id)
            if bid is None:
                continue
            bid.status = dead_status
            event = entry.recompute(now, cause)
            if event:
                events.append(event)
        return events

    def recompute_all(self, now: SimTime,
                      cause: PriceCause = PriceCause.PERIODIC) -> list[PriceEvent]:
        events = []
        for entry in self.entries.values():
            event = entry.recompute(now, cause)
            if event:
                events.append(event)
        return events

    # -- read-only views ------------------------------------------------------

    def clearing_rate(self, type_id: str) -> Rate:
        return self.entry(type_id).clearing_rate

    def entitled(self, type_id: str) -> str | None:
        return self.entry(type_id).entitled

    def price_quote(self, type_id: str) -> Rate:
        return self.entry(type_id).price_quote(self.tick)

    def bid_rate(self, tenant_id: str, type_id: str) -> Rate | None:
        bid = self.entry(type_id).live_bid(tenant_id)
        return bid.rate if bid else None

    def acquisition_rate(self, tenant_id: str, type_id: str) -> Rate:
        """What using this type would cost the tenant per hour right now.

        The entitled tenant pays the current clearing rate; anyone else would
        have to outbid the field, paying at least the price quote.
        """
        entry = self.entry(type_id)
        if entry.entitled == tenant_id:
            return entry.clearing_rate
        return entry.price_quote(self.tick)
