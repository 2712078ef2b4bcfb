"""Domain types and the cost/time arithmetic behind bidding.

All money is held as integer micro-dollars and all rates as integer
micro-dollars per hour, so ledger sums and break-even computations replay
bit-for-bit. Times are integer milliseconds of simulation time. Progress
through a workload is an exact ``Fraction`` so checkpoint boundaries compare
with ``==`` instead of an epsilon.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from decimal import Decimal, InvalidOperation
from fractions import Fraction
from types import MappingProxyType
from typing import Mapping, Union

# Money: integer micro-dollars. Rate: integer micro-dollars per hour.
# SimTime / Duration: integer milliseconds.
Money = int
Rate = int
SimTime = int
Duration = int

MICRO_PER_DOLLAR = 1_000_000
MS_PER_HOUR = 3_600_000
RATE_TICK: Rate = 1_000  # $0.001/hr: the granularity of "strictly outbid"

ProgressLike = Union[Fraction, float, int]


class SimulationError(Exception):
    """Base class for all simulator errors."""


class EmptyLaunchTable(SimulationError):
    pass


class UnknownHardware(SimulationError):
    pass


class IncompatibleHardware(SimulationError):
    pass


class DuplicateEntry(SimulationError):
    pass


class CompletedWorkload(SimulationError):
    pass


class MoneyError(SimulationError):
    pass


# ---------------------------------------------------------------------------
# Money / Rate helpers
# ---------------------------------------------------------------------------

def parse_money(value: Union[str, int, Decimal]) -> Money:
    """Parse a dollar amount into non-negative micro-dollars, exactly.

    Accepts decimal strings ("0.6065"), ints (whole dollars) or Decimal.
    Binary floats are rejected: they cannot represent money exactly.
    """
    if isinstance(value, bool):
        raise MoneyError(f"not a money value: {value!r}")
    if isinstance(value, float):
        raise MoneyError(f"money must be a decimal string, not float: {value!r}")
    if isinstance(value, int):
        dec = Decimal(value)
    elif isinstance(value, Decimal):
        dec = value
    elif isinstance(value, str):
        try:
            dec = Decimal(value.strip())
        except InvalidOperation as exc:
            raise MoneyError(f"not a decimal amount: {value!r}") from exc
    else:
        raise MoneyError(f"not a money value: {value!r}")
    micro = dec * MICRO_PER_DOLLAR
    if micro != micro.to_integral_value():
        raise MoneyError(f"finer than micro-dollar precision: {value!r}")
    if micro < 0:
        raise MoneyError(f"money cannot be negative: {value!r}")
    return int(micro)


def parse_rate(value: Union[str, int, Decimal]) -> Rate:
    """Parse a $/hr figure into micro-dollars per hour (same rules as money)."""
    return parse_money(value)


def format_money(micro: Money) -> str:
    """Render micro-dollars as a decimal string with 6 fractional digits."""
    sign = "-" if micro < 0 else ""
    micro = abs(micro)
    return f"{sign}{micro // MICRO_PER_DOLLAR}.{micro % MICRO_PER_DOLLAR:06d}"


format_rate = format_money


def round_half_up(numerator: int, denominator: int) -> int:
    """Round numerator/denominator (non-negative) half-up to an integer."""
    if denominator <= 0:
        raise ValueError("denominator must be positive")
    return (2 * numerator + denominator) // (2 * denominator)


def rate_times(rate: Rate, duration: Duration) -> Money:
    """Money accrued by a rate over a duration, rounded half-up to micro-$.

    This is the single rounding point for all billing arithmetic.
    """
    if rate < 0 or duration < 0:
        raise MoneyError("rate and duration must be non-negative")
    return round_half_up(rate * duration, MS_PER_HOUR)


def floor_to_tick(rate: Rate, tick: Rate = RATE_TICK) -> Rate:
    """Round a non-negative rate down to the rate tick."""
    return rate - rate % tick


def as_progress(value: ProgressLike) -> Fraction:
    """Normalize a progress fraction to an exact Fraction in [0, 1]."""
    frac = Fraction(value)
    if not 0 <= frac <= 1:
        raise ValueError(f"progress must be within [0, 1]: {value!r}")
    return frac


# ---------------------------------------------------------------------------
# Hardware
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class AcceleratorType:
    """A hardware class: the unit of pricing on the exchange."""

    type_id: str
    name: str
    base_rate: Rate
    instance_count: int

    def __post_init__(self) -> None:
        if self.base_rate <= 0:
            raise ValueError(f"{self.type_id}: base_rate must be > 0")
        if self.instance_count < 1:
            raise ValueError(f"{self.type_id}: instance_count must be >= 1")


class InstanceState(enum.Enum):
    FREE = "free"
    ALLOCATED = "allocated"
    DRAINING = "draining"


@dataclass
class Instance:
    """One allocatable accelerator. At most one tenant at a time."""

    type_id: str
    index: int
    state: InstanceState = InstanceState.FREE
    tenant_id: str | None = None
    rate: Rate | None = None
    since: SimTime | None = None

    @property
    def key(self) -> tuple[str, int]:
        return (self.type_id, self.index)


class FunctionalCluster:
    """A pool of heterogeneous accelerators serving one computational function."""

    def __init__(self, cluster_id: str, function: str,
                 accelerator_types: list[AcceleratorType]):
        self.cluster_id = cluster_id
        self.function = function
        self.types: dict[str, AcceleratorType] = {}
        for accel in accelerator_types:
            if accel.type_id in self.types:
                raise DuplicateEntry(accel.type_id)
            self.types[accel.type_id] = accel
        self.instances: list[Instance] = [
            Instance(type_id=accel.type_id, index=i)
            for accel in accelerator_types
            for i in range(accel.instance_count)
        ]
        self._by_key = {inst.key: inst for inst in self.instances}

    def type_for(self, type_id: str) -> AcceleratorType:
        try:
            return self.types[type_id]
        except KeyError:
            raise UnknownHardware(type_id) from None

    def base_rate(self, type_id: str) -> Rate:
        return self.type_for(type_id).base_rate

    def instance(self, type_id: str, index: int) -> Instance:
        return self._by_key[(type_id, index)]

    def instances_of(self, type_id: str) -> list[Instance]:
        self.type_for(type_id)
        return [inst for inst in self.instances if inst.type_id == type_id]


# ---------------------------------------------------------------------------
# Workloads
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class WorkloadProfile:
    """Per-hardware execution times plus the tenant's checkpoint economics.

    ``execution_ms`` maps accelerator type id to total execution time; types
    missing from the map are incompatible. ``restart_surcharge`` is the
    tenant's cost-equivalent of redoing work since the last checkpoint, used
    to pad off-boundary switching costs.
    """

    execution_ms: Mapping[str, Duration]
    checkpoint_interval: Fraction
    restart_surcharge: Money
    load_delay_ms: Duration

    def __post_init__(self) -> None:
        if not self.execution_ms:
            raise ValueError("profile must be compatible with at least one type")
        for type_id, total in self.execution_ms.items():
            if total <= 0:
                raise ValueError(f"execution time for {type_id} must be > 0")
        interval = Fraction(self.checkpoint_interval)
        if not 0 < interval <= 1:
            raise ValueError("checkpoint interval must be in (0, 1]")
        per_unit = Fraction(1) / interval
        if abs(per_unit - round(per_unit)) > Fraction(1, 10**9):
            raise ValueError("checkpoint interval must divide 1.0")
        if self.restart_surcharge < 0:
            raise ValueError("restart surcharge must be >= 0")
        if self.load_delay_ms < 0:
            raise ValueError("load delay must be >= 0")
        object.__setattr__(self, "checkpoint_interval", interval)
        object.__setattr__(self, "execution_ms",
                           MappingProxyType(dict(self.execution_ms)))

    def compatible(self, type_id: str) -> bool:
        return type_id in self.execution_ms

    def total_ms(self, type_id: str) -> Duration:
        try:
            return self.execution_ms[type_id]
        except KeyError:
            raise IncompatibleHardware(type_id) from None


@dataclass(frozen=True)
class LaunchEntry:
    """One (hardware, max bid) preference. Below-base max bids are inert."""

    type_id: str
    max_bid: Rate

    def __post_init__(self) -> None:
        if self.max_bid < 0:
            raise ValueError("max bid must be >= 0")


@dataclass(frozen=True)
class LaunchTable:
    """A tenant's prioritized list of targetable hardware with max bid rates."""

    entries: tuple[LaunchEntry, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "entries", tuple(self.entries))

    def __iter__(self):
        return iter(self.entries)

    def __len__(self) -> int:
        return len(self.entries)

    def type_ids(self) -> list[str]:
        return [entry.type_id for entry in self.entries]

    def entry_for(self, type_id: str) -> LaunchEntry | None:
        for entry in self.entries:
            if entry.type_id == type_id:
                return entry
        return None

    def priority_of(self, type_id: str) -> int:
        """Position in the table; lower is higher priority."""
        for i, entry in enumerate(self.entries):
            if entry.type_id == type_id:
                return i
        raise UnknownHardware(type_id)


@dataclass(frozen=True)
class UserRequest:
    """A submission to the work scheduler.

    ``payload`` is an opaque descriptor of what the tenant runs; the simulator
    only models its timing through the tenant's profile. ``resume_from`` is
    nonzero for migration re-queues and checkpoint restarts.
    """

    tenant_id: str
    launch_table: LaunchTable
    strategy_id: str
    migration_policy_id: str
    timeout_ms: Duration
    payload: str = ""
    resume_from: Fraction = Fraction(0)
    request_id: str = ""

    def __post_init__(self) -> None:
        if self.timeout_ms <= 0:
            raise ValueError("timeout must be > 0")
        object.__setattr__(self, "resume_from", as_progress(self.resume_from))
        if not self.request_id:
            object.__setattr__(self, "request_id", self.tenant_id)


# ---------------------------------------------------------------------------
# Operations
# ---------------------------------------------------------------------------

def validate_launch_table(table: LaunchTable, cluster: FunctionalCluster,
                          profile: WorkloadProfile) -> LaunchTable:
    """Check a launch table against a cluster and profile, returning it unchanged.

    Raises EmptyLaunchTable, UnknownHardware, IncompatibleHardware or
    DuplicateEntry. Entries whose max bid is below the type's base rate are
    legal but inert (never posted to the exchange).
    """
    if len(table) == 0:
        raise EmptyLaunchTable("launch table is empty")
    seen: set[str] = set()
    for entry in table:
        if entry.type_id not in cluster.types:
            raise UnknownHardware(entry.type_id)
        if not profile.compatible(entry.type_id):
            raise IncompatibleHardware(entry.type_id)
        if entry.type_id in seen:
            raise DuplicateEntry(entry.type_id)
        seen.add(entry.type_id)
    return table


def is_inert(entry: LaunchEntry, cluster: FunctionalCluster) -> bool:
    """An entry bidding below the base rate can never be posted."""
    return entry.max_bid < cluster.base_rate(entry.type_id)


def remaining_time(profile: WorkloadProfile, type_id: str,
                   progress: ProgressLike) -> Duration:
    """Time left on a given accelerator: total x (1 - progress), half-up ms."""
    total = profile.total_ms(type_id)
    left = (1 - as_progress(progress)) * total
    return round_half_up(left.numerator, left.denominator)


def cost_to_complete(profile: WorkloadProfile, type_id: str,
                     progress: ProgressLike, rate: Rate) -> Money:
    """Cost of finishing the workload on one accelerator at a fixed rate."""
    return rate_times(rate, remaining_time(profile, type_id, progress))


def break_even_bid(profile: WorkloadProfile, target: str, alt: str,
                   progress: ProgressLike, alt_rate: Rate,
                   switch_cost: Money, tick: Rate = RATE_TICK) -> Rate:
    """The rate on ``target`` at which completion costs match the alternative.

    Solves rate x remaining(target) = alt_rate x remaining(alt) + switch_cost
    and rounds the result down to the rate tick, which is conservative for
    the bidder. ``switch_cost`` is whatever taking the alternative path would
    cost on top of its metered rate (typically a checkpoint-restart loss).
    """
    rem_target = remaining_time(profile, target, progress)
    rem_alt = remaining_time(profile, alt, progress)
    if rem_target == 0:
        raise CompletedWorkload(target)
    if switch_cost < 0:
        raise MoneyError("switch cost must be >= 0")
    numerator = alt_rate * rem_alt + switch_cost * MS_PER_HOUR
    return (numerator // (rem_target * tick)) * tick
