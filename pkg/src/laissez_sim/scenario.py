"""Scenario files: TOML ingestion, validation and canonical serialization.

A scenario has three sections: ``[cluster]`` (accelerator types with base
rates and instance counts), ``[[tenants]]`` (arrival, launch table, workload
profile, strategy and migration policy) and ``[engine]`` (wake/sweep periods,
grace window, rate tick, seed). All dollar figures are decimal strings and
parse to exact micro-dollar integers; binary floats never touch money.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from decimal import Decimal, InvalidOperation
from fractions import Fraction
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

from importlib import resources

from .agents import MigrationMode, MigrationPolicy, UnknownStrategy, strategy
from .core import (
    AcceleratorType,
    Duration,
    FunctionalCluster,
    LaunchEntry,
    LaunchTable,
    Money,
    Rate,
    SimTime,
    SimulationError,
    WorkloadProfile,
    format_money,
    parse_money,
    parse_rate,
    validate_launch_table,
)

MS_PER_HOUR = 3_600_000

SCHEMA_VERSION = 1

# Bundled scenarios, in presentation order.
BUNDLED_SCENARIOS = ("static-first-come", "static-b-first",
                     "naive-migration", "laissez")


class ScenarioError(SimulationError):
    """Carries every located validation error, not just the first."""

    def __init__(self, errors: list[str]):
        super().__init__("; ".join(errors))
        self.errors = errors


@dataclass(frozen=True)
class EngineConfig:
    wake_period_ms: Duration = 10_000
    sweep_period_ms: Duration = 1_000
    grace_ms: Duration = 0
    rate_tick: Rate = 1_000
    seed: int = 0
    operator: str = "none"


@dataclass(frozen=True)
class ScenarioTenant:
    tenant_id: str
    arrival_ms: SimTime
    strategy_id: str
    policy: MigrationPolicy
    timeout_ms: Duration
    profile: WorkloadProfile
    launch_table: LaunchTable
    resume_from: Fraction = Fraction(0)
    payload: str = ""


@dataclass(frozen=True)
class Scenario:
    schema_version: int
    cluster_id: str
    function: str
    accelerators: tuple[AcceleratorType, ...]
    tenants: tuple[ScenarioTenant, ...]
    engine: EngineConfig
    sha256: str = field(compare=False, default="")


class _Collector:
    def __init__(self) -> None:
        self.errors: list[str] = []

    def fail(self, path: str, message: str) -> None:
        self.errors.append(f"{path}: {message}")

    def money(self, value, path: str) -> Money | None:
        try:
            return parse_money(value)
        except SimulationError as exc:
            self.fail(path, str(exc))
            return None

    def fraction(self, value, path: str) -> Fraction | None:
        if isinstance(value, (str, int)):
            try:
                value = Decimal(value)
            except InvalidOperation:
                self.fail(path, f"not a decimal fraction: {value!r}")
                return None
        if not isinstance(value, Decimal):
            self.fail(path, f"fractions must be decimal strings: {value!r}")
            return None
        return Fraction(value)

    def seconds(self, value, path: str) -> Duration | None:
        if isinstance(value, bool) or not isinstance(value, (int, Decimal)):
            self.fail(path, f"not a number of seconds: {value!r}")
            return None
        ms = Decimal(value) * 1000
        if ms != ms.to_integral_value() or ms < 0:
            self.fail(path, f"must be a non-negative millisecond-aligned time: {value!r}")
            return None
        return int(ms)

    def integer(self, value, path: str, minimum: int | None = None) -> int | None:
        if isinstance(value, bool) or not isinstance(value, int):
            self.fail(path, f"not an integer: {value!r}")
            return None
        if minimum is not None and value < minimum:
            self.fail(path, f"must be >= {minimum}: {value!r}")
            return None
        return value

    def string(self, value, path: str) -> str | None:
        if not isinstance(value, str) or not value:
            self.fail(path, f"not a non-empty string: {value!r}")
            return None
        return value

    def hours_to_ms(self, value, path: str) -> Duration | None:
        if isinstance(value, (str, int, Decimal)):
            try:
                ms = Fraction(Decimal(value)) * MS_PER_HOUR
            except InvalidOperation:
                self.fail(path, f"not a decimal number of hours: {value!r}")
                return None
        else:
            self.fail(path, f"hours must be decimal strings: {value!r}")
            return None
        if ms.denominator != 1 or ms <= 0:
            self.fail(path, f"must be a positive millisecond-aligned duration: {value!r}")
            return None
        return int(ms)


def parse_scenario(text: str) -> Scenario:
    """Parse and fully validate a scenario document.

    Raises ScenarioError carrying one message per located problem, each
    prefixed with the field path.
    """
    try:
        doc = tomllib.loads(text, parse_float=Decimal)
    except tomllib.TOMLDecodeError as exc:
        raise ScenarioError([f"syntax: {exc}"]) from exc

    col = _Collector()
    version = doc.get("schema_version")
    if version != SCHEMA_VERSION:
        col.fail("schema_version", f"expected {SCHEMA_VERSION}, got {version!r}")

    cluster_doc = doc.get("cluster")
    accelerators: list[AcceleratorType] = []
    cluster_id = "cluster"
    function = ""
    if not isinstance(cluster_doc, dict):
        col.fail("cluster", "missing [cluster] section")
    else:
        cluster_id = col.string(cluster_doc.get("id", "cluster"), "cluster.id") or "cluster"
        function = cluster_doc.get("function", "")
        accel_docs = cluster_doc.get("accelerators")
        if not isinstance(accel_docs, list) or not accel_docs:
            col.fail("cluster.accelerators", "at least one accelerator type required")
            accel_docs = []
        for i, accel in enumerate(accel_docs):
            path = f"cluster.accelerators[{i}]"
            type_id = col.string(accel.get("id"), f"{path}.id")
            base = col.money(accel.get("base_rate"), f"{path}.base_rate")
            count = col.integer(accel.get("count", 1), f"{path}.count", minimum=1)
            if type_id and base is not None and count is not None:
                if base <= 0:
                    col.fail(f"{path}.base_rate", "must be > 0")
                elif any(a.type_id == type_id for a in accelerators):
                    col.fail(f"{path}.id", f"duplicate accelerator id {type_id!r}")
                else:
                    accelerators.append(AcceleratorType(
                        type_id, accel.get("name", type_id), base, count))

    cluster = None
    if accelerators and not col.errors:
        cluster = FunctionalCluster(cluster_id, function, accelerators)

    tenants: list[ScenarioTenant] = []
    tenant_docs = doc.get("tenants")
    if not isinstance(tenant_docs, list) or not tenant_docs:
        col.fail("tenants", "at least one [[tenants]] entry required")
        tenant_docs = []
    seen_ids: set[str] = set()
    for i, tdoc in enumerate(tenant_docs):
        path = f"tenants[{i}]"
        tenant = _parse_tenant(tdoc, path, col, cluster)
        if tenant is not None:
            if tenant.tenant_id in seen_ids:
                col.fail(f"{path}.id", f"duplicate tenant id {tenant.tenant_id!r}")
            else:
                seen_ids.add(tenant.tenant_id)
                tenants.append(tenant)

    engine = _parse_engine(doc.get("engine", {}), col)

    if col.errors:
        raise ScenarioError(col.errors)
    return Scenario(
        schema_version=SCHEMA_VERSION,
        cluster_id=cluster_id,
        function=function,
        accelerators=tuple(accelerators),
        tenants=tuple(tenants),
        engine=engine,
        sha256=hashlib.sha256(text.encode()).hexdigest(),
    )


def _parse_tenant(tdoc, path: str, col: _Collector,
                  cluster: FunctionalCluster | None) -> ScenarioTenant | None:
    if not isinstance(tdoc, dict):
        col.fail(path, "not a table")
        return None
    tenant_id = col.string(tdoc.get("id"), f"{path}.id")
    arrival = col.seconds(tdoc.get("arrival_s", 0), f"{path}.arrival_s")
    strategy_id = col.string(tdoc.get("strategy", "break-even"), f"{path}.strategy")
    if strategy_id:
        try:
            strategy(strategy_id)
        except UnknownStrategy:
            col.fail(f"{path}.strategy", f"unknown strategy {strategy_id!r}")
    mode_name = tdoc.get("migration", "checkpoint-store")
    try:
        mode = MigrationMode(mode_name)
    except ValueError:
        col.fail(f"{path}.migration", f"unknown migration mode {mode_name!r}")
        mode = MigrationMode.CHECKPOINT_STORE
    transfer = col.money(tdoc.get("transfer_cost", 0), f"{path}.transfer_cost")
    timeout = col.seconds(tdoc.get("timeout_s", 3600), f"{path}.timeout_s")
    if timeout == 0:
        col.fail(f"{path}.timeout_s", "must be > 0")
    interval = col.fraction(tdoc.get("checkpoint_interval", "1"),
                            f"{path}.checkpoint_interval")
    surcharge = col.money(tdoc.get("restart_surcharge", 0),
                          f"{path}.restart_surcharge")
    load_delay = col.seconds(tdoc.get("load_delay_s", 0), f"{path}.load_delay_s")
    resume = col.fraction(tdoc.get("resume_from", "0"), f"{path}.resume_from")

    hours = tdoc.get("execution_hours")
    execution_ms: dict[str, Duration] = {}
    if not isinstance(hours, dict) or not hours:
        col.fail(f"{path}.execution_hours", "at least one compatible type required")
    else:
        for type_id, value in hours.items():
            ms = col.hours_to_ms(value, f"{path}.execution_hours.{type_id}")
            if ms is not None:
                if cluster is not None and type_id not in cluster.types:
                    col.fail(f"{path}.execution_hours.{type_id}",
                             f"unknown hardware {type_id!r}")
                else:
                    execution_ms[type_id] = ms

    entries: list[LaunchEntry] = []
    table_docs = tdoc.get("launch_table")
    if not isinstance(table_docs, list) or not table_docs:
        col.fail(f"{path}.launch_table", "at least one entry required")
        table_docs = []
    for j, edoc in enumerate(table_docs):
        epath = f"{path}.launch_table[{j}]"
        type_id = col.string(edoc.get("accelerator"), f"{epath}.accelerator")
        max_bid = col.money(edoc.get("max_bid"), f"{epath}.max_bid")
        if type_id and max_bid is not None:
            entries.append(LaunchEntry(type_id, max_bid))

    if col.errors:
        return None

    try:
        profile = WorkloadProfile(execution_ms, interval, surcharge, load_delay)
    except ValueError as exc:
        col.fail(f"{path}.checkpoint_interval", str(exc))
        return None
    table = LaunchTable(tuple(entries))
    if cluster is not None:
        try:
            validate_launch_table(table, cluster, profile)
        except SimulationError as exc:
            col.fail(f"{path}.launch_table", f"{type(exc).__name__}: {exc}")
            return None
    if not 0 <= resume <= 1:
        col.fail(f"{path}.resume_from", "must be within [0, 1]")
        return None
    if resume > 0 and (resume / interval).denominator != 1:
        col.fail(f"{path}.resume_from", "must sit on a checkpoint boundary")
        return None

    return ScenarioTenant(
        tenant_id=tenant_id,
        arrival_ms=arrival,
        strategy_id=strategy_id,
        policy=MigrationPolicy(mode, None, transfer),
        timeout_ms=timeout,
        profile=profile,
        launch_table=table,
        resume_from=resume,
        payload=tdoc.get("payload", ""),
    )


def _parse_engine(edoc, col: _Collector) -> EngineConfig:
    if not isinstance(edoc, dict):
        col.fail("engine", "not a table")
        return EngineConfig()
    wake = col.seconds(edoc.get("agent_wake_s", 10), "engine.agent_wake_s")
    sweep = col.seconds(edoc.get("price_sweep_s", 1), "engine.price_sweep_s")
    grace = col.integer(edoc.get("grace_ms", 0), "engine.grace_ms", minimum=0)
    tick = col.money(edoc.get("rate_tick", "0.001"), "engine.rate_tick")
    if tick == 0:
        col.fail("engine.rate_tick", "must be > 0")
    seed = col.integer(edoc.get("seed", 0), "engine.seed")
    operator = edoc.get("operator", "none")
    if operator not in ("none", "naive-migration"):
        col.fail("engine.operator", f"unknown operator policy {operator!r}")
    if col.errors:
        return EngineConfig()
    return EngineConfig(wake, sweep, grace, tick, seed, operator)


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------

def _plain(dec: Decimal) -> str:
    return format(dec.normalize(), "f")  # no scientific notation


def _dollars(micro: Money) -> str:
    text = format_money(micro).rstrip("0")
    return text + "0" if text.endswith(".") else text


def _frac(value: Fraction) -> str:
    return _plain(Decimal(value.numerator) / Decimal(value.denominator))


def serialize_scenario(sc: Scenario) -> str:
    """Canonical TOML text; parse(serialize(s)) is equivalent to s."""
    out = [f"schema_version = {sc.schema_version}", ""]
    out += ["[cluster]", f'id = "{sc.cluster_id}"', f'function = "{sc.function}"', ""]
    for accel in sc.accelerators:
        out += ["[[cluster.accelerators]]",
                f'id = "{accel.type_id}"',
                f'name = "{accel.name}"',
                f'base_rate = "{_dollars(accel.base_rate)}"',
                f"count = {accel.instance_count}", ""]
    for tenant in sc.tenants:
        out += ["[[tenants]]",
                f'id = "{tenant.tenant_id}"',
                f"arrival_s = {tenant.arrival_ms // 1000}"
                if tenant.arrival_ms % 1000 == 0 else
                f"arrival_s = {Decimal(tenant.arrival_ms) / 1000}",
                f'strategy = "{tenant.strategy_id}"',
                f'migration = "{tenant.policy.mode.value}"',
                f'transfer_cost = "{_dollars(tenant.policy.transfer_cost)}"',
                f"timeout_s = {tenant.timeout_ms // 1000}"
                if tenant.timeout_ms % 1000 == 0 else
                f"timeout_s = {Decimal(tenant.timeout_ms) / 1000}",
                f'checkpoint_interval = "{_frac(tenant.profile.checkpoint_interval)}"',
                f'restart_surcharge = "{_dollars(tenant.profile.restart_surcharge)}"',
                f"load_delay_s = {Decimal(tenant.profile.load_delay_ms) / 1000}",
                f'resume_from = "{_frac(tenant.resume_from)}"']
        if tenant.payload:
            out.append(f'payload = "{tenant.payload}"')
        out.append("")
        out.append("[tenants.execution_hours]")
        for type_id, ms in tenant.profile.execution_ms.items():
            out.append(f'{type_id} = "{_plain(Decimal(ms) / MS_PER_HOUR)}"')
        out.append("")
        for entry in tenant.launch_table:
            out += ["[[tenants.launch_table]]",
                    f'accelerator = "{entry.type_id}"',
                    f'max_bid = "{_dollars(entry.max_bid)}"', ""]
    eng = sc.engine
    out += ["[engine]",
            f"agent_wake_s = {Decimal(eng.wake_period_ms) / 1000}",
            f"price_sweep_s = {Decimal(eng.sweep_period_ms) / 1000}",
            f"grace_ms = {eng.grace_ms}",
            f'rate_tick = "{_dollars(eng.rate_tick)}"',
            f"seed = {eng.seed}",
            f'operator = "{eng.operator}"', ""]
    return "\n".join(out)


# ---------------------------------------------------------------------------
# Bundled scenarios
# ---------------------------------------------------------------------------

def bundled_scenario_text(name: str) -> str:
    if name not in BUNDLED_SCENARIOS:
        raise ScenarioError([f"scenario: no bundled scenario named {name!r}"])
    return (resources.files("laissez_sim") / "scenarios" / f"{name}.scenario").read_text()


def load_scenario(name_or_path: str) -> Scenario:
    """Resolve a bundled scenario name or a filesystem path."""
    if name_or_path in BUNDLED_SCENARIOS:
        return parse_scenario(bundled_scenario_text(name_or_path))
    path = Path(name_or_path)
    if not path.exists():
        raise FileNotFoundError(name_or_path)
    return parse_scenario(path.read_text())
