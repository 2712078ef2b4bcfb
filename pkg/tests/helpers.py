"""Shared fixtures for scheduler/agent/engine tests."""

from __future__ import annotations

from fractions import Fraction

from laissez_sim.agents import MigrationMode, MigrationPolicy
from laissez_sim.core import (
    AcceleratorType,
    FunctionalCluster,
    LaunchEntry,
    LaunchTable,
    WorkloadProfile,
)
from laissez_sim.scenario import EngineConfig, Scenario, ScenarioTenant

A10 = AcceleratorType("a10", "NVIDIA A10", 606_000, 1)
L4 = AcceleratorType("l4", "NVIDIA L4", 469_000, 3)
TRAINIUM = AcceleratorType("trainium", "Trainium", 804_000, 3)

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


def cluster() -> FunctionalCluster:
    return FunctionalCluster("gemm-pool", "gemm", [A10, L4, TRAINIUM])


def table(*pairs) -> LaunchTable:
    return LaunchTable(tuple(LaunchEntry(t, r) for t, r in pairs))


def policy(mode: str = "checkpoint-store", load_delay_ms=None,
           transfer_cost: int = 0) -> MigrationPolicy:
    return MigrationPolicy(MigrationMode(mode), load_delay_ms, transfer_cost)


def tenant(tenant_id: str, arrival_s: int, strategy: str, lt: LaunchTable,
           profile: WorkloadProfile, mode: str = "checkpoint-store",
           timeout_s: int = 3600, resume_from=Fraction(0),
           transfer_cost: int = 0) -> ScenarioTenant:
    return ScenarioTenant(
        tenant_id=tenant_id,
        arrival_ms=arrival_s * 1000,
        strategy_id=strategy,
        policy=policy(mode, transfer_cost=transfer_cost),
        timeout_ms=timeout_s * 1000,
        profile=profile,
        launch_table=lt,
        resume_from=Fraction(resume_from),
    )


def scenario(tenants, accelerators=(A10, L4, TRAINIUM),
             engine: EngineConfig | None = None) -> Scenario:
    return Scenario(
        schema_version=1,
        cluster_id="gemm-pool",
        function="gemm",
        accelerators=tuple(accelerators),
        tenants=tuple(tenants),
        engine=engine or EngineConfig(),
        sha256="0" * 64,
    )
