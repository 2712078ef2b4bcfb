"""Run summaries: per-tenant totals, utilization, revenue, migration stats.

A summary can be computed from a live RunResult or reconstructed from an
emitted trace file; both paths go through the same record-walking code so
`report <trace>` matches `summarize` on a finished run.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .core import Money, format_money
from .engine import RunResult, TraceRecord
from .traceio import ParsedRecord, TraceHeader, header_for


@dataclass(frozen=True)
class TenantSummary:
    tenant_id: str
    total_cost: Money
    completion_ms: int | None
    migrations: int
    rollback: float  # progress fraction re-executed


@dataclass(frozen=True)
class Report:
    tenants: tuple[TenantSummary, ...]
    utilization: dict[str, float]  # type id -> allocated / available
    revenue: Money
    migration_count: int
    total_rollback: float
    end_ms: int

    def tenant(self, tenant_id: str) -> TenantSummary:
        for t in self.tenants:
            if t.tenant_id == tenant_id:
                return t
        raise KeyError(tenant_id)


def _progress_of(record) -> float | None:
    p = record.progress
    if p is None:
        return None
    return float(p) if isinstance(p, Fraction) else p


def summarize(records: list, header: TraceHeader,
              ledger_totals: dict[str, Money] | None = None) -> Report:
    """Walk trace records into a Report.

    ``records`` may be engine TraceRecords or ParsedRecords read from a file.
    When ledger totals are given they are used verbatim (they always agree
    with the final cumulative figures on a closed run).
    """
    tenants: list[str] = []
    totals: dict[str, Money] = {}
    completions: dict[str, int] = {}
    migrations: dict[str, int] = {}
    rollback: dict[str, float] = {}
    pending_migration: dict[str, float] = {}
    allocated: dict[str, int] = {t: 0 for t in header.cluster}
    open_spans: dict[tuple[str, int], int] = {}

    for rec in records:
        if rec.tenant and rec.tenant not in tenants:
            tenants.append(rec.tenant)
        if rec.tenant and rec.cumulative is not None:
            totals[rec.tenant] = max(totals.get(rec.tenant, 0), rec.cumulative)
        if rec.event == "WorkloadComplete":
            completions[rec.tenant] = rec.time_ms
        elif rec.event == "Assignment":
            open_spans[(rec.accel, rec.instance)] = rec.time_ms
        elif rec.event == "Release":
            start = open_spans.pop((rec.accel, rec.instance), None)
            if start is not None:
                allocated[rec.accel] = allocated.get(rec.accel, 0) + rec.time_ms - start
        elif rec.event == "MigrationStart":
            migrations[rec.tenant] = migrations.get(rec.tenant, 0) + 1
            pending_migration[rec.tenant] = _progress_of(rec)
        elif rec.event in ("LoadComplete", "MigrationComplete"):
            was = pending_migration.pop(rec.tenant, None)
            resumed = _progress_of(rec)
            if was is not None and resumed is not None:
                rollback[rec.tenant] = rollback.get(rec.tenant, 0.0) + max(0.0, was - resumed)

    for (accel, _), start in open_spans.items():
        allocated[accel] = allocated.get(accel, 0) + header.end_ms - start

    if ledger_totals is not None:
        for tenant_id, total in ledger_totals.items():
            totals[tenant_id] = total
            if tenant_id not in tenants:
                tenants.append(tenant_id)

    utilization = {}
    for type_id, count in sorted(header.cluster.items()):
        available = count * header.end_ms
        utilization[type_id] = allocated.get(type_id, 0) / available if available else 0.0

    summaries = tuple(
        TenantSummary(t, totals.get(t, 0), completions.get(t),
                      migrations.get(t, 0), rollback.get(t, 0.0))
        for t in sorted(tenants)
    )
    return Report(
        tenants=summaries,
        utilization=utilization,
        revenue=sum(totals.values()),
        migration_count=sum(migrations.values()),
        total_rollback=sum(rollback.values()),
        end_ms=header.end_ms,
    )


def summarize_run(result: RunResult) -> Report:
    totals = {tid: result.ledger.total(tid) for tid in result.tenants}
    return summarize(result.trace, header_for(result), totals)


def format_report(report: Report) -> str:
    lines = [f"run end: {report.end_ms} ms"]
    lines.append("tenant totals:")
    for t in report.tenants:
        done = f"{t.completion_ms} ms" if t.completion_ms is not None else "incomplete"
        lines.append(f"  {t.tenant_id}: ${format_money(t.total_cost)}"
                     f"  completed: {done}  migrations: {t.migrations}"
                     f"  rollback: {t.rollback:.4f}")
    lines.append(f"cluster revenue: ${format_money(report.revenue)}")
    lines.append("utilization:")
    for type_id, frac in report.utilization.items():
        lines.append(f"  {type_id}: {frac:.4f}")
    lines.append(f"migrations: {report.migration_count}"
                 f"  total rollback: {report.total_rollback:.4f}")
    return "\n".join(lines)
