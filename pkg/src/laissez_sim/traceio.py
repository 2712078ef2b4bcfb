"""Trace emission and re-ingestion (CSV and JSON-lines).

Column order is fixed: time_ms,event,tenant,accel,instance,rate_usd_per_hr,
progress,cumulative_cost_usd. Rates and costs are decimal strings with six
fractional digits so a reparse loses nothing. The header comment carries the
scenario hash, the seed, the per-type instance counts and the run end time,
which is everything `report` needs to reconstruct a summary from the file
alone. Emission is deterministic: the same run yields byte-identical output.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from fractions import Fraction

from .core import Money, Rate, SimTime, SimulationError, format_money, parse_money
from .engine import RunResult, TraceRecord

CSV_COLUMNS = ["time_ms", "event", "tenant", "accel", "instance",
               "rate_usd_per_hr", "progress", "cumulative_cost_usd"]


class TraceFormatError(SimulationError):
    pass


@dataclass(frozen=True)
class TraceHeader:
    schema: int
    scenario_sha256: str
    seed: int
    cluster: dict[str, int]  # type id -> instance count
    end_ms: SimTime


def header_for(result: RunResult) -> TraceHeader:
    counts = {a.type_id: a.instance_count for a in result.scenario.accelerators}
    return TraceHeader(1, result.scenario.sha256, result.seed, counts,
                       result.end_time)


def _format_progress(progress: Fraction | None) -> str:
    return "" if progress is None else f"{float(progress):.6f}"


def _format_rate(rate: Rate | None) -> str:
    return "" if rate is None else format_money(rate)


def _header_comment(header: TraceHeader) -> str:
    cluster = ";".join(f"{t}:{n}" for t, n in sorted(header.cluster.items()))
    return (f"# laissez-sim-trace schema={header.schema}"
            f" scenario_sha256={header.scenario_sha256}"
            f" seed={header.seed} cluster={cluster} end_ms={header.end_ms}")


def emit_trace(trace: list[TraceRecord], fmt: str, header: TraceHeader) -> str:
    """Render a closed run's trace as CSV or JSON-lines."""
    if fmt == "csv":
        buf = io.StringIO()
        buf.write(_header_comment(header) + "\n")
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for rec in trace:
            writer.writerow([
                rec.time_ms,
                rec.event,
                rec.tenant,
                rec.accel,
                "" if rec.instance is None else rec.instance,
                _format_rate(rec.rate),
                _format_progress(rec.progress),
                _format_rate(rec.cumulative),
            ])
        return buf.getvalue()
    if fmt == "jsonl":
        lines = [json.dumps({"trace_header": {
            "schema": header.schema,
            "scenario_sha256": header.scenario_sha256,
            "seed": header.seed,
            "cluster": dict(sorted(header.cluster.items())),
            "end_ms": header.end_ms,
        }})]
        for rec in trace:
            lines.append(json.dumps({
                "time_ms": rec.time_ms,
                "event": rec.event,
                "tenant": rec.tenant,
                "accel": rec.accel,
                "instance": rec.instance,
                "rate_usd_per_hr": None if rec.rate is None else format_money(rec.rate),
                "progress": None if rec.progress is None else _format_progress(rec.progress),
                "cumulative_cost_usd": None if rec.cumulative is None else format_money(rec.cumulative),
            }))
        return "\n".join(lines) + "\n"
    raise TraceFormatError(f"unknown trace format {fmt!r}")


def emit_run(result: RunResult, fmt: str = "csv") -> str:
    return emit_trace(result.trace, fmt, header_for(result))


# ---------------------------------------------------------------------------
# Reading traces back
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ParsedRecord:
    time_ms: SimTime
    event: str
    tenant: str
    accel: str
    instance: int | None
    rate: Money | None        # micro-dollars/hr
    progress: float | None
    cumulative: Money | None  # micro-dollars


def _parse_header_comment(line: str) -> TraceHeader:
    fields = dict(part.split("=", 1) for part in line[1:].split()
                  if "=" in part)
    cluster = {}
    for chunk in fields.get("cluster", "").split(";"):
        if chunk:
            type_id, count = chunk.split(":")
            cluster[type_id] = int(count)
    return TraceHeader(int(fields.get("schema", 1)),
                       fields.get("scenario_sha256", ""),
                       int(fields.get("seed", 0)),
                       cluster,
                       int(fields.get("end_ms", 0)))


def read_trace(text: str) -> tuple[TraceHeader, list[ParsedRecord]]:
    """Parse an emitted trace document (CSV or JSON-lines)."""
    stripped = text.lstrip()
    if stripped.startswith("{"):
        return _read_jsonl(text)
    if not stripped.startswith("#"):
        raise TraceFormatError("missing trace header comment")
    lines = text.splitlines()
    header = _parse_header_comment(lines[0])
    reader = csv.reader(lines[1:])
    try:
        columns = next(reader)
    except StopIteration:
        raise TraceFormatError("missing column header row") from None
    if columns != CSV_COLUMNS:
        raise TraceFormatError(f"unexpected columns: {columns!r}")
    records = [
        ParsedRecord(
            time_ms=int(row[0]),
            event=row[1],
            tenant=row[2],
            accel=row[3],
            instance=int(row[4]) if row[4] else None,
            rate=parse_money(row[5]) if row[5] else None,
            progress=float(row[6]) if row[6] else None,
            cumulative=parse_money(row[7]) if row[7] else None,
        )
        for row in reader if row
    ]
    return header, records


def _read_jsonl(text: str) -> tuple[TraceHeader, list[ParsedRecord]]:
    lines = [line for line in text.splitlines() if line.strip()]
    head = json.loads(lines[0]).get("trace_header")
    if head is None:
        raise TraceFormatError("first JSON line must carry trace_header")
    header = TraceHeader(head["schema"], head["scenario_sha256"], head["seed"],
                         {k: int(v) for k, v in head["cluster"].items()},
                         head["end_ms"])
    records = []
    for line in lines[1:]:
        obj = json.loads(line)
        records.append(ParsedRecord(
            time_ms=obj["time_ms"],
            event=obj["event"],
            tenant=obj["tenant"],
            accel=obj["accel"],
            instance=obj["instance"],
            rate=None if obj["rate_usd_per_hr"] is None else parse_money(obj["rate_usd_per_hr"]),
            progress=None if obj["progress"] is None else float(obj["progress"]),
            cumulative=None if obj["cumulative_cost_usd"] is None else parse_money(obj["cumulative_cost_usd"]),
        ))
    return header, records
