"""Frontier interchange: CSV files shared by the optimizer, the composer, and
the CLI, plus the JSON-lines evaluation log.

One schema covers partition, microbatch, and iteration frontiers:
``time_ms, dyn_energy_j, total_energy_j, frequency_mhz, sm_alloc, timing,
provenance``. Floats are written with ``repr`` so parsing a file reconstructs
the in-memory values exactly.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass

from .compose import IterationPoint, MicrobatchPoint
from .domain import LaunchTiming, ParetoFrontier, ScheduleConfig
from .mbo import EvalRecord, MboResult

CSV_HEADER = [
    "time_ms",
    "dyn_energy_j",
    "total_energy_j",
    "frequency_mhz",
    "sm_alloc",
    "timing",
    "provenance",
]


@dataclass(frozen=True)
class FrontierRow:
    time_ms: float
    dyn_energy_j: float
    total_energy_j: float
    frequency_mhz: float | None
    sm_alloc: int | None
    timing: str
    provenance: str


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def render_frontier_csv(rows: list[FrontierRow]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for r in rows:
        writer.writerow(
            [
                _fmt(r.time_ms),
                _fmt(r.dyn_energy_j),
                _fmt(r.total_energy_j),
                _fmt(r.frequency_mhz),
                _fmt(r.sm_alloc),
                r.timing,
                r.provenance,
            ]
        )
    return buf.getvalue()


def write_frontier_csv(path, rows: list[FrontierRow]):
    with open(path, "w", newline="") as fh:
        fh.write(render_frontier_csv(rows))


def read_frontier_csv(path) -> list[FrontierRow]:
    rows = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header != CSV_HEADER:
            raise ValueError(f"unexpected frontier CSV header: {header}")
        for rec in reader:
            rows.append(
                FrontierRow(
                    time_ms=float(rec[0]),
                    dyn_energy_j=float(rec[1]),
                    total_energy_j=float(rec[2]),
                    frequency_mhz=float(rec[3]) if rec[3] else None,
                    sm_alloc=int(rec[4]) if rec[4] else None,
                    timing=rec[5],
                    provenance=rec[6],
                )
            )
    return rows


def rows_from_mbo(result: MboResult) -> list[FrontierRow]:
    """The (time, dynamic energy) frontier of an optimization run, one row per
    point with its realizing config and discovering pass."""
    rows = []
    for point in result.frontier:
        config: ScheduleConfig = point.payload
        record = result.record_for(config)
        rows.append(
            FrontierRow(
                time_ms=point.time_ms,
                dyn_energy_j=point.energy_j,
                total_energy_j=record.measurement.total_energy_j,
                frequency_mhz=config.frequency_mhz,
                sm_alloc=config.sm_alloc,
                timing=config.timing.encode(),
                provenance=record.pass_label,
            )
        )
    return rows


def encode_microbatch_choices(point: MicrobatchPoint) -> str:
    return "|".join(
        f"{name}:{cfg.sm_alloc}:{cfg.timing.encode()}" for name, cfg in point.choices
    )


def rows_from_microbatch(frontier: ParetoFrontier) -> list[FrontierRow]:
    rows = []
    for fp in frontier:
        point: MicrobatchPoint = fp.payload
        rows.append(
            FrontierRow(
                time_ms=fp.time_ms,
                dyn_energy_j=point.dyn_energy_j,
                total_energy_j=fp.energy_j,
                frequency_mhz=point.frequency_mhz,
                sm_alloc=None,
                timing=encode_microbatch_choices(point),
                provenance=point.execution_model,
            )
        )
    return rows


def encode_assignment(point: IterationPoint) -> str:
    return "|".join(f"{s}.{m}.{d}={i}" for (s, m, d), i in point.assignment_idx)


def rows_from_iteration(
    points: list[IterationPoint], num_stages: int, p_static_w: float
) -> list[FrontierRow]:
    rows = []
    for p in points:
        dyn = p.energy_j - p_static_w * num_stages * p.time_ms / 1000.0
        rows.append(
            FrontierRow(
                time_ms=p.time_ms,
                dyn_energy_j=dyn,
                total_energy_j=p.energy_j,
                frequency_mhz=None,
                sm_alloc=None,
                timing=encode_assignment(p),
                provenance="iteration",
            )
        )
    return rows


def render_eval_log(partition_name: str, records: list[EvalRecord]) -> str:
    lines = []
    for r in records:
        lines.append(
            json.dumps(
                {
                    "partition": partition_name,
                    "batch": r.batch,
                    "pass": r.pass_label,
                    "config": {
                        "frequency_mhz": r.config.frequency_mhz,
                        "sm_alloc": r.config.sm_alloc,
                        "timing": r.config.timing.encode(),
                    },
                    "measurement": {
                        "time_ms": r.measurement.time_ms,
                        "dyn_energy_j": r.measurement.dyn_energy_j,
                        "static_energy_j": r.measurement.static_energy_j,
                        "total_energy_j": r.measurement.total_energy_j,
                    },
                },
                sort_keys=True,
            )
        )
    return "\n".join(lines) + ("\n" if lines else "")


def parse_eval_log(text: str) -> list[dict]:
    return [json.loads(line) for line in text.splitlines() if line.strip()]
