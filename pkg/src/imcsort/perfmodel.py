"""Latency, throughput, frequency and footprint reporting.

Two accounting modes exist.  ``paper`` uses the published 4-bit CAS cycle
constants and the published provisioning charge; ``measured`` uses the cycle
counts of an actual simulated run.  Both feed the same arithmetic:

    latency    = cycles * t_op
    throughput = cycles / latency        (micro-operations per ns = GOPS)
    frequency  = 1 / t_op
    memory     = partitions * rows * width
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

from . import sortnet
from .errors import BaselineError, PerfModelError
from .microcode import (
    PAPER_CAS_ROWS,
    PAPER_CAS_STATS,
    PAPER_CAS_WIDTH,
    CycleStats,
    classify_cycles,
    compile_cas,
)

DEFAULT_T_OP_NS = 0.55

# provisioning total charged for the 8-input unit in the published table
PAPER_EXTRA_CYCLES_N8 = 24

# printed precision of the published results table
PAPER_DIGITS = {
    "latency_ns": 1,
    "throughput_gops": 1,
    "frequency_ghz": 2,
    "cas_latency_ns": 1,
}

FOOTNOTES = (
    "Throughput counts micro-operation cycles per second, not sorted elements.",
    "Two different latency-advantage ratios over memristor sorting are published "
    "(5x and 3.4x) without a tabulated baseline; baseline figures here are user "
    "supplied and are not a reproduction.",
)


def truncate(x: float, digits: int) -> float:
    scale = 10 ** digits
    # nudge for binary representation error (e.g. 105.6 stored as 105.599...)
    return math.floor(x * scale + 1e-9) / scale


@dataclass(frozen=True)
class PerfReport:
    mode: str
    n: int
    width: int
    t_op: float
    total_cycles: int
    latency_ns: float
    throughput_gops: float
    frequency_ghz: float
    memory_cells: int
    cas_cycles: int
    cas_latency_ns: float
    partitions: int
    rows: int
    stats: CycleStats = field(default_factory=CycleStats)

    def paper_view(self) -> dict:
        """Figures truncated to the digits the published table prints."""
        return {k: truncate(getattr(self, k), d) for k, d in PAPER_DIGITS.items()}

    def to_dict(self) -> dict:
        return {
            "mode": self.mode,
            "n": self.n,
            "width": self.width,
            "t_op_ns": self.t_op,
            "total_cycles": self.total_cycles,
            "latency_ns": self.latency_ns,
            "throughput_gops": self.throughput_gops,
            "frequency_ghz": self.frequency_ghz,
            "memory_cells": self.memory_cells,
            "cas_cycles": self.cas_cycles,
            "cas_latency_ns": self.cas_latency_ns,
            "partitions": self.partitions,
            "rows": self.rows,
            "op_cycles": self.stats.as_table(),
            "paper_view": self.paper_view(),
            "footnotes": list(FOOTNOTES),
        }


CSV_FIELDS = ("mode", "n", "width", "t_op_ns", "total_cycles", "latency_ns",
              "throughput_gops", "frequency_ghz", "memory_cells", "cas_cycles",
              "cas_latency_ns", "partitions", "rows")


def reports_to_csv(reports) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=CSV_FIELDS, lineterminator="\n")
    w.writeheader()
    for r in reports:
        d = r.to_dict()
        w.writerow({k: d[k] for k in CSV_FIELDS})
    return buf.getvalue()


def _report(mode, n, width, t_op, stats, cas_cycles, partitions, rows) -> PerfReport:
    if t_op <= 0:
        raise PerfModelError(f"t_op must be positive, got {t_op}")
    total = stats.total
    if total <= 0:
        raise PerfModelError("cycle count must be positive")
    latency = total * t_op
    return PerfReport(
        mode=mode,
        n=n,
        width=width,
        t_op=t_op,
        total_cycles=total,
        latency_ns=latency,
        throughput_gops=total / latency,
        frequency_ghz=1.0 / t_op,
        memory_cells=partitions * rows * width,
        cas_cycles=cas_cycles,
        cas_latency_ns=cas_cycles * t_op,
        partitions=partitions,
        rows=rows,
        stats=stats,
    )


def cas_constants(width: int) -> tuple[CycleStats, int]:
    """(per-CAS cycle stats, rows) used by paper-mode accounting.

    Only the 4-bit block is published; other widths fall back to the
    compiled program, which is an extrapolation.
    """
    if width == PAPER_CAS_WIDTH:
        return PAPER_CAS_STATS, PAPER_CAS_ROWS
    prog = compile_cas(width)
    return classify_cycles(prog), prog.total_rows


def paper_extra_cycles(n: int) -> int:
    if n == 8:
        return PAPER_EXTRA_CYCLES_N8
    if n < 4:
        return 0
    plan = sortnet.plan_partitions(sortnet.build_bitonic(n))
    return sortnet.provisioning_cycles_per_event(n) * plan.provisioning_events


def paper_stats(n: int, width: int) -> CycleStats:
    stages = sortnet.stage_count(n)
    cas, _ = cas_constants(width)
    return cas.scaled(stages) + CycleStats(transfer_cycles=paper_extra_cycles(n))


def paper_model(n: int, width: int = PAPER_CAS_WIDTH, t_op: float = DEFAULT_T_OP_NS) -> PerfReport:
    sortnet.stage_count(n)  # validates n
    cas, rows = cas_constants(width)
    return _report("paper", n, width, t_op, paper_stats(n, width), cas.total,
                   n // 2, rows)


def measured_model(stats: CycleStats, plan: sortnet.PartitionPlan, width: int,
                   t_op: float = DEFAULT_T_OP_NS, *, rows: int | None = None,
                   cas_cycles: int | None = None) -> PerfReport:
    if rows is None or cas_cycles is None:
        prog = compile_cas(width)
        rows = prog.total_rows if rows is None else rows
        cas_cycles = len(prog) if cas_cycles is None else cas_cycles
    return _report("measured", plan.n, width, t_op, stats, cas_cycles,
                   plan.partitions, rows)


@dataclass(frozen=True)
class BaselineSpec:
    name: str
    latency_ns: float | None = None
    cycles: float | None = None
    source: str = ""
    claimed: dict = field(default_factory=dict)

    def __post_init__(self):
        for key in ("latency_ns", "cycles"):
            v = getattr(self, key)
            if v is not None and not v > 0:
                raise BaselineError(f"baseline {key} must be positive, got {v}")


def load_baseline(path) -> BaselineSpec:
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise BaselineError(f"{path}: invalid JSON ({exc})") from None
    if not isinstance(data, dict):
        raise BaselineError(f"{path}: expected a JSON object")
    unknown = set(data) - {"name", "latency_ns", "cycles", "source", "claimed"}
    if unknown:
        raise BaselineError(f"{path}: unknown baseline fields {sorted(unknown)}")
    return BaselineSpec(
        name=str(data.get("name", Path(path).stem)),
        latency_ns=data.get("latency_ns"),
        cycles=data.get("cycles"),
        source=str(data.get("source", "")),
        claimed=dict(data.get("claimed", {})),
    )


def compare(report: PerfReport, baseline: BaselineSpec) -> dict:
    """Speedups as baseline / proposed; above 1 means the proposed design wins."""
    if baseline.latency_ns is None and baseline.cycles is None:
        raise BaselineError(f"baseline {baseline.name!r} has neither latency_ns nor cycles")
    out = {
        "baseline": baseline.name,
        "source": baseline.source,
        "proposed_mode": report.mode,
        "proposed_cycles": report.total_cycles,
        "proposed_latency_ns": report.latency_ns,
        "baseline_cycles": baseline.cycles,
        "baseline_latency_ns": baseline.latency_ns,
        "latency_ratio": None,
        "cycle_ratio": None,
    }
    if baseline.latency_ns is not None:
        out["latency_ratio"] = baseline.latency_ns / report.latency_ns
    if baseline.cycles is not None:
        out["cycle_ratio"] = baseline.cycles / report.total_cycles
    if baseline.claimed:
        out["claimed"] = dict(baseline.claimed)
        out["claimed_note"] = "echoed from the baseline config; not verified"
    out["footnotes"] = list(FOOTNOTES)
    return out


def comparison_plot_csv(report: PerfReport, baseline: BaselineSpec) -> str:
    """Bar-chart data: one row per design with cycles, latency and memory."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["design", "cycles", "latency_ns", "memory_cells"])
    w.writerow(["proposed", report.total_cycles, report.latency_ns, report.memory_cells])
    w.writerow([baseline.name,
                "" if baseline.cycles is None else baseline.cycles,
                "" if baseline.latency_ns is None else baseline.latency_ns, ""])
    return buf.getvalue()
