"""Cycle-accurate execution of a complete N-input sort.

The N/2 partitions run the same CAS microprogram in lockstep, one
instruction per cycle.  Between stages the engine performs the planned
transfers: every moved value is copied into a temporary row of its
destination partition (one cycle) and from there into its data row (one
cycle).  All copy-outs of a boundary complete before any copy-in, so a data
row is never overwritten while its old value is still needed.
"""

from __future__ import annotations

import csv
import io
import json
from collections import Counter
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import perfmodel, sortnet
from .bitcell import ONES_ROW, ArrayState, Gate, Instruction, apply_instruction, bits_to_int, bits_to_str
from .errors import ImcSortError, InstructionError, NetworkSizeError, TraceError, ValueRangeError
from .microcode import CycleStats, MicroProgram, classify_cycles, compile_cas, phase_of, validate_program
from .perfmodel import PerfReport

MODES = ("paper", "measured")
IDLE = "IDLE"
TRACE_FIELDS = ("cycle", "partition", "row", "bits", "op_class")


@dataclass(frozen=True)
class SortConfig:
    width: int = 4
    accounting_mode: str = "paper"
    reuse_rows: bool = False
    t_op: float = perfmodel.DEFAULT_T_OP_NS
    emit_trace: bool = False

    def __post_init__(self):
        if self.width < 1:
            raise ImcSortError(f"width must be >= 1, got {self.width}")
        if not self.t_op > 0:
            raise ImcSortError(f"t_op must be positive, got {self.t_op}")
        if self.accounting_mode not in MODES:
            raise ImcSortError(f"accounting mode must be one of {MODES}")


@dataclass(frozen=True)
class TraceCycle:
    cycle: int
    phase: str                      # compare | mux | swap | transfer
    stage: int
    pcs: tuple                      # program counter per partition, None when idle
    ops: tuple[str, ...]            # op class per partition
    instrs: tuple[str, ...]
    snapshots: tuple[np.ndarray, ...]


@dataclass(frozen=True)
class Trace:
    partitions: int
    width: int
    height: int
    cycles: tuple[TraceCycle, ...]
    initial: tuple[np.ndarray, ...]
    final_residency: tuple[tuple[int, int], ...]   # wire -> (partition, row)


@dataclass(frozen=True)
class BoundaryAudit:
    stage: int
    point: str            # before | in_flight | after
    conserved: bool


@dataclass(frozen=True)
class SortResult:
    sorted: tuple[int, ...]
    stats: CycleStats
    perf: PerfReport
    measured_stats: CycleStats
    audits: tuple[BoundaryAudit, ...] = ()
    trace: Trace | None = None

    def to_dict(self) -> dict:
        return {
            "sorted": list(self.sorted),
            "stats": self.stats.to_dict(),
            "op_cycles": self.stats.as_table(),
            "measured_stats": self.measured_stats.to_dict(),
            "perf": self.perf.to_dict(),
            "audits_passed": all(a.conserved for a in self.audits),
        }


def oracle_sort(values) -> list[int]:
    """Plain bubble sort; stable and free of any cycle accounting."""
    out = list(values)
    for end in range(len(out) - 1, 0, -1):
        swapped = False
        for i in range(end):
            if out[i] > out[i + 1]:
                out[i], out[i + 1] = out[i + 1], out[i]
                swapped = True
        if not swapped:
            break
    return out


def _check_inputs(values, width):
    n = len(values)
    if n < 2 or n & (n - 1):
        raise NetworkSizeError(f"input length {n} is not a power of two >= 2")
    limit = 1 << width
    for v in values:
        if not isinstance(v, (int, np.integer)) or not 0 <= v < limit:
            raise ValueRangeError(f"value {v!r} does not fit in {width} bits")


class _Machine:
    def __init__(self, program: MicroProgram, plan: sortnet.PartitionPlan, emit_trace: bool):
        self.program = program
        self.plan = plan
        height = max(program.total_rows, sortnet.TEMP_ROW_BASE + 2)
        self.parts = [ArrayState(program.width, height) for _ in range(plan.partitions)]
        self.height = height
        self.emit_trace = emit_trace
        self.cycle = 0
        self.trace: list[TraceCycle] = []
        self.transfer_cycles = 0

    def record(self, phase, stage, pcs, ops, instrs):
        self.cycle += 1
        if self.emit_trace:
            self.trace.append(TraceCycle(
                cycle=self.cycle, phase=phase, stage=stage, pcs=tuple(pcs),
                ops=tuple(ops), instrs=tuple(instrs),
                snapshots=tuple(p.snapshot() for p in self.parts),
            ))

    def run_cas(self, stage):
        nparts = len(self.parts)
        for pc, ins in enumerate(self.program.instructions):
            for part in self.parts:
                apply_instruction(part.cells, ins)
            self.record(phase_of(self.program, pc + 1), stage, [pc] * nparts,
                        [ins.op_class.value] * nparts, [str(ins)] * nparts)

    def _transfer_cycle(self, stage, partition, op, text):
        nparts = len(self.parts)
        ops = [IDLE] * nparts
        instrs = [""] * nparts
        ops[partition], instrs[partition] = op, text
        self.record("transfer", stage, [None] * nparts, ops, instrs)
        self.transfer_cycles += 1

    def copy_out(self, stage, moves):
        for mv in moves:
            (sp, sr), (dp, _) = mv.src, mv.dst
            self.parts[dp].load_bits(mv.temp_row, self.parts[sp].cells[sr - 1])
            self._transfer_cycle(stage, dp, "COPY", f"XFER p{sp}.r{sr} -> p{dp}.r{mv.temp_row}")

    def copy_in(self, stage, moves):
        for mv in moves:
            dp, dr = mv.dst
            ins = Instruction(Gate.AND, mv.temp_row, ONES_ROW, dr)
            self.parts[dp].execute(ins)
            self._transfer_cycle(stage, dp, ins.op_class.value, str(ins))

    def value(self, slot):
        p, r = slot
        return bits_to_int(self.parts[p].cells[r - 1])


def sort(values, config: SortConfig | None = None) -> SortResult:
    config = config or SortConfig()
    values = list(values)
    _check_inputs(values, config.width)
    values = [int(v) for v in values]
    n = len(values)
    program = compile_cas(config.width, reuse=config.reuse_rows)
    bad = validate_program(program)
    if bad:
        raise InstructionError(bad)
    network = sortnet.build_bitonic(n)
    plan = sortnet.plan_partitions(network)
    m = _Machine(program, plan, config.emit_trace)

    where = dict(plan.initial)
    for w, (p, r) in where.items():
        m.parts[p].load_value(r, values[w])
    initial = tuple(p.snapshot() for p in m.parts)
    expected = Counter(values)
    audits = []

    def conserved(slots, extra=()):
        return Counter([m.value(s) for s in slots] + list(extra)) == expected

    for s, stage in enumerate(network.stages):
        moves = plan.moves[s]
        if s > 0:
            audits.append(BoundaryAudit(s, "before", conserved(where.values())))
            m.copy_out(s, moves)
            moving = {mv.wire for mv in moves}
            resident = [slot for w, slot in where.items() if w not in moving]
            in_flight = [bits_to_int(m.parts[mv.dst[0]].cells[mv.temp_row - 1]) for mv in moves]
            audits.append(BoundaryAudit(s, "in_flight", conserved(resident, in_flight)))
            m.copy_in(s, moves)
            for mv in moves:
                where[mv.wire] = mv.dst
            audits.append(BoundaryAudit(s, "after", conserved(where.values())))
        m.run_cas(s)
        for (i, j), p in zip(stage, plan.assignments[s].partitions):
            where[i] = (p, 3)
            where[j] = (p, 4)

    out = tuple(m.value(where[w]) for w in range(n))
    measured = classify_cycles(program).scaled(len(network.stages)) + CycleStats(
        transfer_cycles=m.transfer_cycles)
    if config.accounting_mode == "paper":
        stats = perfmodel.paper_stats(n, config.width)
        perf = perfmodel.paper_model(n, config.width, config.t_op)
    else:
        stats = measured
        perf = perfmodel.measured_model(measured, plan, config.width, config.t_op,
                                        rows=program.total_rows, cas_cycles=len(program))
    trace = None
    if config.emit_trace:
        trace = Trace(
            partitions=plan.partitions,
            width=config.width,
            height=m.height,
            cycles=tuple(m.trace),
            initial=initial,
            final_residency=tuple(where[w] for w in range(n)),
        )
    return SortResult(sorted=out, stats=stats, perf=perf, measured_stats=measured,
                      audits=tuple(audits), trace=trace)


# ------------------------------------------------------------------- traces

def trace_export(result: SortResult) -> list[dict]:
    """Flatten the trace to one record per (cycle, partition, row)."""
    trace = result.trace
    if trace is None:
        raise TraceError("run was made without emit_trace")
    rows = []
    for tc in trace.cycles:
        for p in range(trace.partitions):
            snap = tc.snapshots[p]
            for r in range(trace.height):
                rows.append({
                    "cycle": tc.cycle,
                    "partition": p,
                    "row": r + 1,
                    "bits": bits_to_str(snap[r]),
                    "op_class": tc.ops[p],
                    "phase": tc.phase,
                    "stage": tc.stage,
                    "instruction": tc.instrs[p],
                })
    return rows


def trace_to_csv(records) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=TRACE_FIELDS, extrasaction="ignore", lineterminator="\n")
    w.writeheader()
    w.writerows(records)
    return buf.getvalue()


def trace_to_json(result: SortResult) -> str:
    records = trace_export(result)
    return json.dumps({
        "partitions": result.trace.partitions,
        "width": result.trace.width,
        "rows": result.trace.height,
        "final_residency": [list(x) for x in result.trace.final_residency],
        "records": records,
    }, indent=1) + "\n"


def replay_final(records, final_residency) -> list[int]:
    """Decode the sorted output from the last cycle of an exported trace."""
    if not records:
        raise TraceError("empty trace")
    last = max(r["cycle"] for r in records)
    bits = {(r["partition"], r["row"]): r["bits"] for r in records if r["cycle"] == last}
    return [int(bits[tuple(slot)], 2) for slot in final_residency]


def row_final_cycle(result: SortResult, partition: int, row: int) -> int:
    """Last cycle at which the given row changed."""
    trace = result.trace
    if trace is None:
        raise TraceError("run was made without emit_trace")
    last = 0
    prev = trace.initial[partition][row - 1]
    for tc in trace.cycles:
        cur = tc.snapshots[partition][row - 1]
        if not np.array_equal(prev, cur):
            last = tc.cycle
        prev = cur
    return last


def lockstep_violations(trace: Trace) -> list[int]:
    bad = []
    for tc in trace.cycles:
        if tc.phase != "transfer" and len(set(tc.pcs)) != 1:
            bad.append(tc.cycle)
    return bad


# ------------------------------------------------------------------- inputs

def parse_values(text: str) -> list[int]:
    text = text.strip()
    if text.startswith("["):
        data = json.loads(text)
        if not isinstance(data, list):
            raise ImcSortError("JSON input must be an array")
    else:
        data = text.split()
    out = []
    for tok in data:
        if isinstance(tok, bool) or not isinstance(tok, (int, str)):
            raise ImcSortError(f"not an unsigned integer: {tok!r}")
        try:
            v = int(tok)
        except ValueError:
            raise ImcSortError(f"not an unsigned integer: {tok!r}") from None
        if v < 0:
            raise ValueRangeError(f"negative value {v}")
        out.append(v)
    return out


def read_values(path) -> list[int]:
    return parse_values(Path(path).read_text())
