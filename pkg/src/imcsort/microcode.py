"""Compare-and-swap microcode: compilation, row allocation and cycle accounting.

The comparator is built from two-input gates only.  Per column we form

    gt_c = A_c AND NOT B_c        (as NOR(NOT A, B))
    lt_c = NOT A_c AND B_c        (as NOR(A, NOT B))
    eq_c = NOR(gt_c, lt_c)

and sweep the prefix verdict from column 1 (MSB) towards column k.  Two
running rows are kept, both stored shifted one column right so that column c
sees the state of columns 1..c-1:

    G_c = G_{c-1} OR (E_{c-1} AND gt_c)        (A > B on the prefix)
    E_c = E_{c-1} AND eq_c                     (prefixes equal)

The ShiftRight writeback is folded into the gates that produce the next
state.  Its zero fill only ever lands in columns that never feed column k,
so the final column is exact.  The last gate broadcasts to the whole select row.  The mux then routes

    min = NOR(NOR(A, s), NOR(B, ~s))      max = NOR(NOR(B, s), NOR(A, ~s))

and the two swap writes land in row 4 (max) and then row 3 (min).
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence

import numpy as np

from . import bitcell
from .bitcell import (
    ONES_ROW,
    SAME,
    SHIFT_RIGHT,
    ZEROS_ROW,
    ArrayState,
    BroadcastFrom,
    Gate,
    Instruction,
    OpClass,
    apply_instruction,
    instruction_violations,
)
from .errors import DimensionError, ImcSortError, InstructionError, ValueRangeError

ROW_A = 3
ROW_B = 4
FIXED_ROWS = (ZEROS_ROW, ONES_ROW, ROW_A, ROW_B)
FIRST_WORK_ROW = 5


@dataclass(frozen=True)
class CycleStats:
    nor_cycles: int = 0
    not_cycles: int = 0
    and_cycles: int = 0
    copy_cycles: int = 0
    transfer_cycles: int = 0

    @property
    def total(self) -> int:
        return (self.nor_cycles + self.not_cycles + self.and_cycles
                + self.copy_cycles + self.transfer_cycles)

    def __add__(self, other: "CycleStats") -> "CycleStats":
        return CycleStats(
            self.nor_cycles + other.nor_cycles,
            self.not_cycles + other.not_cycles,
            self.and_cycles + other.and_cycles,
            self.copy_cycles + other.copy_cycles,
            self.transfer_cycles + other.transfer_cycles,
        )

    def scaled(self, factor: int) -> "CycleStats":
        return CycleStats(self.nor_cycles * factor, self.not_cycles * factor,
                          self.and_cycles * factor, self.copy_cycles * factor,
                          self.transfer_cycles * factor)

    def as_table(self) -> dict[str, int]:
        """Per-class view with provisioning folded into COPY, as the
        published operation-cycle table reports it."""
        return {
            "NOR": self.nor_cycles,
            "NOT": self.not_cycles,
            "AND": self.and_cycles,
            "COPY": self.copy_cycles + self.transfer_cycles,
            "Total": self.total,
        }

    def to_dict(self) -> dict[str, int]:
        return {
            "nor_cycles": self.nor_cycles,
            "not_cycles": self.not_cycles,
            "and_cycles": self.and_cycles,
            "copy_cycles": self.copy_cycles,
            "transfer_cycles": self.transfer_cycles,
            "total": self.total,
        }


# 4-bit CAS block accounting as published; the analytic model uses these
# verbatim because the published gate netlist is not recoverable.
PAPER_CAS_STATS = CycleStats(nor_cycles=14, not_cycles=8, and_cycles=3, copy_cycles=3)
PAPER_CAS_ROWS = 22
PAPER_CAS_WIDTH = 4


@dataclass(frozen=True)
class MicroProgram:
    width: int
    instructions: tuple[Instruction, ...]
    compare_end: int | None = None
    mux_end: int | None = None
    select_row: int | None = None
    select_complement_row: int | None = None
    row_a: int = ROW_A
    row_b: int = ROW_B
    total_rows: int = field(default=0)

    def __post_init__(self):
        object.__setattr__(self, "instructions", tuple(self.instructions))
        if not self.total_rows:
            used = [r for ins in self.instructions for r in (ins.src_a, ins.src_b, ins.dest)]
            object.__setattr__(self, "total_rows", max([ROW_B, *used]))

    def __len__(self):
        return len(self.instructions)

    def __iter__(self):
        return iter(self.instructions)

    @property
    def working_rows(self) -> int:
        return self.total_rows - len(FIXED_ROWS)


class _Builder:
    def __init__(self):
        self.code: list[Instruction] = []
        self.next_row = FIRST_WORK_ROW

    def emit(self, gate, a, b, wb=SAME, dest=None) -> int:
        if dest is None:
            dest = self.next_row
            self.next_row += 1
        self.code.append(Instruction(gate, a, b, dest, wb))
        return dest

    def nor(self, a, b, wb=SAME, dest=None):
        return self.emit(Gate.NOR, a, b, wb, dest)

    def and_(self, a, b, wb=SAME, dest=None):
        return self.emit(Gate.AND, a, b, wb, dest)

    def not_(self, a, wb=SAME, dest=None):
        return self.emit(Gate.NOR, a, ZEROS_ROW, wb, dest)

    def copy(self, a, wb=SAME):
        return self.emit(Gate.AND, a, ONES_ROW, wb)


def _compile_fresh(width: int) -> MicroProgram:
    bld = _Builder()
    a, b = ROW_A, ROW_B

    # compare phase
    not_a = bld.not_(a)
    if width == 1:
        gt = bld.nor(not_a, b)
        select = bld.copy(gt, BroadcastFrom(1))
        select_c = bld.not_(select)
    else:
        not_b = bld.not_(b)
        gt = bld.nor(not_a, b)
        lt = bld.nor(a, not_b)
        eq = bld.nor(gt, lt)
        # shifted running state: column c holds the verdict for columns 1..c-1
        s_gt = bld.copy(gt, SHIFT_RIGHT)
        s_eq = bld.copy(eq, SHIFT_RIGHT)
        for _ in range(width - 2):
            hit = bld.and_(s_eq, gt)
            not_gt = bld.nor(s_gt, hit)
            s_eq = bld.and_(s_eq, eq, SHIFT_RIGHT)
            s_gt = bld.not_(not_gt, SHIFT_RIGHT)
        hit = bld.and_(s_eq, gt)
        # the final gate yields NOT(A > B) in column k; broadcast it, then
        # invert.  The select row sits just before its complement.
        select, select_c = bld.next_row, bld.next_row + 1
        bld.next_row += 2
        bld.nor(s_gt, hit, BroadcastFrom(width), dest=select_c)
        bld.not_(select_c, dest=select)
    compare_end = len(bld.code)

    # mux phase
    keep_a = bld.nor(a, select)      # ~A & ~s
    keep_b = bld.nor(b, select)      # ~B & ~s
    take_b = bld.nor(b, select_c)    # ~B & s
    take_a = bld.nor(a, select_c)    # ~A & s
    mux_end = len(bld.code)

    # swap writes: max first, then min
    bld.nor(keep_b, take_a, dest=ROW_B)
    bld.nor(keep_a, take_b, dest=ROW_A)

    return MicroProgram(
        width=width,
        instructions=tuple(bld.code),
        compare_end=compare_end,
        mux_end=mux_end,
        select_row=select,
        select_complement_row=select_c,
        total_rows=bld.next_row - 1,
    )


def compile_cas(width: int, reuse: bool = False) -> MicroProgram:
    """Compile a ``width``-bit compare-and-swap block.

    Inputs are expected in rows 3 (A) and 4 (B); afterwards row 3 holds the
    minimum and row 4 the maximum.  With ``reuse`` the working rows are
    recycled by liveness.
    """
    if width < 1:
        raise DimensionError(f"width must be >= 1, got {width}")
    prog = _compile_fresh(width)
    if reuse:
        prog = allocate_rows(prog, reuse=True)
    return prog


def classify_cycles(program: Iterable[Instruction]) -> CycleStats:
    counts = {cls: 0 for cls in OpClass}
    for ins in program:
        counts[ins.op_class] += 1
    return CycleStats(
        nor_cycles=counts[OpClass.NOR],
        not_cycles=counts[OpClass.NOT],
        and_cycles=counts[OpClass.AND],
        copy_cycles=counts[OpClass.COPY],
    )


def validate_program(program: MicroProgram) -> list[str]:
    """Structural audit; returns a list of human-readable violations."""
    out = []
    for i, ins in enumerate(program.instructions, start=1):
        for v in instruction_violations(ins, program.total_rows, program.width):
            out.append(f"cycle {i}: {v}")
    n = len(program.instructions)
    if program.compare_end is not None or program.mux_end is not None:
        ce, me = program.compare_end, program.mux_end
        if ce is None or me is None or not (0 < ce < me <= n):
            out.append(f"phase markers out of order: compare_end={ce} mux_end={me} n={n}")
        if n < 2 or program.instructions[-2].dest != program.row_b \
                or program.instructions[-1].dest != program.row_a:
            out.append("program must end with the row-4 then row-3 swap writes")
        if me is not None and ce is not None:
            protected = {ZEROS_ROW, ONES_ROW, program.row_a, program.row_b}
            for i in range(ce, min(me, n)):
                if program.instructions[i].dest in protected:
                    out.append(f"cycle {i + 1}: mux phase writes data/constant row "
                               f"{program.instructions[i].dest}")
    return out


# ---------------------------------------------------------------- execution

def _check_operand(value: int, width: int) -> None:
    if not 0 <= value < (1 << width):
        raise ValueRangeError(f"value {value} does not fit in {width} bits")


def load_cas(program: MicroProgram, a: int, b: int) -> ArrayState:
    arr = ArrayState(program.width, max(program.total_rows, bitcell.MIN_HEIGHT))
    arr.load_value(program.row_a, a)
    arr.load_value(program.row_b, b)
    return arr


def run_cas(program: MicroProgram, a: int, b: int):
    """Run the program on a fresh array; returns ``(min, max, trace)`` where
    the trace holds one read-only snapshot per executed cycle."""
    _check_operand(a, program.width)
    _check_operand(b, program.width)
    arr = load_cas(program, a, b)
    trace = []
    for ins in program.instructions:
        arr.execute(ins)
        trace.append(arr.snapshot())
    return arr.read_value(program.row_a), arr.read_value(program.row_b), trace


def _to_bits(values: np.ndarray, width: int) -> np.ndarray:
    shifts = np.arange(width - 1, -1, -1, dtype=np.uint64)
    return ((values.astype(np.uint64)[:, None] >> shifts) & 1).astype(bool)


def _from_bits(bits: np.ndarray) -> np.ndarray:
    width = bits.shape[-1]
    weights = (np.uint64(1) << np.arange(width - 1, -1, -1, dtype=np.uint64))
    return (bits.astype(np.uint64) * weights).sum(axis=-1)


def simulate_batch(program: MicroProgram, a_values, b_values, *, probe_row=None,
                   probe_cycle=None):
    """Run one program over many (A, B) pairs at once.

    Every lane is an independent copy of the partition; the same kernel as
    :meth:`ArrayState.execute` is applied to all lanes per instruction.
    Returns ``(rows3, rows4)`` as integer arrays, plus the bit rows listed in
    ``probe_row`` captured right after cycle ``probe_cycle`` when requested.
    """
    bad = validate_program(program)
    if bad:
        raise InstructionError(bad)
    a_values = np.asarray(a_values, dtype=np.uint64)
    b_values = np.asarray(b_values, dtype=np.uint64)
    limit = 1 << program.width
    if a_values.size and (a_values.max() >= limit or b_values.max() >= limit):
        raise ValueRangeError(f"operand does not fit in {program.width} bits")
    height = max(program.total_rows, bitcell.MIN_HEIGHT)
    cells = np.zeros((a_values.size, height, program.width), dtype=bool)
    cells[:, ONES_ROW - 1, :] = True
    cells[:, program.row_a - 1, :] = _to_bits(a_values, program.width)
    cells[:, program.row_b - 1, :] = _to_bits(b_values, program.width)
    probes = None
    for cycle, ins in enumerate(program.instructions, start=1):
        apply_instruction(cells, ins)
        if probe_row is not None and cycle == probe_cycle:
            probes = {r: cells[:, r - 1, :].copy() for r in probe_row}
    lo = _from_bits(cells[:, program.row_a - 1, :])
    hi = _from_bits(cells[:, program.row_b - 1, :])
    if probe_row is not None:
        return lo, hi, probes
    return lo, hi


def exhaustive_pairs(width: int):
    vals = np.arange(1 << width, dtype=np.uint64)
    a, b = np.meshgrid(vals, vals, indexing="ij")
    return a.ravel(), b.ravel()


# ---------------------------------------------------------------- allocation

@dataclass
class _Value:
    def_index: int
    last_use: int
    row: int | None = None


def _values(program: MicroProgram):
    """SSA view of a row-addressed program.

    Returns (defs, uses) where defs[i] is the value id defined by instruction
    i (or None for writes to fixed rows) and uses[i] the per-source value ids
    (None for fixed rows).  Reads of working rows that were never written are
    reported separately since they must keep their physical row.
    """
    current: dict[int, int] = {}
    values: list[_Value] = []
    defs: list[int | None] = []
    uses: list[tuple[int | None, int | None]] = []
    pinned_reads: set[int] = set()
    for i, ins in enumerate(program.instructions):
        ids = []
        for src in ins.sources:
            if src in FIXED_ROWS:
                ids.append(None)
            elif src in current:
                vid = current[src]
                values[vid].last_use = i
                ids.append(vid)
            else:
                pinned_reads.add(src)
                ids.append(None)
        uses.append((ids[0], ids[1]))
        if ins.dest in FIXED_ROWS:
            defs.append(None)
            current.pop(ins.dest, None)
        else:
            vid = len(values)
            values.append(_Value(def_index=i, last_use=i))
            current[ins.dest] = vid
            defs.append(vid)
    return values, defs, uses, pinned_reads


def peak_live_rows(program: MicroProgram) -> int:
    """Largest number of working-row values that must coexist in any cycle.

    A value occupies a row from its defining cycle through its last read, and
    a cycle's destination cannot alias its sources, so this is a lower bound
    on the working rows of any allocation of the program.
    """
    values, defs, _, pinned = _values(program)
    peak = 0
    for i, vid in enumerate(defs):
        live = sum(1 for v in values if v.def_index < i <= v.last_use)
        if vid is not None:
            live += 1
        peak = max(peak, live)
    return peak + len(pinned)


def allocate_rows(program: MicroProgram, reuse: bool) -> MicroProgram:
    """Reassign working rows.

    ``reuse=False`` gives every defining instruction its own row after rows
    1-4.  ``reuse=True`` recycles a row once its value has been read for the
    last time, always taking the lowest free row, in cycle order.  Rows 1-4
    and any row read before being written keep their physical index.
    """
    values, defs, uses, pinned = _values(program)
    reserved = set(FIXED_ROWS) | pinned
    free: list[int] = []
    active: list[int] = []
    next_row = FIRST_WORK_ROW

    def fresh_row():
        nonlocal next_row
        while next_row in reserved:
            next_row += 1
        row = next_row
        next_row += 1
        return row

    out = []
    for i, ins in enumerate(program.instructions):
        if reuse:
            still = []
            for vid in active:
                if values[vid].last_use < i:
                    free.append(values[vid].row)
                else:
                    still.append(vid)
            active = still
            free.sort()
        srcs = []
        for src, vid in zip(ins.sources, uses[i]):
            srcs.append(src if vid is None else values[vid].row)
        vid = defs[i]
        if vid is None:
            dest = ins.dest
        else:
            dest = free.pop(0) if (reuse and free) else fresh_row()
            values[vid].row = dest
            active.append(vid)
        out.append(Instruction(ins.gate, srcs[0], srcs[1], dest, ins.writeback))

    def remap(row, marker):
        # physical row holding the value that ``row`` held right after ``marker``
        if row is None or marker is None:
            return row
        if row in FIXED_ROWS or row in pinned:
            return row
        for j in range(marker - 1, -1, -1):
            if program.instructions[j].dest == row:
                return values[defs[j]].row
        return row

    used = [r for ins in out for r in (ins.src_a, ins.src_b, ins.dest)]
    return replace(
        program,
        instructions=tuple(out),
        select_row=remap(program.select_row, program.compare_end),
        select_complement_row=remap(program.select_complement_row, program.compare_end),
        total_rows=max([ROW_B, *used]),
    )


# ------------------------------------------------------------ serialization

def dumps(program: MicroProgram) -> str:
    lines = [
        "# imcsort microprogram",
        f"width {program.width}",
        f"compare_end {_opt(program.compare_end)}",
        f"mux_end {_opt(program.mux_end)}",
        f"select {_opt(program.select_row)} {_opt(program.select_complement_row)}",
        f"data {program.row_a} {program.row_b}",
        f"rows {program.total_rows}",
    ]
    for i, ins in enumerate(program.instructions, start=1):
        lines.append(f"{i} {ins}")
    return "\n".join(lines) + "\n"


def _opt(v):
    return "-" if v is None else str(v)


def _unopt(tok):
    return None if tok == "-" else int(tok)


def loads(text: str) -> MicroProgram:
    header: dict[str, list[str]] = {}
    code = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if parts[0].isdigit():
            if len(parts) != 6:
                raise ImcSortError(f"line {lineno}: expected 6 fields, got {len(parts)}")
            cycle, gate, sa, sb, dest, wb = parts
            if int(cycle) != len(code) + 1:
                raise ImcSortError(f"line {lineno}: cycle {cycle} out of sequence")
            code.append(Instruction(Gate(gate), int(sa), int(sb), int(dest),
                                    bitcell.parse_writeback(wb)))
        else:
            header[parts[0]] = parts[1:]
    try:
        width = int(header["width"][0])
    except KeyError:
        raise ImcSortError("missing width header") from None
    sel = header.get("select", ["-", "-"])
    data = header.get("data", [str(ROW_A), str(ROW_B)])
    return MicroProgram(
        width=width,
        instructions=tuple(code),
        compare_end=_unopt(header.get("compare_end", ["-"])[0]),
        mux_end=_unopt(header.get("mux_end", ["-"])[0]),
        select_row=_unopt(sel[0]),
        select_complement_row=_unopt(sel[1]),
        row_a=int(data[0]),
        row_b=int(data[1]),
        total_rows=int(header.get("rows", ["0"])[0]),
    )


def program_listing(program: MicroProgram) -> list[dict]:
    return [
        {"cycle": i, "gate": ins.gate.value, "src_a": ins.src_a, "src_b": ins.src_b,
         "dest": ins.dest, "writeback": str(ins.writeback), "op_class": ins.op_class.value}
        for i, ins in enumerate(program.instructions, start=1)
    ]


def phase_of(program: MicroProgram, cycle: int) -> str:
    """Phase label for a 1-based cycle index."""
    if program.compare_end is None:
        return "program"
    if cycle <= program.compare_end:
        return "compare"
    if cycle <= program.mux_end:
        return "mux"
    return "swap"


def select_bits_after_compare(program: MicroProgram, a_values: Sequence[int],
                              b_values: Sequence[int]):
    """Select and complement rows observed at the end of the compare phase."""
    rows = (program.select_row, program.select_complement_row)
    _, _, probes = simulate_batch(program, a_values, b_values, probe_row=rows,
                                  probe_cycle=program.compare_end)
    return probes[rows[0]], probes[rows[1]]
