"""Bit-level model of one SRAM compute partition.

A partition is a ``height x width`` bit matrix.  Each cycle activates two
wordlines: the bitline senses their AND and the complementary bitline their
NOR.  The sensed row is written back to a third row through one of three
writeback paths selected by a 4:1 mux (same column, shifted one column right,
or a single column broadcast to the whole row).

Rows and columns are 1-indexed.  Row 1 is hard-wired to logic 0 and row 2 to
logic 1; NOT is realised as NOR with row 1 and COPY as AND with row 2.
Values are stored MSB first, i.e. the most significant bit sits in column 1.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Union

import numpy as np

from .errors import (
    ConstantRowWriteError,
    DimensionError,
    InstructionError,
    RowRangeError,
    ValueRangeError,
)

ZEROS_ROW = 1
ONES_ROW = 2
MIN_HEIGHT = 5


class Gate(str, enum.Enum):
    AND = "AND"
    NOR = "NOR"


class OpClass(str, enum.Enum):
    NOR = "NOR"
    NOT = "NOT"
    AND = "AND"
    COPY = "COPY"


@dataclass(frozen=True)
class SameColumn:
    def __str__(self):
        return "same"


@dataclass(frozen=True)
class ShiftRight:
    def __str__(self):
        return "shr"


@dataclass(frozen=True)
class BroadcastFrom:
    source_col: int

    def __str__(self):
        return f"bcast,{self.source_col}"


WritebackMode = Union[SameColumn, ShiftRight, BroadcastFrom]

SAME = SameColumn()
SHIFT_RIGHT = ShiftRight()


def parse_writeback(token: str) -> WritebackMode:
    if token == "same":
        return SAME
    if token == "shr":
        return SHIFT_RIGHT
    head, _, col = token.partition(",")
    if head == "bcast" and col:
        return BroadcastFrom(int(col))
    raise ValueError(f"unknown writeback mode {token!r}")


@dataclass(frozen=True)
class Instruction:
    """One bitline micro-operation.  Validity is checked at execution time
    (see :func:`instruction_violations`) so that malformed programs can be
    audited instead of failing on construction."""

    gate: Gate
    src_a: int
    src_b: int
    dest: int
    writeback: WritebackMode = SAME

    @property
    def op_class(self) -> OpClass:
        if self.gate is Gate.NOR:
            if ZEROS_ROW in (self.src_a, self.src_b):
                return OpClass.NOT
            return OpClass.NOR
        if ONES_ROW in (self.src_a, self.src_b):
            return OpClass.COPY
        return OpClass.AND

    @property
    def sources(self) -> tuple[int, int]:
        return (self.src_a, self.src_b)

    def __str__(self):
        return f"{self.gate.value} {self.src_a} {self.src_b} {self.dest} {self.writeback}"


def instruction_violations(instr: Instruction, height: int | None = None,
                           width: int | None = None) -> list[str]:
    """Return every rule the instruction breaks (empty list when valid).

    Bounds are only checked when the array geometry is given.
    """
    out = []
    if not isinstance(instr.gate, Gate):
        out.append(f"unknown gate {instr.gate!r}")
    if instr.src_a == instr.src_b:
        out.append(f"equal sources (row {instr.src_a})")
    if instr.dest in instr.sources:
        out.append(f"destination row {instr.dest} is also a source")
    if instr.dest in (ZEROS_ROW, ONES_ROW):
        out.append(f"destination row {instr.dest} is a constant row")
    for name in ("src_a", "src_b", "dest"):
        row = getattr(instr, name)
        if row < 1 or (height is not None and row > height):
            out.append(f"{name} row {row} out of range")
    wb = instr.writeback
    if not isinstance(wb, (SameColumn, ShiftRight, BroadcastFrom)):
        out.append(f"unknown writeback {wb!r}")
    elif isinstance(wb, BroadcastFrom):
        if wb.source_col < 1 or (width is not None and wb.source_col > width):
            out.append(f"broadcast column {wb.source_col} out of range")
    return out


def apply_instruction(cells: np.ndarray, instr: Instruction) -> None:
    """Execute ``instr`` on a bool array whose last two axes are (row, column).

    Leading axes are treated as independent lanes, which lets the exhaustive
    checks run thousands of arrays through the same kernel at once.  No
    validation happens here.
    """
    a = cells[..., instr.src_a - 1, :]
    b = cells[..., instr.src_b - 1, :]
    if instr.gate is Gate.AND:
        g = a & b
    else:
        g = ~(a | b)
    wb = instr.writeback
    dest = instr.dest - 1
    if isinstance(wb, SameColumn):
        cells[..., dest, :] = g
    elif isinstance(wb, ShiftRight):
        cells[..., dest, 1:] = g[..., :-1]
        cells[..., dest, 0] = False
    else:
        col = wb.source_col - 1
        cells[..., dest, :] = g[..., col:col + 1]


def int_to_bits(value: int, width: int) -> np.ndarray:
    return np.array([(value >> (width - 1 - c)) & 1 for c in range(width)], dtype=bool)


def bits_to_int(bits) -> int:
    out = 0
    for b in bits:
        out = (out << 1) | int(bool(b))
    return out


def bits_to_str(bits) -> str:
    return "".join("1" if b else "0" for b in bits)


class ArrayState:
    """A partition's bit matrix with the two constant rows pre-set."""

    def __init__(self, width: int, height: int):
        if width < 1:
            raise DimensionError(f"width must be >= 1, got {width}")
        if height < MIN_HEIGHT:
            raise DimensionError(f"height must be >= {MIN_HEIGHT}, got {height}")
        self._width = width
        self._height = height
        self.cells = np.zeros((height, width), dtype=bool)
        self.cells[ONES_ROW - 1, :] = True

    @property
    def width(self) -> int:
        return self._width

    @property
    def height(self) -> int:
        return self._height

    def copy(self) -> "ArrayState":
        other = ArrayState(self._width, self._height)
        other.cells[:] = self.cells
        return other

    def snapshot(self) -> np.ndarray:
        snap = self.cells.copy()
        snap.flags.writeable = False
        return snap

    def _check_row(self, row: int) -> None:
        if not 1 <= row <= self._height:
            raise RowRangeError(f"row {row} outside [1, {self._height}]")

    def row(self, row: int) -> np.ndarray:
        self._check_row(row)
        return self.cells[row - 1].copy()

    def row_str(self, row: int) -> str:
        return bits_to_str(self.row(row))

    def load_value(self, row: int, value: int) -> None:
        self._check_row(row)
        if row in (ZEROS_ROW, ONES_ROW):
            raise ConstantRowWriteError(f"row {row} is a constant row")
        if not 0 <= value < (1 << self._width):
            raise ValueRangeError(f"value {value} does not fit in {self._width} bits")
        self.cells[row - 1] = int_to_bits(value, self._width)

    def load_bits(self, row: int, bits) -> None:
        """Write a raw bit row (used by inter-partition transfers)."""
        self._check_row(row)
        if row in (ZEROS_ROW, ONES_ROW):
            raise ConstantRowWriteError(f"row {row} is a constant row")
        bits = np.asarray(bits, dtype=bool)
        if bits.shape != (self._width,):
            raise DimensionError(f"expected {self._width} bits, got shape {bits.shape}")
        self.cells[row - 1] = bits

    def read_value(self, row: int) -> int:
        self._check_row(row)
        return bits_to_int(self.cells[row - 1])

    def execute(self, instr: Instruction) -> None:
        bad = instruction_violations(instr, self._height, self._width)
        if bad:
            raise InstructionError(bad)
        apply_instruction(self.cells, instr)

    def __eq__(self, other):
        if not isinstance(other, ArrayState):
            return NotImplemented
        return (self._width, self._height) == (other._width, other._height) and bool(
            np.array_equal(self.cells, other.cells))

    def __repr__(self):
        return f"ArrayState(width={self._width}, height={self._height})"

    def render(self) -> str:
        return "\n".join(f"{r + 1:>3} {bits_to_str(self.cells[r])}" for r in range(self._height))
