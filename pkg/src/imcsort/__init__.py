"""Bit-level simulator and microcode toolchain for in-memory sorting on
6T-SRAM bitline logic."""

from .bitcell import ArrayState, BroadcastFrom, Gate, Instruction, OpClass, SAME, SHIFT_RIGHT
from .engine import SortConfig, SortResult, oracle_sort, sort, trace_export
from .microcode import CycleStats, MicroProgram, allocate_rows, classify_cycles, compile_cas, run_cas
from .perfmodel import BaselineSpec, PerfReport, compare, measured_model, paper_model
from .sortnet import PartitionPlan, SortingNetwork, build_bitonic, plan_partitions, transfer_moves

__version__ = "0.1.0"
