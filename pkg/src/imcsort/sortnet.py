"""Bitonic comparator networks and their mapping onto memory partitions.

Every comparator is ascending (min to the lower wire) because the in-memory
CAS block always leaves the minimum in row 3.  Merges therefore use the
crossed first stage, comparing ``start + i`` with ``start + size - 1 - i``.

A partition holds exactly two values, in rows 3 and 4.  Before each stage
every comparator is placed on a partition and values that live elsewhere are
shuttled in through temporary rows.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from .errors import ImcSortError, NetworkSizeError, StageIndexError

DATA_ROWS = (3, 4)
TEMP_ROW_BASE = 5


def _log2(n: int) -> int:
    if n < 2:
        raise NetworkSizeError(f"network needs at least 2 inputs, got {n}")
    if n & (n - 1):
        raise NetworkSizeError(f"{n} is not a power of two")
    return n.bit_length() - 1


def stage_count(n: int) -> int:
    m = _log2(n)
    return m * (1 + m) // 2


def comparator_count(n: int) -> int:
    m = _log2(n)
    return n * m * (1 + m) // 4


def temp_row_count(n: int) -> int:
    _log2(n)
    return n // 4


def provisioning_cycles_per_event(n: int) -> int:
    _log2(n)
    return 3 * n // 4


@dataclass(frozen=True)
class SortingNetwork:
    n: int
    stages: tuple[tuple[tuple[int, int], ...], ...]

    @property
    def comparators(self) -> int:
        return sum(len(s) for s in self.stages)

    def apply(self, values):
        """Run the network in software with plain (min, max) comparators."""
        out = list(values)
        if len(out) != self.n:
            raise NetworkSizeError(f"expected {self.n} values, got {len(out)}")
        for stage in self.stages:
            for i, j in stage:
                if out[i] > out[j]:
                    out[i], out[j] = out[j], out[i]
        return out

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "stage_count": len(self.stages),
            "comparators": self.comparators,
            "stages": [[list(p) for p in stage] for stage in self.stages],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"

    def to_text(self) -> str:
        lines = [f"# bitonic network n={self.n} stages={len(self.stages)} "
                 f"comparators={self.comparators}"]
        for k, stage in enumerate(self.stages):
            lines.append(f"{k} " + " ".join(f"{i}:{j}" for i, j in stage))
        return "\n".join(lines) + "\n"

    @classmethod
    def from_dict(cls, d: dict) -> "SortingNetwork":
        return cls(int(d["n"]), tuple(tuple((int(i), int(j)) for i, j in s)
                                      for s in d["stages"]))


def build_bitonic(n: int) -> SortingNetwork:
    _log2(n)
    stages = []
    size = 2
    while size <= n:
        half = size // 2
        stages.append(tuple(
            (start + i, start + size - 1 - i)
            for start in range(0, n, size) for i in range(half)
        ))
        d = half // 2
        while d >= 1:
            stages.append(tuple(
                (start + i, start + i + d)
                for start in range(0, n, 2 * d) for i in range(d)
            ))
            d //= 2
        size *= 2
    return SortingNetwork(n, tuple(tuple(sorted(s)) for s in stages))


def stage_violations(network: SortingNetwork) -> list[str]:
    out = []
    for k, stage in enumerate(network.stages):
        seen = []
        for i, j in stage:
            if not (0 <= i < j < network.n):
                out.append(f"stage {k}: bad comparator ({i}, {j})")
            seen += [i, j]
        if sorted(seen) != list(range(network.n)):
            out.append(f"stage {k}: comparators do not partition the wires")
    return out


def sorts_all_binary(network: SortingNetwork) -> bool:
    """0-1 principle check over all 2^n binary inputs, bit-parallel.

    Each wire carries a 2^n-bit integer whose bit v is that wire's value in
    input vector v, so a comparator is an AND/OR pair on big integers.
    """
    n = network.n
    total = 1 << n
    wires = []
    for w in range(n):
        # bit v of wire w = bit w of v
        period = 1 << (w + 1)
        pattern = ((1 << (1 << w)) - 1) << (1 << w)
        while period < total:
            pattern |= pattern << period
            period *= 2
        wires.append(pattern)
    for stage in network.stages:
        for i, j in stage:
            lo, hi = wires[i] & wires[j], wires[i] | wires[j]
            wires[i], wires[j] = lo, hi
    # sorted ascending iff no wire has a 1 where its successor has a 0
    return all(wires[w] & ~wires[w + 1] == 0 for w in range(n - 1))


# ------------------------------------------------------------- partitions

@dataclass(frozen=True)
class Move:
    wire: int
    src: tuple[int, int]        # (partition, row)
    dst: tuple[int, int]
    temp_row: int               # physical temp row inside the destination partition

    def to_dict(self) -> dict:
        return {"wire": self.wire, "src": list(self.src), "dst": list(self.dst),
                "temp_row": self.temp_row}


@dataclass(frozen=True)
class StageAssignment:
    # comparator (i, j) -> partition; wire i sits in row 3, wire j in row 4
    # once the moves into this stage are done
    partitions: tuple[int, ...]
    rows_before: tuple[tuple[int, int], ...]


@dataclass(frozen=True)
class PartitionPlan:
    n: int
    network: SortingNetwork
    partitions: int
    temp_rows: int
    provisioning_cycles_per_event: int
    assignments: tuple[StageAssignment, ...]
    moves: tuple[tuple[Move, ...], ...]         # moves[s] = moves entering stage s
    initial: dict = field(default_factory=dict)  # wire -> (partition, row)

    @property
    def provisioning_events(self) -> int:
        return sum(1 for m in self.moves if m)

    @property
    def moved_values(self) -> int:
        return sum(len(m) for m in self.moves)

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "partitions": self.partitions,
            "temp_rows": self.temp_rows,
            "provisioning_cycles_per_event": self.provisioning_cycles_per_event,
            "provisioning_events": self.provisioning_events,
            "moved_values": self.moved_values,
            "stages": [
                {
                    "comparators": [list(p) for p in self.network.stages[s]],
                    "partition": list(self.assignments[s].partitions),
                    "moves_in": [m.to_dict() for m in self.moves[s]],
                }
                for s in range(len(self.network.stages))
            ],
        }


def initial_residency(n: int) -> dict[int, tuple[int, int]]:
    return {w: (w // 2, DATA_ROWS[w % 2]) for w in range(n)}


def _assign_stage(stage, where, partitions):
    """Pick a partition for each comparator.

    Preference: the partition already holding the lower wire, then the one
    holding the upper wire, then the lowest free partition.
    """
    taken: set[int] = set()
    chosen: list[int | None] = [None] * len(stage)
    for rank in (0, 1):
        for c, pair in enumerate(stage):
            if chosen[c] is None:
                p = where[pair[rank]][0]
                if p not in taken:
                    chosen[c] = p
                    taken.add(p)
    spare = iter(p for p in range(partitions) if p not in taken)
    for c in range(len(stage)):
        if chosen[c] is None:
            chosen[c] = next(spare)
    return chosen


def _plan_moves(stage, chosen, where, temp_rows):
    """Moves that bring each comparator's wires into its partition's rows 3/4.

    A wire already resident keeps its row; incoming wires fill the remaining
    data rows in order.  Each incoming value takes the next temp row of its
    destination partition.
    """
    moves = []
    target = {}
    for (i, j), p in zip(stage, chosen):
        resident = [w for w in (i, j) if where[w][0] == p]
        free_rows = [r for r in DATA_ROWS if r not in {where[w][1] for w in resident}]
        incoming = [w for w in (i, j) if w not in resident]
        for w in resident:
            target[w] = where[w]
        for k, w in enumerate(incoming):
            if k >= temp_rows:
                raise ImcSortError(
                    f"partition {p} needs {len(incoming)} temp rows, only {temp_rows} exist")
            dst = (p, free_rows[k])
            moves.append(Move(w, where[w], dst, TEMP_ROW_BASE + k))
            target[w] = dst
    return moves, target


def plan_partitions(network: SortingNetwork) -> PartitionPlan:
    n = network.n
    partitions = n // 2
    temp = temp_row_count(n)
    where = initial_residency(n)
    initial = dict(where)
    assignments = []
    all_moves = []
    for s, stage in enumerate(network.stages):
        chosen = _assign_stage(stage, where, partitions)
        if s == 0:
            moves, target = [], dict(where)
            for (i, j), p in zip(stage, chosen):
                if where[i][0] != p or where[j][0] != p:
                    raise ImcSortError("first stage must pair co-resident inputs")
        else:
            moves, target = _plan_moves(stage, chosen, where, temp)
        where = target
        assignments.append(StageAssignment(
            partitions=tuple(chosen),
            rows_before=tuple((where[i][1], where[j][1]) for i, j in stage),
        ))
        all_moves.append(tuple(moves))
        # the CAS leaves min (wire i) in row 3 and max (wire j) in row 4
        for (i, j), p in zip(stage, chosen):
            where[i] = (p, DATA_ROWS[0])
            where[j] = (p, DATA_ROWS[1])
    return PartitionPlan(
        n=n,
        network=network,
        partitions=partitions,
        temp_rows=temp,
        provisioning_cycles_per_event=provisioning_cycles_per_event(n) if n >= 4 else 0,
        assignments=tuple(assignments),
        moves=tuple(all_moves),
        initial=initial,
    )


def transfer_moves(plan: PartitionPlan, stage_index: int) -> list[Move]:
    if not 1 <= stage_index < len(plan.network.stages):
        raise StageIndexError(
            f"stage index {stage_index} outside [1, {len(plan.network.stages) - 1}]")
    return list(plan.moves[stage_index])


def residency_audit(plan: PartitionPlan) -> list[str]:
    """Replay the plan slot by slot and report every stage whose comparators
    are not co-resident when the CAS fires, plus any temp-row collision."""
    problems = []
    slots = {v: k for k, v in plan.initial.items()}   # (partition, row) -> wire
    for s, stage in enumerate(plan.network.stages):
        moves = plan.moves[s]
        temps = set()
        for m in moves:
            key = (m.dst[0], m.temp_row)
            if key in temps:
                problems.append(f"stage {s}: temp row collision at {key}")
            temps.add(key)
            if slots.get(m.src) != m.wire:
                problems.append(f"stage {s}: wire {m.wire} not at {m.src}")
        in_flight = {m.wire for m in moves}
        for m in moves:
            if slots.get(m.src) == m.wire:
                del slots[m.src]
        for m in moves:
            if m.dst in slots:
                problems.append(f"stage {s}: {m.dst} still occupied by wire {slots[m.dst]}")
            slots[m.dst] = m.wire
        held = sorted(slots.values())
        if held != list(range(plan.n)):
            problems.append(f"stage {s}: wires lost or duplicated ({len(in_flight)} in flight)")
        for (i, j), p in zip(stage, plan.assignments[s].partitions):
            if {slots.get((p, 3)), slots.get((p, 4))} != {i, j}:
                problems.append(f"stage {s}: comparator ({i}, {j}) not resident in partition {p}")
            slots[(p, 3)], slots[(p, 4)] = i, j
    return problems


def consecutive_pairings_differ(network: SortingNetwork) -> list[int]:
    """Stage indices whose comparator pairs differ from the previous stage's.

    Any such boundary needs at least one inter-partition move when a
    partition only holds the two operands of its comparator.
    """
    out = []
    for s in range(1, len(network.stages)):
        prev = {frozenset(p) for p in network.stages[s - 1]}
        cur = {frozenset(p) for p in network.stages[s]}
        if prev != cur:
            out.append(s)
    return out

