import itertools
import json
import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from imcsort import sortnet
from imcsort.errors import NetworkSizeError, StageIndexError
from imcsort.sortnet import SortingNetwork, build_bitonic, plan_partitions


def oracle_counts(n):
    """Stage and comparator counts by direct recursion over the merge structure.

    Sorting n inputs = sort both halves in parallel, then merge, and a merge of
    n inputs takes log2(n) stages of n/2 comparators.
    """
    if n == 1:
        return 0, 0
    stages, comps = oracle_counts(n // 2)
    merge = int(math.log2(n))
    return stages + merge, 2 * comps + merge * n // 2


def run_network(net, vec):
    v = list(vec)
    for stage in net.stages:
        for i, j in stage:
            if v[i] > v[j]:
                v[i], v[j] = v[j], v[i]
    return v


@pytest.mark.parametrize("n", [2, 4, 8, 16, 32])
def test_counts_match_recursive_oracle(n):
    net = build_bitonic(n)
    stages, comps = oracle_counts(n)
    assert len(net.stages) == stages == sortnet.stage_count(n)
    assert net.comparators == comps == sortnet.comparator_count(n)


def test_published_and_derived_counts():
    assert (len(build_bitonic(2).stages), build_bitonic(2).comparators) == (1, 1)
    assert (len(build_bitonic(8).stages), build_bitonic(8).comparators) == (6, 24)
    assert (len(build_bitonic(16).stages), build_bitonic(16).comparators) == (10, 80)


@pytest.mark.parametrize("n", [2, 4, 8, 16, 32])
def test_each_stage_is_a_perfect_matching(n):
    net = build_bitonic(n)
    assert sortnet.stage_violations(net) == []
    for stage in net.stages:
        assert len(stage) == n // 2
        assert sorted(w for p in stage for w in p) == list(range(n))
        assert all(i < j for i, j in stage)


@pytest.mark.parametrize("n", [0, 1, 3, 6, 12])
def test_bad_sizes(n):
    with pytest.raises(NetworkSizeError):
        build_bitonic(n)


@pytest.mark.parametrize("n", [2, 4, 8])
def test_zero_one_principle_by_enumeration(n):
    net = build_bitonic(n)
    for vec in itertools.product((0, 1), repeat=n):
        assert run_network(net, vec) == sorted(vec)


@pytest.mark.parametrize("n", [2, 4, 8, 16])
def test_zero_one_principle_bit_parallel(n):
    assert sortnet.sorts_all_binary(build_bitonic(n))


def test_bit_parallel_check_rejects_a_broken_network():
    net = build_bitonic(8)
    broken = SortingNetwork(8, net.stages[:-1])
    assert not sortnet.sorts_all_binary(broken)
    # and the enumeration oracle agrees
    assert any(run_network(broken, v) != sorted(v)
               for v in itertools.product((0, 1), repeat=8))


@settings(max_examples=50, deadline=None)
@given(st.sampled_from([2, 4, 8, 16, 32]), st.data())
def test_sorts_integers(n, data):
    vec = data.draw(st.lists(st.integers(0, 255), min_size=n, max_size=n))
    assert build_bitonic(n).apply(vec) == sorted(vec)


def test_serialization_roundtrip():
    net = build_bitonic(8)
    d = json.loads(net.to_json())
    assert d["n"] == 8 and len(d["stages"]) == 6
    assert SortingNetwork.from_dict(d) == net
    lines = [l for l in net.to_text().splitlines() if not l.startswith("#")]
    assert len(lines) == 6
    assert lines[0] == "0 0:1 2:3 4:5 6:7"


# ------------------------------------------------------------ partitions

@pytest.mark.parametrize("n,parts,temps,per_event", [
    (8, 4, 2, 6),
    (4, 2, 1, 3),
    (2, 1, 0, 0),
])
def test_plan_constants(n, parts, temps, per_event):
    plan = plan_partitions(build_bitonic(n))
    assert plan.partitions == parts
    assert plan.temp_rows == temps
    assert plan.provisioning_cycles_per_event == per_event


def test_two_input_plan_has_no_provisioning():
    plan = plan_partitions(build_bitonic(2))
    assert plan.provisioning_events == 0
    assert plan.moved_values == 0


def test_first_cross_stage_moves_four_values():
    plan = plan_partitions(build_bitonic(8))
    moves = sortnet.transfer_moves(plan, 1)
    assert len(moves) == 4
    assert all(m.src[0] != m.dst[0] for m in moves)


def test_four_input_cross_stage_moves_two_values():
    plan = plan_partitions(build_bitonic(4))
    assert len(sortnet.transfer_moves(plan, 1)) == 2


@pytest.mark.parametrize("idx", [0, 6, -1])
def test_transfer_moves_index_range(idx):
    plan = plan_partitions(build_bitonic(8))
    with pytest.raises(StageIndexError):
        sortnet.transfer_moves(plan, idx)


def test_already_coresident_stage_has_no_moves():
    stage = ((0, 1), (2, 3), (4, 5), (6, 7))
    plan = plan_partitions(SortingNetwork(8, (stage, stage)))
    assert sortnet.transfer_moves(plan, 1) == []
    assert plan.provisioning_events == 0


@pytest.mark.parametrize("n", [2, 4, 8, 16, 32])
def test_residency_audit_clean(n):
    plan = plan_partitions(build_bitonic(n))
    assert sortnet.residency_audit(plan) == []
    for a in plan.assignments:
        assert sorted(a.partitions) == list(range(plan.partitions))


@pytest.mark.parametrize("n", [4, 8, 16])
def test_moves_use_distinct_temp_rows_per_partition(n):
    plan = plan_partitions(build_bitonic(n))
    for moves in plan.moves:
        keys = [(m.dst[0], m.temp_row) for m in moves]
        assert len(keys) == len(set(keys))
        assert all(sortnet.TEMP_ROW_BASE <= m.temp_row < sortnet.TEMP_ROW_BASE + plan.temp_rows
                   for m in moves)


def test_audit_detects_tampered_plan():
    plan = plan_partitions(build_bitonic(8))
    moves = list(plan.moves)
    moves[1] = moves[1][1:]
    bad = sortnet.PartitionPlan(plan.n, plan.network, plan.partitions, plan.temp_rows,
                                plan.provisioning_cycles_per_event, plan.assignments,
                                tuple(moves), plan.initial)
    assert sortnet.residency_audit(bad) != []


def test_eight_input_event_count_is_forced():
    # A partition holds only its comparator's two operands, so any boundary
    # whose pairing differs from the previous stage needs a cross-partition
    # move.  For the 8-input network all five boundaries differ, so no
    # assignment rule can get fewer than five events.
    net = build_bitonic(8)
    assert sortnet.consecutive_pairings_differ(net) == [1, 2, 3, 4, 5]
    plan = plan_partitions(net)
    assert plan.provisioning_events == 5
    assert [len(m) for m in plan.moves] == [0, 4, 4, 4, 4, 4]


@pytest.mark.parametrize("n,events", [(4, 2), (16, 9)])
def test_event_counts_other_sizes(n, events):
    net = build_bitonic(n)
    plan = plan_partitions(net)
    assert plan.provisioning_events == events
    assert plan.provisioning_events >= len(sortnet.consecutive_pairings_differ(net))


def test_plan_dict_shape():
    d = plan_partitions(build_bitonic(8)).to_dict()
    assert d["partitions"] == 4
    assert d["provisioning_events"] == 5
    assert len(d["stages"]) == 6
    assert d["stages"][0]["moves_in"] == []
