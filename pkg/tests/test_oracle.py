import numpy as np
import pytest

from persuasion_oracle import (
    BPInstance,
    Fail,
    Inside,
    MessagingPolicy,
    Outside,
    PartitionQuery,
    SimulationQuery,
    answer_query,
    best_response,
    binary_threshold,
    cut_queries,
    enumerate_feasible_subsets,
    find_separating_query,
    find_separating_query_n,
    induced_partition,
    separation_region_test,
)
from persuasion_oracle.errors import CapExceeded, DegenerateQuery, ExplosionGuard, InvalidInstance
from persuasion_oracle.oracle import (
    SILENT,
    canonical_binary_cut,
    cut_position,
    nonadaptive_partition,
    separates,
    _labels,
)


def threshold_query(th):
    """Binary query recommending action 1 that types with belief >= th obey."""
    return SimulationQuery(MessagingPolicy([[1 - th / (1 - th), th / (1 - th)], [0, 1]]), 1)


def test_partition_query_is_canonical():
    q = PartitionQuery(((2, 3), (1, 0)))
    assert q.cells == ((0, 1), (2, 3))
    assert answer_query(q, 3) == (2, 3)
    assert q.split([1, 2]) == ((1,), (2,))
    assert not q.refines([2, 3])
    with pytest.raises(InvalidInstance):
        PartitionQuery(((0, 1), (1, 2)))
    with pytest.raises(InvalidInstance):
        PartitionQuery(((0,), (2,)))


def test_cut_helpers():
    qs = cut_queries(5)
    assert [cut_position(q) for q in qs] == [1, 2, 3, 4]
    assert cut_position(PartitionQuery(((0, 2), (1,)))) is None


def test_induced_partitions_on_fig3(fig3):
    q = threshold_query(0.25)
    assert binary_threshold(q) == pytest.approx(0.25)
    assert induced_partition(fig3, q).cells == ((0, 1, 2), (3, 4))
    assert canonical_binary_cut(fig3, q) == 3
    always = SimulationQuery(MessagingPolicy([[0, 1], [0, 1]]), 1)
    assert induced_partition(fig3, always).cells == ((0,), (1, 2, 3, 4))
    assert canonical_binary_cut(fig3, threshold_query(0.05)) is None


def test_silent_types_form_their_own_cell():
    inst = BPInstance(np.eye(2), np.eye(2), [[1.0, 0.0], [0.5, 0.5], [0.2, 0.8]], [0.2, 0.3, 0.5])
    q = SimulationQuery(MessagingPolicy([[1, 0], [0, 1]]), 1)
    assert _labels(inst, q) == [SILENT, 1, 1]
    assert induced_partition(inst, q).cells == ((0,), (1, 2))


def test_degenerate_query():
    with pytest.raises(DegenerateQuery):
        binary_threshold(SimulationQuery(MessagingPolicy([[1, 0], [1, 0]]), 1))


def test_region_witness_is_best_response(rng):
    for _ in range(200):
        d, A = 3, 3
        inst = BPInstance(rng.uniform(-1, 1, (d, A)), rng.uniform(-1, 1, (d, A)), [rng.dirichlet(np.ones(d))], [1])
        pol = MessagingPolicy(rng.dirichlet(np.ones(A), d))
        q = SimulationQuery(pol, int(rng.integers(0, A)))
        b = rng.dirichlet(np.ones(d))
        out = separation_region_test(inst, q, b)
        br = best_response(inst, b, pol, q.message, recommended=q.message)
        if out == Inside():
            assert br == q.message
        else:
            assert isinstance(out, Outside) and out.witness == br


def test_separating_query_binary(fig3):
    for a in range(5):
        for b in range(5):
            if a != b:
                q = find_separating_query(fig3, a, b)
                assert q and separates(fig3, q, a, b)


def test_separating_query_fails_when_receiver_is_indifferent():
    inst = BPInstance(np.eye(2), np.zeros((2, 2)), [[0.3, 0.7], [0.6, 0.4]], [0.5, 0.5])
    assert find_separating_query(inst, 0, 1) is Fail
    assert not Fail
    with pytest.raises(InvalidInstance):
        find_separating_query(inst, 0, 0)


def test_separating_query_for_three_targets():
    beliefs = [[0.8, 0.1, 0.1], [0.1, 0.8, 0.1], [0.1, 0.1, 0.8]]
    inst = BPInstance(np.eye(3), np.eye(3), beliefs, [1 / 3] * 3)
    q = find_separating_query_n(inst, [0, 1, 2])
    labels = _labels(inst, q)
    assert len(set(labels)) == 3 and labels[0] == q.message
    with pytest.raises(CapExceeded):
        find_separating_query_n(inst, [0, 1, 2], cap=2)


def test_feasible_subsets_fig3(fig3):
    qs = cut_queries(5)
    one = enumerate_feasible_subsets(fig3, qs, 1)
    two = enumerate_feasible_subsets(fig3, qs, 2)
    assert len(one) == 9 and len(two) == 15
    assert (3, 4) in one and (1, 2) in two and (1, 2) not in one
    start, used = two.witnesses[(1, 2)]
    assert start == 1 and len(used) == 2
    with pytest.raises(ExplosionGuard):
        enumerate_feasible_subsets(fig3, qs, 2, cap=5)


def test_common_refinement():
    qs = cut_queries(5)
    assert nonadaptive_partition([qs[0], qs[2]]).cells == ((0,), (1, 2), (3, 4))
    assert nonadaptive_partition([], 3).cells == ((0, 1, 2),)
