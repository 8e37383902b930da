import numpy as np
import pytest

from persuasion_oracle import (
    BPInstance,
    MessagingPolicy,
    cut_queries,
    implements_check,
    make_three_state_example,
    plan_adaptive,
    product_commitment,
    solve_commitment,
    type_optimal_policy,
)
from persuasion_oracle.commitment import PARTITIONS, commitment_query_policy, identified_type
from persuasion_oracle.errors import InvalidInstance, NotBIC, ParameterViolation


@pytest.fixture
def three():
    inst = BPInstance.binary([0.5, 0.3, 0.1], [1 / 3] * 3)
    return inst, [type_optimal_policy(p) for p in (0.5, 0.3, 0.1)]


def test_lp_implements_type_optimal_policies(three):
    inst, pols = three
    combined = solve_commitment(inst, pols)
    assert all(implements_check(combined, pols[t], t) for t in range(3))
    assert combined.bic_violations() == []
    assert combined.normalization_error() < 1e-9
    assert combined.expected_utility() == pytest.approx(0.6, abs=1e-7)
    assert combined.expected_utility() > plan_adaptive(inst, cut_queries(3), 1).value


def test_product_construction_agrees(three):
    inst, pols = three
    prod = product_commitment(inst, pols)
    assert all(implements_check(prod, pols[t], t, 1e-12) for t in range(3))
    assert prod.bic_violations(1e-12) == []
    assert prod.expected_utility() == pytest.approx(solve_commitment(inst, pols).expected_utility(), abs=1e-9)


def _random_bic(rng, p):
    while True:
        a, b = rng.uniform(0, 1, 2)  # Pr(rec 1 | state 0), Pr(rec 1 | state 1)
        if p * b >= (1 - p) * a and (1 - p) * (1 - a) >= p * (1 - b):
            return MessagingPolicy([[1 - a, a], [1 - b, b]])


def test_random_inputs_both_routes(rng):
    for _ in range(30):
        ps = np.sort(rng.uniform(0.02, 0.5, 3))[::-1]
        if np.min(-np.diff(ps)) < 1e-3:
            continue
        inst = BPInstance.binary(ps, rng.dirichlet(np.ones(3)))
        pols = [_random_bic(rng, p) for p in ps]
        for combined in (solve_commitment(inst, pols), product_commitment(inst, pols)):
            assert all(implements_check(combined, pols[t], t) for t in range(3))
            assert combined.bic_violations() == []


def test_query_policy_uses_positional_order(three):
    inst, _ = three
    qp = commitment_query_policy(inst)
    # lowest belief is type 2, highest is type 0
    assert qp.queries[0].cells == ((0, 1), (2,))
    assert qp.queries[1].cells == ((0,), (1, 2))
    assert qp.thresholds == pytest.approx((0.2, 0.4))
    assert len(PARTITIONS) == 4


def test_rejects_disobedient_policy(three):
    inst, pols = three
    bad = MessagingPolicy([[0, 1], [0, 1]])
    with pytest.raises(NotBIC) as info:
        solve_commitment(inst, [pols[0], pols[1], bad])
    assert info.value.type_index == 2
    with pytest.raises(InvalidInstance):
        solve_commitment(BPInstance.binary([0.5, 0.3], [0.5, 0.5]), pols[:2])


def test_three_state_identification():
    inst, policy = make_three_state_example(0.01, 0.01)
    assert policy.eliminated == ((2,), (1,), (0,))
    assert policy.queries[0].cells == ((0,), (1, 2))
    for t in range(3):
        for w in range(3):
            if inst.beliefs[t, w] > 0:
                assert identified_type(policy, t, w) == (t,)
    with pytest.raises(ParameterViolation):
        make_three_state_example(0.3, 0.01)
