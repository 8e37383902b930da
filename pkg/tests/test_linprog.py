import numpy as np
import pytest

from persuasion_oracle import BPInstance, Infeasible, LinearProgram, Optimal, Unbounded, solve_lp
from persuasion_oracle.linprog import EQ, GE, LE
from persuasion_oracle.messaging import optimal_policy_general
from persuasion_oracle.model import random_binary_instance


def test_small_program_both_backends():
    # max x + y  s.t.  x + 2y <= 4, 3x + y <= 6
    lp = LinearProgram.from_rows([1, 1], [([1, 2], LE, 4), ([3, 1], LE, 6)])
    for method in ("highs", "simplex"):
        out = solve_lp(lp, method=method)
        assert isinstance(out, Optimal)
        assert out.value == pytest.approx(2.8, abs=1e-9)
        assert np.allclose(out.x, [1.6, 1.2], atol=1e-9)


def test_infeasible_and_unbounded():
    bad = LinearProgram.from_rows([1], [([1], GE, 2), ([1], LE, 1)])
    free = LinearProgram.from_rows([1, 0], [([1, -1], GE, 0)])
    for method in ("highs", "simplex"):
        assert solve_lp(bad, method=method) is Infeasible
        assert solve_lp(free, method=method) is Unbounded


def test_equalities_and_free_variables():
    lp = LinearProgram.from_rows(
        [0, 0, -1], [([1, 1, 0], EQ, 1), ([1, -1, -1], LE, 0)], [0, 0, -np.inf], [1, 1, np.inf]
    )
    for method in ("highs", "simplex"):
        out = solve_lp(lp, method=method)
        assert out.value == pytest.approx(1.0, abs=1e-9)


def test_random_programs_agree(rng):
    for _ in range(40):
        n, m = int(rng.integers(2, 6)), int(rng.integers(1, 6))
        rows = [(rng.uniform(-1, 1, n), LE, float(rng.uniform(0, 2))) for _ in range(m)]
        lp = LinearProgram.from_rows(rng.uniform(-1, 1, n), rows, 0.0, 1.0)
        a, b = solve_lp(lp), solve_lp(lp, method="simplex")
        assert isinstance(a, Optimal) and isinstance(b, Optimal)
        assert a.value == pytest.approx(b.value, abs=1e-8)
        assert lp.residuals(b.x) <= 1e-9


def test_messaging_program_agrees_across_backends(rng):
    for _ in range(10):
        inst = random_binary_instance(rng, int(rng.integers(1, 4)))
        fast = optimal_policy_general(inst)[1]
        dense = optimal_policy_general(inst, method="simplex")[1]
        assert fast == pytest.approx(dense, abs=1e-8)


def test_general_messaging_program_across_backends(rng):
    for _ in range(10):
        us, ur = rng.uniform(-1, 1, (3, 3)), rng.uniform(-1, 1, (3, 3))
        inst = BPInstance(us, ur, rng.dirichlet(np.ones(3), 2), [0.5, 0.5])
        fast = optimal_policy_general(inst)[1]
        dense = optimal_policy_general(inst, method="simplex")[1]
        assert fast == pytest.approx(dense, abs=1e-8)


def test_rejects_unknown_method():
    with pytest.raises(ValueError):
        solve_lp(LinearProgram.from_rows([1], [([1], LE, 1)]), method="ellipsoid")
