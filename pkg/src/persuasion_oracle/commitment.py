"""Committing to a query before the state is drawn.

The sender announces in advance which query to ask in each state and how to
message in each resulting (state, cell) pair.  With three binary types the
sender queries ``{1} | {2,3}`` in state 0 and ``{1,2} | {3}`` in state 1 (types
ordered by increasing belief).  Every type then faces a different pair of
information partitions, which is enough to deliver any three individually
obedient policies at once.  ``solve_commitment`` finds such a joint policy with
a 32-variable LP.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .errors import InvalidInstance, NotBIC, NotBinary, NumericalFailure, ParameterViolation
from .linprog import EQ, GE, LinearProgram, Optimal, solve_lp
from .model import BPInstance, MessagingPolicy, is_bic, is_binary
from .oracle import (
    PartitionQuery,
    SimulationQuery,
    answer_query,
    find_separating_query,
    induced_partition,
)

MENUS = tuple(itertools.product((0, 1), repeat=3))
# (state, cell) pairs in positional form: position k is the k-th lowest belief
PARTITIONS = ((0, (0,)), (0, (1, 2)), (1, (0, 1)), (1, (2,)))


def _view(pos, state):
    """Index into PARTITIONS of what the type at ``pos`` sees in ``state``."""
    for k, (w, cell) in enumerate(PARTITIONS):
        if w == state and pos in cell:
            return k
    raise AssertionError("unreachable")


@dataclass(frozen=True)
class StateInformedQueryPolicy:
    """One partition query per state.

    ``eliminated[w]`` lists types ruled out in state ``w`` (zero belief mass),
    and ``simulation[w]`` keeps the simulation query the partition came from,
    when there is one.  ``thresholds`` records binary belief cut points.
    """

    queries: tuple
    eliminated: tuple = ()
    simulation: tuple = ()
    thresholds: tuple = ()

    def query_for(self, state: int) -> PartitionQuery:
        return self.queries[state]


@dataclass(frozen=True, eq=False)
class SubsetInformedPolicy:
    """Menu policy per information partition.

    ``order[k]`` is the instance index of the type with the k-th lowest belief;
    ``menus`` are indexed positionally in the same order.  ``sigma[k, j]`` is
    the probability of menu ``j`` in partition ``PARTITIONS[k]``.
    """

    instance: BPInstance
    order: tuple
    sigma: np.ndarray
    query_policy: StateInformedQueryPolicy
    menus: tuple = MENUS

    def partition_of(self, type_index: int, state: int):
        return PARTITIONS[_view(self.order.index(type_index), state)]

    def aggregated(self, type_index: int) -> np.ndarray:
        """The type's marginal view ``sigma_i(a | state)``."""
        pos = self.order.index(type_index)
        out = np.zeros((2, 2))
        for w in (0, 1):
            row = self.sigma[_view(pos, w)]
            for j, m in enumerate(self.menus):
                out[w, m[pos]] += row[j]
        return out

    def bic_violations(self, tol: float = 1e-7):
        """All (type, menu) pairs where obeying is not a best response."""
        bad = []
        p = self.instance.beliefs[:, 1]
        for pos, t in enumerate(self.order):
            x0 = self.sigma[_view(pos, 0)]
            x1 = self.sigma[_view(pos, 1)]
            for j, m in enumerate(self.menus):
                margin = p[t] * x1[j] - (1 - p[t]) * x0[j]
                if (m[pos] == 1 and margin < -tol) or (m[pos] == 0 and margin > tol):
                    bad.append((t, m))
        return bad

    def normalization_error(self) -> float:
        return float(np.max(np.abs(self.sigma.sum(axis=1) - 1.0)))

    def expected_utility(self) -> float:
        """Prior-weighted sender utility, replaying each type's best response."""
        inst = self.instance
        p = inst.beliefs[:, 1]
        total = 0.0
        for pos, t in enumerate(self.order):
            x0 = self.sigma[_view(pos, 0)]
            x1 = self.sigma[_view(pos, 1)]
            for j, m in enumerate(self.menus):
                s1, s0 = p[t] * x1[j], (1 - p[t]) * x0[j]
                if s1 + s0 <= 1e-15:
                    continue
                # tie goes to the recommended action
                if s1 > s0 + 1e-12:
                    act = 1
                elif s0 > s1 + 1e-12:
                    act = 0
                else:
                    act = m[pos]
                total += inst.prior[t] * (s1 + s0) * act
        return float(total)


def type_optimal_policy(p: float) -> MessagingPolicy:
    """Best obedient policy for a known binary type with ``Pr(state 1) = p <= 1/2``."""
    r = p / (1.0 - p)
    return MessagingPolicy([[1.0 - r, r], [0.0, 1.0]])


def _as_menu(policy: MessagingPolicy):
    class _Menu:
        messages = ((0,), (1,))
        sigma = policy.sigma

    return _Menu


def _three_type_order(instance):
    if not is_binary(instance):
        raise NotBinary("commitment needs a binary instance")
    if instance.type_count != 3:
        raise InvalidInstance("commitment needs exactly three types")
    p = instance.beliefs[:, 1]
    order = tuple(int(i) for i in np.argsort(p, kind="stable"))
    ps = p[list(order)]
    if not (ps[0] < ps[1] < ps[2] <= 0.5):
        raise InvalidInstance("beliefs must be distinct and at most 1/2")
    return order, ps


def commitment_query_policy(instance: BPInstance) -> StateInformedQueryPolicy:
    order, ps = _three_type_order(instance)
    lo, mid, hi = order
    q0 = PartitionQuery(((lo,), (mid, hi)))
    q1 = PartitionQuery(((lo, mid), (hi,)))
    th = ((ps[0] + ps[1]) / 2, (ps[1] + ps[2]) / 2)
    return StateInformedQueryPolicy((q0, q1), ((), ()), (), th)


def solve_commitment(instance: BPInstance, policies, tol: float = 1e-7) -> SubsetInformedPolicy:
    """Joint policy whose view for each type ``i`` equals ``policies[i]``.

    ``policies`` is indexed like ``instance.types``; each must be obedient for
    its own type.
    """
    order, ps = _three_type_order(instance)
    policies = [p if isinstance(p, MessagingPolicy) else MessagingPolicy(p) for p in policies]
    if len(policies) != 3 or any(p.sigma.shape != (2, 2) for p in policies):
        raise InvalidInstance("three 2x2 policies (states x actions) are required")
    for t, pol in enumerate(policies):
        ok, bad = is_bic(instance, [t], _as_menu(pol), 1e-9)
        if not ok:
            raise NotBIC(t, f"violations {bad}")
    nP, nM = len(PARTITIONS), len(MENUS)

    def var(k, j):
        return k * nM + j

    rows = []
    for k in range(nP):
        a = np.zeros(nP * nM)
        a[k * nM:(k + 1) * nM] = 1.0
        rows.append((a, EQ, 1.0))
    for pos, t in enumerate(order):
        for w in (0, 1):
            a = np.zeros(nP * nM)
            k = _view(pos, w)
            for j, m in enumerate(MENUS):
                if m[pos] == 1:
                    a[var(k, j)] = 1.0
            rows.append((a, EQ, float(policies[t].sigma[w, 1])))
    for pos in range(3):
        p = ps[pos]
        k0, k1 = _view(pos, 0), _view(pos, 1)
        for j, m in enumerate(MENUS):
            a = np.zeros(nP * nM)
            sign = 1.0 if m[pos] == 1 else -1.0
            a[var(k1, j)] = sign * p
            a[var(k0, j)] = -sign * (1 - p)
            rows.append((a, GE, 0.0))
    c = np.zeros(nP * nM)
    for pos, t in enumerate(order):
        for w in (0, 1):
            k = _view(pos, w)
            weight = instance.prior[t] * (ps[pos] if w == 1 else 1 - ps[pos])
            for j, m in enumerate(MENUS):
                if m[pos] == 1:
                    c[var(k, j)] += weight
    out = solve_lp(LinearProgram.from_rows(c, rows, 0.0, 1.0), tol)
    if not isinstance(out, Optimal):
        raise NumericalFailure(f"commitment LP reported {out!r} on a valid input")
    sigma = np.where(out.x < 1e-13, 0.0, out.x).reshape(nP, nM)
    return SubsetInformedPolicy(instance, order, sigma, commitment_query_policy(instance))


def product_commitment(instance: BPInstance, policies) -> SubsetInformedPolicy:
    """Closed-form joint policy built from independent per-type draws.

    In each partition, types that see it draw from their own policy; the
    others draw from a fixed surrogate chosen so that every type's likelihood
    ratio involves only its own coordinate.  Used to cross-check the LP.
    """
    order, _ = _three_type_order(instance)
    s = [np.asarray(policies[t].sigma if isinstance(policies[t], MessagingPolicy) else policies[t], float)
         for t in order]
    # per partition: the distribution of each coordinate (state, surrogate choice)
    dists = {
        0: (s[0][0], s[1][1], s[2][0]),  # state 0, type 1 sees it
        1: (s[0][1], s[1][0], s[2][0]),  # state 0, types 2 and 3
        2: (s[0][1], s[1][1], s[2][0]),  # state 1, types 1 and 2
        3: (s[0][1], s[1][0], s[2][1]),  # state 1, type 3
    }
    sigma = np.zeros((len(PARTITIONS), len(MENUS)))
    for k, (d1, d2, d3) in dists.items():
        for j, m in enumerate(MENUS):
            sigma[k, j] = d1[m[0]] * d2[m[1]] * d3[m[2]]
    return SubsetInformedPolicy(instance, order, sigma, commitment_query_policy(instance))


def implements_check(combined: SubsetInformedPolicy, sigma_i, i: int, tol: float = 1e-7) -> bool:
    """True iff type ``i``'s aggregated view of ``combined`` equals ``sigma_i``."""
    target = np.asarray(getattr(sigma_i, "sigma", sigma_i), float)
    return bool(np.all(np.abs(combined.aggregated(i) - target) <= tol))


def make_three_state_example(eps: float, delta: float):
    """Three states (-1, 0, 1), three types, each ruled out by one state.

    Returns the instance and a state-informed query policy: in each state the
    type with zero mass there is eliminated and a simulation query separates
    the two that remain.
    """
    if not (0 < eps < 0.25 and 0 < delta < 0.25):
        raise ParameterViolation("eps and delta must lie in (0, 0.25)")
    us = np.tile(np.array([-1.0, 0.0, 1.0]), (3, 1))
    ur = np.eye(3)
    beliefs = [
        [0.75, 0.25, 0.0],
        [0.75 + delta, 0.0, 0.25 - delta],
        [0.0, 0.75 + eps, 0.25 - eps],
    ]
    instance = BPInstance(us, ur, beliefs, [1 / 3] * 3, ("t1", "t2", "t3"))
    return instance, state_informed_identification(instance)


def state_informed_identification(instance: BPInstance) -> StateInformedQueryPolicy:
    """Per-state query that, after zero-mass elimination, pins down the type."""
    B = instance.beliefs
    queries, elim, sims = [], [], []
    for w in range(instance.state_count):
        gone = tuple(t for t in range(instance.type_count) if B[t, w] <= 0.0)
        alive = [t for t in range(instance.type_count) if t not in gone]
        if len(alive) <= 1:
            q, sim = PartitionQuery((tuple(range(instance.type_count)),)), None
        elif len(alive) == 2:
            sim = find_separating_query(instance, alive[0], alive[1])
            if not sim:
                sim = find_separating_query(instance, alive[1], alive[0])
            if not sim:
                raise InvalidInstance(f"no simulation query separates the types alive in state {w}")
            q = induced_partition(instance, sim)
        else:
            raise InvalidInstance(f"state {w} leaves {len(alive)} types; at most two are supported")
        queries.append(q)
        elim.append(gone)
        sims.append(sim)
    return StateInformedQueryPolicy(tuple(queries), tuple(elim), tuple(sims))


def identified_type(policy: StateInformedQueryPolicy, true_type: int, state: int):
    """Types consistent with the answer in ``state`` once eliminated types are removed."""
    cell = answer_query(policy.query_for(state), true_type)
    return tuple(t for t in cell if t not in policy.eliminated[state])
