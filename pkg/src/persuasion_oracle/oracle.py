"""Partition and simulation queries, separation geometry, feasible subsets.

A partition query splits the type set into cells and reveals the cell of the
true type.  A simulation query ``(policy, message)`` asks how the true type
would act on ``message`` under ``policy``; grouping types by that answer
turns it into a partition query.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    CapExceeded,
    DegenerateQuery,
    ExplosionGuard,
    InvalidInstance,
    NotBinary,
)
from .linprog import GE, LE, LinearProgram, Optimal, solve_lp
from .model import BPInstance, MessagingPolicy, TypeSubset, best_response, is_binary

SILENT = None  # label of types that never see the queried message
SEP_TOL = 1e-9


@dataclass(frozen=True)
class PartitionQuery:
    cells: tuple

    def __post_init__(self):
        cells = [TypeSubset(c) for c in self.cells]
        cells.sort(key=lambda c: c[0])
        seen = [i for c in cells for i in c]
        if len(seen) != len(set(seen)):
            raise InvalidInstance("query cells are pairwise disjoint")
        if sorted(seen) != list(range(len(seen))):
            raise InvalidInstance("query cells cover every type exactly once")
        object.__setattr__(self, "cells", tuple(cells))

    @property
    def type_count(self):
        return sum(len(c) for c in self.cells)

    def cell_of(self, tau: int) -> TypeSubset:
        for c in self.cells:
            if tau in c:
                return c
        raise InvalidInstance(f"type {tau} is outside the query")

    def split(self, subset):
        """Non-empty intersections of ``subset`` with the cells."""
        s = set(subset)
        return tuple(TypeSubset(s & set(c)) for c in self.cells if s & set(c))

    def refines(self, subset) -> bool:
        return len(self.split(subset)) > 1


@dataclass(frozen=True, eq=False)
class SimulationQuery:
    policy: MessagingPolicy
    message: int

    def __post_init__(self):
        if not isinstance(self.policy, MessagingPolicy):
            object.__setattr__(self, "policy", MessagingPolicy(self.policy))
        if not 0 <= self.message < self.policy.message_count:
            raise InvalidInstance("query message must be a valid action index")


@dataclass(frozen=True)
class FeasibleSubsetFamily:
    subsets: frozenset
    witnesses: dict = field(hash=False, compare=False)

    def __contains__(self, s):
        return TypeSubset(s) in self.subsets

    def __len__(self):
        return len(self.subsets)


class Inside:
    def __repr__(self):
        return "Inside"

    def __eq__(self, other):
        return isinstance(other, Inside)

    def __hash__(self):
        return hash("Inside")


@dataclass(frozen=True)
class Outside:
    witness: int


class _Fail:
    def __repr__(self):
        return "Fail"

    def __bool__(self):
        return False


Fail = _Fail()


def cut_query(T: int, c: int) -> PartitionQuery:
    """Binary cut after position ``c`` (1-based): types ``0..c-1`` versus the rest."""
    if not 1 <= c <= T - 1:
        raise InvalidInstance(f"cut position {c} outside 1..{T - 1}")
    return PartitionQuery((tuple(range(c)), tuple(range(c, T))))


def cut_queries(T: int):
    return [cut_query(T, c) for c in range(1, T)]


def cut_position(q: PartitionQuery):
    """Return ``c`` if ``q`` is a two-cell prefix cut, else ``None``."""
    if len(q.cells) != 2:
        return None
    first = q.cells[0]
    return len(first) if tuple(first) == tuple(range(len(first))) else None


def _labels(instance: BPInstance, q: SimulationQuery):
    out = []
    for tau in range(instance.type_count):
        p = instance.beliefs[tau]
        if float(np.dot(p, q.policy.sigma[:, q.message])) <= 1e-12:
            out.append(SILENT)
        else:
            out.append(best_response(instance, p, q.policy, q.message, recommended=q.message))
    return out


def induced_partition(instance: BPInstance, q: SimulationQuery) -> PartitionQuery:
    labels = _labels(instance, q)
    groups = {}
    for tau, lab in enumerate(labels):
        groups.setdefault(lab, []).append(tau)
    return PartitionQuery(tuple(groups.values()))


def answer_query(q: PartitionQuery, true_type: int) -> TypeSubset:
    return q.cell_of(true_type)


def binary_threshold(q: SimulationQuery) -> float:
    """Belief mass on the recommended state above which a type obeys."""
    sigma = q.policy.sigma
    if sigma.shape != (2, 2):
        raise NotBinary("binary threshold needs a two-state, two-message query")
    m = q.message
    on = sigma[m, m]
    off = sigma[1 - m, m]
    if on + off <= 1e-12:
        raise DegenerateQuery("the query never sends its message")
    return float(off / (on + off))


def _alpha(instance, q: SimulationQuery, belief):
    p = np.asarray(getattr(belief, "probs", belief), float)
    w = q.policy.sigma[:, q.message] * p
    ur = instance.receiver_utility
    return w @ (ur[:, [q.message]] - ur)


def separation_region_test(instance: BPInstance, q: SimulationQuery, belief):
    """``Inside`` if ``belief`` obeys the query message, else ``Outside(a)``.

    The witness is the action with the most negative margin, which is also the
    belief's best response to the message.
    """
    alpha = _alpha(instance, q, belief)
    worst = float(alpha.min())
    if worst >= -SEP_TOL:
        return Inside()
    return Outside(int(np.flatnonzero(alpha <= worst + SEP_TOL)[0]))


def _complete_policy(instance, m, column, spill):
    d, A = instance.state_count, instance.action_count
    sigma = np.zeros((d, A))
    col = np.clip(column, 0.0, 1.0)
    col = np.where(col < 1e-12, 0.0, col)
    sigma[:, m] = col
    sigma[:, spill] = 1.0 - col
    return MessagingPolicy(sigma)


def separates(instance: BPInstance, q: SimulationQuery, tau: int, tau2: int) -> bool:
    """Separability check: ``tau`` obeys the message and ``tau2`` strictly does not."""
    a1 = _alpha(instance, q, instance.beliefs[tau])
    a2 = _alpha(instance, q, instance.beliefs[tau2])
    return bool(a1.min() >= -SEP_TOL and a2.min() < -SEP_TOL)


def find_separating_query(instance: BPInstance, tau: int, tau2: int):
    """Search ordered action pairs for a query that ``tau`` obeys and ``tau2`` rejects."""
    if tau == tau2:
        raise InvalidInstance("two different types are required")
    d, A = instance.state_count, instance.action_count
    ur = instance.receiver_utility
    p1, p2 = instance.beliefs[tau], instance.beliefs[tau2]
    for m, a2 in itertools.product(range(A), repeat=2):
        rows = []
        for a in range(A):
            rows.append((np.append((ur[:, m] - ur[:, a]) * p1, 0.0), GE, 0.0))
        rows.append((np.append((ur[:, m] - ur[:, a2]) * p2, -1.0), LE, 0.0))
        lower = np.append(np.zeros(d), -np.inf)
        upper = np.append(np.ones(d), np.inf)
        obj = np.append(np.zeros(d), -1.0)
        out = solve_lp(LinearProgram.from_rows(obj, rows, lower, upper))
        if not isinstance(out, Optimal) or out.x[-1] >= -SEP_TOL:
            continue
        spill = a2 if a2 != m else (m + 1) % A
        q = SimulationQuery(_complete_policy(instance, m, out.x[:d], spill), m)
        if separates(instance, q, tau, tau2):
            return q
    return Fail


def find_separating_query_n(instance: BPInstance, targets, cap: int = 4):
    """Query giving every target a different best response.

    The first target obeys the message; each other target is assigned a
    distinct action which must be its strict best response.
    """
    targets = list(targets)
    if len(targets) < 2 or len(set(targets)) != len(targets):
        raise InvalidInstance("at least two distinct targets are required")
    if len(targets) > cap:
        raise CapExceeded(f"{len(targets)} targets exceed the cap of {cap}")
    if len(targets) == 2:
        return find_separating_query(instance, targets[0], targets[1])
    d, A = instance.state_count, instance.action_count
    ur = instance.receiver_utility
    B = instance.beliefs
    for combo in itertools.product(range(A), repeat=len(targets)):
        if len(set(combo)) != len(combo):
            continue
        m = combo[0]
        rows = []
        for a in range(A):
            rows.append((np.append((ur[:, m] - ur[:, a]) * B[targets[0]], 0.0), GE, 0.0))
        for t, at in zip(targets[1:], combo[1:]):
            p = B[t]
            for a in range(A):
                if a != at:
                    rows.append((np.append((ur[:, a] - ur[:, at]) * p, -1.0), LE, 0.0))
        lower = np.append(np.zeros(d), -np.inf)
        upper = np.append(np.ones(d), np.inf)
        obj = np.append(np.zeros(d), -1.0)
        out = solve_lp(LinearProgram.from_rows(obj, rows, lower, upper))
        if not isinstance(out, Optimal) or out.x[-1] >= -SEP_TOL:
            continue
        q = SimulationQuery(_complete_policy(instance, m, out.x[:d], combo[1]), m)
        labels = _labels(instance, q)
        if [labels[t] for t in targets] == list(combo):
            return q
    return Fail


def enumerate_feasible_subsets(instance: BPInstance, queries, K: int, cap: int = 10_000):
    """All non-empty intersections of at most ``K`` query cells."""
    if K < 0:
        raise InvalidInstance("budget must be non-negative")
    full = instance.full_set()
    witnesses = {full: (full[0], ())}
    frontier = [full]
    for _ in range(K):
        nxt = []
        for s in frontier:
            _, used = witnesses[s]
            for qi, q in enumerate(queries):
                for child in q.split(s):
                    if child not in witnesses:
                        witnesses[child] = (child[0], tuple(sorted(used + (qi,))))
                        nxt.append(child)
                        if len(witnesses) > cap:
                            raise ExplosionGuard(f"feasible-subset family exceeds {cap}")
        frontier = nxt
        if not frontier:
            break
    return FeasibleSubsetFamily(frozenset(witnesses), witnesses)


def nonadaptive_partition(queries, T: int | None = None) -> PartitionQuery:
    """Common refinement of ``queries`` (a single cell when the list is empty)."""
    queries = list(queries)
    if T is None:
        if not queries:
            raise InvalidInstance("type count is needed for an empty query list")
        T = queries[0].type_count
    key = {}
    for tau in range(T):
        sig = tuple(next(k for k, c in enumerate(q.cells) if tau in c) for q in queries)
        key.setdefault(sig, []).append(tau)
    return PartitionQuery(tuple(key.values()))


def canonical_binary_cut(instance: BPInstance, q: SimulationQuery):
    """Cut position of a simulation query on a normalized binary instance.

    Returns ``None`` when the query does not split the types.
    """
    if not is_binary(instance):
        raise NotBinary("canonical cuts exist only for binary instances")
    part = induced_partition(instance, q)
    if len(part.cells) == 1:
        return None
    c = cut_position(part)
    if c is None:
        raise InvalidInstance("binary query does not induce a prefix cut")
    return c
