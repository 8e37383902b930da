"""Adaptive query planning by backward induction over feasible subsets.

The sender alternates with nature: the sender picks a query, nature reveals
the cell of the true type, and the sender continues on the smaller subset.
Values are kept unnormalized (prior-mass weighted) during the recursion so a
query node is simply the sum of its children.  Plan nodes expose both the
unnormalized value and the value conditional on reaching the node.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass

from .errors import CapExceeded, InvalidInstance, MalformedPlan
from .messaging import SubsetValuer
from .model import BPInstance, TypeSubset
from .oracle import PartitionQuery

TIE_TOL = 1e-12
GAIN_TOL = 1e-9


@dataclass(frozen=True)
class AdaptivePlan:
    """One node of an adaptive plan.

    ``query`` is ``None`` for a Stop leaf.  ``children`` pairs each non-empty
    cell intersection with its sub-plan.  ``value`` is conditional on reaching
    the node; ``mass`` is the prior probability of the node's subset.
    """

    subset: TypeSubset
    budget: int
    query: int | None
    partition: PartitionQuery | None
    children: tuple
    value: float
    mass: float
    cost: float = 0.0

    @property
    def is_stop(self):
        return self.query is None

    @property
    def unnormalized_value(self):
        return self.value * self.mass

    def query_count(self):
        """Number of query nodes in the tree."""
        if self.is_stop:
            return 0
        return 1 + sum(child.query_count() for _, child in self.children)

    def depth(self):
        if self.is_stop:
            return 0
        return 1 + max(child.depth() for _, child in self.children)

    def describe(self, names=None, indent=0):
        pad = "  " * indent
        label = "{" + ",".join(str(names[i] if names else i + 1) for i in self.subset) + "}"
        if self.is_stop:
            lines = [f"{pad}{label} stop value={self.value:.9g}"]
        else:
            lines = [f"{pad}{label} query {self.query} value={self.value:.9g}"]
            for _, child in self.children:
                lines.extend(child.describe(names, indent + 1))
        return lines


def _conditional(v, mass):
    return v / mass if mass > 0 else 0.0


class _Planner:
    def __init__(self, instance, queries, costs=None, valuer=None):
        self.instance = instance
        self.queries = list(queries)
        T = instance.type_count
        for q in self.queries:
            if q.type_count != T:
                raise InvalidInstance("every query must partition all types")
        self.costs = list(costs) if costs is not None else None
        self.valuer = valuer or SubsetValuer(instance)
        self.memo = {}

    def value(self, subset, k):
        """Unnormalized optimal value and chosen query at ``(subset, k)``."""
        key = (subset, k)
        hit = self.memo.get(key)
        if hit is not None:
            return hit
        stop = self.valuer(subset)
        best = (stop, None)
        if k > 0:
            mass = self.instance.mass(subset)
            top, top_q = None, None
            for qi, q in enumerate(self.queries):
                cells = q.split(subset)
                if len(cells) < 2:
                    continue
                v = sum(self.value(c, k - 1)[0] for c in cells)
                if self.costs is not None:
                    v -= self.costs[qi] * mass
                if top is None or v > top + TIE_TOL:
                    top, top_q = v, qi
            if top is not None:
                if self.costs is None:
                    if top >= stop - TIE_TOL:
                        best = (top, top_q)
                elif top - stop > GAIN_TOL * mass:
                    best = (top, top_q)
        self.memo[key] = best
        return best

    def build(self, subset, k):
        v, qi = self.value(subset, k)
        mass = self.instance.mass(subset)
        if qi is None:
            return AdaptivePlan(subset, k, None, None, (), _conditional(v, mass), mass)
        q = self.queries[qi]
        kids = tuple((c, self.build(c, k - 1)) for c in q.split(subset))
        cost = self.costs[qi] if self.costs is not None else 0.0
        return AdaptivePlan(subset, k, qi, q, kids, _conditional(v, mass), mass, cost)


def plan_adaptive(instance: BPInstance, queries, K: int, valuer=None) -> AdaptivePlan:
    """Optimal adaptive plan using at most ``K`` queries along any path."""
    if K < 0:
        raise InvalidInstance("budget must be non-negative")
    planner = _Planner(instance, queries, valuer=valuer)
    return planner.build(instance.full_set(), K)


def plan_adaptive_costly(instance: BPInstance, queries, costs, valuer=None) -> AdaptivePlan:
    """Optimal adaptive plan when query ``i`` costs ``costs[i]`` each time it is asked.

    Costs are charged with the probability of reaching the asking node.  A query
    is asked only if it raises the net value by more than ``1e-9``.
    """
    queries = list(queries)
    costs = [float(c) for c in costs]
    if len(costs) != len(queries):
        raise InvalidInstance("one cost per query is required")
    depth = min(instance.type_count - 1, len(queries))
    planner = _Planner(instance, queries, costs=costs, valuer=valuer)
    return planner.build(instance.full_set(), depth)


def evaluate_plan(instance: BPInstance, plan: AdaptivePlan) -> float:
    """Re-evaluate a plan from scratch; returns the value conditional on its root."""
    valuer = SubsetValuer(instance)

    def walk(node):
        subset = TypeSubset(node.subset, instance.type_count)
        if node.is_stop:
            if node.children:
                raise MalformedPlan("a stop node cannot have children")
            return valuer(subset)
        q = node.partition
        if q is None or q.type_count != instance.type_count:
            raise MalformedPlan("query node without a valid partition")
        expected = q.split(subset)
        got = tuple(TypeSubset(c) for c, _ in node.children)
        if tuple(sorted(expected)) != tuple(sorted(got)):
            raise MalformedPlan(f"children of {tuple(subset)} do not match the query cells")
        for c, child in node.children:
            if TypeSubset(child.subset) != TypeSubset(c):
                raise MalformedPlan("child subset differs from its cell")
        total = sum(walk(child) for _, child in node.children)
        return total - node.cost * instance.mass(subset)

    root_mass = instance.mass(plan.subset)
    return _conditional(walk(plan), root_mass)


def brute_force_adaptive(instance: BPInstance, queries, K: int) -> float:
    """Best value over every explicitly enumerated strategy tree (small inputs only)."""
    queries = list(queries)
    if instance.type_count > 5 or len(queries) > 4 or K > 2:
        raise CapExceeded("brute force is limited to T<=5, 4 queries and K<=2")
    valuer = SubsetValuer(instance)

    def trees(subset, k):
        out = [valuer(subset)]
        if k == 0:
            return out
        for q in queries:
            options = [trees(c, k - 1) for c in q.split(subset)]
            out.extend(sum(choice) for choice in itertools.product(*options))
        return out

    return max(trees(instance.full_set(), K))
