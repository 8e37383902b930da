"""Non-adaptive query planning.

Here the sender commits to a set of queries up front and then messages
optimally inside each cell of their common refinement.  For normalized binary
instances the cells are intervals and an interval dynamic program is exact;
elsewhere the problem is NP-hard, so only brute force and greedy are offered.

This module also builds the instances used to study the structure of the
problem: the set-cover reduction, the parity counterexample to
submodularity and the greedy trap derived from it.
"""
from __future__ import annotations

import enum
import itertools
import math
from dataclasses import dataclass

import numpy as np

from .errors import CapExceeded, InvalidInstance, NotBinary, ParameterViolation
from .messaging import SubsetValuer
from .model import BPInstance, TypeSubset, is_normalized_binary
from .oracle import PartitionQuery, cut_queries, nonadaptive_partition

TIE_TOL = 1e-12
BRUTE_CAP = 100_000


@dataclass(frozen=True)
class NonAdaptivePlanResult:
    """``chosen`` holds cut positions for the binary planners, query indices otherwise."""

    chosen: tuple
    value: float
    cell_values: tuple
    cost: float = 0.0

    @property
    def gross_value(self):
        return self.value + self.cost


@dataclass(frozen=True)
class DecisionInstance:
    instance: BPInstance
    queries: tuple
    K: int
    target: float

    def __post_init__(self):
        if not (math.isfinite(self.target) and self.target >= 0):
            raise InvalidInstance("target utility must be finite and non-negative")


class Decision(enum.Enum):
    YES = "YES"
    NO = "NO"

    def __bool__(self):
        return self is Decision.YES


def _partition_of(instance, queries, chosen):
    return nonadaptive_partition([queries[i] for i in chosen], instance.type_count)


def _result(instance, valuer, partition, chosen, cost=0.0):
    cells = tuple((c, valuer(c)) for c in partition.cells)
    gross = sum(v for _, v in cells)
    return NonAdaptivePlanResult(tuple(chosen), gross - cost, cells, cost)


def set_value(instance, queries, chosen, valuer=None) -> float:
    """Unnormalized value of messaging optimally after the queries ``chosen``."""
    valuer = valuer or SubsetValuer(instance)
    return valuer.partition_value(_partition_of(instance, queries, chosen).cells)


def _require_binary(instance):
    if not is_normalized_binary(instance):
        raise NotBinary("a normalized binary instance is required")


def _interval_dp(instance, K, costs=None):
    """Best prefix segmentations with at most ``K`` cuts.

    ``best[j][k]`` is (value, cuts) for types ``0..j`` using at most ``k`` cuts,
    with cut ``c`` separating position ``c-1`` from ``c``.  Near ties keep the
    lexicographically smallest cut tuple.
    """
    T = instance.type_count
    valuer = SubsetValuer(instance)
    seg = [[valuer(range(i, j + 1)) if i <= j else 0.0 for j in range(T)] for i in range(T)]
    K = min(K, T - 1)
    best = [[None] * (K + 1) for _ in range(T)]
    for j in range(T):
        best[j][0] = (seg[0][j], ())
        for k in range(1, K + 1):
            cand = best[j][k - 1]
            for c in range(1, j + 1):
                pv, pcuts = best[c - 1][k - 1]
                v = pv + seg[c][j] - (costs[c - 1] if costs is not None else 0.0)
                cuts = pcuts + (c,)
                if v > cand[0] + TIE_TOL or (v >= cand[0] - TIE_TOL and cuts < cand[1]):
                    cand = (v, cuts)
            best[j][k] = cand
    return best[T - 1][K], valuer


def plan_nonadaptive_binary(instance: BPInstance, K: int) -> NonAdaptivePlanResult:
    """Optimal set of at most ``K`` adjacent cuts on a normalized binary instance."""
    _require_binary(instance)
    if K < 0:
        raise InvalidInstance("budget must be non-negative")
    (v, cuts), valuer = _interval_dp(instance, K)
    T = instance.type_count
    part = _partition_of(instance, cut_queries(T), [c - 1 for c in cuts])
    return _result(instance, valuer, part, cuts)


def plan_nonadaptive_binary_costly(instance: BPInstance, costs) -> NonAdaptivePlanResult:
    """Cut set maximizing value minus total cost; ``costs[c-1]`` prices cut ``c``."""
    _require_binary(instance)
    T = instance.type_count
    costs = [float(c) for c in np.broadcast_to(np.asarray(costs, float), (T - 1,))]
    (v, cuts), valuer = _interval_dp(instance, T - 1, costs)
    part = _partition_of(instance, cut_queries(T), [c - 1 for c in cuts])
    return _result(instance, valuer, part, cuts, sum(costs[c - 1] for c in cuts))


def brute_force_nonadaptive(instance: BPInstance, queries, K: int, valuer=None) -> NonAdaptivePlanResult:
    """Exact optimum over every query set of size at most ``K``."""
    queries = list(queries)
    K = max(0, min(K, len(queries)))
    total = sum(math.comb(len(queries), k) for k in range(K + 1))
    if total > BRUTE_CAP:
        raise CapExceeded(f"{total} query sets exceed the cap of {BRUTE_CAP}")
    valuer = valuer or SubsetValuer(instance)
    scored = []
    for k in range(K + 1):
        for combo in itertools.combinations(range(len(queries)), k):
            scored.append((set_value(instance, queries, combo, valuer), combo))
    top = max(v for v, _ in scored)
    choice = min(c for v, c in scored if v >= top - TIE_TOL)
    return _result(instance, valuer, _partition_of(instance, queries, choice), choice)


def marginal_gain(instance: BPInstance, base, q, queries=None, valuer=None) -> float:
    """Value added by query ``q`` on top of the queries in ``base``.

    ``base`` and ``q`` may be query objects, or indices into ``queries``.
    """
    def resolve(x):
        return queries[x] if isinstance(x, (int, np.integer)) else x

    base = [resolve(b) for b in base]
    q = resolve(q)
    valuer = valuer or SubsetValuer(instance)
    T = instance.type_count
    before = valuer.partition_value(nonadaptive_partition(base, T).cells)
    after = valuer.partition_value(nonadaptive_partition(base + [q], T).cells)
    return after - before


def _greedy(instance, queries, rounds, min_gain=None, cost=0.0):
    valuer = SubsetValuer(instance)
    chosen = []
    current = set_value(instance, queries, chosen, valuer)
    for _ in range(rounds):
        top, top_i = None, None
        for i in range(len(queries)):
            if i in chosen:
                continue
            v = set_value(instance, queries, chosen + [i], valuer)
            if top is None or v > top + TIE_TOL:
                top, top_i = v, i
        if top_i is None:
            break
        if min_gain is not None and top - current < min_gain - 1e-9:
            break
        chosen.append(top_i)
        current = top
    part = _partition_of(instance, queries, chosen)
    return _result(instance, valuer, part, chosen, cost * len(chosen))


def greedy(instance: BPInstance, queries, K: int) -> NonAdaptivePlanResult:
    """Add, ``K`` times, the query giving the largest refined value."""
    if K < 0:
        raise InvalidInstance("budget must be non-negative")
    return _greedy(instance, list(queries), K)


def greedy_costly(instance: BPInstance, queries, cost: float) -> NonAdaptivePlanResult:
    """Greedy with a uniform per-query cost; stops once the best gain falls below it."""
    queries = list(queries)
    if cost < 0:
        raise InvalidInstance("query cost must be non-negative")
    rounds = min(instance.type_count, len(queries)) - 1
    return _greedy(instance, queries, max(rounds, 0), min_gain=cost, cost=cost)


def reduce_set_cover(universe, subsets, K: int) -> DecisionInstance:
    """Binary persuasion instance whose decision answer equals the set-cover answer.

    Type 0 stands for no element; type ``i`` for the ``i``-th element.  Query
    ``s`` isolates every element of ``s`` in its own cell.
    """
    universe = list(universe)
    if not universe or len(set(universe)) != len(universe):
        raise InvalidInstance("universe must be non-empty with distinct elements")
    pos = {e: i + 1 for i, e in enumerate(universe)}
    n = len(universe) + 1
    ps = [0.5 - i / (4 * n) for i in range(n)]
    prior = [1.0 / n] * n
    names = ["none"] + [str(e) for e in universe]
    instance = BPInstance.binary(ps, prior, names)
    queries = []
    for s in subsets:
        s = set(s)
        if not s <= set(universe):
            raise InvalidInstance("subsets must be drawn from the universe")
        inside = sorted(pos[e] for e in s)
        rest = [t for t in range(n) if t not in inside]
        cells = [(t,) for t in inside] + ([tuple(rest)] if rest else [])
        queries.append(PartitionQuery(tuple(cells)))
    target = float(sum(prior[i] * 2 * ps[i] for i in range(n)))
    return DecisionInstance(instance, tuple(queries), int(K), target)


def decide_nonadaptive(di: DecisionInstance) -> Decision:
    """YES iff some set of at most ``K`` queries reaches the target utility."""
    best = brute_force_nonadaptive(di.instance, di.queries, di.K)
    return Decision.YES if best.value >= di.target - 1e-9 else Decision.NO


def parity_epsilon(N: float) -> float:
    """Default mass on the empty state, ``1 / (N + 1)``.

    This is the largest value at which a sender who knows the type can still
    keep that type from ever guessing ``EMPTY``.
    """
    return 1.0 / (N + 1)


def make_parity_counterexample(L: int, N: float | None = None, eps: float | None = None):
    """Instance where each bit query is worthless alone but all bits together pay.

    There are ``2**L`` types and one extra state ``EMPTY`` (last index).  Type
    ``i`` is nearly sure the state is ``i``.  The sender wants any guess other
    than ``EMPTY``; a wrong guess costs the receiver ``N`` (default ``2**L``).
    Bit query ``j`` splits types by bit ``j`` of their index (bit 1 is the
    lowest).  Each type puts ``eps`` on ``EMPTY``, ``eps/2`` on every other
    type's state and the remainder on its own state.

    With ``L = 2`` and the default ``eps`` the intended behavior (pooling any
    two or more types costs the same, full separation recovers it) holds for
    ``2 < N <= 5``; it has not been established for larger ``L``, whose menu
    programs are too large to solve here.
    """
    if int(L) != L or L < 1:
        raise ParameterViolation("L must be a positive integer")
    L = int(L)
    n = 2 ** L
    N = float(n if N is None else N)
    if not N > 2 ** (L - 1):
        raise ParameterViolation(f"penalty N must exceed 2^(L-1) = {2 ** (L - 1)}")
    eps = parity_epsilon(N) if eps is None else float(eps)
    if not (eps > 0 and 1 - (n + 1) * eps / 2 > eps):
        raise ParameterViolation("eps must leave each type most confident in its own state")
    d = n + 1
    us = np.ones((d, d))
    us[:, n] = 0.0
    ur = np.full((d, d), -N)
    ur[:, n] = 0.0
    for j in range(n):
        ur[j, j] = 1.0
    beliefs = []
    for i in range(n):
        b = np.full(d, eps / 2)
        b[n] = eps
        b[i] = 0.0
        b[i] = 1.0 - b.sum()
        beliefs.append(b)
    names = [f"t{i:0{L}b}" for i in range(n)]
    instance = BPInstance(us, ur, beliefs, [1.0 / n] * n, names)
    return instance, bit_queries(L)


def bit_queries(L: int):
    n = 2 ** L
    out = []
    for j in range(L):
        zero = tuple(i for i in range(n) if not (i >> j) & 1)
        one = tuple(i for i in range(n) if (i >> j) & 1)
        out.append(PartitionQuery((zero, one)))
    return out


def make_greedy_trap(L: int, N: float | None = None, eps: float | None = None):
    """Parity instance plus one equality query per type, listed after the bit queries."""
    instance, bits = make_parity_counterexample(L, N, eps)
    n = 2 ** L
    eq = [PartitionQuery(((j,), tuple(i for i in range(n) if i != j))) for j in range(n)]
    return instance, bits + eq


def full_information_value(instance: BPInstance, valuer=None) -> float:
    valuer = valuer or SubsetValuer(instance)
    return float(sum(valuer(TypeSubset([t])) for t in range(instance.type_count)))
