"""Optimal incentive-compatible messaging for a known set of possible types.

Two routes compute the same quantity:

* ``optimal_policy_general`` solves the menu-message LP.  A message is a vector
  holding one recommended action per type in the subset, so a single signal
  can address every type at once.
* ``optimal_policy_binary`` evaluates the cutoff closed form that holds for
  normalized binary instances.

Values are reported unnormalized, i.e. weighted by the prior mass of each type,
so that planners can add them across the cells of a partition.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .errors import NotBinary, NotInterval, NumericalFailure, SizeCapExceeded
from .linprog import EQ, GE, LinearProgram, Optimal, solve_lp
from .model import (
    BPInstance,
    MessagingPolicy,
    TypeSubset,
    binary_probs,
    is_normalized_binary,
)

DEFAULT_VARIABLE_CAP = 20_000


@dataclass(frozen=True, eq=False)
class MenuPolicy:
    subset: TypeSubset
    messages: tuple
    sigma: np.ndarray

    def __post_init__(self):
        s = np.array(self.sigma, float)
        s.setflags(write=False)
        object.__setattr__(self, "sigma", s)
        object.__setattr__(self, "messages", tuple(tuple(int(a) for a in m) for m in self.messages))
        if s.shape[1] != len(self.messages):
            raise ValueError("one column of sigma per menu message")

    @property
    def policy(self) -> MessagingPolicy:
        return MessagingPolicy(self.sigma)


@dataclass(frozen=True)
class BinaryCutoffPolicy:
    """Recommend action 1 always in state 1 and with ``send_prob_state0`` in state 0.

    ``cutoff`` is a type index; every type of the subset with belief at least
    that of the cutoff type obeys.
    """

    subset: TypeSubset
    cutoff: int
    send_prob_state0: float
    value: float

    def as_menu(self) -> MenuPolicy:
        """Two-message menu encoding: obeying types get 1 on the first message."""
        pos = self.subset.index(self.cutoff)
        follow = tuple(1 if k <= pos else 0 for k in range(len(self.subset)))
        silent = tuple(0 for _ in self.subset)
        r = self.send_prob_state0
        return MenuPolicy(self.subset, (follow, silent), [[r, 1.0 - r], [1.0, 0.0]])


def _dominated_actions(instance: BPInstance):
    ur = instance.receiver_utility
    A = instance.action_count
    return {
        a for a in range(A)
        if any(np.all(ur[:, b] > ur[:, a]) for b in range(A) if b != a)
    }


def menu_messages(instance: BPInstance, subset):
    """All menu messages for ``subset`` minus those recommending a dominated action."""
    dominated = _dominated_actions(instance)
    allowed = [a for a in range(instance.action_count) if a not in dominated]
    return list(itertools.product(allowed, repeat=len(subset)))


def optimal_policy_general(
    instance: BPInstance, subset=None, variable_cap: int = DEFAULT_VARIABLE_CAP, method: str = "highs"
):
    """Sender-optimal obedient menu policy via linear programming.

    Returns ``(MenuPolicy, value)``.  ``method`` picks the LP backend.
    """
    subset = instance.full_set() if subset is None else TypeSubset(subset, instance.type_count)
    d, A = instance.state_count, instance.action_count
    if A ** len(subset) * d > variable_cap:
        raise SizeCapExceeded(
            f"{A}^{len(subset)}*{d} LP variables exceed the cap of {variable_cap}"
        )
    messages = menu_messages(instance, subset)
    M = len(messages)
    msg_arr = np.array(messages, dtype=int).reshape(M, len(subset))
    us, ur = instance.sender_utility, instance.receiver_utility
    beliefs = instance.beliefs
    # variable index: state * M + message
    c = np.zeros(d * M)
    for pos, tau in enumerate(subset):
        w = instance.prior[tau] * beliefs[tau]
        c += (w[:, None] * us[:, msg_arr[:, pos]]).reshape(-1)
    rows, cols, vals = [], [], []
    r = 0
    for pos, tau in enumerate(subset):
        p = beliefs[tau]
        rec = msg_arr[:, pos]
        for a in range(A):
            gain = p[:, None] * (ur[:, rec] - ur[:, [a]])
            for j in range(M):
                if rec[j] == a:
                    continue
                nz = np.flatnonzero(gain[:, j])
                if nz.size == 0:
                    continue
                rows.extend([r] * nz.size)
                cols.extend(nz * M + j)
                vals.extend(gain[nz, j])
                r += 1
    n_bic = r
    for w in range(d):
        rows.extend([r] * M)
        cols.extend(range(w * M, (w + 1) * M))
        vals.extend([1.0] * M)
        r += 1
    mat = sp.csr_matrix((vals, (rows, cols)), shape=(r, d * M))
    lp = LinearProgram(c, mat, (GE,) * n_bic + (EQ,) * d, [0.0] * n_bic + [1.0] * d, 0.0, 1.0)
    out = solve_lp(lp, method=method)
    if not isinstance(out, Optimal):
        raise NumericalFailure(f"messaging LP reported {out!r}")
    sigma = out.x.reshape(d, M)
    sigma = np.where(sigma < 1e-12, 0.0, sigma)
    sigma = sigma / sigma.sum(axis=1, keepdims=True)
    keep = np.flatnonzero(sigma.max(axis=0) > 0)
    policy = MenuPolicy(subset, [messages[j] for j in keep], sigma[:, keep])
    return policy, out.value


def cutoff_curve(ps, masses):
    """Value of pooling down to each position of a decreasing belief list."""
    ps = np.asarray(ps, float)
    masses = np.asarray(masses, float)
    out = np.empty(ps.size)
    for k in range(ps.size):
        r = ps[k] / (1.0 - ps[k])
        out[k] = float(np.sum(masses[: k + 1] * (ps[: k + 1] + (1.0 - ps[: k + 1]) * r)))
    return out


def _best_cutoff(curve):
    best = 0
    for k in range(1, curve.size):
        if curve[k] > curve[best]:
            best = k
    return best


def optimal_policy_binary(instance: BPInstance, subset=None):
    """Closed-form optimum for a contiguous subset of a normalized binary instance.

    Returns ``(BinaryCutoffPolicy, value)``.
    """
    if not is_normalized_binary(instance):
        raise NotBinary("a normalized binary instance is required")
    subset = instance.full_set() if subset is None else TypeSubset(subset, instance.type_count)
    if subset[-1] - subset[0] + 1 != len(subset):
        raise NotInterval(f"subset {tuple(subset)} is not contiguous")
    ps = binary_probs(instance)[list(subset)]
    curve = cutoff_curve(ps, instance.prior[list(subset)])
    k = _best_cutoff(curve)
    value = float(curve[k])
    pol = BinaryCutoffPolicy(subset, subset[k], float(ps[k] / (1.0 - ps[k])), value)
    return pol, value


class SubsetValuer:
    """Memoized optimal messaging value (unnormalized) per type subset.

    Normalized binary instances use the cutoff formula on the subset sorted by
    belief; every other instance goes through the menu LP.  One valuer belongs
    to a single planning call, so the cache needs no locking.
    """

    def __init__(self, instance: BPInstance, variable_cap: int = DEFAULT_VARIABLE_CAP):
        self.instance = instance
        self.variable_cap = variable_cap
        self._binary = is_normalized_binary(instance)
        self._cache = {}

    def __call__(self, subset) -> float:
        key = TypeSubset(subset)
        hit = self._cache.get(key)
        if hit is None:
            hit = self._compute(key)
            self._cache[key] = hit
        return hit

    def _compute(self, subset) -> float:
        inst = self.instance
        if self._binary:
            # subsets are already sorted by decreasing belief
            idx = list(subset)
            curve = cutoff_curve(inst.beliefs[idx, 1], inst.prior[idx])
            return float(curve.max())
        return optimal_policy_general(inst, subset, self.variable_cap)[1]

    def partition_value(self, cells) -> float:
        return float(sum(self(c) for c in cells))
