"""Core domain types and the primitive evaluations built on them.

States and actions are indexed from zero.  Utility matrices are laid out as
``u[state, action]``.  A binary instance uses state/action 1 for the
sender-preferred outcome.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    DimensionMismatch,
    InvalidInstance,
    NotBinary,
    ZeroProbabilityMessage,
)

SUM_TOL = 1e-12
DISTINCT_TOL = 1e-12
BR_TOL = 1e-9

BINARY_SENDER = np.array([[0.0, 1.0], [0.0, 1.0]])
BINARY_RECEIVER = np.array([[1.0, 0.0], [0.0, 1.0]])


def _frozen(a, dtype=float):
    arr = np.array(a, dtype=dtype)
    arr.setflags(write=False)
    return arr


def _check_finite(arr, what):
    if not np.all(np.isfinite(arr)):
        raise InvalidInstance(f"{what} must be finite")


class TypeSubset(tuple):
    """Canonical (sorted, duplicate-free, non-empty) tuple of type indices."""

    def __new__(cls, indices: Iterable[int], T: int | None = None):
        items = sorted({int(i) for i in indices})
        if not items:
            raise InvalidInstance("type subset must be non-empty")
        if items[0] < 0 or (T is not None and items[-1] >= T):
            raise InvalidInstance(f"type index out of range in {items}")
        return super().__new__(cls, items)

    def __repr__(self):
        return "TypeSubset(" + repr(tuple(self)) + ")"


@dataclass(frozen=True, eq=False)
class Belief:
    probs: np.ndarray

    def __post_init__(self):
        p = _frozen(self.probs)
        if p.ndim != 1 or p.size == 0:
            raise InvalidInstance("belief must be a non-empty vector")
        _check_finite(p, "belief")
        if np.any(p < 0):
            raise InvalidInstance("belief entries are non-negative")
        if abs(p.sum() - 1.0) > SUM_TOL:
            raise InvalidInstance("belief sums to 1")
        object.__setattr__(self, "probs", p)

    def __len__(self):
        return self.probs.size

    def __getitem__(self, i):
        return self.probs[i]

    def __eq__(self, other):
        return isinstance(other, Belief) and np.array_equal(self.probs, other.probs)

    def __hash__(self):
        return hash(self.probs.tobytes())


@dataclass(frozen=True, eq=False)
class MessagingPolicy:
    """Row-stochastic matrix ``sigma[state, message]``."""

    sigma: np.ndarray

    def __post_init__(self):
        s = _frozen(self.sigma)
        if s.ndim != 2 or s.shape[1] == 0:
            raise InvalidInstance("policy must be a states x messages matrix")
        _check_finite(s, "policy")
        if np.any(s < 0):
            raise InvalidInstance("policy entries are non-negative")
        if np.any(np.abs(s.sum(axis=1) - 1.0) > SUM_TOL):
            raise InvalidInstance("policy rows sum to 1")
        object.__setattr__(self, "sigma", s)

    @property
    def message_count(self) -> int:
        return self.sigma.shape[1]

    def __eq__(self, other):
        return isinstance(other, MessagingPolicy) and np.array_equal(self.sigma, other.sigma)

    def __hash__(self):
        return hash(self.sigma.tobytes())


@dataclass(frozen=True, eq=False)
class BPInstance:
    sender_utility: np.ndarray
    receiver_utility: np.ndarray
    types: tuple
    prior: np.ndarray
    names: tuple = field(default=())

    def __post_init__(self):
        us = _frozen(self.sender_utility)
        ur = _frozen(self.receiver_utility)
        if us.ndim != 2 or us.shape != ur.shape:
            raise InvalidInstance("utility matrices must share shape states x actions")
        _check_finite(us, "sender utility")
        _check_finite(ur, "receiver utility")
        types = tuple(t if isinstance(t, Belief) else Belief(t) for t in self.types)
        if not types:
            raise InvalidInstance("at least one type is required")
        d = us.shape[0]
        if any(len(t) != d for t in types):
            raise InvalidInstance("beliefs have dimension d")
        prior = _frozen(self.prior)
        if prior.shape != (len(types),):
            raise InvalidInstance("prior has one entry per type")
        _check_finite(prior, "prior")
        if np.any(prior < 0):
            raise InvalidInstance("prior entries are non-negative")
        if abs(prior.sum() - 1.0) > SUM_TOL:
            raise InvalidInstance("prior sums to 1")
        B = np.array([t.probs for t in types])
        for i in range(len(types)):
            for j in range(i):
                if np.max(np.abs(B[i] - B[j])) <= DISTINCT_TOL:
                    raise InvalidInstance(f"beliefs are pairwise distinct (types {j} and {i})")
        names = tuple(self.names) if self.names else tuple(f"t{i + 1}" for i in range(len(types)))
        if len(names) != len(types) or len(set(names)) != len(names):
            raise InvalidInstance("type names are unique, one per type")
        B.setflags(write=False)
        object.__setattr__(self, "sender_utility", us)
        object.__setattr__(self, "receiver_utility", ur)
        object.__setattr__(self, "types", types)
        object.__setattr__(self, "prior", prior)
        object.__setattr__(self, "names", names)
        object.__setattr__(self, "_beliefs", B)

    @classmethod
    def binary(cls, ps: Sequence[float], prior: Sequence[float], names=()):
        """Binary instance with ``ps[i] = Pr(state 1)`` for type i."""
        types = [Belief([1.0 - p, p]) for p in ps]
        return cls(BINARY_SENDER, BINARY_RECEIVER, types, prior, names)

    @property
    def state_count(self) -> int:
        return self.sender_utility.shape[0]

    @property
    def action_count(self) -> int:
        return self.sender_utility.shape[1]

    @property
    def type_count(self) -> int:
        return len(self.types)

    @property
    def beliefs(self) -> np.ndarray:
        return self._beliefs

    def full_set(self) -> TypeSubset:
        return TypeSubset(range(self.type_count))

    def mass(self, subset) -> float:
        return float(sum(self.prior[i] for i in subset))

    def __eq__(self, other):
        return (
            isinstance(other, BPInstance)
            and np.array_equal(self.sender_utility, other.sender_utility)
            and np.array_equal(self.receiver_utility, other.receiver_utility)
            and np.array_equal(self.beliefs, other.beliefs)
            and np.array_equal(self.prior, other.prior)
            and self.names == other.names
        )

    def __hash__(self):
        return hash((self.beliefs.tobytes(), self.prior.tobytes(), self.sender_utility.tobytes()))


def random_binary_instance(rng: np.random.Generator, T: int) -> "BPInstance":
    """Normalized binary instance with ``T`` types drawn from ``rng``."""
    while True:
        ps = np.sort(rng.uniform(0.01, 0.5, T))[::-1]
        if T == 1 or np.min(-np.diff(ps)) > 1e-6:
            break
    return BPInstance.binary(ps, rng.dirichlet(np.ones(T)))


def is_binary(instance: BPInstance) -> bool:
    """True when the utilities are exactly the canonical binary ones."""
    return (
        instance.sender_utility.shape == (2, 2)
        and np.allclose(instance.sender_utility, BINARY_SENDER, rtol=0, atol=SUM_TOL)
        and np.allclose(instance.receiver_utility, BINARY_RECEIVER, rtol=0, atol=SUM_TOL)
    )


def binary_probs(instance: BPInstance) -> np.ndarray:
    if not is_binary(instance):
        raise NotBinary("instance is not a canonical binary instance")
    return instance.beliefs[:, 1]


def is_normalized_binary(instance: BPInstance) -> bool:
    if not is_binary(instance):
        return False
    p = instance.beliefs[:, 1]
    return bool(np.all(p <= 0.5) and np.all(np.diff(p) < 0))


def _require_policy_dim(instance, policy: MessagingPolicy):
    if policy.sigma.shape[0] != instance.state_count:
        raise DimensionMismatch("policy rows must match the number of states")


def best_response(
    instance: BPInstance,
    belief,
    policy: MessagingPolicy,
    message: int,
    recommended: int | None = None,
    tol: float = BR_TOL,
) -> int:
    """Receiver action after seeing ``message``.

    Utilities are compared in unnormalized form (weighted by the joint
    probability of state and message).  The recommended action wins any tie
    within ``tol``; other ties go to the lowest index.
    """
    p = belief.probs if isinstance(belief, Belief) else np.asarray(belief, float)
    _require_policy_dim(instance, policy)
    if p.shape != (instance.state_count,):
        raise DimensionMismatch("belief dimension must match the number of states")
    w = policy.sigma[:, message] * p
    if w.sum() <= 1e-12:
        raise ZeroProbabilityMessage(f"message {message} has zero probability under this belief")
    values = w @ instance.receiver_utility
    best = float(values.max())
    if recommended is not None and values[recommended] >= best - tol:
        return int(recommended)
    return int(np.flatnonzero(values >= best - tol)[0])


def _menu_parts(policy):
    messages = getattr(policy, "messages", None)
    if messages is None:
        raise DimensionMismatch("a menu policy with per-type action vectors is required")
    return messages, np.asarray(policy.sigma)


def is_bic(instance: BPInstance, subset, policy, tol: float = 1e-9):
    """Check obedience of every positive-probability menu recommendation.

    Returns ``(ok, violations)`` where each violation is a
    ``(type, message, action)`` triple.
    """
    subset = TypeSubset(subset, instance.type_count)
    messages, sigma = _menu_parts(policy)
    if sigma.shape[0] != instance.state_count:
        raise DimensionMismatch("policy rows must match the number of states")
    if any(len(m) != len(subset) for m in messages):
        raise DimensionMismatch("menu width differs from subset size")
    ur = instance.receiver_utility
    violations = []
    for pos, tau in enumerate(subset):
        p = instance.beliefs[tau]
        for j, m in enumerate(messages):
            w = sigma[:, j] * p
            mass = w.sum()
            if mass <= 1e-12:
                continue
            values = (w @ ur) / mass
            rec = values[m[pos]]
            for a in range(instance.action_count):
                if values[a] > rec + tol:
                    violations.append((tau, j, a))
    return (not violations), violations


def expected_sender_utility(instance: BPInstance, subset, policy, normalize: bool = False) -> float:
    """Sender utility assuming every type in ``subset`` obeys its menu entry."""
    subset = TypeSubset(subset, instance.type_count)
    messages, sigma = _menu_parts(policy)
    if sigma.shape[0] != instance.state_count or any(len(m) != len(subset) for m in messages):
        raise DimensionMismatch("policy does not match the subset")
    us = instance.sender_utility
    total = 0.0
    for pos, tau in enumerate(subset):
        p = instance.beliefs[tau]
        per_type = 0.0
        for j, m in enumerate(messages):
            per_type += float(np.dot(p * sigma[:, j], us[:, m[pos]]))
        total += instance.prior[tau] * per_type
    if normalize:
        mass = instance.mass(subset)
        return total / mass if mass > 0 else 0.0
    return total


def normalize_binary(instance: BPInstance):
    """Merge all types with ``Pr(state 1) >= 1/2`` and sort by decreasing belief.

    Returns ``(normalized_instance, index_map)`` with ``index_map[old] = new``.
    """
    if instance.state_count != 2 or instance.action_count != 2 or not is_binary(instance):
        raise NotBinary("normalize_binary needs two states, two actions and binary utilities")
    p = instance.beliefs[:, 1]
    high = [i for i in range(instance.type_count) if p[i] >= 0.5]
    low = sorted((i for i in range(instance.type_count) if p[i] < 0.5), key=lambda i: (-p[i], i))
    ps, prior, names = [], [], []
    index_map = [0] * instance.type_count
    if high:
        ps.append(0.5)
        prior.append(sum(instance.prior[i] for i in high))
        names.append(instance.names[high[0]] if len(high) == 1 else "+".join(instance.names[i] for i in high))
        for i in high:
            index_map[i] = 0
    for i in low:
        index_map[i] = len(ps)
        ps.append(float(p[i]))
        prior.append(float(instance.prior[i]))
        names.append(instance.names[i])
    return BPInstance.binary(ps, prior, names), index_map
