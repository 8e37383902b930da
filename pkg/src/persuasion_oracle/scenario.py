"""Scenario files: a YAML document describing an instance and its queries.

Grammar (all keys lowercase; ``budget``, ``costs`` and ``flags`` optional)::

    states: [s0, s1]                  # labels, d entries
    actions: [a0, a1]                 # labels, A entries
    sender_utility:                   # d rows of A numbers
      - [0, 1]
      - [0, 1]
    receiver_utility:
      - [1, 0]
      - [0, 1]
    types:                            # one entry per type
      - {name: t1, belief: [0.5, 0.5]}
    prior: [1]                        # one number per type
    queries:
      - {kind: partition, cells: [[t1], [t2, t3]]}
      - {kind: simulation, policy: [[0.5, 0.5], [0, 1]], message: a1}
    budget: 2
    costs: [0.01, 0.01]               # one per query
    flags: {binary: true}

Numbers may be written as decimals, integers or fractions in quotes
(``"1/7"``).  Cells name types; a bare integer is read as a zero-based type
index.  ``message`` is an action label or a zero-based action index.
Simulation queries are turned into partitions on load; the original spec is
kept for serialization.
"""
from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np
import yaml

from .errors import InvalidInstance, ParseError, ValidationError
from .model import BPInstance, MessagingPolicy, is_binary, is_normalized_binary
from .oracle import PartitionQuery, SimulationQuery, induced_partition

FIELDS = (
    "states", "actions", "sender_utility", "receiver_utility", "types",
    "prior", "queries", "budget", "costs", "flags",
)
REQUIRED = FIELDS[:7]
DATA_DIR = Path(__file__).parent / "data"


@dataclass(frozen=True)
class QuerySpec:
    kind: str
    cells: tuple = ()
    policy: tuple = ()
    message: str = ""


@dataclass(frozen=True)
class Scenario:
    states: tuple
    actions: tuple
    sender_utility: tuple
    receiver_utility: tuple
    type_names: tuple
    beliefs: tuple
    prior: tuple
    queries: tuple
    budget: int | None = None
    costs: tuple | None = None
    binary: bool = False
    instance: BPInstance = field(default=None, compare=False, repr=False)
    partitions: tuple = field(default=(), compare=False, repr=False)

    @property
    def type_count(self):
        return len(self.type_names)

    def planning_queries(self):
        """Distinct splitting partitions with their cost and source index.

        Duplicate partitions (for instance two simulation queries whose
        thresholds fall in the same gap) keep the first occurrence.
        """
        out, seen = [], set()
        for i, q in enumerate(self.partitions):
            if q.cells in seen:
                continue
            seen.add(q.cells)
            cost = self.costs[i] if self.costs is not None else 0.0
            out.append((q, cost, i))
        return out


def _number(x, where):
    if isinstance(x, bool):
        raise ValidationError("numbers must be numeric", where)
    if isinstance(x, (int, float)):
        return float(x)
    if isinstance(x, str):
        try:
            return float(Fraction(x.strip()))
        except (ValueError, ZeroDivisionError):
            pass
    raise ValidationError(f"{x!r} is not a number", where)


def _vector(x, where):
    if not isinstance(x, list):
        raise ValidationError("expected a list of numbers", where)
    return tuple(_number(v, where) for v in x)


def _matrix(x, where):
    if not isinstance(x, list) or not x:
        raise ValidationError("expected a non-empty list of rows", where)
    return tuple(_vector(r, where) for r in x)


def _labels(x, where):
    if not isinstance(x, list) or not x:
        raise ValidationError("expected a non-empty list of labels", where)
    out = tuple(str(v) for v in x)
    if len(set(out)) != len(out):
        raise ValidationError("labels are unique", where)
    return out


def _key_lines(text):
    try:
        node = yaml.compose(text, Loader=yaml.SafeLoader)
    except yaml.YAMLError:
        return {}
    if not isinstance(node, yaml.MappingNode):
        return {}
    return {k.value: v.start_mark.line + 1 for k, v in node.value}


def parse_scenario_text(text: str) -> Scenario:
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        line = mark.line + 1 if mark is not None else None
        raise ParseError(line, getattr(exc, "problem", None) or str(exc)) from None
    if not isinstance(doc, dict):
        raise ParseError(1, "a scenario is a mapping of fields")
    lines = _key_lines(text)

    def where(key):
        return f"line {lines[key]}, field {key}" if key in lines else f"field {key}"

    for key in doc:
        if key not in FIELDS:
            raise ValidationError(f"unknown field {key}", where(key))
    for key in REQUIRED:
        if key not in doc:
            raise ValidationError(f"missing field {key}", None)
    states = _labels(doc["states"], where("states"))
    actions = _labels(doc["actions"], where("actions"))
    us = _matrix(doc["sender_utility"], where("sender_utility"))
    ur = _matrix(doc["receiver_utility"], where("receiver_utility"))
    for key, m in (("sender_utility", us), ("receiver_utility", ur)):
        if len(m) != len(states) or any(len(r) != len(actions) for r in m):
            raise ValidationError("utility matrices are states x actions", where(key))
    if not isinstance(doc["types"], list) or not doc["types"]:
        raise ValidationError("at least one type is required", where("types"))
    names, beliefs = [], []
    for t in doc["types"]:
        if not isinstance(t, dict) or set(t) != {"name", "belief"}:
            raise ValidationError("each type has exactly a name and a belief", where("types"))
        names.append(str(t["name"]))
        b = _vector(t["belief"], where("types"))
        if len(b) != len(states):
            raise ValidationError("beliefs have dimension d", where("types"))
        beliefs.append(b)
    if len(set(names)) != len(names):
        raise ValidationError("type names are unique", where("types"))
    prior = _vector(doc["prior"], where("prior"))
    if len(prior) != len(names):
        raise ValidationError("prior has one entry per type", where("prior"))
    try:
        instance = BPInstance(np.array(us), np.array(ur), beliefs, prior, tuple(names))
    except InvalidInstance as exc:
        msg = str(exc)
        key = "prior" if "prior" in msg else "types" if "belief" in msg else "sender_utility"
        raise ValidationError(msg.split(" (")[0], where(key)) from None

    def type_index(v):
        if isinstance(v, int) and not isinstance(v, bool) and str(v) not in names:
            if not 0 <= v < len(names):
                raise ValidationError(f"type index {v} out of range", where("queries"))
            return v
        if str(v) not in names:
            raise ValidationError(f"unknown type {v}", where("queries"))
        return names.index(str(v))

    def action_index(v):
        if isinstance(v, int) and not isinstance(v, bool) and str(v) not in actions:
            if not 0 <= v < len(actions):
                raise ValidationError(f"action index {v} out of range", where("queries"))
            return v
        if str(v) not in actions:
            raise ValidationError(f"unknown action {v}", where("queries"))
        return actions.index(str(v))

    specs, parts = [], []
    raw_queries = doc["queries"] if doc["queries"] is not None else []
    if not isinstance(raw_queries, list):
        raise ValidationError("queries is a list", where("queries"))
    for q in raw_queries:
        if not isinstance(q, dict) or "kind" not in q:
            raise ValidationError("each query has a kind", where("queries"))
        if q["kind"] == "partition":
            if set(q) != {"kind", "cells"} or not isinstance(q["cells"], list):
                raise ValidationError("partition queries have exactly kind and cells", where("queries"))
            cells = [[type_index(v) for v in c] for c in q["cells"]]
            try:
                part = PartitionQuery(tuple(tuple(c) for c in cells))
            except InvalidInstance as exc:
                raise ValidationError(str(exc), where("queries")) from None
            if part.type_count != len(names):
                raise ValidationError("query cells cover every type exactly once", where("queries"))
            specs.append(QuerySpec("partition", tuple(tuple(names[i] for i in c) for c in part.cells)))
        elif q["kind"] == "simulation":
            if set(q) != {"kind", "policy", "message"}:
                raise ValidationError("simulation queries have kind, policy and message", where("queries"))
            pol = _matrix(q["policy"], where("queries"))
            if len(pol) != len(states) or any(len(r) != len(actions) for r in pol):
                raise ValidationError("simulation policy is states x actions", where("queries"))
            m = action_index(q["message"])
            try:
                part = induced_partition(instance, SimulationQuery(MessagingPolicy(pol), m))
            except InvalidInstance as exc:
                raise ValidationError(str(exc), where("queries")) from None
            specs.append(QuerySpec("simulation", policy=pol, message=actions[m]))
        else:
            raise ValidationError(f"unknown query kind {q['kind']}", where("queries"))
        parts.append(part)
    budget = doc.get("budget")
    if budget is not None and (isinstance(budget, bool) or not isinstance(budget, int) or budget < 0):
        raise ValidationError("budget is a non-negative integer", where("budget"))
    costs = doc.get("costs")
    if costs is not None:
        costs = _vector(costs, where("costs"))
        if len(costs) != len(parts):
            raise ValidationError("one cost per query", where("costs"))
        if any(c < 0 for c in costs):
            raise ValidationError("costs are non-negative", where("costs"))
    flags = doc.get("flags") or {}
    if not isinstance(flags, dict) or set(flags) - {"binary"}:
        raise ValidationError("flags only supports binary", where("flags"))
    binary = bool(flags.get("binary", False))
    if binary:
        if not is_binary(instance):
            raise ValidationError("binary utilities are canonical", where("sender_utility"))
        if not is_normalized_binary(instance):
            raise ValidationError("binary types are sorted by decreasing belief, all at most 1/2", where("types"))
    return Scenario(
        states, actions, us, ur, tuple(names), tuple(beliefs), prior, tuple(specs),
        budget, costs, binary, instance, tuple(parts),
    )


def resolve_path(path) -> Path:
    """Use ``path`` if it exists, else look for a bundled fixture of that name."""
    p = Path(path)
    if p.exists():
        return p
    bundled = DATA_DIR / p.name
    if bundled.exists():
        return bundled
    raise ParseError(None, f"cannot read scenario {path}")


def parse_scenario(path) -> Scenario:
    return parse_scenario_text(resolve_path(path).read_text())


_PLAIN = re.compile(r"^[A-Za-z_][A-Za-z0-9_.+-]*$")


def _label(s):
    if _PLAIN.match(s) and yaml.safe_load(s) == s:
        return s
    return json.dumps(s)


def _num(x):
    x = float(x)
    return "0" if x == 0 else repr(x)


def _row(v):
    return "[" + ", ".join(_num(x) for x in v) + "]"


def _labels_out(v):
    return "[" + ", ".join(_label(s) for s in v) + "]"


def serialize_scenario(sc: Scenario, comment: str | None = None) -> str:
    out = []
    if comment:
        out.extend("# " + line for line in comment.splitlines())
    out.append(f"states: {_labels_out(sc.states)}")
    out.append(f"actions: {_labels_out(sc.actions)}")
    for key in ("sender_utility", "receiver_utility"):
        out.append(f"{key}:")
        out.extend(f"  - {_row(r)}" for r in getattr(sc, key))
    out.append("types:")
    for n, b in zip(sc.type_names, sc.beliefs):
        out.append(f"  - {{name: {_label(n)}, belief: {_row(b)}}}")
    out.append(f"prior: {_row(sc.prior)}")
    if sc.queries:
        out.append("queries:")
        for q in sc.queries:
            if q.kind == "partition":
                cells = "[" + ", ".join(_labels_out(c) for c in q.cells) + "]"
                out.append(f"  - {{kind: partition, cells: {cells}}}")
            else:
                pol = "[" + ", ".join(_row(r) for r in q.policy) + "]"
                out.append(f"  - {{kind: simulation, policy: {pol}, message: {_label(q.message)}}}")
    else:
        out.append("queries: []")
    if sc.budget is not None:
        out.append(f"budget: {sc.budget}")
    if sc.costs is not None:
        out.append(f"costs: {_row(sc.costs)}")
    if sc.binary:
        out.append("flags: {binary: true}")
    return "\n".join(out) + "\n"


def scenario_from_instance(instance: BPInstance, queries=(), budget=None, costs=None,
                           binary=None, states=None, actions=None) -> Scenario:
    """Wrap a library instance and partition queries as a scenario."""
    d, A = instance.state_count, instance.action_count
    states = tuple(states or (f"s{i}" for i in range(d)))
    actions = tuple(actions or (f"a{i}" for i in range(A)))
    names = instance.names
    specs = tuple(
        QuerySpec("partition", tuple(tuple(names[i] for i in c) for c in q.cells)) for q in queries
    )
    text = serialize_scenario(Scenario(
        states, actions,
        tuple(tuple(float(x) for x in r) for r in instance.sender_utility),
        tuple(tuple(float(x) for x in r) for r in instance.receiver_utility),
        names, tuple(tuple(float(x) for x in b) for b in instance.beliefs),
        tuple(float(x) for x in instance.prior), specs, budget,
        None if costs is None else tuple(float(c) for c in costs),
        is_normalized_binary(instance) if binary is None else binary,
    ))
    return parse_scenario_text(text)
