"""Command-line front end.

Every command reads a scenario file (bundled fixtures may be named without a
path), calls the library and prints ``key: value`` lines.  Values are printed
with ``repr`` so they match the library result exactly; CSV output uses 9
significant digits.
"""
from __future__ import annotations

import argparse
import csv
import io
import itertools
import sys
from pathlib import Path

import numpy as np
import yaml

from .adaptive import AdaptivePlan, evaluate_plan, plan_adaptive, plan_adaptive_costly
from .commitment import (
    identified_type,
    implements_check,
    solve_commitment,
    state_informed_identification,
    type_optimal_policy,
)
from .errors import InputError, InvalidInstance, NotBinary, PersuasionError
from .messaging import SubsetValuer, cutoff_curve, optimal_policy_binary, optimal_policy_general
from .model import BPInstance, binary_probs, is_binary, is_bic, random_binary_instance
from .nonadaptive import (
    brute_force_nonadaptive,
    decide_nonadaptive,
    full_information_value,
    greedy,
    greedy_costly,
    make_greedy_trap,
    make_parity_counterexample,
    marginal_gain,
    plan_nonadaptive_binary,
    plan_nonadaptive_binary_costly,
    reduce_set_cover,
)
from .oracle import cut_position, cut_queries, nonadaptive_partition
from .scenario import _number, parse_scenario, scenario_from_instance, serialize_scenario

COMMANDS = (
    "solve-messaging", "adaptive-plan", "nonadaptive-plan", "greedy", "evaluate",
    "figure-data", "reduce-setcover", "counterexample", "commitment",
)


def _v(x):
    return repr(float(x))


def _g(x):
    return format(float(x), ".9g")


def _set(items):
    return "{" + ",".join(str(i) for i in items) + "}"


def _cells(names, cells):
    return " | ".join("{" + ",".join(names[i] for i in c) + "}" for c in cells)


class _Planning:
    """Deduplicated partition queries of a scenario, with labels and costs."""

    def __init__(self, sc):
        self.sc = sc
        self.instance = sc.instance
        rows = sc.planning_queries()
        self.queries = [q for q, _, _ in rows]
        self.costs = [c for _, c, _ in rows]
        self.origin = [i for _, _, i in rows]
        T = self.instance.type_count
        self.cuts = [cut_position(q) if sc.binary else None for q in self.queries]
        self.full_cuts = (
            sc.binary and T > 1 and sorted(c for c in self.cuts if c) == list(range(1, T))
            and all(self.cuts)
        )

    def label(self, k):
        c = self.cuts[k]
        return f"cut:{c}" if c else f"q{self.origin[k]}"

    def resolve(self, token):
        """Planning index for ``--query`` (scenario index or ``cut:c``)."""
        token = str(token).strip()
        if token.startswith("cut:"):
            c = int(token[4:])
            if c in self.cuts:
                return self.cuts.index(c)
            if self.sc.binary:
                raise InvalidInstance(f"the scenario has no query cutting after position {c}")
            raise NotBinary("cut:c queries need a binary scenario")
        i = int(token)
        if not 0 <= i < len(self.sc.partitions):
            raise InvalidInstance(f"query index {i} out of range")
        target = self.sc.partitions[i].cells
        return next(k for k, q in enumerate(self.queries) if q.cells == target)


def _read_costs(path, n):
    try:
        doc = yaml.safe_load(Path(path).read_text())
    except (OSError, yaml.YAMLError) as exc:
        raise InvalidInstance(f"cannot read costs from {path}: {exc}") from None
    if isinstance(doc, str):
        doc = doc.split()
    if not isinstance(doc, list):
        doc = [doc]
    costs = [_number(c, str(path)) for c in doc]
    if len(costs) == 1:
        costs = costs * n
    if len(costs) != n:
        raise InvalidInstance(f"{len(costs)} costs for {n} queries")
    return costs


def _costs(args, plan):
    """Per-planning-query costs if a costly run is requested, else ``None``."""
    n = len(plan.queries)
    if args.cost is not None:
        return [float(args.cost)] * n
    if args.costs is not None:
        raw = _read_costs(args.costs, len(plan.sc.partitions))
        return [raw[i] for i in plan.origin]
    if args.budget is None and plan.sc.budget is None and plan.sc.costs is not None:
        return list(plan.costs)
    return None


def _budget(args, sc):
    K = args.budget if args.budget is not None else sc.budget
    if K is None:
        raise InvalidInstance("a budget is required (--budget or the scenario's budget)")
    if K < 0:
        raise InvalidInstance("budget must be non-negative")
    return K


def _tree_lines(plan: AdaptivePlan, names, labels, indent=0):
    pad = "  " * indent
    head = f"{pad}{_set(names[i] for i in plan.subset)}"
    if plan.is_stop:
        return [f"{head} stop value={_g(plan.value)}"]
    out = [f"{head} ask {labels[plan.query]} value={_g(plan.value)}"]
    for _, child in plan.children:
        out.extend(_tree_lines(child, names, labels, indent + 1))
    return out


def cmd_solve_messaging(args, out):
    sc = parse_scenario(args.scenario)
    inst = sc.instance
    names = inst.names
    if sc.binary:
        pol, value = optimal_policy_binary(inst)
        out.write("method: cutoff\n")
        out.write(f"value: {_v(value)}\n")
        out.write(f"cutoff: {names[pol.cutoff]}\n")
        out.write(f"send_prob_state0: {_v(pol.send_prob_state0)}\n")
        menu = pol.as_menu()
    else:
        menu, value = optimal_policy_general(inst)
        out.write("method: menu-lp\n")
        out.write(f"value: {_v(value)}\n")
    ok, bad = is_bic(inst, menu.subset, menu, args.tol)
    out.write(f"bic: {'ok' if ok else 'violated ' + str(bad)}\n")
    for j, m in enumerate(menu.messages):
        rec = ",".join(f"{names[t]}->{sc.actions[a]}" for t, a in zip(menu.subset, m))
        probs = " ".join(_g(x) for x in menu.sigma[:, j])
        out.write(f"message {j}: [{rec}] sigma={probs}\n")
    return 0


def cmd_adaptive_plan(args, out):
    sc = parse_scenario(args.scenario)
    plan = _Planning(sc)
    costs = _costs(args, plan)
    if costs is not None:
        tree = plan_adaptive_costly(sc.instance, plan.queries, costs)
        out.write("mode: costly\n")
    else:
        K = _budget(args, sc)
        tree = plan_adaptive(sc.instance, plan.queries, K)
        out.write(f"mode: budget {K}\n")
    out.write(f"value: {_v(tree.value)}\n")
    out.write(f"queries: {tree.query_count()}\n")
    out.write(f"depth: {tree.depth()}\n")
    labels = [plan.label(k) for k in range(len(plan.queries))]
    for line in _tree_lines(tree, sc.instance.names, labels):
        out.write(line + "\n")
    return 0


def _report_nonadaptive(out, plan, res, chosen_are_cuts):
    if chosen_are_cuts:
        out.write(f"cuts: {_set(res.chosen)}\n")
    else:
        out.write(f"queries: {_set(plan.label(k) for k in res.chosen)}\n")
    out.write(f"value: {_v(res.value)}\n")
    if res.cost:
        out.write(f"cost: {_v(res.cost)}\n")
    names = plan.instance.names
    out.write(f"cells: {_cells(names, [c for c, _ in res.cell_values])}\n")


def cmd_nonadaptive_plan(args, out):
    sc = parse_scenario(args.scenario)
    plan = _Planning(sc)
    costs = _costs(args, plan)
    if costs is not None:
        if not plan.full_cuts:
            raise InvalidInstance("costly non-adaptive planning needs a binary scenario with every cut")
        by_cut = [costs[plan.cuts.index(c)] for c in range(1, sc.instance.type_count)]
        res = plan_nonadaptive_binary_costly(sc.instance, by_cut)
        out.write("method: interval-dp costly\n")
        _report_nonadaptive(out, plan, res, True)
        return 0
    K = _budget(args, sc)
    if plan.full_cuts:
        res = plan_nonadaptive_binary(sc.instance, K)
        out.write("method: interval-dp\n")
        _report_nonadaptive(out, plan, res, True)
    else:
        res = brute_force_nonadaptive(sc.instance, plan.queries, K)
        out.write("method: brute-force\n")
        _report_nonadaptive(out, plan, res, False)
    return 0


def cmd_greedy(args, out):
    sc = parse_scenario(args.scenario)
    plan = _Planning(sc)
    if args.cost is not None:
        res = greedy_costly(sc.instance, plan.queries, float(args.cost))
        out.write(f"mode: cost {_v(args.cost)}\n")
    else:
        K = _budget(args, sc)
        res = greedy(sc.instance, plan.queries, K)
        out.write(f"mode: budget {K}\n")
    out.write(f"order: {' '.join(plan.label(k) for k in res.chosen)}\n")
    out.write(f"value: {_v(res.value)}\n")
    if res.cost:
        out.write(f"cost: {_v(res.cost)}\n")
    return 0


def sequential_plan(instance: BPInstance, queries, order, costs=None):
    """Plan that asks ``order`` in sequence on every branch."""
    valuer = SubsetValuer(instance)

    def build(s, k):
        m = instance.mass(s)
        if k == len(order):
            return AdaptivePlan(s, 0, None, None, (), valuer(s) / m if m > 0 else 0.0, m)
        qi = order[k]
        q = queries[qi]
        kids = tuple((c, build(c, k + 1)) for c in q.split(s))
        cost = costs[qi] if costs is not None else 0.0
        total = sum(child.unnormalized_value for _, child in kids) - cost * m
        return AdaptivePlan(s, len(order) - k, qi, q, kids, total / m if m > 0 else 0.0, m, cost)

    return build(instance.full_set(), 0)


def cmd_evaluate(args, out):
    sc = parse_scenario(args.scenario)
    plan = _Planning(sc)
    order = [plan.resolve(t) for t in (args.query or [])]
    costs = _costs(args, plan)
    tree = sequential_plan(sc.instance, plan.queries, order, costs)
    value = evaluate_plan(sc.instance, tree)
    out.write(f"asked: {' '.join(plan.label(k) for k in order) or '(none)'}\n")
    out.write(f"value: {_v(value)}\n")
    part = nonadaptive_partition([plan.queries[k] for k in order], sc.instance.type_count)
    out.write(f"cells: {_cells(sc.instance.names, part.cells)}\n")
    return 0


def _csv_text(header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_g(x) if isinstance(x, (float, np.floating)) else x for x in r])
    return buf.getvalue()


def utility_vs_cutoff_rows(sc, query=None):
    """Rows ``(cutoff, u_no_query, u_after_query, best)`` for a binary scenario.

    ``u_after_query`` keeps cutoff ``i`` inside the cell that contains type ``i``
    and messages optimally in the other cells.  ``query`` is a planning index;
    by default the best single query is used.
    """
    inst = sc.instance
    if not sc.binary:
        raise NotBinary("figure data needs a binary scenario")
    plan = _Planning(sc)
    valuer = SubsetValuer(inst)
    T = inst.type_count
    ps, prior = binary_probs(inst), inst.prior
    base = cutoff_curve(ps, prior)
    if query is None and plan.queries:
        scores = [valuer.partition_value(q.cells) for q in plan.queries]
        query = int(np.argmax(scores))
    cells = plan.queries[query].cells if query is not None else (inst.full_set(),)
    after = np.empty(T)
    for c in cells:
        idx = list(c)
        local = cutoff_curve(ps[idx], prior[idx])
        rest = sum(valuer(o) for o in cells if o != c)
        for k, t in enumerate(idx):
            after[t] = local[k] + rest
    best = int(np.argmax(base))
    rows = [(t + 1, float(base[t]), float(after[t]), int(t == best)) for t in range(T)]
    return rows, query


def submodularity_rows(sc, query):
    """Marginal gain of ``query`` over every subset of the other queries."""
    inst = sc.instance
    if not sc.binary:
        raise NotBinary("figure data needs a binary scenario")
    plan = _Planning(sc)
    valuer = SubsetValuer(inst)
    others = [k for k in range(len(plan.queries)) if k != query]

    def name(k):
        c = plan.cuts[k]
        return str(c) if c else f"q{plan.origin[k]}"

    rows = []
    for size in range(len(others) + 1):
        for base in itertools.combinations(others, size):
            gain = marginal_gain(inst, list(base), query, plan.queries, valuer)
            label = "{" + " ".join(name(k) for k in base) + "}"
            rows.append((label, plan.label(query), float(gain)))
    return rows


def cmd_figure_data(args, out):
    sc = parse_scenario(args.scenario)
    plan = _Planning(sc)
    query = plan.resolve(args.query[-1]) if args.query else None
    if args.kind == "utility-vs-cutoff":
        rows, _ = utility_vs_cutoff_rows(sc, query)
        text = _csv_text(["cutoff", "u_no_query", "u_after_query", "best"], rows)
    else:
        if query is None:
            if not plan.queries:
                raise InvalidInstance("the scenario has no queries")
            scores = [SubsetValuer(sc.instance).partition_value(q.cells) for q in plan.queries]
            query = int(np.argmax(scores))
        text = _csv_text(["base", "query", "gain"], submodularity_rows(sc, query))
    if args.out:
        Path(args.out).write_bytes(text.encode())
        out.write(f"wrote: {args.out}\n")
    else:
        out.write(text)
    return 0


def _split_list(text, sep):
    return [s.strip() for s in text.split(sep) if s.strip()]


def brute_force_set_cover(universe, subsets, K) -> bool:
    target = set(universe)
    for k in range(min(K, len(subsets)) + 1):
        for combo in itertools.combinations(subsets, k):
            if set().union(*map(set, combo)) >= target:
                return True
    return False


def cmd_reduce_setcover(args, out):
    universe = _split_list(args.universe, ",")
    subsets = [_split_list(s, ",") for s in _split_list(args.subsets, ";")]
    K = args.budget
    if K is None or K < 0:
        raise InvalidInstance("--budget must be a non-negative integer")
    di = reduce_set_cover(universe, subsets, K)
    decision = decide_nonadaptive(di)
    best = brute_force_nonadaptive(di.instance, di.queries, K)
    out.write(f"types: {di.instance.type_count}\n")
    out.write(f"target: {_v(di.target)}\n")
    out.write(f"best: {_v(best.value)}\n")
    out.write(f"decision: {decision.value}\n")
    out.write(f"set-cover: {'YES' if brute_force_set_cover(universe, subsets, K) else 'NO'}\n")
    if args.out:
        sc = scenario_from_instance(di.instance, di.queries, budget=K)
        Path(args.out).write_text(serialize_scenario(sc, f"set cover target {_v(di.target)}"))
        out.write(f"wrote: {args.out}\n")
    return 0


def submodularity_violation(instance, queries, tol=1e-9):
    """First ``(A, B, q)`` with ``A`` inside ``B`` and gain(q | A) < gain(q | B) - tol."""
    valuer = SubsetValuer(instance)
    idx = range(len(queries))
    for q in reversed(idx):
        rest = [i for i in idx if i != q]
        for size_b in range(len(rest) + 1):
            for B in itertools.combinations(rest, size_b):
                gb = marginal_gain(instance, list(B), q, queries, valuer)
                for size_a in range(size_b + 1):
                    for A in itertools.combinations(B, size_a):
                        ga = marginal_gain(instance, list(A), q, queries, valuer)
                        if ga < gb - tol:
                            return A, B, q, ga, gb
    return None


def cmd_counterexample(args, out):
    if args.random is not None:
        rng = np.random.default_rng(args.seed)
        bad = 0
        for _ in range(args.random):
            T = int(rng.integers(2, 7))
            inst = random_binary_instance(rng, T)
            if submodularity_violation(inst, cut_queries(T)) is not None:
                bad += 1
        out.write(f"instances: {args.random}\n")
        out.write(f"violations: {bad}\n")
        return 0
    if args.L is None:
        raise InvalidInstance("--L is required")
    N = args.penalty
    if args.greedy_trap:
        inst, queries = make_greedy_trap(args.L, N)
    else:
        inst, queries = make_parity_counterexample(args.L, N)
    n_bits = args.L
    labels = [f"bit{j + 1}" for j in range(n_bits)]
    labels += [f"eq:{inst.names[j]}" for j in range(len(queries) - n_bits)]
    valuer = SubsetValuer(inst)
    out.write(f"types: {inst.type_count}\n")
    out.write(f"full-information: {_v(full_information_value(inst, valuer))}\n")
    out.write(f"no-query: {_v(valuer(inst.full_set()))}\n")
    if args.check_submodularity:
        hit = submodularity_violation(inst, queries[:n_bits] if not args.greedy_trap else queries)
        if hit is None:
            out.write("submodular: yes\n")
        else:
            A, B, q, ga, gb = hit
            out.write("submodular: no\n")
            out.write(f"triple: A={_set(labels[i] for i in A)} B={_set(labels[i] for i in B)} q={labels[q]}\n")
            out.write(f"gain-given-A: {_v(ga)}\n")
            out.write(f"gain-given-B: {_v(gb)}\n")
    if args.greedy_trap:
        K = args.budget if args.budget is not None else n_bits
        g = greedy(inst, queries, K)
        opt = brute_force_nonadaptive(inst, queries, K, valuer)
        out.write(f"greedy: {' '.join(labels[i] for i in g.chosen)} value={_v(g.value)}\n")
        out.write(f"optimal: {' '.join(labels[i] for i in opt.chosen)} value={_v(opt.value)}\n")
    if args.out:
        sc = scenario_from_instance(
            inst, queries, budget=args.budget if args.budget is not None else n_bits,
            states=[f"w{s}" for s in inst.names] + ["empty"],
            actions=[f"g{s}" for s in inst.names] + ["empty"],
        )
        note = f"parity instance, L={args.L}, penalty {_v(N if N is not None else 2 ** args.L)}"
        Path(args.out).write_text(serialize_scenario(sc, note))
        out.write(f"wrote: {args.out}\n")
    return 0


def cmd_commitment(args, out):
    sc = parse_scenario(args.scenario)
    inst = sc.instance
    names = inst.names
    if is_binary(inst) and inst.type_count == 3:
        ps = binary_probs(inst)
        policies = [type_optimal_policy(p) for p in ps]
        combined = solve_commitment(inst, policies, args.tol)
        q0, q1 = combined.query_policy.queries
        out.write(f"state-0 query: {_cells(names, q0.cells)}\n")
        out.write(f"state-1 query: {_cells(names, q1.cells)}\n")
        for t in range(3):
            ok = implements_check(combined, policies[t], t, args.tol)
            out.write(f"implements {names[t]}: {'yes' if ok else 'no'}\n")
        out.write(f"bic-violations: {len(combined.bic_violations(args.tol))}\n")
        out.write(f"value: {_v(combined.expected_utility())}\n")
        out.write(f"full-information: {_v(full_information_value(inst))}\n")
        k1 = plan_adaptive(inst, cut_queries(3), 1)
        out.write(f"no-commitment-k1: {_v(k1.value)}\n")
        return 0
    policy = state_informed_identification(inst)
    ok = True
    for w, q in enumerate(policy.queries):
        gone = ",".join(names[t] for t in policy.eliminated[w]) or "-"
        out.write(f"state {sc.states[w]}: eliminate {gone}; query {_cells(names, q.cells)}\n")
    for t in range(inst.type_count):
        for w in range(inst.state_count):
            if inst.beliefs[t, w] <= 0:
                continue
            ok &= identified_type(policy, t, w) == (t,)
    out.write(f"identified: {'yes' if ok else 'no'}\n")
    return 0


HANDLERS = {
    "solve-messaging": cmd_solve_messaging,
    "adaptive-plan": cmd_adaptive_plan,
    "nonadaptive-plan": cmd_nonadaptive_plan,
    "greedy": cmd_greedy,
    "evaluate": cmd_evaluate,
    "figure-data": cmd_figure_data,
    "reduce-setcover": cmd_reduce_setcover,
    "counterexample": cmd_counterexample,
    "commitment": cmd_commitment,
}


def build_parser():
    parser = argparse.ArgumentParser(prog="persuasion", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, scenario=True):
        if scenario:
            p.add_argument("scenario", help="scenario file or bundled fixture name")
        p.add_argument("--tol", type=float, default=1e-7)
        return p

    def planning(p):
        p.add_argument("--budget", type=int)
        g = p.add_mutually_exclusive_group()
        g.add_argument("--cost", type=float, help="uniform per-query cost")
        g.add_argument("--costs", help="file with one cost per scenario query")
        return p

    common(sub.add_parser("solve-messaging", help="optimal messaging with no queries"))
    planning(common(sub.add_parser("adaptive-plan", help="optimal adaptive plan")))
    planning(common(sub.add_parser("nonadaptive-plan", help="optimal non-adaptive query set")))
    p = common(sub.add_parser("greedy", help="greedy non-adaptive query set"))
    p.add_argument("--budget", type=int)
    p.add_argument("--cost", type=float)
    p = planning(common(sub.add_parser("evaluate", help="value of asking queries in order")))
    p.add_argument("--query", action="append", help="scenario query index or cut:c (repeatable)")
    p = sub.add_parser("figure-data", help="CSV data for the cutoff and gain figures")
    p.add_argument("kind", choices=("utility-vs-cutoff", "submodularity"))
    common(p)
    p.add_argument("--query", action="append", help="scenario query index or cut:c")
    p.add_argument("--out")
    p = common(sub.add_parser("reduce-setcover", help="set-cover reduction instance"), scenario=False)
    p.add_argument("--universe", required=True, help="comma-separated elements")
    p.add_argument("--subsets", required=True, help="subsets separated by ';', elements by ','")
    p.add_argument("--budget", type=int)
    p.add_argument("--out")
    p = common(sub.add_parser("counterexample", help="parity instance and submodularity checks"), scenario=False)
    p.add_argument("--L", type=int)
    p.add_argument("--penalty", type=float)
    p.add_argument("--check-submodularity", action="store_true")
    p.add_argument("--greedy-trap", action="store_true", help="add one equality query per type")
    p.add_argument("--budget", type=int)
    p.add_argument("--random", type=int, metavar="COUNT", help="check COUNT random binary instances instead")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    common(sub.add_parser("commitment", help="query commitment before the state is drawn"))
    return parser


def run_command(argv, out=None, err=None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    args = build_parser().parse_args(argv)
    try:
        return HANDLERS[args.command](args, out)
    except PersuasionError as exc:
        err.write(f"error: {exc}\n")
        return exc.exit_code
    except (OSError, ValueError) as exc:
        err.write(f"error: {exc}\n")
        return InputError.exit_code


def main(argv=None):
    sys.exit(run_command(sys.argv[1:] if argv is None else argv))


if __name__ == "__main__":
    main()
