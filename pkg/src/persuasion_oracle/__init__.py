"""Bayesian persuasion with a receiver-informed query oracle."""
from .adaptive import (
    AdaptivePlan,
    brute_force_adaptive,
    evaluate_plan,
    plan_adaptive,
    plan_adaptive_costly,
)
from .commitment import (
    StateInformedQueryPolicy,
    SubsetInformedPolicy,
    implements_check,
    make_three_state_example,
    product_commitment,
    solve_commitment,
    state_informed_identification,
    type_optimal_policy,
)
from .errors import (
    CapError,
    InputError,
    NumericalFailure,
    ParseError,
    PersuasionError,
    ValidationError,
)
from .linprog import Infeasible, LinearProgram, Optimal, Unbounded, solve_lp
from .messaging import (
    BinaryCutoffPolicy,
    MenuPolicy,
    SubsetValuer,
    cutoff_curve,
    optimal_policy_binary,
    optimal_policy_general,
)
from .model import (
    Belief,
    BPInstance,
    MessagingPolicy,
    TypeSubset,
    best_response,
    expected_sender_utility,
    is_bic,
    normalize_binary,
)
from .nonadaptive import (
    Decision,
    DecisionInstance,
    NonAdaptivePlanResult,
    brute_force_nonadaptive,
    decide_nonadaptive,
    greedy,
    greedy_costly,
    make_greedy_trap,
    make_parity_counterexample,
    marginal_gain,
    plan_nonadaptive_binary,
    plan_nonadaptive_binary_costly,
    reduce_set_cover,
)
from .oracle import (
    Fail,
    Inside,
    Outside,
    PartitionQuery,
    SimulationQuery,
    answer_query,
    binary_threshold,
    cut_queries,
    enumerate_feasible_subsets,
    find_separating_query,
    find_separating_query_n,
    induced_partition,
    separation_region_test,
)
from .scenario import Scenario, parse_scenario, parse_scenario_text, serialize_scenario
