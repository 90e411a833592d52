"""Dynamic-programming heuristic search with constraint-propagation pruning.

A solver library pairing state-based dynamic-programming models (dominance,
dual bounds, A*/CABS search) with a small constraint-propagation engine
that prunes states and transitions and strengthens heuristic bounds, plus
three ready models: single-machine weighted tardiness, resource-constrained
project scheduling, and the travelling salesperson with time windows.
"""

from .core import (
    DepthExceeded,
    DpModel,
    InvalidTransition,
    NotBase,
    SolveLimits,
    SolveResult,
    SolveStatus,
    brute_force_value,
    enumerate_state_values,
    evaluate_solution,
)
from .cost import Cost, CostOverflow, INFINITY, add, is_finite
from .cp_engine import (
    AdapterFailure,
    Cumulative,
    Disjunctive,
    DomainStore,
    FiniteSet,
    Interval,
    PrecedenceLe,
    PropagationAdapter,
    SumLe,
    VarDuration,
    ect_envelope,
    edge_finding_disjunctive,
    propagate_fixpoint,
    propagate_once,
    sum_le,
    time_table_cumulative,
)
from .metrics import NegativeGap, RunMetrics, optimality_gap
from .search import (
    BeamConfig,
    PropagationMode,
    Registry,
    SearchNode,
    astar,
    cabs,
    gen_succ_propagation,
    register,
)

__version__ = "0.1.0"

__all__ = [
    "AdapterFailure",
    "BeamConfig",
    "Cost",
    "CostOverflow",
    "Cumulative",
    "DepthExceeded",
    "Disjunctive",
    "DomainStore",
    "DpModel",
    "FiniteSet",
    "INFINITY",
    "Interval",
    "InvalidTransition",
    "NegativeGap",
    "NotBase",
    "PrecedenceLe",
    "PropagationAdapter",
    "PropagationMode",
    "Registry",
    "RunMetrics",
    "SearchNode",
    "SolveLimits",
    "SolveResult",
    "SolveStatus",
    "SumLe",
    "VarDuration",
    "add",
    "astar",
    "brute_force_value",
    "cabs",
    "ect_envelope",
    "edge_finding_disjunctive",
    "enumerate_state_values",
    "evaluate_solution",
    "gen_succ_propagation",
    "is_finite",
    "optimality_gap",
    "propagate_fixpoint",
    "propagate_once",
    "register",
    "sum_le",
    "time_table_cumulative",
]
