"""Distributed consensus optimization and economic dispatch simulator.

A constant-stepsize multiplier-method iteration runs over a weighted
undirected network, with exact per-agent proximal oracles, a dual
adaptation for equality-coupled dispatch, centralized ground-truth
solvers, and a metrics engine that audits last-iterate convergence
certificates at every round.
"""

from .consensus_engine import (
    AlgoParams,
    ConsensusTrace,
    StackedState,
    dense_step,
    init_state,
    run,
    step,
    suggest_eta,
    validate_params,
)
from .dispatch_engine import (
    DispatchProblem,
    DispatchState,
    DispatchTrace,
    dispatch_step,
    dual_local_objective,
    duality_gap,
    feasibility_residual,
    init_dispatch_state,
    make_dispatch_problem,
    run_dispatch,
)
from .graph import (
    Network,
    SpectralData,
    build_network,
    laplacian_apply,
    spectral,
    wdag_quadform,
)
from .localprox import (
    GeneratorCost,
    LocalProblem,
    absolute_value,
    custom,
    dispatch_x_step,
    eval_cost,
    prox_step,
    quadratic_box,
)
from .metrics import (
    EnvelopeReport,
    IterationMetrics,
    compute_iteration_metrics,
    consensus_residual,
    evaluate_envelopes,
    omega_norm,
    omhat_norm,
    w_seminorm,
)
from .oracle import (
    KktReport,
    OracleSolution,
    certify_kkt,
    solve_consensus_quadratic,
    solve_dispatch_bisection,
)

__version__ = "0.1.0"

__all__ = [
    "AlgoParams",
    "ConsensusTrace",
    "DispatchProblem",
    "DispatchState",
    "DispatchTrace",
    "EnvelopeReport",
    "GeneratorCost",
    "IterationMetrics",
    "KktReport",
    "LocalProblem",
    "Network",
    "OracleSolution",
    "SpectralData",
    "StackedState",
    "absolute_value",
    "build_network",
    "certify_kkt",
    "compute_iteration_metrics",
    "consensus_residual",
    "custom",
    "dense_step",
    "dispatch_step",
    "dispatch_x_step",
    "dual_local_objective",
    "duality_gap",
    "eval_cost",
    "evaluate_envelopes",
    "feasibility_residual",
    "init_dispatch_state",
    "init_state",
    "laplacian_apply",
    "make_dispatch_problem",
    "omega_norm",
    "omhat_norm",
    "prox_step",
    "quadratic_box",
    "run",
    "run_dispatch",
    "solve_consensus_quadratic",
    "solve_dispatch_bisection",
    "spectral",
    "step",
    "suggest_eta",
    "validate_params",
    "w_seminorm",
    "wdag_quadform",
]
