"""Synchronous-round distributed consensus iteration.

One round, per agent i:

    y_i  <-  prox_step(g_i, lambda_i - rho * t_i, y_i, eta)
    broadcast y_i, recompute  t_i = sum_j w_ij (y_i - y_j)
    lambda_i  <-  lambda_i - rho * t_i

which in stacked form reads

    y+      = argmin_Y { G(y) - <lambda - rho*W*y_now, y> + (eta/2)||y - y_now||^2 }
    lambda+ = lambda - rho * W * y+

The update is valid (and the analysis metrics positive definite) when
eta*I - rho*W is positive definite, i.e. eta > rho * lambda_max;
`validate_params` certifies that.  `dense_step` is an intentionally
independent re-implementation used as an equivalence oracle in tests:
it forms the dense lifted Laplacian and solves the stacked subproblem
with one vectorized formula instead of per-agent message passing.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import (
    CustomSolverFailure,
    DimensionMismatch,
    InfeasibleInitialPoint,
    LagranetError,
    LambdaSumNonzero,
    StepSizeViolation,
    UncertifiedParams,
)
from .graph import Network, SpectralData, laplacian_apply
from .localprox import (
    KIND_QUADRATIC_BOX,
    LocalProblem,
    problem_feasible,
    prox_step,
)

CERT_MARGIN = 1e-9      # relative margin required above rho*lambda_max
SUGGEST_MARGIN = 0.05   # relative margin used by suggest_eta


@dataclass(frozen=True)
class AlgoParams:
    """Penalty rho, prox scalar eta, and the positivity certificate."""

    rho: float
    eta: float
    certified: bool
    lambda_max: float


def validate_params(net: Network, spec: SpectralData, rho: float, eta: float) -> AlgoParams:
    """Certify that eta*I - rho*W is positive definite.

    Raises StepSizeViolation carrying (eta, rho*lambda_max) otherwise.
    """
    if rho <= 0.0:
        raise LagranetError(f"rho must be > 0, got {rho}")
    bound = rho * spec.lambda_max
    if eta <= bound * (1.0 + CERT_MARGIN) or eta <= 0.0:
        raise StepSizeViolation(eta, bound)
    return AlgoParams(rho=float(rho), eta=float(eta), certified=True,
                      lambda_max=float(spec.lambda_max))


def suggest_eta(spec: SpectralData, rho: float) -> float:
    """eta sitting 5% above the certification boundary rho*lambda_max.

    A degenerate single-node network has lambda_max = 0 and any
    positive eta certifies; return 1.0 there.
    """
    bound = rho * spec.lambda_max
    if bound <= 0.0:
        return 1.0
    return bound * (1.0 + SUGGEST_MARGIN)


@dataclass(frozen=True)
class StackedState:
    """Iterates at round k: stacked y, multipliers lambda, cached t = W y."""

    k: int
    y: np.ndarray
    lam: np.ndarray
    t: np.ndarray


def lambda_block_sum(net: Network, lam: np.ndarray) -> np.ndarray:
    """Sum of the per-agent multiplier blocks (should stay ~0)."""
    return lam.reshape(net.n, net.p).sum(axis=0)


def init_state(net: Network, y0=None, lambda0=None,
               problems: Optional[Sequence[LocalProblem]] = None) -> StackedState:
    """State at k = 0, with the initialization round's aggregate t = W y0.

    lambda0 must have blocks summing to the zero vector (the canonical
    choice is all zeros); y0 must be feasible for each agent's set when
    `problems` is supplied.
    """
    dim = net.stacked_dim
    y0 = np.zeros(dim) if y0 is None else np.asarray(y0, dtype=float).copy()
    lam0 = np.zeros(dim) if lambda0 is None else np.asarray(lambda0, dtype=float).copy()
    if y0.shape != (dim,) or lam0.shape != (dim,):
        raise DimensionMismatch(
            f"y0/lambda0 must have shape ({dim},), got {y0.shape} and {lam0.shape}"
        )
    blocks = lam0.reshape(net.n, net.p)
    scale = 1.0 + float(np.max(np.linalg.norm(blocks, axis=1), initial=0.0))
    if np.linalg.norm(blocks.sum(axis=0)) > 1e-10 * scale:
        raise LambdaSumNonzero(
            f"multiplier blocks sum to {blocks.sum(axis=0)}, expected zero"
        )
    if problems is not None:
        ys = y0.reshape(net.n, net.p)
        for i, prob in enumerate(problems):
            if not problem_feasible(prob, ys[i]):
                raise InfeasibleInitialPoint(f"y0 block {i} violates its constraint set")
    return StackedState(k=0, y=y0, lam=lam0, t=laplacian_apply(net, y0))


class CompiledProblems:
    """Per-run precompiled view of the agents' problems.

    When every agent is a quadratic_box the prox sweep vectorizes into
    one stacked clip; otherwise agents are solved in a loop.  Both paths
    produce the same floats for the same inputs.
    """

    def __init__(self, problems: Sequence[LocalProblem], net: Network):
        problems = list(problems)
        if len(problems) != net.n:
            raise DimensionMismatch(
                f"expected {net.n} local problems, got {len(problems)}"
            )
        for i, prob in enumerate(problems):
            if prob.p != net.p:
                raise DimensionMismatch(
                    f"problem {i} has p={prob.p}, network has p={net.p}"
                )
        self.problems = problems
        self.all_quadratic = all(p.kind == KIND_QUADRATIC_BOX for p in problems)
        if self.all_quadratic:
            self.q_diag = np.concatenate([p.q_diag for p in problems])
            self.q = np.concatenate([p.q for p in problems])
            self.lo = np.concatenate([p.lo for p in problems])
            self.hi = np.concatenate([p.hi for p in problems])

    def prox_all(self, anchor: np.ndarray, linear: np.ndarray, eta: float,
                 net: Network) -> np.ndarray:
        if self.all_quadratic:
            y = (eta * anchor + linear - self.q) / (self.q_diag + eta)
            return np.clip(y, self.lo, self.hi)
        out = np.empty_like(anchor)
        a2 = anchor.reshape(net.n, net.p)
        l2 = linear.reshape(net.n, net.p)
        o2 = out.reshape(net.n, net.p)
        for i, prob in enumerate(self.problems):
            try:
                o2[i] = prox_step(prob, l2[i], a2[i], eta)
            except CustomSolverFailure as exc:
                if exc.agent is None:
                    exc.agent = i
                raise
        return out


def compile_problems(problems, net: Network) -> CompiledProblems:
    if isinstance(problems, CompiledProblems):
        return problems
    return CompiledProblems(problems, net)


def step(state: StackedState, problems, net: Network, params: AlgoParams) -> StackedState:
    """One synchronous round; exactly one fresh y broadcast per round."""
    if not params.certified:
        raise UncertifiedParams("step requires params certified by validate_params")
    compiled = compile_problems(problems, net)
    linear = state.lam - params.rho * state.t
    y_next = compiled.prox_all(state.y, linear, params.eta, net)
    t_next = laplacian_apply(net, y_next)
    lam_next = state.lam - params.rho * t_next
    return StackedState(k=state.k + 1, y=y_next, lam=lam_next, t=t_next)


def dense_step(state: StackedState, problems, net: Network, params: AlgoParams,
               w_dense: Optional[np.ndarray] = None) -> StackedState:
    """Equivalence oracle: the same round from the dense stacked form.

    Uses an explicit dense lifted Laplacian for every product and a
    single stacked clip for the subproblem, so it shares no aggregation
    code with `step`.  Quadratic-box agents only.
    """
    if not params.certified:
        raise UncertifiedParams("dense_step requires certified params")
    compiled = compile_problems(problems, net)
    if not compiled.all_quadratic:
        raise LagranetError("dense_step supports quadratic_box agents only")
    w = net.kron_laplacian_dense() if w_dense is None else w_dense
    linear = state.lam - params.rho * (w @ state.y)
    y_next = np.clip(
        (params.eta * state.y + linear - compiled.q) / (compiled.q_diag + params.eta),
        compiled.lo, compiled.hi,
    )
    t_next = w @ y_next
    lam_next = state.lam - params.rho * t_next
    return StackedState(k=state.k + 1, y=y_next, lam=lam_next, t=t_next)


@dataclass
class ConsensusTrace:
    """Complete iterate history of one run."""

    net: Network
    problems: list
    params: AlgoParams
    states: list

    kind = "consensus"

    def __len__(self):
        return len(self.states)

    @property
    def ys(self) -> np.ndarray:
        return np.stack([s.y for s in self.states])

    @property
    def lams(self) -> np.ndarray:
        return np.stack([s.lam for s in self.states])


def run(net: Network, problems, params: AlgoParams, iters: int,
        y0=None, lambda0=None,
        sink: Optional[Callable[[StackedState], None]] = None) -> ConsensusTrace:
    """Run `iters` rounds from the given initialization.

    The trace includes the initial state, so it has iters + 1 entries.
    `sink`, when given, is invoked once per freshly produced state.
    There is no randomness anywhere in the loop: identical inputs give
    bit-identical traces.
    """
    if iters < 0:
        raise LagranetError(f"iters must be >= 0, got {iters}")
    compiled = compile_problems(problems, net)
    state = init_state(net, y0=y0, lambda0=lambda0, problems=compiled.problems)
    states = [state]
    for _ in range(iters):
        state = step(state, compiled, net, params)
        if sink is not None:
            sink(state)
        states.append(state)
    return ConsensusTrace(net=net, problems=compiled.problems, params=params,
                          states=states)
