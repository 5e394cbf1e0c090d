"""Dual-consensus iteration for equality-coupled economic dispatch.

The dispatch problem

    min  sum_i f_i(x_i)   s.t.  sum_i x_i = sum_i d_i,   x_i in [lo_i, hi_i]

is solved through its dual: each agent keeps a local copy y_i of the
shared price, and minimizing the aggregated conjugate objective

    g_i(delta) = f_i*(-delta) + <delta, d_i>

under consensus is exactly the consensus iteration with the inner
maximization folded in.  One round, per agent i:

    jbase_i = y_i + (1/eta) * (-d_i + lambda_i - rho * t_i)
    x_i     = argmin_{xi in box} { f_i(xi) + (eta/2) * ||jbase_i + xi/eta||^2 }
    y_i     = jbase_i + x_i / eta
    broadcast y_i, recompute t_i, then lambda_i <- lambda_i - rho * t_i

Primal iterates stay box-feasible at every round; only the coupling
constraint converges asymptotically.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .consensus_engine import AlgoParams, StackedState, lambda_block_sum
from .errors import (
    DimensionMismatch,
    InfeasibleDemand,
    LagranetError,
    LambdaSumNonzero,
    UncertifiedParams,
)
from .graph import Network, laplacian_apply
from .localprox import GeneratorCost, eval_cost


@dataclass(frozen=True)
class DispatchProblem:
    """Generator costs, virtual demand split, and the network they live on.

    d has one p-dimensional demand block per agent; the blocks must sum
    to the declared total within 1e-9.  Feasibility of the total demand
    against the aggregate box is checked here (violation raises
    InfeasibleDemand); strict interiority -- the Slater condition -- is
    recorded in `slater_strict`.
    """

    costs: tuple
    d: np.ndarray          # (n, p)
    net: Network
    demand: np.ndarray     # (p,) declared total
    slater_strict: bool = field(init=False)
    # stacked per-agent coefficient views used by the vectorized round
    _a: np.ndarray = field(init=False, repr=False, compare=False)
    _b: np.ndarray = field(init=False, repr=False, compare=False)
    _c: np.ndarray = field(init=False, repr=False, compare=False)
    _lo: np.ndarray = field(init=False, repr=False, compare=False)
    _hi: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        n, p = self.net.n, self.net.p
        if len(self.costs) != n:
            raise DimensionMismatch(f"expected {n} costs, got {len(self.costs)}")
        d = np.asarray(self.d, dtype=float).reshape(n, p)
        object.__setattr__(self, "d", d)
        demand = np.atleast_1d(np.asarray(self.demand, dtype=float))
        if demand.shape != (p,):
            raise DimensionMismatch(f"demand must have shape ({p},), got {demand.shape}")
        object.__setattr__(self, "demand", demand)
        split_total = d.sum(axis=0)
        if np.any(np.abs(split_total - demand) > 1e-9 * (1.0 + np.abs(demand))):
            raise LagranetError(
                f"virtual demands sum to {split_total}, declared total is {demand}"
            )
        for name in ("a", "b", "c", "lo", "hi"):
            object.__setattr__(
                self, f"_{name}",
                np.array([getattr(cost, name) for cost in self.costs], dtype=float),
            )
        lo_sum, hi_sum = self._lo.sum(), self._hi.sum()
        if np.any(demand < lo_sum - 1e-9) or np.any(demand > hi_sum + 1e-9):
            raise InfeasibleDemand(
                f"total demand {demand} outside aggregate box [{lo_sum}, {hi_sum}]"
            )
        object.__setattr__(
            self, "slater_strict",
            bool(np.all(demand > lo_sum + 1e-9) and np.all(demand < hi_sum - 1e-9)),
        )

    @property
    def n(self) -> int:
        return self.net.n

    @property
    def p(self) -> int:
        return self.net.p


def make_dispatch_problem(costs: Sequence[GeneratorCost], d, net: Network,
                          demand=None) -> DispatchProblem:
    """Validated DispatchProblem; the total defaults to sum of the split."""
    d = np.asarray(d, dtype=float).reshape(net.n, net.p)
    if demand is None:
        demand = d.sum(axis=0)
    return DispatchProblem(costs=tuple(costs), d=d, net=net, demand=demand)


@dataclass(frozen=True)
class DispatchState:
    """Round-k iterates: box-feasible x, dual copies y, multipliers, t = W y."""

    k: int
    x: np.ndarray
    y: np.ndarray
    lam: np.ndarray
    t: np.ndarray


def init_dispatch_state(prob: DispatchProblem, y0=None, lambda0=None) -> DispatchState:
    """State at k = 0; x starts at the box projection of zero output."""
    n, p = prob.n, prob.p
    dim = n * p
    y0 = np.zeros(dim) if y0 is None else np.asarray(y0, dtype=float).copy()
    lam0 = np.zeros(dim) if lambda0 is None else np.asarray(lambda0, dtype=float).copy()
    if y0.shape != (dim,) or lam0.shape != (dim,):
        raise DimensionMismatch(
            f"y0/lambda0 must have shape ({dim},), got {y0.shape} and {lam0.shape}"
        )
    sums = lambda_block_sum(prob.net, lam0)
    if np.linalg.norm(sums) > 1e-10 * (1.0 + np.abs(lam0).max(initial=0.0)):
        raise LambdaSumNonzero(f"multiplier blocks sum to {sums}, expected zero")
    x0 = np.clip(np.zeros((n, p)), prob._lo[:, None], prob._hi[:, None]).reshape(-1)
    return DispatchState(k=0, x=x0, y=y0, lam=lam0, t=laplacian_apply(prob.net, y0))


def dual_local_objective(cost: GeneratorCost, d_i, delta) -> float:
    """g_i(delta) = f_i*(-delta) + <delta, d_i> in closed form.

    The inner minimum of f_i(x) + <delta, x> over the box is a clipped
    stationary point per coordinate (endpoint selection when a = 0).
    """
    delta = np.atleast_1d(np.asarray(delta, dtype=float))
    d_i = np.broadcast_to(np.asarray(d_i, dtype=float), delta.shape)
    slope = cost.b + delta
    if cost.a > 0.0:
        x = np.clip(-slope / (2.0 * cost.a), cost.lo, cost.hi)
        inner = cost.a * x ** 2 + slope * x + cost.c
    else:
        # linear inner objective: endpoint minimum, value c on a flat slope
        x = np.where(slope > 0.0, cost.lo, cost.hi)
        inner = np.where(slope == 0.0, cost.c, slope * x + cost.c)
    return float(np.sum(-inner + delta * d_i))


def dual_objective_stacked(prob: DispatchProblem, y: np.ndarray) -> float:
    """Sum of each agent's dual objective at its own block of y."""
    blocks = y.reshape(prob.n, prob.p)
    a = prob._a[:, None]
    c = prob._c[:, None]
    lo = prob._lo[:, None]
    hi = prob._hi[:, None]
    slope = prob._b[:, None] + blocks
    quad = a > 0.0
    with np.errstate(invalid="ignore", over="ignore"):
        x_quad = np.clip(-slope / np.where(quad, 2.0 * a, 1.0), lo, hi)
        inner_quad = a * x_quad ** 2 + slope * x_quad + c
        x_flat = np.where(slope > 0.0, lo, hi)
        inner_flat = np.where(slope == 0.0, c, slope * x_flat + c)
    inner = np.where(quad, inner_quad, inner_flat)
    return float(np.sum(-inner + blocks * prob.d))


def total_cost(prob: DispatchProblem, x: np.ndarray) -> float:
    """f(x): total generation cost of the stacked output."""
    blocks = x.reshape(prob.n, prob.p)
    return float(np.sum(prob._a[:, None] * blocks ** 2
                        + prob._b[:, None] * blocks + prob._c[:, None]))


def dispatch_step(state: DispatchState, prob: DispatchProblem,
                  params: AlgoParams) -> DispatchState:
    """One synchronous dispatch round (see module docstring)."""
    if not params.certified:
        raise UncertifiedParams("dispatch_step requires certified params")
    n, p = prob.n, prob.p
    eta, rho = params.eta, params.rho
    y = state.y.reshape(n, p)
    lam = state.lam.reshape(n, p)
    t = state.t.reshape(n, p)
    jbase = y + (-prob.d + lam - rho * t) / eta
    x_next = np.clip(
        -(prob._b[:, None] + jbase) / (2.0 * prob._a[:, None] + 1.0 / eta),
        prob._lo[:, None], prob._hi[:, None],
    )
    y_next = jbase + x_next / eta
    t_next = laplacian_apply(prob.net, y_next.reshape(-1))
    lam_next = state.lam - rho * t_next
    return DispatchState(k=state.k + 1, x=x_next.reshape(-1),
                         y=y_next.reshape(-1), lam=lam_next, t=t_next)


def feasibility_residual(state: DispatchState, prob: DispatchProblem) -> float:
    """Coupling-constraint violation ||sum_i (x_i - d_i)||."""
    mism = state.x.reshape(prob.n, prob.p).sum(axis=0) - prob.d.sum(axis=0)
    return float(np.linalg.norm(mism))


def duality_gap(state: DispatchState, prob: DispatchProblem) -> float:
    """G(y_bar) + f(x) at the network-average dual iterate y_bar.

    Zero only at optimality with the dual copies in consensus.
    """
    ybar = state.y.reshape(prob.n, prob.p).mean(axis=0)
    g_total = sum(
        dual_local_objective(cost, prob.d[i], ybar)
        for i, cost in enumerate(prob.costs)
    )
    return float(g_total + total_cost(prob, state.x))


@dataclass
class DispatchTrace:
    """Complete iterate history of one dispatch run."""

    prob: DispatchProblem
    params: AlgoParams
    states: list

    kind = "dispatch"

    def __len__(self):
        return len(self.states)

    @property
    def net(self) -> Network:
        return self.prob.net

    @property
    def ys(self) -> np.ndarray:
        return np.stack([s.y for s in self.states])

    @property
    def lams(self) -> np.ndarray:
        return np.stack([s.lam for s in self.states])

    @property
    def xs(self) -> np.ndarray:
        return np.stack([s.x for s in self.states])

    def consensus_states(self) -> list:
        """View of the dual iterates as plain stacked states."""
        return [StackedState(k=s.k, y=s.y, lam=s.lam, t=s.t) for s in self.states]


def run_dispatch(prob: DispatchProblem, params: AlgoParams, iters: int,
                 y0=None, lambda0=None,
                 sink: Optional[Callable[[DispatchState], None]] = None) -> DispatchTrace:
    """Run `iters` dispatch rounds; trace includes the initial state."""
    if iters < 0:
        raise LagranetError(f"iters must be >= 0, got {iters}")
    state = init_dispatch_state(prob, y0=y0, lambda0=lambda0)
    states = [state]
    for _ in range(iters):
        state = dispatch_step(state, prob, params)
        if sink is not None:
            sink(state)
        states.append(state)
    return DispatchTrace(prob=prob, params=params, states=states)
