"""Centralized ground-truth solvers backing the acceptance tests.

Nothing here touches the distributed iteration: the consensus optimum
comes from coordinatewise 1-D convex minimization, the dispatch optimum
from classical marginal-price bisection, and `certify_kkt` re-verifies
any claimed dispatch solution from first principles.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .dispatch_engine import DispatchProblem, dual_local_objective
from .errors import InfeasibleDemand, LagranetError, UnboundedBelow
from .graph import Network
from .localprox import KIND_QUADRATIC_BOX, LocalProblem, eval_cost, problem_value

BISECT_TOL = 1e-11        # aggregate-response residual target
INTERIOR_TOL = 1e-7       # margin for "strictly inside the box"


@dataclass(frozen=True)
class OracleSolution:
    """Centralized optimum with optional dual certificate.

    y_star is the exact consensus replicate (every block equal);
    lambda_star, when present, is the stacked dual certificate with
    blocks summing to zero (projected onto the consensus-orthogonal
    subspace as a numerical safeguard).
    """

    y_star: np.ndarray
    G_star: float
    method: str
    x_star: Optional[np.ndarray] = None
    f_star: Optional[float] = None
    lambda_star: Optional[np.ndarray] = None
    delta_star: Optional[np.ndarray] = None
    degenerate_flat: bool = False


def _project_zero_block_sum(stacked: np.ndarray, n: int, p: int) -> np.ndarray:
    blocks = stacked.reshape(n, p)
    return (blocks - blocks.mean(axis=0)).reshape(-1)


def solve_consensus_quadratic(problems: Sequence[LocalProblem],
                              net: Network) -> OracleSolution:
    """Exact minimizer of the aggregate quadratic over one shared point.

    Coordinatewise: the stationary point of the summed quadratic is
    clipped to the hull of the boxes (for a flat summed curvature the
    minimizing endpoint is taken).  Raises UnboundedBelow when a flat
    descending direction escapes to infinity.
    """
    problems = list(problems)
    if len(problems) != net.n:
        raise LagranetError(f"expected {net.n} problems, got {len(problems)}")
    if any(prob.kind != KIND_QUADRATIC_BOX for prob in problems):
        raise LagranetError("consensus oracle supports quadratic_box agents only")
    p = net.p
    q_diag = np.stack([prob.q_diag for prob in problems])   # (n, p)
    q = np.stack([prob.q for prob in problems])
    lo = np.stack([prob.lo for prob in problems])
    hi = np.stack([prob.hi for prob in problems])

    hull_lo = lo.max(axis=0)
    hull_hi = hi.min(axis=0)
    if np.any(hull_lo > hull_hi):
        raise LagranetError("agents' constraint sets have empty intersection")

    sum_q_diag = q_diag.sum(axis=0)
    sum_q = q.sum(axis=0)
    y = np.empty(p)
    for j in range(p):
        if sum_q_diag[j] > 0.0:
            y[j] = float(np.clip(-sum_q[j] / sum_q_diag[j], hull_lo[j], hull_hi[j]))
        elif sum_q[j] > 0.0:
            if not np.isfinite(hull_lo[j]):
                raise UnboundedBelow(f"coordinate {j} decreases without bound")
            y[j] = hull_lo[j]
        elif sum_q[j] < 0.0:
            if not np.isfinite(hull_hi[j]):
                raise UnboundedBelow(f"coordinate {j} decreases without bound")
            y[j] = hull_hi[j]
        else:
            # flat coordinate: any hull point is optimal, prefer zero
            y[j] = float(np.clip(0.0, hull_lo[j], hull_hi[j]))

    y_star = np.tile(y, net.n)
    g_star = float(sum(problem_value(prob, y) for prob in problems))

    # Dual certificate only when the shared optimum is strictly interior to
    # every box, so each agent's subgradient selection is forced to Q y + q.
    interior = np.all(
        (y[None, :] > lo + INTERIOR_TOL) & (y[None, :] < hi - INTERIOR_TOL)
    )
    lambda_star = None
    if interior:
        grads = q_diag * y[None, :] + q    # (n, p)
        lambda_star = _project_zero_block_sum(grads.reshape(-1), net.n, p)
    return OracleSolution(y_star=y_star, G_star=g_star, method="consensus_quadratic",
                          lambda_star=lambda_star, delta_star=y.copy())


def _aggregate_response(mu: float, a, b, lo, hi) -> float:
    """Total output when every generator best-responds to price -mu.

    Nonincreasing in mu; flat (a = 0) generators contribute a step.
    """
    with np.errstate(divide="ignore", invalid="ignore"):
        stat = np.where(a > 0.0, -(b + mu) / np.where(a > 0.0, 2.0 * a, 1.0), 0.0)
    x = np.clip(stat, lo, hi)
    flat = np.where(mu < -b, hi, lo)
    x = np.where(a > 0.0, x, flat)
    return float(x.sum())


def solve_dispatch_bisection(prob: DispatchProblem) -> OracleSolution:
    """Classical marginal-price bisection for the dispatch optimum.

    Per coordinate, finds mu with sum_i clip(-(b_i + mu)/(2 a_i)) equal
    to the total demand, handling flat (a = 0) generators by endpoint
    steps plus slack-proportional redistribution on ties.  The reported
    multiplier delta_star is the price vector; lambda_star = d - x_star
    is supplied when every agent's best response at delta_star is
    unique (no flat generator sits exactly at its tie price).
    """
    a, b, lo, hi = prob._a, prob._b, prob._lo, prob._hi
    n, p = prob.n, prob.p
    lo_sum, hi_sum = lo.sum(), hi.sum()
    demand = prob.demand

    x_star = np.empty((n, p))
    mu_star = np.empty(p)
    degenerate = False

    for j in range(p):
        target = float(demand[j])
        if target < lo_sum - 1e-9 or target > hi_sum + 1e-9:
            raise InfeasibleDemand(
                f"demand {target} outside aggregate box [{lo_sum}, {hi_sum}]"
            )
        base = np.concatenate([
            (b + 2.0 * a * hi)[np.isfinite(hi)],
            (b + 2.0 * a * lo)[np.isfinite(lo)],
            b[a == 0.0],
        ])
        if base.size == 0:
            base = np.array([0.0])
        mu_lo = float(-base.max() - 1.0)   # price low enough: everyone at hi
        mu_hi = float(-base.min() + 1.0)   # price high enough: everyone at lo
        width = mu_hi - mu_lo
        while _aggregate_response(mu_lo, a, b, lo, hi) < target - 1e-12:
            mu_lo -= width
            width *= 2.0
        while _aggregate_response(mu_hi, a, b, lo, hi) > target + 1e-12:
            mu_hi += width
            width *= 2.0

        s_lo = _aggregate_response(mu_lo, a, b, lo, hi)
        s_hi = _aggregate_response(mu_hi, a, b, lo, hi)
        for _ in range(200):
            mid = 0.5 * (mu_lo + mu_hi)
            if mid <= mu_lo or mid >= mu_hi:
                break  # bracket collapsed to adjacent floats
            s_mid = _aggregate_response(mid, a, b, lo, hi)
            assert s_lo + 1e-9 >= s_hi, "aggregate response must be nonincreasing"
            if s_mid >= target:
                mu_lo, s_lo = mid, s_mid
            else:
                mu_hi, s_hi = mid, s_mid

        def _response_at(mu_val):
            with np.errstate(divide="ignore", invalid="ignore"):
                stat = np.where(a > 0.0,
                                -(b + mu_val) / np.where(a > 0.0, 2.0 * a, 1.0), 0.0)
            x_val = np.clip(stat, lo, hi)
            return np.where(a > 0.0, x_val, np.where(mu_val < -b, hi, lo))

        mu, x, residual = None, None, np.inf
        for cand in (0.5 * (mu_lo + mu_hi), mu_lo, mu_hi):
            x_cand = _response_at(cand)
            res_cand = target - float(x_cand.sum())
            if abs(res_cand) < abs(residual):
                mu, x, residual = cand, x_cand, res_cand

        if abs(residual) > BISECT_TOL * max(1.0, abs(target)):
            # tie: flat generators at their step price absorb the remainder,
            # split in proportion to box slack
            mu = 0.5 * (mu_lo + mu_hi)
            x = _response_at(mu)
            tie = (a == 0.0) & (np.abs(b + mu) <= 1e-9 * (1.0 + abs(mu)))
            slack = np.where(tie, hi - lo, 0.0)
            total_slack = float(slack.sum())
            if total_slack <= 0.0:
                raise InfeasibleDemand(
                    f"cannot close residual {residual} at price {mu}"
                )
            x = np.where(tie, lo, x)
            residual = target - float(x.sum())
            x = x + np.clip(residual, 0.0, total_slack) * slack / total_slack
            degenerate = True
            residual = target - float(x.sum())
            if abs(residual) > 1e-8 * max(1.0, abs(target)):
                raise InfeasibleDemand(
                    f"residual {residual} remains after flat redistribution"
                )
        mu_star[j] = mu
        x_star[:, j] = x

    f_star = float(sum(eval_cost(cost, x_star[i]) for i, cost in enumerate(prob.costs)))
    g_star = float(sum(
        dual_local_objective(cost, prob.d[i], mu_star)
        for i, cost in enumerate(prob.costs)
    ))
    y_star = np.tile(mu_star, n)
    lambda_star = None
    if not degenerate:
        lambda_star = _project_zero_block_sum(
            (prob.d - x_star).reshape(-1), n, p)
    return OracleSolution(
        y_star=y_star, G_star=g_star, method="lambda_bisection",
        x_star=x_star.reshape(-1), f_star=f_star, lambda_star=lambda_star,
        delta_star=mu_star, degenerate_flat=degenerate,
    )


@dataclass(frozen=True)
class KktReport:
    """Per-agent worst violations of the dispatch optimality system."""

    stationarity: np.ndarray   # (n,) worst signed-gradient violation per agent
    feasibility: float         # coupling-constraint violation
    box: float                 # worst box violation
    tol: float

    @property
    def max_violation(self) -> float:
        return max(float(self.stationarity.max(initial=0.0)),
                   self.feasibility, self.box)

    @property
    def passed(self) -> bool:
        return self.max_violation <= self.tol


def certify_kkt(sol: OracleSolution, prob: DispatchProblem,
                tol: float = 1e-8) -> KktReport:
    """Re-verify stationarity, feasibility, and box membership.

    Stationarity is probed directionally: at interior coordinates the
    gradient of f_i + <delta*, .> must vanish; at an active bound only
    the inward directional derivative must be nonnegative.
    """
    if sol.x_star is None or sol.delta_star is None:
        raise LagranetError("certify_kkt needs x_star and delta_star")
    n, p = prob.n, prob.p
    x = sol.x_star.reshape(n, p)
    mu = sol.delta_star
    a, b, lo, hi = prob._a, prob._b, prob._lo, prob._hi

    grad = 2.0 * a[:, None] * x + b[:, None] + mu[None, :]
    at_lo = x <= lo[:, None] + INTERIOR_TOL
    at_hi = x >= hi[:, None] - INTERIOR_TOL
    viol = np.abs(grad)
    # at lo only grad < 0 violates; at hi only grad > 0 violates
    viol = np.where(at_lo & ~at_hi, np.maximum(-grad, 0.0), viol)
    viol = np.where(at_hi & ~at_lo, np.maximum(grad, 0.0), viol)
    viol = np.where(at_lo & at_hi, 0.0, viol)   # pinned coordinate: any grad
    stationarity = viol.max(axis=1)

    feas = float(np.linalg.norm(x.sum(axis=0) - prob.demand))
    box = float(max(np.maximum(lo[:, None] - x, 0.0).max(initial=0.0),
                    np.maximum(x - hi[:, None], 0.0).max(initial=0.0)))
    return KktReport(stationarity=stationarity, feasibility=feas, box=box, tol=tol)
