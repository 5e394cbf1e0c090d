"""Analysis metrics and per-iteration convergence-certificate checks.

Two quadratic forms drive everything: the penalized prox form

    omega_norm(u)  =  eta * ||u||^2 - rho * u' W u          (PD when certified)

and its pairing with the pseudoinverse form on multiplier differences

    omhat_norm(dy, dl)  =  omega_norm(dy) + (1/rho) * dl' Wdag dl.

`evaluate_envelopes` audits a full run against six last-iterate
inequalities, each as a per-iteration boolean stream with the index of
the first violation (which a correct run never has):

    a. squared distance to the optimum, measured in the paired form,
       never increases;
    b. the paired norm of successive iterate differences never increases;
    c. that difference norm is below ||z0 - z*|| / sqrt(k);
    d. the aggregate objective gap is sandwiched between
       -|grad|*||z0 - z*||/sqrt(k) and (||z0 - z*||^2/2 + |grad|*||z0 - z*||)/sqrt(k);
    e. the dispatch cost gap obeys the analogous sandwich with |grad|
       replaced by the penalized norm of the consensus price vector;
    f. the dispatch coupling residual is below ||z0 - z*|| / sqrt(k).

Envelopes that need the optimum's dual certificate are marked skipped
when the oracle cannot supply one.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .consensus_engine import AlgoParams
from .dispatch_engine import DispatchProblem, dual_objective_stacked, total_cost
from .errors import MissingOracleField, UncertifiedParams
from .graph import Network, SpectralData, laplacian_apply, w_quadform, wdag_quadform
from .localprox import problem_value
from .oracle import OracleSolution

ENVELOPES = ("a", "b", "c", "d", "e", "f")
SLACK = 1e-9  # tolerance: lhs <= rhs + SLACK * (1 + |rhs|)


def omega_norm(spec: SpectralData, params: AlgoParams, u: np.ndarray) -> float:
    """Quadratic form u' (eta*I - rho*W) u; > 0 for u != 0 when certified."""
    if not params.certified:
        raise UncertifiedParams("omega_norm requires certified params")
    u = np.asarray(u, dtype=float)
    p = u.shape[0] // spec.n
    return float(params.eta * np.dot(u, u) - params.rho * w_quadform(spec, p, u))


def omhat_norm(spec: SpectralData, params: AlgoParams,
               dy: np.ndarray, dl: np.ndarray) -> float:
    """Paired quadratic form on (dy, dl); consensus components of dl vanish."""
    if not params.certified:
        raise UncertifiedParams("omhat_norm requires certified params")
    dl = np.asarray(dl, dtype=float)
    p = dl.shape[0] // spec.n
    return omega_norm(spec, params, dy) + wdag_quadform(spec, p, dl) / params.rho


def consensus_residual(n: int, p: int, y: np.ndarray) -> float:
    """Euclidean distance of the stacked vector from its block average."""
    blocks = np.asarray(y, dtype=float).reshape(n, p)
    return float(np.linalg.norm(blocks - blocks.mean(axis=0)))


def w_seminorm(net: Network, y: np.ndarray, t: Optional[np.ndarray] = None) -> float:
    """sqrt(y' W y), reusing a cached t = W y when available."""
    if t is None:
        t = laplacian_apply(net, y)
    return math.sqrt(max(float(np.dot(y, t)), 0.0))


@dataclass
class IterationMetrics:
    """One row of the per-iteration analysis trace."""

    k: int
    objective_error: Optional[float]
    consensus_residual: float
    w_seminorm: float
    feasibility: Optional[float]
    delta_z_norm: Optional[float]
    lyapunov: Optional[float]
    envelope_flags: dict = field(default_factory=dict)


@dataclass
class EnvelopeReport:
    """Boolean streams (aligned with the trace) and first violations."""

    flags: dict
    first_violation: dict
    skipped: dict

    @property
    def all_pass(self) -> bool:
        return all(v is None for v in self.first_violation.values())

    def violated(self) -> list:
        return [k for k, v in self.first_violation.items() if v is not None]


def _within(lhs: float, rhs: float) -> bool:
    return bool(lhs <= rhs + SLACK * (1.0 + abs(rhs)))


def _objective_series(trace) -> Optional[np.ndarray]:
    """Aggregate objective G(y_k) along the trace, None if unavailable."""
    if trace.kind == "dispatch":
        return np.array([dual_objective_stacked(trace.prob, s.y)
                         for s in trace.states])
    vals = np.empty(len(trace.states))
    n, p = trace.net.n, trace.net.p
    for row, state in enumerate(trace.states):
        blocks = state.y.reshape(n, p)
        total = 0.0
        for i, prob in enumerate(trace.problems):
            v = problem_value(prob, blocks[i])
            if v is None:
                return None
            total += v
        vals[row] = total
    return vals


def evaluate_envelopes(trace, oracle: Optional[OracleSolution],
                       params: AlgoParams, spec: SpectralData,
                       require: Optional[tuple] = None) -> EnvelopeReport:
    """Audit a trace against the six per-iteration inequalities.

    Pure function of its inputs.  Envelopes whose oracle fields are
    missing are skipped with a reason unless listed in `require`, in
    which case MissingOracleField is raised.
    """
    rows = len(trace.states)
    flags = {key: [None] * rows for key in ENVELOPES}
    skipped = {}

    is_dispatch = trace.kind == "dispatch"
    have_dual = oracle is not None and oracle.lambda_star is not None

    if oracle is None:
        skipped["a"] = skipped["c"] = skipped["d"] = "no oracle solution"
        if is_dispatch:
            skipped["e"] = skipped["f"] = "no oracle solution"
    elif not have_dual:
        reason = "no dual certificate"
        skipped["a"] = skipped["c"] = reason
        skipped["d"] = reason
        if is_dispatch:
            skipped["e"] = skipped["f"] = reason
    if not is_dispatch:
        skipped["e"] = skipped["f"] = "not a dispatch trace"

    gvals = None
    if oracle is not None and "d" not in skipped:
        gvals = _objective_series(trace)
        if gvals is None:
            skipped["d"] = "objective values unavailable for custom agents"

    if require:
        for key in require:
            if key in skipped:
                raise MissingOracleField(f"envelope {key!r} skipped: {skipped[key]}")

    # paired-norm difference stream (needs no oracle)
    dz = [None] * rows
    for r in range(1, rows):
        dz[r] = math.sqrt(max(omhat_norm(
            spec, params,
            trace.states[r - 1].y - trace.states[r].y,
            trace.states[r - 1].lam - trace.states[r].lam), 0.0))
    for r in range(2, rows):
        flags["b"][r] = _within(dz[r], dz[r - 1])

    if have_dual and oracle is not None:
        y_star, lam_star = oracle.y_star, oracle.lambda_star
        v0_sq = omhat_norm(spec, params,
                           trace.states[0].y - y_star,
                           trace.states[0].lam - lam_star)
        v0 = math.sqrt(max(v0_sq, 0.0))

        if "a" not in skipped:
            lyap = [omhat_norm(spec, params, s.y - y_star, s.lam - lam_star)
                    for s in trace.states]
            for r in range(1, rows):
                flags["a"][r] = _within(lyap[r], lyap[r - 1])

        if "c" not in skipped:
            for r in range(2, rows):
                flags["c"][r] = _within(dz[r], v0 / math.sqrt(r - 1))

        if "d" not in skipped and gvals is not None:
            grad_norm = float(np.linalg.norm(lam_star))
            for r in range(2, rows):
                invsqrt = 1.0 / math.sqrt(r - 1)
                gap = gvals[r] - oracle.G_star
                upper = invsqrt * (0.5 * v0_sq + grad_norm * v0)
                lower = -invsqrt * grad_norm * v0
                flags["d"][r] = _within(gap, upper) and _within(lower, gap)

        if is_dispatch and "e" not in skipped:
            ystar_norm = math.sqrt(max(omega_norm(spec, params, y_star), 0.0))
            for r in range(2, rows):
                invsqrt = 1.0 / math.sqrt(r - 1)
                gap = total_cost(trace.prob, trace.states[r].x) - oracle.f_star
                upper = invsqrt * (0.5 * v0_sq + ystar_norm * v0)
                lower = -invsqrt * ystar_norm * v0
                flags["e"][r] = _within(gap, upper) and _within(lower, gap)

        if is_dispatch and "f" not in skipped:
            dsum = trace.prob.d.sum(axis=0)
            for r in range(2, rows):
                feas = float(np.linalg.norm(
                    trace.states[r].x.reshape(trace.prob.n, trace.prob.p).sum(axis=0)
                    - dsum))
                flags["f"][r] = _within(feas, v0 / math.sqrt(r - 1))

    first_violation = {}
    for key in ENVELOPES:
        idx = None
        for r, ok in enumerate(flags[key]):
            if ok is False:
                idx = r
                break
        first_violation[key] = idx
    return EnvelopeReport(flags=flags, first_violation=first_violation,
                          skipped=skipped)


def compute_iteration_metrics(trace, oracle: Optional[OracleSolution],
                              params: AlgoParams, spec: SpectralData,
                              report: Optional[EnvelopeReport] = None) -> list:
    """Assemble the per-iteration metric rows for a finished run."""
    net = trace.net
    n, p = net.n, net.p
    is_dispatch = trace.kind == "dispatch"
    have_dual = oracle is not None and oracle.lambda_star is not None
    gvals = _objective_series(trace) if (oracle is not None and not is_dispatch) else None
    dsum = trace.prob.d.sum(axis=0) if is_dispatch else None

    out = []
    prev = None
    for r, state in enumerate(trace.states):
        objective_error = None
        feasibility = None
        if is_dispatch:
            if oracle is not None and oracle.f_star is not None:
                objective_error = total_cost(trace.prob, state.x) - oracle.f_star
            feasibility = float(np.linalg.norm(
                state.x.reshape(n, p).sum(axis=0) - dsum))
        elif gvals is not None and oracle is not None:
            objective_error = float(gvals[r] - oracle.G_star)

        delta = None
        if prev is not None:
            delta = math.sqrt(max(omhat_norm(spec, params,
                                             prev.y - state.y,
                                             prev.lam - state.lam), 0.0))
        lyap = None
        if have_dual and oracle is not None:
            lyap = omhat_norm(spec, params, state.y - oracle.y_star,
                              state.lam - oracle.lambda_star)

        env = {}
        if report is not None:
            env = {key: report.flags[key][r] for key in ENVELOPES}
        out.append(IterationMetrics(
            k=r,
            objective_error=objective_error,
            consensus_residual=consensus_residual(n, p, state.y),
            w_seminorm=w_seminorm(net, state.y, state.t),
            feasibility=feasibility,
            delta_z_norm=delta,
            lyapunov=lyap,
            envelope_flags=env,
        ))
        prev = state
    return out
