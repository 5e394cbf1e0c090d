"""Per-agent subproblem solvers.

Each agent owns a convex local objective over a closed convex set.  The
consensus iteration only ever asks one question of it: minimize

    g(y) - <linear, y> + (eta/2) * ||y - anchor||^2       over  Y.

`prox_step` answers it exactly for the built-in problem kinds.  The
dispatch iteration asks the analogous question of a quadratic generator
cost over its output box; `dispatch_x_step` answers that one.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import CustomSolverFailure, LagranetError, NonPositiveEta

KIND_QUADRATIC_BOX = "quadratic_box"
KIND_ABSOLUTE_VALUE = "absolute_value"
KIND_CUSTOM = "custom"


@dataclass(frozen=True)
class LocalProblem:
    """One agent's objective g and constraint set Y.

    Built-in kinds
    --------------
    quadratic_box : g(y) = 0.5 * y'diag(q_diag)y + q'y over a box,
        with q_diag >= 0 elementwise and lo <= hi (+-inf allowed).
    absolute_value : g(y) = c * |y - r| on the real line (p = 1), c >= 0.
    custom : an externally supplied solver with the `prox_step` contract;
        `value_fn` optionally evaluates g for metric reporting.
    """

    kind: str
    p: int
    q_diag: Optional[np.ndarray] = None
    q: Optional[np.ndarray] = None
    lo: Optional[np.ndarray] = None
    hi: Optional[np.ndarray] = None
    c: float = 0.0
    r: float = 0.0
    solver: Optional[Callable] = None
    value_fn: Optional[Callable] = None


def quadratic_box(q_diag, q, lo=None, hi=None) -> LocalProblem:
    """Diagonal quadratic over a box; bounds default to the whole space."""
    q_diag = np.atleast_1d(np.asarray(q_diag, dtype=float))
    q = np.atleast_1d(np.asarray(q, dtype=float))
    p = q_diag.shape[0]
    if q.shape != (p,):
        raise LagranetError(f"q shape {q.shape} does not match q_diag shape {q_diag.shape}")
    lo = np.full(p, -np.inf) if lo is None else np.broadcast_to(
        np.asarray(lo, dtype=float), (p,)).copy()
    hi = np.full(p, np.inf) if hi is None else np.broadcast_to(
        np.asarray(hi, dtype=float), (p,)).copy()
    if np.any(q_diag < 0):
        raise LagranetError("q_diag must be elementwise nonnegative")
    if np.any(lo > hi):
        raise LagranetError("box must satisfy lo <= hi elementwise")
    return LocalProblem(kind=KIND_QUADRATIC_BOX, p=p, q_diag=q_diag, q=q, lo=lo, hi=hi)


def absolute_value(c: float, r: float = 0.0) -> LocalProblem:
    """Scaled absolute deviation c*|y - r| on the real line."""
    if c < 0:
        raise LagranetError(f"scale must be nonnegative, got {c}")
    return LocalProblem(kind=KIND_ABSOLUTE_VALUE, p=1, c=float(c), r=float(r))


def custom(p: int, solver: Callable, value_fn: Optional[Callable] = None) -> LocalProblem:
    """Externally solved agent: solver(linear, anchor, eta) -> ndarray(p,)."""
    return LocalProblem(kind=KIND_CUSTOM, p=int(p), solver=solver, value_fn=value_fn)


def prox_step(prob: LocalProblem, linear, anchor, eta: float) -> np.ndarray:
    """Exact minimizer of g(y) - <linear, y> + (eta/2)||y - anchor||^2 over Y.

    Parameters
    ----------
    linear, anchor : array_like, shape (p,)
    eta : float
        Strictly positive proximal scalar.
    """
    if eta <= 0.0:
        raise NonPositiveEta(f"eta must be > 0, got {eta}")
    linear = np.atleast_1d(np.asarray(linear, dtype=float))
    anchor = np.atleast_1d(np.asarray(anchor, dtype=float))
    if prob.kind == KIND_QUADRATIC_BOX:
        y = (eta * anchor + linear - prob.q) / (prob.q_diag + eta)
        return np.clip(y, prob.lo, prob.hi)
    if prob.kind == KIND_ABSOLUTE_VALUE:
        u = anchor + linear / eta
        return prob.r + _soft_threshold(u - prob.r, prob.c / eta)
    if prob.kind == KIND_CUSTOM:
        try:
            y = np.asarray(prob.solver(linear, anchor, eta), dtype=float)
        except Exception as exc:  # noqa: BLE001 - contract boundary
            raise CustomSolverFailure(f"custom solver raised: {exc!r}") from exc
        if y.shape != (prob.p,):
            raise CustomSolverFailure(
                f"custom solver returned shape {y.shape}, expected ({prob.p},)"
            )
        return y
    raise LagranetError(f"unknown problem kind {prob.kind!r}")


def _soft_threshold(v: np.ndarray, tau: float) -> np.ndarray:
    return np.sign(v) * np.maximum(np.abs(v) - tau, 0.0)


def problem_value(prob: LocalProblem, y) -> Optional[float]:
    """Evaluate g(y); None when a custom problem ships no value function."""
    y = np.atleast_1d(np.asarray(y, dtype=float))
    if prob.kind == KIND_QUADRATIC_BOX:
        return float(0.5 * np.dot(prob.q_diag * y, y) + np.dot(prob.q, y))
    if prob.kind == KIND_ABSOLUTE_VALUE:
        return float(prob.c * abs(y[0] - prob.r))
    if prob.value_fn is not None:
        return float(prob.value_fn(y))
    return None


def problem_feasible(prob: LocalProblem, y, tol: float = 1e-9) -> bool:
    """Membership check for the built-in constraint sets."""
    y = np.atleast_1d(np.asarray(y, dtype=float))
    if prob.kind == KIND_QUADRATIC_BOX:
        return bool(np.all(y >= prob.lo - tol) and np.all(y <= prob.hi + tol))
    return True  # absolute_value and custom are unconstrained (or unknown)


@dataclass(frozen=True)
class GeneratorCost:
    """Quadratic generation cost a*x^2 + b*x + c over the box [lo, hi].

    Non-generator buses are encoded as a = b = 0 with lo = hi = 0.  For
    block dimension p > 1 the same scalar cost applies per coordinate
    and coordinates are summed (constant term included once per
    coordinate).
    """

    a: float
    b: float
    c: float
    lo: float
    hi: float

    def __post_init__(self):
        if self.a < 0:
            raise LagranetError(f"quadratic coefficient must be >= 0, got {self.a}")
        if self.lo > self.hi:
            raise LagranetError(f"box must satisfy lo <= hi, got [{self.lo}, {self.hi}]")


def dispatch_x_step(cost: GeneratorCost, jbase, eta: float) -> np.ndarray:
    """Exact minimizer of f(x) + (eta/2)*||jbase + x/eta||^2 over the box.

    The 1/(2*eta) * x^2 contribution keeps the subproblem strictly
    convex even for a = 0, so the clipped stationary point is the
    unique solution:  clip(-(b + jbase) / (2a + 1/eta), lo, hi).
    """
    if eta <= 0.0:
        raise NonPositiveEta(f"eta must be > 0, got {eta}")
    jbase = np.atleast_1d(np.asarray(jbase, dtype=float))
    x = -(cost.b + jbase) / (2.0 * cost.a + 1.0 / eta)
    return np.clip(x, cost.lo, cost.hi)


def eval_cost(cost: GeneratorCost, x) -> float:
    """Generation cost at output x, summed over coordinates."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    return float(np.sum(cost.a * x ** 2 + cost.b * x + cost.c))
