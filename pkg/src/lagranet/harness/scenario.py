"""Scenario files: the JSON schema tying networks, problems, and knobs.

A scenario is fully explicit -- once written, nothing in a run is
random.  Node indices in the JSON are 1-based; box bounds use null for
+-infinity.  `resolve_*` helpers turn the raw dictionaries into the
typed objects the engines consume.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from ..consensus_engine import AlgoParams, suggest_eta, validate_params
from ..dispatch_engine import DispatchProblem, make_dispatch_problem
from ..errors import ScenarioError
from ..graph import Network, SpectralData, build_network, spectral
from ..localprox import GeneratorCost, LocalProblem, absolute_value, quadratic_box
from .records import _atomic_write

KINDS = ("consensus", "dispatch")


@dataclass
class Scenario:
    """Declarative description of one run."""

    kind: str
    network: dict                      # {"n": int, "p": int, "edges": [[i, j, w], ...]}
    rho: float = 1.0
    eta: object = "auto"               # positive float or the string "auto"
    iters: int = 1000
    seed: int = 0
    problems: Optional[list] = None    # consensus agents (list of dicts)
    costs: Optional[list] = None       # dispatch costs (list of dicts, one per bus)
    d: Optional[list] = None           # dispatch virtual demand, stacked
    demand: Optional[object] = None    # declared total demand (scalar or list)
    y0: Optional[list] = None
    lambda0: Optional[list] = None
    out_csv: Optional[str] = None
    out_svg: Optional[str] = None
    meta: dict = field(default_factory=dict)

    def validate(self) -> None:
        if self.kind not in KINDS:
            raise ScenarioError(f"kind must be one of {KINDS}, got {self.kind!r}")
        for key in ("n", "p", "edges"):
            if key not in self.network:
                raise ScenarioError(f"network section missing {key!r}")
        if self.kind == "consensus" and not self.problems:
            raise ScenarioError("consensus scenario needs a problems list")
        if self.kind == "dispatch" and (not self.costs or self.d is None):
            raise ScenarioError("dispatch scenario needs costs and d")
        if self.eta != "auto" and (not isinstance(self.eta, (int, float))
                                   or self.eta <= 0):
            raise ScenarioError(f"eta must be positive or 'auto', got {self.eta!r}")
        if self.iters < 0:
            raise ScenarioError(f"iters must be >= 0, got {self.iters}")


def _encode_bound(value: float) -> Optional[float]:
    return None if math.isinf(value) else value


def _decode_bound(value, sign: float) -> float:
    return sign * math.inf if value is None else float(value)


def save_scenario(scenario: Scenario, path: str) -> None:
    scenario.validate()
    _atomic_write(path, json.dumps(asdict(scenario), indent=2,
                                   allow_nan=False) + "\n")


def load_scenario(path: str) -> Scenario:
    with open(path, encoding="utf-8") as handle:
        try:
            raw = json.load(handle)
        except json.JSONDecodeError as exc:
            raise ScenarioError(f"invalid JSON in {path!r}: {exc}") from exc
    known = {f for f in Scenario.__dataclass_fields__}
    unknown = set(raw) - known
    if unknown:
        raise ScenarioError(f"unknown scenario fields: {sorted(unknown)}")
    scenario = Scenario(**raw)
    scenario.validate()
    return scenario


def resolve_network(scenario: Scenario) -> Network:
    net = scenario.network
    return build_network(int(net["n"]), int(net["p"]), net["edges"])


def resolve_problems(scenario: Scenario, net: Network) -> list:
    """Consensus agents from their JSON dictionaries."""
    problems = []
    for idx, raw in enumerate(scenario.problems or []):
        kind = raw.get("kind")
        if kind == "quadratic_box":
            problems.append(quadratic_box(
                raw["q_diag"], raw["q"],
                lo=[_decode_bound(v, -1.0) for v in raw.get("lo") or [None] * net.p],
                hi=[_decode_bound(v, +1.0) for v in raw.get("hi") or [None] * net.p],
            ))
        elif kind == "absolute_value":
            problems.append(absolute_value(raw["c"], raw.get("r", 0.0)))
        else:
            raise ScenarioError(f"problem {idx} has unknown kind {kind!r}")
    if len(problems) != net.n:
        raise ScenarioError(f"expected {net.n} problems, got {len(problems)}")
    return problems


def problem_to_dict(prob: LocalProblem) -> dict:
    if prob.kind == "quadratic_box":
        return {
            "kind": "quadratic_box",
            "q_diag": list(prob.q_diag),
            "q": list(prob.q),
            "lo": [_encode_bound(v) for v in prob.lo],
            "hi": [_encode_bound(v) for v in prob.hi],
        }
    if prob.kind == "absolute_value":
        return {"kind": "absolute_value", "c": prob.c, "r": prob.r}
    raise ScenarioError(f"cannot serialize problem kind {prob.kind!r}")


def resolve_dispatch(scenario: Scenario, net: Network) -> DispatchProblem:
    costs = []
    for idx, raw in enumerate(scenario.costs or []):
        costs.append(GeneratorCost(
            a=float(raw["a"]), b=float(raw["b"]), c=float(raw["c"]),
            lo=_decode_bound(raw.get("lo", 0.0), -1.0),
            hi=_decode_bound(raw.get("hi", 0.0), +1.0),
        ))
    d = np.asarray(scenario.d, dtype=float)
    demand = scenario.demand
    if demand is not None:
        demand = np.atleast_1d(np.asarray(demand, dtype=float))
    return make_dispatch_problem(costs, d, net, demand=demand)


def cost_to_dict(cost: GeneratorCost, bus: Optional[int] = None) -> dict:
    out = {"a": cost.a, "b": cost.b, "c": cost.c,
           "lo": _encode_bound(cost.lo), "hi": _encode_bound(cost.hi)}
    if bus is not None:
        out["bus"] = bus
    return out


def resolve_params(scenario: Scenario, net: Network,
                   spec: Optional[SpectralData] = None) -> AlgoParams:
    spec = spectral(net) if spec is None else spec
    eta = scenario.eta
    if eta == "auto":
        eta = suggest_eta(spec, scenario.rho)
    return validate_params(net, spec, scenario.rho, float(eta))
