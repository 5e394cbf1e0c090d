"""Scenario generator for the 118-bus dispatch experiment.

Topology: buses 1..118 in a line, each bus i <= 116 linked to its
nearest and next-nearest neighbour (unit weights), giving a sparse but
connected graph.  A seeded RNG places the generators on 14 distinct
buses; every other bus is pinned to zero output.  The total demand is
split evenly across the generator buses as virtual local demands.

Cost coefficients ship in a separate JSON file (array of {a, b, c});
the packaged default carries synthetic values of realistic magnitude.
"""

from __future__ import annotations

import json
import os
from importlib import resources

import numpy as np

from ..errors import MissingCoefficientFile, ScenarioError
from .scenario import Scenario

DEFAULT_GEN_COUNT = 14
DEFAULT_DEMAND = 950.0
DEFAULT_BOX = (0.0, 300.0)
N_BUSES = 118


def _load_coeffs(path) -> list:
    if path is None:
        ref = resources.files("lagranet").joinpath("data/coeffs_ieee118.json")
        text = ref.read_text(encoding="utf-8")
    else:
        if not os.path.exists(path):
            raise MissingCoefficientFile(f"coefficient file not found: {path!r}")
        with open(path, encoding="utf-8") as handle:
            text = handle.read()
    try:
        coeffs = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"coefficient file is not valid JSON: {exc}") from exc
    if not isinstance(coeffs, list):
        raise ScenarioError("coefficient file must hold a JSON array")
    for entry in coeffs:
        if not all(key in entry for key in ("a", "b", "c")):
            raise ScenarioError("each coefficient entry needs a, b, c")
    return coeffs


def edge_rule(n: int = N_BUSES) -> list:
    """Nearest plus next-nearest neighbour edges for buses 1..n."""
    edges = []
    for i in range(1, n - 1):
        edges.append([i, i + 1, 1.0])
        edges.append([i, i + 2, 1.0])
    return edges


def gen_ieee118(seed: int, gen_count: int = DEFAULT_GEN_COUNT,
                box=DEFAULT_BOX, demand: float = DEFAULT_DEMAND,
                coeffs_path=None, rho: float = 1.0, eta="auto",
                iters: int = 20000) -> Scenario:
    """Deterministic dispatch scenario for a given seed.

    The seed fixes the generator bus placement; coefficient entries are
    assigned to the chosen buses in ascending bus order.
    """
    coeffs = _load_coeffs(coeffs_path)
    if len(coeffs) != gen_count:
        raise ScenarioError(
            f"coefficient file has {len(coeffs)} entries, need {gen_count}"
        )
    rng = np.random.default_rng(seed)
    gen_buses = np.sort(rng.choice(N_BUSES, size=gen_count, replace=False) + 1)

    lo, hi = float(box[0]), float(box[1])
    share = float(demand) / gen_count
    costs = []
    d = []
    for bus in range(1, N_BUSES + 1):
        if bus in gen_buses:
            entry = coeffs[int(np.searchsorted(gen_buses, bus))]
            costs.append({"a": float(entry["a"]), "b": float(entry["b"]),
                          "c": float(entry["c"]), "lo": lo, "hi": hi,
                          "bus": bus})
            d.append(share)
        else:
            costs.append({"a": 0.0, "b": 0.0, "c": 0.0, "lo": 0.0, "hi": 0.0,
                          "bus": bus})
            d.append(0.0)

    return Scenario(
        kind="dispatch",
        network={"n": N_BUSES, "p": 1, "edges": edge_rule()},
        rho=float(rho),
        eta=eta,
        iters=int(iters),
        seed=int(seed),
        costs=costs,
        d=d,
        demand=float(demand),
        meta={"generator_buses": [int(b) for b in gen_buses]},
    )
