import sys
import time
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

import lagranet as lg  # noqa: E402
from helpers import consensus_instance, dispatch_instance  # noqa: E402

N_SUITE = 20


@pytest.fixture(scope="session")
def consensus_suite():
    """Twenty seeded unconstrained quadratic instances, run for 1e3 rounds,
    with oracle solutions and envelope reports.  Shared by the acceptance
    criteria that quote it."""
    start = time.perf_counter()
    entries = []
    for seed in range(N_SUITE):
        inst = consensus_instance(seed)
        trace = lg.run(inst["net"], inst["problems"], inst["params"], 1000,
                       y0=inst["y0"])
        sol = lg.solve_consensus_quadratic(inst["problems"], inst["net"])
        report = lg.evaluate_envelopes(trace, sol, inst["params"], inst["spec"],
                                       require=("a", "b", "c", "d"))
        entries.append({**inst, "trace": trace, "sol": sol, "report": report})
    elapsed = time.perf_counter() - start
    return {"entries": entries, "elapsed": elapsed}


@pytest.fixture(scope="session")
def dispatch_suite():
    """Twenty seeded Slater-feasible dispatch instances with interior
    optimum, run for 1e3 rounds, with bisection oracles and reports."""
    start = time.perf_counter()
    entries = []
    seed = 100
    while len(entries) < N_SUITE:
        inst = dispatch_instance(seed, require_interior=True)
        seed += 1
        if not inst["interior"]:
            continue
        trace = lg.run_dispatch(inst["prob"], inst["params"], 1000)
        report = lg.evaluate_envelopes(trace, inst["sol"], inst["params"],
                                       inst["spec"], require=("e", "f"))
        entries.append({**inst, "trace": trace, "report": report})
    elapsed = time.perf_counter() - start
    return {"entries": entries, "elapsed": elapsed}
