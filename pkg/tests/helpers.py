"""Shared instance generators and independent brute-force oracles.

Everything here is deliberately naive (dense matrices, grid search,
explicit pseudoinverses) so the tests check the package against code
that shares nothing with the implementation under test.
"""

import numpy as np

import lagranet as lg


# ---------------------------------------------------------------------------
# random instances

def random_connected_net(rng, n, p, extra_edge_prob=0.35, weight_range=None):
    """Random spanning tree plus extra edges; optionally random weights."""
    edges = set()
    perm = rng.permutation(n) + 1
    for a, b in zip(perm[:-1], perm[1:]):
        edges.add((min(int(a), int(b)), max(int(a), int(b))))
    for i in range(1, n + 1):
        for j in range(i + 1, n + 1):
            if rng.random() < extra_edge_prob:
                edges.add((i, j))
    wlist = []
    for i, j in sorted(edges):
        w = 1.0 if weight_range is None else float(rng.uniform(*weight_range))
        wlist.append((i, j, w))
    return lg.build_network(n, p, wlist)


def consensus_instance(seed):
    """Unconstrained quadratic consensus instance with a slowed clock.

    rho is scaled so eta = 1.05 * rho * lambda_max sits well above the
    largest curvature, which keeps the decay of ||dz|| visible over
    thousands of iterations instead of bottoming out at float precision.
    """
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 11))
    p = int(rng.integers(1, 4))
    net = random_connected_net(rng, n, p)
    problems = []
    qmax = 0.0
    for _ in range(n):
        q_diag = rng.uniform(0.5, 3.0, p)
        qmax = max(qmax, float(q_diag.max()))
        center = rng.uniform(-5.0, 5.0, p)
        problems.append(lg.quadratic_box(q_diag, -q_diag * center))
    y0 = rng.uniform(-5.0, 5.0, n * p)
    spec = lg.spectral(net)
    ratio = float(rng.uniform(20.0, 60.0))
    rho = ratio * qmax / spec.lambda_max
    params = lg.validate_params(net, spec, rho, lg.suggest_eta(spec, rho))
    return {"seed": seed, "net": net, "problems": problems, "y0": y0,
            "spec": spec, "params": params}


def dispatch_instance(seed, require_interior=False):
    """Random Slater-feasible dispatch instance (2..10 generators, p=1)."""
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 11))
    net = random_connected_net(rng, n, 1)
    costs = [lg.GeneratorCost(a=float(rng.uniform(0.5, 2.0)),
                              b=float(rng.uniform(-1.0, 1.0)),
                              c=float(rng.uniform(0.0, 5.0)),
                              lo=-50.0, hi=50.0)
             for _ in range(n)]
    d = rng.uniform(0.5, 2.0, n)
    prob = lg.make_dispatch_problem(costs, d, net)
    spec = lg.spectral(net)
    rho = float(rng.uniform(0.5, 2.0))
    params = lg.validate_params(net, spec, rho, lg.suggest_eta(spec, rho))
    out = {"seed": seed, "net": net, "prob": prob, "spec": spec, "params": params}
    if require_interior:
        sol = lg.solve_dispatch_bisection(prob)
        interior = bool(np.all(sol.x_star > prob._lo + 1e-6)
                        and np.all(sol.x_star < prob._hi - 1e-6))
        out["sol"] = sol
        out["interior"] = interior
    return out


# ---------------------------------------------------------------------------
# independent oracles

def dense_lifted_laplacian(net):
    """L kron I_p built entry by entry from the edge list."""
    n, p = net.n, net.p
    lap = np.zeros((n, n))
    for i, j, w in zip(net.edge_i, net.edge_j, net.edge_w):
        lap[i, j] -= w
        lap[j, i] -= w
        lap[i, i] += w
        lap[j, j] += w
    return np.kron(lap, np.eye(p))


def dense_omhat_quadform(net, params, dy, dl):
    """Block quadratic form via explicit dense matrices and pinv."""
    w = dense_lifted_laplacian(net)
    omega = params.eta * np.eye(w.shape[0]) - params.rho * w
    wdag = np.linalg.pinv(w, rcond=1e-10)
    return float(dy @ omega @ dy + (dl @ wdag @ dl) / params.rho)


def grid_minimize(fun, lo, hi, points=100_001):
    """Dense 1-D grid search; returns (argmin, min)."""
    xs = np.linspace(lo, hi, points)
    vals = fun(xs)
    idx = int(np.argmin(vals))
    return float(xs[idx]), float(vals[idx])


def refine_minimize(fun, lo, hi, rounds=12, points=2001):
    """Nested grid refinement to ~1e-12 window width."""
    for _ in range(rounds):
        xs = np.linspace(lo, hi, points)
        vals = np.array([fun(x) for x in xs])
        idx = int(np.argmin(vals))
        span = (hi - lo) / (points - 1)
        lo = max(lo, xs[idx] - 2 * span)
        hi = min(hi, xs[idx] + 2 * span)
    mid = 0.5 * (lo + hi)
    return mid, fun(mid)


def subproblem_value(prob, y, linear, anchor, eta):
    """g(y) - <linear, y> + (eta/2)||y - anchor||^2 for built-in kinds."""
    from lagranet.localprox import problem_value
    y = np.atleast_1d(np.asarray(y, dtype=float))
    g = problem_value(prob, y)
    return g - float(np.dot(linear, y)) + 0.5 * eta * float(np.dot(y - anchor, y - anchor))


def directional_probe_optimal(prob, y, linear, anchor, eta, tol=1e-8):
    """Check first-order optimality by probing feasible directions."""
    y = np.atleast_1d(np.asarray(y, dtype=float))
    base = subproblem_value(prob, y, linear, anchor, eta)
    p = y.shape[0]
    rng = np.random.default_rng(0)
    dirs = [np.eye(p)[j] for j in range(p)] + [-np.eye(p)[j] for j in range(p)]
    dirs += [rng.standard_normal(p) for _ in range(4)]
    for d in dirs:
        d = d / np.linalg.norm(d)
        for step in (1e-6, 1e-5):
            cand = y + step * d
            if prob.kind == "quadratic_box":
                cand = np.clip(cand, prob.lo, prob.hi)
            val = subproblem_value(prob, cand, linear, anchor, eta)
            if val < base - tol * (1.0 + abs(base)):
                return False
    return True
