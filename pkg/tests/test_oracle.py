import numpy as np
import pytest
from numpy.testing import assert_allclose

import lagranet as lg
from lagranet.errors import InfeasibleDemand, UnboundedBelow

from helpers import dispatch_instance, random_connected_net, refine_minimize


def pair_net():
    return lg.build_network(2, 1, [(1, 2, 1.0)])


class TestConsensusQuadraticOracle:
    def test_mean_of_two_quadratics(self):
        # g_i = 0.5 (y - r_i)^2 with r = (0, 2); our encoding drops the
        # constant r_i^2 / 2, so compare shifted values
        net = pair_net()
        problems = [lg.quadratic_box([1.0], [0.0]),
                    lg.quadratic_box([1.0], [-2.0])]
        sol = lg.solve_consensus_quadratic(problems, net)
        assert_allclose(sol.y_star, [1.0, 1.0])
        const = 0.5 * (0.0 ** 2 + 2.0 ** 2)
        assert sol.G_star + const == pytest.approx(1.0)
        assert_allclose(sol.lambda_star, [1.0, -1.0])

    def test_single_agent_returns_its_minimizer(self):
        net = lg.build_network(1, 2, [])
        prob = lg.quadratic_box([2.0, 4.0], [-1.0, 8.0])
        sol = lg.solve_consensus_quadratic([prob], net)
        assert_allclose(sol.y_star, [0.5, -2.0])

    def test_random_instance_matches_grid_refinement(self):
        rng = np.random.default_rng(61)
        net = random_connected_net(rng, 5, 1)
        problems = [lg.quadratic_box([float(rng.uniform(0.2, 3))],
                                     [float(rng.uniform(-3, 3))],
                                     lo=[-4.0], hi=[4.0])
                    for _ in range(5)]
        sol = lg.solve_consensus_quadratic(problems, net)

        def total(y):
            return sum(0.5 * p.q_diag[0] * y ** 2 + p.q[0] * y for p in problems)

        y_ref, _ = refine_minimize(total, -4.0, 4.0)
        assert abs(sol.y_star[0] - y_ref) <= 1e-9

    def test_active_box_blocks_dual_certificate(self):
        net = pair_net()
        problems = [lg.quadratic_box([1.0], [0.0], lo=[-0.2], hi=[0.2]),
                    lg.quadratic_box([1.0], [-2.0])]
        sol = lg.solve_consensus_quadratic(problems, net)
        assert sol.y_star[0] == pytest.approx(0.2)  # clipped to the hull
        assert sol.lambda_star is None

    def test_unbounded_below(self):
        net = pair_net()
        problems = [lg.quadratic_box([0.0], [1.0]),
                    lg.quadratic_box([0.0], [1.0])]
        with pytest.raises(UnboundedBelow):
            lg.solve_consensus_quadratic(problems, net)

    def test_flat_plus_box_takes_endpoint(self):
        net = pair_net()
        problems = [lg.quadratic_box([0.0], [1.0], lo=[-3.0], hi=[3.0]),
                    lg.quadratic_box([0.0], [1.0], lo=[-5.0], hi=[5.0])]
        sol = lg.solve_consensus_quadratic(problems, net)
        assert sol.y_star[0] == pytest.approx(-3.0)


class TestDispatchBisection:
    def test_two_generator_kkt_oracle(self):
        # KKT: 2 a_i x_i + mu = 0 with x_1 + x_2 = 3; linear solve gives
        # x = (2, 1), mu = -4 for a = (1, 2)
        net = pair_net()
        costs = [lg.GeneratorCost(1.0, 0.0, 0.0, -100, 100),
                 lg.GeneratorCost(2.0, 0.0, 0.0, -100, 100)]
        prob = lg.make_dispatch_problem(costs, [1.5, 1.5], net)
        a = np.array([1.0, 2.0])
        mat = np.zeros((3, 3))
        mat[0, 0], mat[0, 2] = 2 * a[0], 1
        mat[1, 1], mat[1, 2] = 2 * a[1], 1
        mat[2, 0] = mat[2, 1] = 1
        x1, x2, mu = np.linalg.solve(mat, [0.0, 0.0, 3.0])
        sol = lg.solve_dispatch_bisection(prob)
        assert_allclose(sol.x_star, [x1, x2], atol=1e-9)
        assert sol.delta_star[0] == pytest.approx(mu, abs=1e-9)
        assert_allclose(sol.x_star, [2.0, 1.0], atol=1e-9)
        assert sol.delta_star[0] == pytest.approx(-4.0, abs=1e-9)

    def test_symmetric_split(self):
        net = pair_net()
        costs = [lg.GeneratorCost(1.0, 0.0, 0.0, 0, 10)] * 2
        prob = lg.make_dispatch_problem(costs, [2.0, 2.0], net)
        sol = lg.solve_dispatch_bisection(prob)
        assert_allclose(sol.x_star, [2.0, 2.0], atol=1e-9)

    def test_excess_demand_raises(self):
        net = pair_net()
        costs = [lg.GeneratorCost(1.0, 0.0, 0.0, 0, 10)] * 2
        with pytest.raises(InfeasibleDemand):
            lg.make_dispatch_problem(costs, [11.0, 11.0], net)

    def test_flat_generators_redistribute_on_tie(self):
        net = lg.build_network(3, 1, [(1, 2, 1.0), (2, 3, 1.0)])
        costs = [lg.GeneratorCost(0.0, 1.0, 0.0, 0.0, 4.0),
                 lg.GeneratorCost(0.0, 1.0, 0.0, 0.0, 8.0),
                 lg.GeneratorCost(1.0, 0.0, 0.0, 0.0, 10.0)]
        prob = lg.make_dispatch_problem(costs, [2.0, 2.0, 2.0], net)
        sol = lg.solve_dispatch_bisection(prob)
        assert sol.degenerate_flat
        assert sol.lambda_star is None
        x = sol.x_star
        assert x.sum() == pytest.approx(6.0, abs=1e-8)
        assert np.all(x >= -1e-12) and x[0] <= 4 + 1e-12 and x[1] <= 8 + 1e-12
        # tie split proportional to box slack: x0 / 4 == x1 / 8
        assert x[0] / 4.0 == pytest.approx(x[1] / 8.0, abs=1e-8)
        rep = lg.certify_kkt(sol, prob)
        assert rep.passed

    def test_strong_duality_on_random_instances(self):
        for seed in range(200, 220):
            inst = dispatch_instance(seed)
            sol = lg.solve_dispatch_bisection(inst["prob"])
            gap = abs(sol.G_star + sol.f_star)
            assert gap <= 1e-8 * (1 + abs(sol.f_star))

    def test_oracle_beats_random_feasible_points(self):
        rng = np.random.default_rng(88)
        inst = dispatch_instance(300)
        prob = inst["prob"]
        sol = lg.solve_dispatch_bisection(prob)
        n = prob.n
        lo, hi = prob._lo, prob._hi
        target = float(prob.demand[0])
        count = 0
        for _ in range(10_000):
            x = rng.uniform(lo, hi)
            # project onto the sum constraint, then repair box violations
            for _ in range(12):
                x = x + (target - x.sum()) / n
                x = np.clip(x, lo, hi)
            if abs(x.sum() - target) > 1e-6:
                continue
            count += 1
            f = float(np.sum(prob._a * x ** 2 + prob._b * x + prob._c))
            assert sol.f_star <= f + 1e-9
        assert count > 5000  # projection succeeded for most samples


class TestCertifyKkt:
    def test_bisection_output_passes(self):
        for seed in range(400, 410):
            inst = dispatch_instance(seed)
            sol = lg.solve_dispatch_bisection(inst["prob"])
            rep = lg.certify_kkt(sol, inst["prob"])
            assert rep.passed, f"seed {seed}: violation {rep.max_violation}"

    def test_perturbed_solution_fails_stationarity(self):
        net = pair_net()
        costs = [lg.GeneratorCost(1.0, 0.0, 0.0, -100, 100),
                 lg.GeneratorCost(2.0, 0.0, 0.0, -100, 100)]
        prob = lg.make_dispatch_problem(costs, [1.5, 1.5], net)
        sol = lg.solve_dispatch_bisection(prob)
        bad = lg.OracleSolution(
            y_star=sol.y_star, G_star=sol.G_star, method="tampered",
            x_star=sol.x_star + np.array([0.1, -0.1]), f_star=sol.f_star,
            lambda_star=sol.lambda_star, delta_star=sol.delta_star)
        rep = lg.certify_kkt(bad, prob)
        assert not rep.passed
        assert rep.max_violation > 0.1

    def test_all_pinned_passes_trivially(self):
        net = pair_net()
        costs = [lg.GeneratorCost(0, 0, 0, 0, 0)] * 2
        prob = lg.make_dispatch_problem(costs, [0.0, 0.0], net)
        sol = lg.solve_dispatch_bisection(prob)
        assert lg.certify_kkt(sol, prob).passed
