import numpy as np
import pytest
from numpy.testing import assert_allclose

import lagranet as lg
from lagranet.errors import (
    DimensionMismatch,
    DisconnectedGraph,
    IndexOutOfRange,
    LagranetError,
    NonPositiveWeight,
    SelfLoop,
)
from lagranet.graph import w_quadform

from helpers import dense_lifted_laplacian, random_connected_net


def path3(p=1):
    return lg.build_network(3, p, [(1, 2, 1.0), (2, 3, 1.0)])


class TestBuildNetwork:
    def test_path_laplacian_diagonal(self):
        net = path3()
        lap = net.laplacian_dense()
        assert_allclose(np.diag(lap), [1.0, 2.0, 1.0])
        assert_allclose(lap, lap.T)

    def test_single_node_is_valid(self):
        net = lg.build_network(1, 2, [])
        assert net.num_edges == 0
        assert_allclose(net.laplacian_dense(), [[0.0]])

    def test_disconnected_rejected(self):
        with pytest.raises(DisconnectedGraph):
            lg.build_network(4, 1, [(1, 2, 1.0), (3, 4, 1.0)])

    def test_self_loop_rejected(self):
        with pytest.raises(SelfLoop):
            lg.build_network(2, 1, [(1, 1, 1.0), (1, 2, 1.0)])

    def test_nonpositive_weight_rejected(self):
        with pytest.raises(NonPositiveWeight):
            lg.build_network(2, 1, [(1, 2, 0.0)])
        with pytest.raises(NonPositiveWeight):
            lg.build_network(2, 1, [(1, 2, -3.0)])

    def test_index_out_of_range_rejected(self):
        with pytest.raises(IndexOutOfRange):
            lg.build_network(2, 1, [(1, 3, 1.0)])

    def test_duplicate_edge_rejected(self):
        with pytest.raises(LagranetError):
            lg.build_network(2, 1, [(1, 2, 1.0), (2, 1, 2.0)])


class TestLaplacianApply:
    def test_consensus_vector_in_null_space(self):
        net = path3()
        out = lg.laplacian_apply(net, np.array([3.7, 3.7, 3.7]))
        assert_allclose(out, 0.0, atol=1e-14)

    def test_stencil_expansion(self):
        net = path3()
        out = lg.laplacian_apply(net, np.array([1.0, 0.0, 0.0]))
        assert_allclose(out, [1.0, -1.0, 0.0])

    def test_matches_dense_oracle(self):
        rng = np.random.default_rng(42)
        for _ in range(10):
            n = int(rng.integers(2, 21))
            p = int(rng.integers(1, 4))
            net = random_connected_net(rng, n, p, weight_range=(0.2, 3.0))
            y = rng.standard_normal(n * p)
            dense = dense_lifted_laplacian(net) @ y
            assert_allclose(lg.laplacian_apply(net, y), dense,
                            atol=1e-12 * (1 + np.abs(dense).max()))

    def test_block_sums_vanish(self):
        rng = np.random.default_rng(3)
        for _ in range(10):
            n = int(rng.integers(2, 21))
            p = int(rng.integers(1, 4))
            net = random_connected_net(rng, n, p, weight_range=(0.5, 2.0))
            y = rng.standard_normal(n * p) * 10
            out = lg.laplacian_apply(net, y).reshape(n, p)
            assert np.abs(out.sum(axis=0)).max() <= 1e-12 * np.linalg.norm(y)

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatch):
            lg.laplacian_apply(path3(), np.zeros(4))


class TestSpectral:
    def test_path3_eigenvalues(self):
        net = path3()
        spec = lg.spectral(net)
        oracle = np.sort(np.linalg.eigvalsh(net.laplacian_dense()))
        assert_allclose(spec.eigvals, oracle, atol=1e-12)
        assert_allclose(spec.eigvals, [0.0, 1.0, 3.0], atol=1e-12)

    def test_complete3_eigenvalues(self):
        net = lg.build_network(3, 1, [(1, 2, 1.0), (1, 3, 1.0), (2, 3, 1.0)])
        spec = lg.spectral(net)
        assert_allclose(spec.eigvals, [0.0, 3.0, 3.0], atol=1e-12)

    def test_single_node(self):
        spec = lg.spectral(lg.build_network(1, 1, []))
        assert_allclose(spec.eigvals, [0.0], atol=1e-14)
        assert spec.lambda_max == 0.0

    def test_reconstruction(self):
        rng = np.random.default_rng(11)
        net = random_connected_net(rng, 12, 1, weight_range=(0.2, 4.0))
        lap = net.laplacian_dense()
        spec = lg.spectral(net)
        recon = spec.eigvecs @ np.diag(spec.eigvals) @ spec.eigvecs.T
        assert np.abs(recon - lap).max() <= 1e-8 * np.abs(lap).max()

    def test_lambda2_positive_for_accepted_graphs(self):
        rng = np.random.default_rng(5)
        for _ in range(8):
            n = int(rng.integers(2, 15))
            net = random_connected_net(rng, n, 1)
            assert lg.spectral(net).lambda2 > 1e-10


class TestWdagQuadform:
    def test_consensus_direction_is_annihilated(self):
        net = path3(p=2)
        spec = lg.spectral(net)
        u = np.tile([2.0, -1.5], 3)
        assert lg.wdag_quadform(spec, 2, u) == pytest.approx(0.0, abs=1e-12)

    def test_zero_vector(self):
        spec = lg.spectral(path3())
        assert lg.wdag_quadform(spec, 1, np.zeros(3)) == 0.0

    def test_top_eigvec_matches_pinv_oracle(self):
        net = path3()
        lap = net.laplacian_dense()
        eigvals, eigvecs = np.linalg.eigh(lap)
        u = eigvecs[:, 2]  # unit eigenvector for eigenvalue 3
        spec = lg.spectral(net)
        oracle = float(u @ np.linalg.pinv(lap) @ u)
        got = lg.wdag_quadform(spec, 1, u)
        assert got == pytest.approx(oracle, abs=1e-12)
        assert got == pytest.approx(1.0 / 3.0, abs=1e-12)

    def test_matches_dense_pinv_on_random_input(self):
        rng = np.random.default_rng(9)
        for _ in range(8):
            n = int(rng.integers(2, 12))
            p = int(rng.integers(1, 4))
            net = random_connected_net(rng, n, p, weight_range=(0.3, 2.0))
            spec = lg.spectral(net)
            u = rng.standard_normal(n * p)
            oracle = float(u @ np.linalg.pinv(dense_lifted_laplacian(net),
                                              rcond=1e-12) @ u)
            assert lg.wdag_quadform(spec, p, u) == pytest.approx(oracle, abs=1e-9)

    def test_rayleigh_lower_bound(self):
        rng = np.random.default_rng(21)
        for _ in range(10):
            n = int(rng.integers(2, 12))
            p = int(rng.integers(1, 3))
            net = random_connected_net(rng, n, p)
            spec = lg.spectral(net)
            u = rng.standard_normal(n * p)
            blocks = u.reshape(n, p)
            perp = (blocks - blocks.mean(axis=0)).reshape(-1)
            lhs = lg.wdag_quadform(spec, p, u) * spec.lambda_max
            assert lhs >= np.dot(perp, perp) - 1e-9

    def test_dimension_mismatch(self):
        spec = lg.spectral(path3())
        with pytest.raises(DimensionMismatch):
            lg.wdag_quadform(spec, 2, np.zeros(3))


def test_quadform_identity_w_plus_wdag():
    # w_quadform and wdag_quadform act as inverses on the non-consensus part
    rng = np.random.default_rng(33)
    net = random_connected_net(rng, 7, 2, weight_range=(0.5, 2.0))
    spec = lg.spectral(net)
    u = rng.standard_normal(14)
    wu = lg.laplacian_apply(net, u)
    assert w_quadform(spec, 2, u) == pytest.approx(float(u @ wu), abs=1e-10)
