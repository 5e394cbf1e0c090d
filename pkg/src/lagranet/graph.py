"""Weighted undirected networks and their Laplacian spectral toolkit.

Agents sit on the nodes of a connected undirected graph and hold
p-dimensional blocks, stacked into one vector of length n*p.  The graph
Laplacian acts blockwise on such stacked vectors through
`laplacian_apply`, which only combines neighbouring blocks -- the same
information pattern a message-passing deployment would have.  Spectral
quantities (full eigendecomposition, pseudoinverse quadratic form) back
the analysis metrics; the iteration hot path never needs them.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DimensionMismatch,
    DisconnectedGraph,
    IndexOutOfRange,
    LagranetError,
    NonPositiveWeight,
    SelfLoop,
)

# Absolute threshold below which a Laplacian eigenvalue counts as zero.
# Desk-scale connected graphs keep lambda_2 orders of magnitude above it.
ZERO_EIG_TOL = 1e-10


@dataclass(frozen=True)
class Network:
    """Connected undirected weighted graph with per-node block size p.

    Edges are stored once with 0-based endpoint arrays; the public
    constructor `build_network` takes 1-based indices as used in
    scenario files.  Instances are immutable and safe to share.
    """

    n: int
    p: int
    edge_i: np.ndarray  # (E,) int, 0-based tail
    edge_j: np.ndarray  # (E,) int, 0-based head
    edge_w: np.ndarray  # (E,) float, positive weights
    neighbors: tuple = field(repr=False)  # per node: tuple of (other, weight)

    @property
    def num_edges(self) -> int:
        return int(self.edge_i.shape[0])

    @property
    def stacked_dim(self) -> int:
        return self.n * self.p

    def degrees(self) -> np.ndarray:
        """Weighted degree of every node."""
        deg = np.zeros(self.n)
        np.add.at(deg, self.edge_i, self.edge_w)
        np.add.at(deg, self.edge_j, self.edge_w)
        return deg

    def laplacian_dense(self) -> np.ndarray:
        """Dense (n, n) Laplacian: weighted degree on the diagonal,
        minus the edge weight off-diagonal."""
        lap = np.zeros((self.n, self.n))
        for i, j, w in zip(self.edge_i, self.edge_j, self.edge_w):
            lap[i, j] -= w
            lap[j, i] -= w
            lap[i, i] += w
            lap[j, j] += w
        return lap

    def kron_laplacian_dense(self) -> np.ndarray:
        """Dense (n*p, n*p) blockwise lift of the Laplacian."""
        return np.kron(self.laplacian_dense(), np.eye(self.p))


@dataclass(frozen=True)
class SpectralData:
    """Full symmetric eigendecomposition of a network Laplacian.

    eigvals are nondecreasing with eigvals[0] ~ 0; eigvecs has the
    matching orthonormal eigenvectors in its columns.
    """

    eigvals: np.ndarray   # (n,) nondecreasing
    eigvecs: np.ndarray   # (n, n) orthonormal columns
    lambda_max: float

    @property
    def n(self) -> int:
        return int(self.eigvals.shape[0])

    @property
    def lambda2(self) -> float:
        """Algebraic connectivity (second-smallest eigenvalue)."""
        if self.n < 2:
            return 0.0
        return float(self.eigvals[1])

    def positive_mask(self) -> np.ndarray:
        return self.eigvals > ZERO_EIG_TOL


def build_network(n: int, p: int, edges) -> Network:
    """Build a validated network from a 1-based weighted edge list.

    Parameters
    ----------
    n, p : int
        Node count and per-node block dimension, both >= 1.
    edges : iterable of (i, j, w)
        Undirected edges with 1-based endpoints and positive weights,
        each pair listed once.

    Raises
    ------
    IndexOutOfRange, SelfLoop, NonPositiveWeight, DisconnectedGraph
    """
    if n < 1 or p < 1:
        raise LagranetError(f"n and p must be >= 1, got n={n}, p={p}")

    seen = set()
    ei, ej, ew = [], [], []
    for edge in edges:
        i, j, w = int(edge[0]), int(edge[1]), float(edge[2])
        if not (1 <= i <= n and 1 <= j <= n):
            raise IndexOutOfRange(f"edge ({i}, {j}) outside 1..{n}")
        if i == j:
            raise SelfLoop(f"self-loop at node {i}")
        if w <= 0.0:
            raise NonPositiveWeight(f"edge ({i}, {j}) has weight {w}")
        key = (min(i, j) - 1, max(i, j) - 1)
        if key in seen:
            raise LagranetError(f"duplicate edge ({i}, {j})")
        seen.add(key)
        ei.append(key[0])
        ej.append(key[1])
        ew.append(w)

    edge_i = np.asarray(ei, dtype=np.intp)
    edge_j = np.asarray(ej, dtype=np.intp)
    edge_w = np.asarray(ew, dtype=float)

    adj = [[] for _ in range(n)]
    for i, j, w in zip(edge_i, edge_j, edge_w):
        adj[i].append((int(j), float(w)))
        adj[j].append((int(i), float(w)))
    neighbors = tuple(tuple(a) for a in adj)

    _check_connected(n, neighbors)
    return Network(n=n, p=p, edge_i=edge_i, edge_j=edge_j, edge_w=edge_w,
                   neighbors=neighbors)


def _check_connected(n: int, neighbors) -> None:
    if n == 1:
        return
    visited = np.zeros(n, dtype=bool)
    queue = deque([0])
    visited[0] = True
    count = 1
    while queue:
        u = queue.popleft()
        for v, _ in neighbors[u]:
            if not visited[v]:
                visited[v] = True
                count += 1
                queue.append(v)
    if count != n:
        raise DisconnectedGraph(f"only {count} of {n} nodes reachable from node 1")


def laplacian_apply(net: Network, y: np.ndarray) -> np.ndarray:
    """Apply the blockwise Laplacian to a stacked vector.

    Block i of the result is sum_{j in N_i} w_ij * (y_i - y_j), i.e.
    exactly the aggregate each agent forms from one round of neighbour
    exchanges.  Edge contributions are accumulated as +/- the same
    float, so the blocks of the result sum to zero up to rounding.
    """
    y = np.asarray(y, dtype=float)
    if y.shape != (net.stacked_dim,):
        raise DimensionMismatch(
            f"expected stacked vector of length {net.stacked_dim}, got shape {y.shape}"
        )
    blocks = y.reshape(net.n, net.p)
    flows = net.edge_w[:, None] * (blocks[net.edge_i] - blocks[net.edge_j])
    out = np.zeros_like(blocks)
    np.add.at(out, net.edge_i, flows)
    np.subtract.at(out, net.edge_j, flows)
    return out.reshape(-1)


def spectral(net: Network) -> SpectralData:
    """Dense symmetric eigendecomposition of the network Laplacian.

    O(n^3); intended for desk scale (up to a few thousand nodes).
    """
    lap = net.laplacian_dense()
    eigvals, eigvecs = np.linalg.eigh(lap)
    lam1 = float(eigvals[0])
    if abs(lam1) > ZERO_EIG_TOL * max(1.0, float(eigvals[-1])):
        raise LagranetError(
            f"smallest Laplacian eigenvalue {lam1} not numerically zero"
        )
    return SpectralData(eigvals=eigvals, eigvecs=eigvecs,
                        lambda_max=float(eigvals[-1]))


def wdag_quadform(spec: SpectralData, p: int, u: np.ndarray) -> float:
    """Quadratic form of the pseudoinverse lift: u' (L^+ kron I_p) u.

    Eigenvalues at or below the zero threshold are discarded, so any
    consensus-direction component of u is ignored.  Always >= 0.
    """
    u = np.asarray(u, dtype=float)
    n = spec.n
    if u.shape != (n * p,):
        raise DimensionMismatch(
            f"expected stacked vector of length {n * p}, got shape {u.shape}"
        )
    blocks = u.reshape(n, p)
    coeffs = spec.eigvecs.T @ blocks          # (n, p) modal coefficients
    mask = spec.positive_mask()
    if not mask.any():
        return 0.0
    sq = np.sum(coeffs[mask] ** 2, axis=1)
    return float(np.sum(sq / spec.eigvals[mask]))


def w_quadform(spec: SpectralData, p: int, u: np.ndarray) -> float:
    """Quadratic form u' (L kron I_p) u computed spectrally (>= 0)."""
    u = np.asarray(u, dtype=float)
    n = spec.n
    if u.shape != (n * p,):
        raise DimensionMismatch(
            f"expected stacked vector of length {n * p}, got shape {u.shape}"
        )
    blocks = u.reshape(n, p)
    coeffs = spec.eigvecs.T @ blocks
    sq = np.sum(coeffs ** 2, axis=1)
    return float(np.sum(sq * np.clip(spec.eigvals, 0.0, None)))
