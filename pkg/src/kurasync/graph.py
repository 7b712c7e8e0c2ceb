"""Directed communication networks and their spectral structure.

A network of N agents is described by a weighted adjacency matrix A where
a_ij > 0 means agent i receives the state of agent j.  The graph Laplacian
L = D - A (D the diagonal matrix of adjacency row sums) drives every
consensus protocol in this package.  This module builds networks from
neighbor lists, checks connectivity and balance, extracts the spectral
quantities used by the error bounds (left null direction gamma_L, algebraic
connectivity lambda_2, disagreement projection), and assembles incidence
matrices for edge-space computations.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "Network",
    "SpectralData",
    "IncidenceData",
    "build_network",
    "laplacian",
    "is_connected",
    "is_balanced",
    "spectral",
    "incidence",
]

_ZERO_EIG_TOL = 1e-9


@dataclass(frozen=True)
class Network:
    """Weighted directed communication network.

    Attributes:
        n_agents: Number of agents N.
        adjacency: (N, N) array; adjacency[i, j] > 0 iff agent i receives
            the state of agent j.  The diagonal is zero.
    """

    n_agents: int
    adjacency: np.ndarray

    def in_neighbors(self, agent: int) -> np.ndarray:
        """Indices j whose state the given agent receives."""
        return np.flatnonzero(self.adjacency[agent] > 0.0)


@dataclass(frozen=True)
class SpectralData:
    """Spectral quantities of a network Laplacian used by the error bounds.

    Attributes:
        laplacian: (N, N) Laplacian L = D - A.
        gamma_l: Unit-norm left null vector of L (gamma_l^T L = 0) with
            nonnegative entries for rooted networks; sign fixed so the
            largest-magnitude entry is positive.
        lambda2: Real part of the second-smallest eigenvalue of L when
            eigenvalues are sorted by real part.
        lambda2_abs: Magnitude of that same eigenvalue (coincides with
            lambda2 for real spectra).
        lambda2_hat: Second-smallest eigenvalue of the symmetrized
            Laplacian (L + L^T) / 2; the decay rate in the tracking bound.
        projection: Disagreement projector I - gamma_l gamma_l^T.
    """

    laplacian: np.ndarray
    gamma_l: np.ndarray
    lambda2: float
    lambda2_abs: float
    lambda2_hat: float
    projection: np.ndarray


@dataclass(frozen=True)
class IncidenceData:
    """Incidence description of a network's edge space.

    Attributes:
        edges: List of (receiver, sender) index pairs, sorted.
        incidence: (N, E) matrix B with +1 at the receiver and -1 at the
            sender of each edge.
        incidence_in: Positive part of B (receiver indicator), written
            B~ in the derivations.
        weights: (E,) diagonal of W, the edge weights times the coupling.
        undirected: True when built with one column per unordered pair.
    """

    edges: tuple[tuple[int, int], ...]
    incidence: np.ndarray
    incidence_in: np.ndarray
    weights: np.ndarray
    undirected: bool = field(default=False)


# ─── construction ──────────────────────────────────────────────────────────


def build_network(
    neighbor_lists: list[list[int]],
    weights: np.ndarray | float = 1.0,
) -> Network:
    """Build a Network from per-agent in-neighbor lists.

    Args:
        neighbor_lists: neighbor_lists[i] holds the 1-based indices of the
            agents whose state agent i receives.
        weights: Either a scalar weight applied to every edge or a full
            (N, N) array of edge weights (entries outside the neighbor
            structure are ignored).

    Returns:
        The assembled Network.

    Raises:
        ValueError: on out-of-range indices, self-loops, or nonpositive
            weights on declared edges.
    """
    n = len(neighbor_lists)
    adjacency = np.zeros((n, n))
    weight_matrix = None
    if isinstance(weights, np.ndarray):
        weight_matrix = np.asarray(weights, dtype=float)
        if weight_matrix.shape != (n, n):
            raise ValueError(
                f"weight matrix shape {weight_matrix.shape} does not match "
                f"{n} agents"
            )
    for i, nbrs in enumerate(neighbor_lists):
        for j1 in nbrs:
            if not 1 <= j1 <= n:
                raise ValueError(
                    f"agent {i + 1}: neighbor index {j1} outside 1..{n}"
                )
            j = j1 - 1
            if j == i:
                raise ValueError(f"agent {i + 1}: self-loop not allowed")
            w = float(weights) if weight_matrix is None else weight_matrix[i, j]
            if w <= 0.0:
                raise ValueError(
                    f"edge ({i + 1} <- {j + 1}): weight must be positive, got {w}"
                )
            adjacency[i, j] = w
    return Network(n_agents=n, adjacency=adjacency)


def laplacian(net: Network) -> np.ndarray:
    """Graph Laplacian L = D - A; rows sum to zero."""
    a = net.adjacency
    return np.diag(a.sum(axis=1)) - a


# ─── structure predicates ──────────────────────────────────────────────────


def is_connected(net: Network) -> bool:
    """True when some agent's state reaches every other agent.

    Information flows from sender j to receiver i along each edge
    a_ij > 0.  The network supports consensus iff at least one root agent
    exists from which every agent is reachable along that flow.
    """
    n = net.n_agents
    if n == 1:
        return True
    # reach[j] = set reachable from j following information flow j -> i
    targets = [np.flatnonzero(net.adjacency[:, j] > 0.0) for j in range(n)]
    for root in range(n):
        seen = np.zeros(n, dtype=bool)
        seen[root] = True
        stack = [root]
        while stack:
            v = stack.pop()
            for u in targets[v]:
                if not seen[u]:
                    seen[u] = True
                    stack.append(int(u))
        if seen.all():
            return True
    return False


def is_balanced(net: Network, tol: float = 1e-12) -> bool:
    """True when every agent's weighted in-degree equals its out-degree.

    In-degree of agent v is the row sum (weight received), out-degree the
    column sum (weight provided to others).
    """
    a = net.adjacency
    return bool(np.all(np.abs(a.sum(axis=1) - a.sum(axis=0)) <= tol))


# ─── spectral characterization ─────────────────────────────────────────────


def spectral(net: Network) -> SpectralData:
    """Spectral quantities of the network Laplacian.

    Raises:
        ValueError: when the zero eigenvalue of L is not simple, i.e. the
            network cannot support consensus.
    """
    lap = laplacian(net)
    eigvals = np.linalg.eigvals(lap)
    order = np.argsort(eigvals.real)
    eigvals = eigvals[order]
    n_zero = int(np.sum(np.abs(eigvals) <= _ZERO_EIG_TOL * max(1.0, np.abs(eigvals).max())))
    if n_zero != 1:
        raise ValueError(
            f"network does not support consensus: zero eigenvalue has "
            f"multiplicity {n_zero}"
        )
    lam2 = eigvals[1]

    # left null vector from the transposed system
    wt, vt = np.linalg.eig(lap.T)
    gamma = np.real(vt[:, np.argmin(np.abs(wt))])
    gamma = gamma / np.linalg.norm(gamma)
    if gamma[np.argmax(np.abs(gamma))] < 0.0:
        gamma = -gamma

    sym = 0.5 * (lap + lap.T)
    lam2_hat = float(np.sort(np.linalg.eigvalsh(sym))[1])

    return SpectralData(
        laplacian=lap,
        gamma_l=gamma,
        lambda2=float(lam2.real),
        lambda2_abs=float(np.abs(lam2)),
        lambda2_hat=lam2_hat,
        projection=np.eye(net.n_agents) - np.outer(gamma, gamma),
    )


# ─── incidence ─────────────────────────────────────────────────────────────


def incidence(
    net: Network,
    coupling: float = 1.0,
    undirected: bool = False,
) -> IncidenceData:
    """Incidence matrices of the network.

    In the directed layout (default) every ordered pair with a_ij > 0
    contributes one column with +1 at the receiver i and -1 at the sender
    j, and the positive part B~ satisfies B~ W B^T = D - A.  In the
    undirected layout (symmetric-weight networks only) each unordered pair
    contributes a single column, so that B W B^T = L.

    Args:
        net: The network.
        coupling: Scalar multiplied into the edge weights to form W (for
            phase-coupled oscillators this is the coupling gain over the
            agent count).
        undirected: Use the one-column-per-pair layout.

    Raises:
        ValueError: when undirected layout is requested for a network with
            asymmetric weights.
    """
    a = net.adjacency
    n = net.n_agents
    if undirected:
        if not np.allclose(a, a.T):
            raise ValueError("undirected incidence requires symmetric weights")
        edges = [(i, j) for i in range(n) for j in range(i + 1, n) if a[i, j] > 0]
    else:
        edges = [(i, j) for i in range(n) for j in range(n) if a[i, j] > 0]
    b = np.zeros((n, len(edges)))
    for e, (recv, send) in enumerate(edges):
        b[recv, e] = 1.0
        b[send, e] = -1.0
    weights = np.array([coupling * a[recv, send] for recv, send in edges])
    return IncidenceData(
        edges=tuple(edges),
        incidence=b,
        incidence_in=np.maximum(b, 0.0),
        weights=weights,
        undirected=undirected,
    )
