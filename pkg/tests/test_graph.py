"""Network construction, structure predicates, spectra, incidence."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kurasync.graph import (
    Network,
    build_network,
    incidence,
    is_balanced,
    is_connected,
    laplacian,
    spectral,
)
from tests.conftest import (
    STUDY_GAMMA,
    STUDY_LAMBDA2,
    STUDY_LAMBDA2_HAT,
    STUDY_NEIGHBORS,
)


def test_build_network_places_weights_on_in_edges():
    net = build_network([[2], [1, 3], []], weights=2.5)
    expected = np.array([
        [0.0, 2.5, 0.0],
        [2.5, 0.0, 2.5],
        [0.0, 0.0, 0.0],
    ])
    assert np.array_equal(net.adjacency, expected)
    assert net.n_agents == 3
    assert net.in_neighbors(1).tolist() == [0, 2]
    assert net.in_neighbors(2).tolist() == []


def test_build_network_weight_matrix_selects_per_edge():
    w = np.array([[0.0, 0.3], [0.7, 0.0]])
    net = build_network([[2], [1]], weights=w)
    assert net.adjacency[0, 1] == 0.3
    assert net.adjacency[1, 0] == 0.7


def test_build_network_rejects_bad_indices_and_weights():
    with pytest.raises(ValueError, match="outside 1..2"):
        build_network([[3], []])
    with pytest.raises(ValueError, match="self-loop"):
        build_network([[1], []])
    with pytest.raises(ValueError, match="must be positive"):
        build_network([[2], []], weights=0.0)
    with pytest.raises(ValueError, match="does not match"):
        build_network([[2], [1]], weights=np.ones((3, 3)))


def test_laplacian_rows_sum_to_zero(study_network):
    lap = laplacian(study_network)
    assert np.allclose(lap.sum(axis=1), 0.0)
    assert np.allclose(np.diag(lap), study_network.adjacency.sum(axis=1))
    assert np.allclose(lap - np.diag(np.diag(lap)), -study_network.adjacency)


def test_is_connected_study_network(study_network):
    assert is_connected(study_network)


def test_is_connected_needs_a_root():
    # chain 3 -> 2 -> 1 is rooted at agent 3
    assert is_connected(build_network([[2], [3], []]))
    # two separate pairs share no root
    assert not is_connected(build_network([[2], [1], [4], [3]]))
    assert is_connected(build_network([[]]))


def test_is_balanced():
    assert is_balanced(build_network([[2], [3], [1]]))  # directed ring
    assert is_balanced(build_network([[2], [1]]))
    assert not is_balanced(build_network(STUDY_NEIGHBORS))
    assert not is_balanced(build_network([[2], [1]], weights=np.array([
        [0.0, 1.0], [2.0, 0.0],
    ])))


def test_spectral_study_references(study_spectral):
    assert np.max(np.abs(study_spectral.gamma_l - STUDY_GAMMA)) < 1e-3
    assert study_spectral.lambda2 == pytest.approx(STUDY_LAMBDA2, abs=1e-3)
    assert study_spectral.lambda2_hat == pytest.approx(STUDY_LAMBDA2_HAT, abs=1e-3)
    assert study_spectral.lambda2_abs == pytest.approx(study_spectral.lambda2)


def test_spectral_gamma_is_left_null_and_unit(study_spectral):
    assert np.linalg.norm(study_spectral.gamma_l) == pytest.approx(1.0)
    assert np.max(np.abs(study_spectral.gamma_l @ study_spectral.laplacian)) < 1e-12
    pi = study_spectral.projection
    assert np.allclose(pi, pi.T)
    assert np.allclose(pi @ pi, pi)
    assert np.max(np.abs(pi @ study_spectral.gamma_l)) < 1e-12


def test_spectral_rejects_disconnected():
    net = build_network([[2], [1], [4], [3]])
    with pytest.raises(ValueError, match="multiplicity 2"):
        spectral(net)


def test_incidence_directed_study_network(study_network):
    inc = incidence(study_network, coupling=1.0)
    assert len(inc.edges) == 14
    assert inc.incidence.shape == (5, 14)
    # columns sum to zero: +1 receiver, -1 sender
    assert np.allclose(inc.incidence.sum(axis=0), 0.0)
    d_minus_a = (
        np.diag(study_network.adjacency.sum(axis=1)) - study_network.adjacency
    )
    assert np.allclose(
        inc.incidence_in @ np.diag(inc.weights) @ inc.incidence.T, d_minus_a
    )


def test_incidence_coupling_scales_weights(study_network):
    inc = incidence(study_network, coupling=3.0)
    assert np.allclose(inc.weights, 3.0)


def test_incidence_undirected_recovers_laplacian():
    net = build_network([[2, 3], [1, 3], [1, 2]], weights=0.5)
    inc = incidence(net, undirected=True)
    assert inc.undirected
    assert len(inc.edges) == 3
    assert np.allclose(
        inc.incidence @ np.diag(inc.weights) @ inc.incidence.T, laplacian(net)
    )


def test_incidence_undirected_rejects_asymmetric(study_network):
    with pytest.raises(ValueError, match="symmetric"):
        incidence(study_network, undirected=True)


@st.composite
def connected_symmetric(draw):
    n = draw(st.integers(min_value=2, max_value=6))
    bits = draw(st.lists(
        st.booleans(), min_size=n * (n - 1) // 2, max_size=n * (n - 1) // 2
    ))
    adj = np.zeros((n, n))
    k = 0
    for i in range(n):
        for j in range(i + 1, n):
            if bits[k]:
                adj[i, j] = adj[j, i] = 1.0
            k += 1
    # a path through all agents keeps every draw connected
    for i in range(n - 1):
        adj[i, i + 1] = adj[i + 1, i] = 1.0
    return Network(n_agents=n, adjacency=adj)


@settings(max_examples=40, deadline=None)
@given(connected_symmetric())
def test_balanced_networks_agree_on_uniform_direction(net):
    data = spectral(net)
    uniform = np.ones(net.n_agents) / np.sqrt(net.n_agents)
    assert np.max(np.abs(data.gamma_l - uniform)) < 1e-8
    assert data.lambda2_hat > 0.0
    assert data.lambda2 == pytest.approx(data.lambda2_hat, abs=1e-9)
