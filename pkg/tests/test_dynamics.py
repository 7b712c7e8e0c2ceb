"""Protocol right-hand sides and the fixed-step integrator."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kurasync.dynamics import (
    OscillatorBank,
    ProtocolSpec,
    dynamic_consensus_rhs,
    extended_kuramoto_rhs,
    integrate,
    kuramoto_rhs,
    rk4_step,
    static_consensus_rhs,
)
from kurasync.graph import build_network
from kurasync.scenario import Scenario
from tests.conftest import (
    STUDY_COUPLING,
    STUDY_NEIGHBORS,
    STUDY_OMEGA,
    STUDY_PHASE0,
    STUDY_WBAR,
)


def _scenario(kind, bank, net, step=0.01, horizon=1.0, coupling=1.0, freq_net=None):
    return Scenario(
        bank=bank,
        network=net,
        protocol=ProtocolSpec(kind=kind, coupling=coupling),
        step=step,
        horizon=horizon,
        freq_network=freq_net,
    )


def test_oscillator_bank_validates_shapes():
    with pytest.raises(ValueError, match="equal length"):
        OscillatorBank(natural_freq=[1.0, 2.0], initial_phase=[0.0])
    bank = OscillatorBank(natural_freq=[1.0, 2.0], initial_phase=[0.5, 0.1])
    assert bank.n_agents == 2
    assert bank.natural_freq.dtype == float


def test_protocol_spec_validates_kind_and_coupling():
    with pytest.raises(ValueError, match="unknown protocol kind"):
        ProtocolSpec(kind="kuromoto")
    with pytest.raises(ValueError, match="coupling > 0"):
        ProtocolSpec(kind="kuramoto", coupling=0.0)
    ProtocolSpec(kind="static_consensus", coupling=0.0)  # unused: allowed


def test_rk4_step_matches_exponential_taylor():
    # one step of y' = y from 1: RK4 reproduces exp(h) through h^4 / 24
    h = 0.1
    value = rk4_step(lambda t, y: y, 0.0, np.array([1.0]), h)[0]
    taylor = 1 + h + h**2 / 2 + h**3 / 6 + h**4 / 24
    assert value == pytest.approx(taylor, abs=1e-15)


def test_static_consensus_two_agent_closed_form():
    # x1 - x2 decays as exp(-2 w t) for a symmetric pair with weight w
    net = build_network([[2], [1]], weights=1.0)
    bank = OscillatorBank(natural_freq=[0.0, 0.0], initial_phase=[1.0, 0.0])
    traj = integrate(_scenario("static_consensus", bank, net, horizon=1.0))
    diff = traj.states[:, 0] - traj.states[:, 1]
    assert np.max(np.abs(diff - np.exp(-2.0 * traj.times))) < 1e-9
    assert np.allclose(traj.states[:, 0] + traj.states[:, 1], 1.0, atol=1e-12)


def test_rhs_match_loop_reference(study_network, study_bank):
    # vectorized right-hand sides against plain per-agent loops
    spec = ProtocolSpec(kind="kuramoto", coupling=STUDY_COUPLING)
    theta = STUDY_PHASE0
    got = kuramoto_rhs(theta, study_bank, spec, study_network)
    a = study_network.adjacency
    expected = np.array([
        STUDY_OMEGA[i]
        + (STUDY_COUPLING / 5) * sum(
            a[i, j] * np.sin(theta[j] - theta[i]) for j in range(5)
        )
        for i in range(5)
    ])
    assert np.allclose(got, expected, atol=1e-14)

    x = np.array([0.3, -1.0, 2.0, 0.0, 1.5])
    u_dot = np.array([1.0, 0.0, -1.0, 0.5, 0.2])
    got = dynamic_consensus_rhs(x, u_dot, study_network)
    expected = np.array([
        u_dot[i] + sum(a[i, j] * (x[j] - x[i]) for j in range(5))
        for i in range(5)
    ])
    assert np.allclose(got, expected, atol=1e-14)
    assert np.allclose(
        static_consensus_rhs(x, study_network), got - u_dot, atol=1e-14
    )


def test_extended_rhs_stages(study_network, study_bank):
    spec = ProtocolSpec(kind="extended_kuramoto", coupling=STUDY_COUPLING)
    vartheta = STUDY_OMEGA
    theta = STUDY_PHASE0
    dv, dth = extended_kuramoto_rhs(
        vartheta, theta, 0.0, study_bank, spec, study_network, study_network
    )
    # frequency stage is linear consensus, phase stage is coupling plus drift
    lap = np.diag(study_network.adjacency.sum(axis=1)) - study_network.adjacency
    assert np.allclose(dv, -lap @ vartheta, atol=1e-14)
    coupled = kuramoto_rhs(theta, study_bank, spec, study_network)
    assert np.allclose(dth, coupled - STUDY_OMEGA + vartheta, atol=1e-14)

    accel = lambda t: np.full(5, 0.25)
    dv2, _ = extended_kuramoto_rhs(
        vartheta, theta, 0.0, study_bank, spec, study_network, study_network,
        accel=accel,
    )
    assert np.allclose(dv2, dv + 0.25, atol=1e-14)


def test_two_agent_kuramoto_locks_at_analytic_offset():
    # phase gap obeys d' = dw - 2 (K/N) sin d, locking at asin(dw N / (2K))
    net = build_network([[2], [1]])
    bank = OscillatorBank(natural_freq=[1.0, 1.2], initial_phase=[0.0, 0.3])
    traj = integrate(_scenario("kuramoto", bank, net, horizon=20.0, coupling=2.0))
    gap = traj.states[-1, 1] - traj.states[-1, 0]
    assert gap == pytest.approx(np.arcsin(0.1), abs=1e-8)
    assert traj.rates[-1] == pytest.approx([1.1, 1.1], abs=1e-8)


def test_integrate_rates_are_grid_evaluations(study_network, study_bank):
    sc = _scenario(
        "kuramoto", study_bank, study_network, coupling=STUDY_COUPLING
    )
    traj = integrate(sc)
    spec = ProtocolSpec(kind="kuramoto", coupling=STUDY_COUPLING)
    k = 37
    assert np.allclose(
        traj.rates[k],
        kuramoto_rhs(traj.states[k], study_bank, spec, study_network),
        atol=1e-14,
    )
    assert traj.freq_states is None
    assert traj.times.shape == (101,)
    assert traj.states.shape == (101, 5)


def test_integrate_extended_splits_states(study_network, study_bank):
    sc = _scenario(
        "extended_kuramoto", study_bank, study_network,
        horizon=10.0, coupling=STUDY_COUPLING,
    )
    traj = integrate(sc)
    assert traj.freq_states.shape == traj.states.shape
    assert np.allclose(traj.freq_states[0], STUDY_OMEGA)
    assert np.allclose(traj.states[0], STUDY_PHASE0)
    # frequency stage reaches the weighted consensus value
    assert np.max(np.abs(traj.freq_states[-1] - STUDY_WBAR)) < 1e-6


def test_integrate_separate_frequency_network(study_network, study_bank):
    ring = build_network([[2], [3], [4], [5], [1]])
    sc = _scenario(
        "extended_kuramoto", study_bank, study_network,
        horizon=20.0, coupling=STUDY_COUPLING, freq_net=ring,
    )
    traj = integrate(sc)
    # the ring is balanced, so frequencies settle on the arithmetic mean
    assert np.max(np.abs(traj.freq_states[-1] - STUDY_OMEGA.mean())) < 1e-4


def test_integrate_rejects_bad_grid(study_network, study_bank):
    with pytest.raises(ValueError, match="positive"):
        integrate(_scenario("kuramoto", study_bank, study_network, step=-0.01))
    with pytest.raises(ValueError, match="integer number of steps"):
        integrate(_scenario(
            "kuramoto", study_bank, study_network, step=0.3, horizon=1.0
        ))


@pytest.mark.filterwarnings("ignore:overflow encountered:RuntimeWarning")
def test_integrate_reports_divergence_time():
    # step far outside the stability region blows up the linear protocol
    net = build_network([[2], [1]], weights=300.0)
    bank = OscillatorBank(natural_freq=[0.0, 0.0], initial_phase=[1.0, -1.0])
    with pytest.raises(FloatingPointError, match="diverged at t ="):
        integrate(_scenario("static_consensus", bank, net, horizon=5.0))


@settings(max_examples=25, deadline=None)
@given(
    x0=st.lists(
        st.floats(min_value=-5, max_value=5, allow_nan=False),
        min_size=3, max_size=3,
    ),
)
def test_symmetric_static_consensus_conserves_the_mean(x0):
    net = build_network([[2], [1, 3], [2]], weights=0.8)
    bank = OscillatorBank(natural_freq=[0.0] * 3, initial_phase=x0)
    traj = integrate(_scenario("static_consensus", bank, net, horizon=2.0))
    assert np.allclose(traj.states.mean(axis=1), np.mean(x0), atol=1e-10)
