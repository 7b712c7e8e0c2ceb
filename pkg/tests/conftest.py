"""Shared fixtures: the five-agent study population and its network."""

import numpy as np
import pytest

from kurasync.dynamics import OscillatorBank
from kurasync.graph import build_network, spectral

STUDY_NEIGHBORS = [[2, 5], [1, 3, 4, 5], [1, 2, 4], [1, 2, 5], [1, 4]]
STUDY_OMEGA = np.array([1.1, 0.8, 1.0, 1.3, 1.05])
STUDY_PHASE0 = np.array([0.5, 2.5, 1.5, 2.0, 4.5])
STUDY_COUPLING = 5.0

# frozen spectral references for the study network
STUDY_GAMMA = np.array([0.6527, 0.2670, 0.0890, 0.3264, 0.6231])
STUDY_LAMBDA2 = 2.382
STUDY_LAMBDA2_HAT = 2.4340
STUDY_WBAR = 1.071969696969697
STUDY_BOUND = 0.1528


@pytest.fixture
def study_network():
    return build_network(STUDY_NEIGHBORS)


@pytest.fixture
def study_bank():
    return OscillatorBank(natural_freq=STUDY_OMEGA, initial_phase=STUDY_PHASE0)


@pytest.fixture
def study_spectral(study_network):
    return spectral(study_network)
