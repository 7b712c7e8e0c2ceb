"""Request and response schemas of the service API.

`ScenarioModel` is the JSON mirror of the scenario file format: the same
sections, the same keys, the same 1-based neighbor lists.  The two
converters translate between it and the core `Scenario`.
"""

from __future__ import annotations

import math

import numpy as np
from pydantic import BaseModel, ConfigDict

from ..dynamics import OscillatorBank, ProtocolSpec
from ..graph import Network, build_network
from ..icas import IcasConfig, IcasGains, Transceiver
from ..scenario import Scenario

__all__ = [
    "OscillatorsModel",
    "NetworkModel",
    "ProtocolModel",
    "IntegratorModel",
    "IcasModel",
    "ScenarioModel",
    "scenario_from_model",
    "model_from_scenario",
    "SimulateRequest",
    "FitModel",
    "SimulateResponse",
    "BoundsRequest",
    "BoundValue",
    "BoundsResponse",
    "IcasRequest",
    "ToneRecordModel",
    "IcasResponse",
    "VerifyRequest",
    "CheckModel",
    "VerifyResponse",
]


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class OscillatorsModel(_Strict):
    omega: list[float]
    phase0: list[float]


class NetworkModel(_Strict):
    """In-neighbor lists, 1-based, one list per agent; uniform edge weight."""

    neighbors: list[list[int]]
    weight: float = 1.0


class ProtocolModel(_Strict):
    kind: str
    coupling: float = 1.0


class IntegratorModel(_Strict):
    step: float
    horizon: float


class IcasModel(_Strict):
    repetition_freq: list[float]
    tone_duration: list[float]
    first_tone: list[float] = [0.0]
    tones: int = 1000
    k_carrier: float = 1.0
    k_timing: float = 1.0
    freq_weight: float = 1.0
    cfo_gain: float = 1.0
    to_gain: float = 1.0
    cfo_noise: float = 0.0
    to_noise: float = 0.0
    seed: int = 0


class ScenarioModel(_Strict):
    oscillators: OscillatorsModel
    network: NetworkModel
    protocol: ProtocolModel
    integrator: IntegratorModel
    frequency_network: NetworkModel | None = None
    icas: IcasModel | None = None


def _broadcast(values: list[float], n: int, key: str) -> list[float]:
    if len(values) == 1:
        return values * n
    if len(values) != n:
        raise ValueError(f"{key}: expected 1 or {n} values, got {len(values)}")
    return values


def _network_from_model(model: NetworkModel, n: int) -> Network:
    if len(model.neighbors) != n:
        raise ValueError(
            f"network lists neighbors for {len(model.neighbors)} agents, "
            f"scenario has {n}"
        )
    return build_network(model.neighbors, model.weight)


def scenario_from_model(model: ScenarioModel) -> Scenario:
    """Build the core Scenario; raises ValueError on inconsistent fields."""
    omega = model.oscillators.omega
    phase0 = model.oscillators.phase0
    bank = OscillatorBank(
        natural_freq=np.array(omega, dtype=float),
        initial_phase=np.array(phase0, dtype=float),
    )
    n = bank.n_agents
    network = _network_from_model(model.network, n)
    protocol = ProtocolSpec(
        kind=model.protocol.kind, coupling=model.protocol.coupling
    )
    freq_network = (
        _network_from_model(model.frequency_network, n)
        if model.frequency_network is not None
        else None
    )
    icas = None
    if model.icas is not None:
        m = model.icas
        if len(m.repetition_freq) != n:
            raise ValueError(
                f"repetition_freq: expected {n} values, got "
                f"{len(m.repetition_freq)}"
            )
        duration = _broadcast(m.tone_duration, n, "tone_duration")
        first = _broadcast(m.first_tone, n, "first_tone")
        icas = IcasConfig(
            transceivers=tuple(
                Transceiver(
                    carrier_freq=omega[i],
                    repetition_freq=m.repetition_freq[i],
                    tone_duration=duration[i],
                    first_tone=first[i],
                )
                for i in range(n)
            ),
            network=network,
            gains=IcasGains(
                k_carrier=m.k_carrier,
                k_timing=m.k_timing,
                freq_weight=m.freq_weight,
                cfo_gain=m.cfo_gain,
                to_gain=m.to_gain,
            ),
            n_tones=m.tones,
            cfo_noise=m.cfo_noise,
            to_noise=m.to_noise,
            seed=m.seed,
        )
    return Scenario(
        bank=bank,
        network=network,
        protocol=protocol,
        step=model.integrator.step,
        horizon=model.integrator.horizon,
        freq_network=freq_network,
        icas=icas,
    )


def _model_from_network(net: Network) -> NetworkModel:
    positive = net.adjacency[net.adjacency > 0]
    if positive.size and np.ptp(positive) > 1e-12:
        raise ValueError("the service API supports uniform edge weights only")
    weight = float(positive[0]) if positive.size else 1.0
    neighbors = [
        [int(j) + 1 for j in np.flatnonzero(row > 0)] for row in net.adjacency
    ]
    return NetworkModel(neighbors=neighbors, weight=weight)


def model_from_scenario(sc: Scenario) -> ScenarioModel:
    """JSON mirror of a core Scenario (uniform edge weights required)."""
    icas = None
    if sc.icas is not None:
        cfg = sc.icas
        icas = IcasModel(
            repetition_freq=[tr.repetition_freq for tr in cfg.transceivers],
            tone_duration=[tr.tone_duration for tr in cfg.transceivers],
            first_tone=[tr.first_tone for tr in cfg.transceivers],
            tones=cfg.n_tones,
            k_carrier=cfg.gains.k_carrier,
            k_timing=cfg.gains.k_timing,
            freq_weight=cfg.gains.freq_weight,
            cfo_gain=cfg.gains.cfo_gain,
            to_gain=cfg.gains.to_gain,
            cfo_noise=cfg.cfo_noise,
            to_noise=cfg.to_noise,
            seed=cfg.seed,
        )
    return ScenarioModel(
        oscillators=OscillatorsModel(
            omega=[float(w) for w in sc.bank.natural_freq],
            phase0=[float(p) for p in sc.bank.initial_phase],
        ),
        network=_model_from_network(sc.network),
        protocol=ProtocolModel(
            kind=sc.protocol.kind, coupling=sc.protocol.coupling
        ),
        integrator=IntegratorModel(step=sc.step, horizon=sc.horizon),
        frequency_network=(
            _model_from_network(sc.freq_network)
            if sc.freq_network is not None
            else None
        ),
        icas=icas,
    )


# ─── endpoint payloads ──────────────────────────────────────────────────────


class SimulateRequest(_Strict):
    scenario: ScenarioModel
    fit_window: tuple[float, float] | None = None


class FitModel(_Strict):
    slope: float
    intercept: float
    window_start: float
    window_end: float


class SimulateResponse(_Strict):
    kind: str
    times: list[float]
    states: list[list[float]]
    rates: list[list[float]]
    freq_states: list[list[float]] | None = None
    order_r: list[float] | None = None
    order_psi: list[float | None] | None = None
    fit: FitModel | None = None
    metrics: dict[str, float]


class BoundsRequest(_Strict):
    scenario: ScenarioModel


class BoundValue(_Strict):
    kind: str
    value: float


class BoundsResponse(_Strict):
    gamma_l: list[float]
    lambda2: float
    lambda2_abs: float
    lambda2_hat: float
    connected: bool
    balanced: bool
    consensus_frequency: float
    bounds: list[BoundValue]


class IcasRequest(_Strict):
    scenario: ScenarioModel
    include_records: bool = True


class ToneRecordModel(_Strict):
    time: float
    agent: int
    tone_index: int
    carrier_phase: float
    carrier_rate: float
    rep_freq: float
    rep_rate: float
    max_cfo_measured: float | None
    max_to_measured: float | None


class IcasResponse(_Strict):
    mutual_cfo: float
    to_phase: float
    rep_freq_spread: float
    tones_per_agent: list[int]
    records: list[ToneRecordModel] | None = None
    metrics: dict[str, float]


class VerifyRequest(_Strict):
    names: list[str] | None = None


class CheckModel(_Strict):
    name: str
    passed: bool
    measured: float
    expected: float
    tolerance: float
    detail: str
    line: str


class VerifyResponse(_Strict):
    checks: list[CheckModel]
    all_passed: bool


def none_if_nan(x: float) -> float | None:
    return None if math.isnan(x) else float(x)
