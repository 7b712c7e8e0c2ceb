"""Scenario files: the text format every run is described by.

A scenario is an INI-style file of flat key = value lines grouped into
sections:

    [oscillators]
    omega  = 1.1 0.8 1.0 1.3 1.05     ; natural frequencies, rad/s
    phase0 = 0.5 2.5 1.5 2.0 4.5      ; initial phases, rad

    [network]
    neighbors_1 = 2 5                 ; agents whose state agent 1 receives
    neighbors_2 = 1 3 4 5             ; (1-based; omitted lists are empty)
    ...
    weight = 1.0                      ; uniform edge weight

    [protocol]
    kind = kuramoto                   ; static_consensus | dynamic_consensus
                                      ; | kuramoto | extended_kuramoto
    coupling = 5.0                    ; total gain K; couples as K / N

    [integrator]
    step = 0.01                       ; fixed RK4 step, s
    horizon = 10.0                    ; simulated time span, s

    [frequency_network]               ; optional, extended protocol only:
    neighbors_1 = ...                 ; separate frequency-stage topology
    weight = 1.0                      ; (defaults to [network])

    [outputs]                         ; optional file name overrides
    trajectory = trajectory.csv
    metrics = metrics.txt

    [icas]                            ; pilot-tone runs only
    repetition_freq = 62.83 64.09 ... ; rad/s, one per agent
    tone_duration = 0.04              ; s, scalar or one per agent
    first_tone = 0.0 0.013 ...        ; s, scalar or one per agent
    tones = 1000                      ; tones per agent
    k_carrier = 5.0                   ; carrier-loop gain
    k_timing = 5.0                    ; timing-loop gain
    freq_weight = 1.0                 ; repetition-frequency consensus gain
    cfo_gain = 1.0                    ; measurement weights, (0, 1]
    to_gain = 1.0
    cfo_noise = 0.0                   ; measurement noise levels
    to_noise = 0.0
    seed = 0

Carrier frequencies of a pilot-tone run are the [oscillators] omega
values.  Values are whitespace-separated; ';' and '#' start comments.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, replace
from importlib import resources

import numpy as np

from .dynamics import OscillatorBank, ProtocolSpec
from .graph import Network, build_network
from .icas import IcasConfig, IcasGains, Transceiver

__all__ = [
    "Scenario",
    "parse_scenario",
    "load_scenario",
    "bundled_scenario",
    "bundled_scenario_names",
    "with_overrides",
]

_BUNDLED = (
    "five_agent",
    "five_agent_extended",
    "five_agent_icas",
    "two_agent_icas",
)


@dataclass(frozen=True)
class Scenario:
    """Everything a run needs: population, topology, protocol, grid."""

    bank: OscillatorBank
    network: Network
    protocol: ProtocolSpec
    step: float
    horizon: float
    freq_network: Network | None = None
    trajectory_path: str = "trajectory.csv"
    metrics_path: str = "metrics.txt"
    icas: IcasConfig | None = None


def _floats(raw: str, key: str) -> list[float]:
    try:
        return [float(tok) for tok in raw.split()]
    except ValueError as exc:
        raise ValueError(f"{key}: expected numbers, got {raw!r}") from exc


def _ints(raw: str, key: str) -> list[int]:
    try:
        return [int(tok) for tok in raw.split()]
    except ValueError as exc:
        raise ValueError(f"{key}: expected integers, got {raw!r}") from exc


def _require(parser: configparser.ConfigParser, section: str) -> configparser.SectionProxy:
    if not parser.has_section(section):
        raise ValueError(f"scenario is missing the [{section}] section")
    return parser[section]


def _get(section: configparser.SectionProxy, key: str) -> str:
    if key not in section:
        raise ValueError(f"[{section.name}] is missing the {key} key")
    return section[key]


def _broadcast(values: list[float], n: int, key: str) -> list[float]:
    if len(values) == 1:
        return values * n
    if len(values) != n:
        raise ValueError(f"{key}: expected 1 or {n} values, got {len(values)}")
    return values


def _parse_network(section: configparser.SectionProxy, n: int) -> Network:
    neighbor_lists: list[list[int]] = []
    for i in range(1, n + 1):
        key = f"neighbors_{i}"
        neighbor_lists.append(
            _ints(section[key], key) if key in section else []
        )
    weight = float(section.get("weight", "1.0"))
    return build_network(neighbor_lists, weight)


def parse_scenario(text: str) -> Scenario:
    """Parse a scenario from its text form.

    Raises:
        ValueError: naming the missing or malformed section or key.
    """
    parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ValueError(f"scenario text is not valid INI: {exc}") from exc

    osc = _require(parser, "oscillators")
    omega = _floats(_get(osc, "omega"), "omega")
    phase0 = _floats(_get(osc, "phase0"), "phase0")
    if len(omega) != len(phase0):
        raise ValueError(
            f"omega has {len(omega)} entries but phase0 has {len(phase0)}"
        )
    bank = OscillatorBank(
        natural_freq=np.array(omega), initial_phase=np.array(phase0)
    )
    n = bank.n_agents

    network = _parse_network(_require(parser, "network"), n)

    proto = _require(parser, "protocol")
    protocol = ProtocolSpec(
        kind=_get(proto, "kind").strip(),
        coupling=float(proto.get("coupling", "1.0")),
    )

    integ = _require(parser, "integrator")
    step = float(_get(integ, "step"))
    horizon = float(_get(integ, "horizon"))

    freq_network = None
    if parser.has_section("frequency_network"):
        freq_network = _parse_network(parser["frequency_network"], n)

    trajectory_path = "trajectory.csv"
    metrics_path = "metrics.txt"
    if parser.has_section("outputs"):
        out = parser["outputs"]
        trajectory_path = out.get("trajectory", trajectory_path)
        metrics_path = out.get("metrics", metrics_path)

    icas = None
    if parser.has_section("icas"):
        sect = parser["icas"]
        rep = _floats(_get(sect, "repetition_freq"), "repetition_freq")
        if len(rep) != n:
            raise ValueError(
                f"repetition_freq: expected {n} values, got {len(rep)}"
            )
        dur = _broadcast(
            _floats(_get(sect, "tone_duration"), "tone_duration"),
            n, "tone_duration",
        )
        first = _broadcast(
            _floats(sect.get("first_tone", "0.0"), "first_tone"),
            n, "first_tone",
        )
        gains = IcasGains(
            k_carrier=float(sect.get("k_carrier", "1.0")),
            k_timing=float(sect.get("k_timing", "1.0")),
            freq_weight=float(sect.get("freq_weight", "1.0")),
            cfo_gain=float(sect.get("cfo_gain", "1.0")),
            to_gain=float(sect.get("to_gain", "1.0")),
        )
        icas = IcasConfig(
            transceivers=tuple(
                Transceiver(
                    carrier_freq=omega[i],
                    repetition_freq=rep[i],
                    tone_duration=dur[i],
                    first_tone=first[i],
                )
                for i in range(n)
            ),
            network=network,
            gains=gains,
            n_tones=int(sect.get("tones", "1000")),
            cfo_noise=float(sect.get("cfo_noise", "0.0")),
            to_noise=float(sect.get("to_noise", "0.0")),
            seed=int(sect.get("seed", "0")),
        )

    return Scenario(
        bank=bank,
        network=network,
        protocol=protocol,
        step=step,
        horizon=horizon,
        freq_network=freq_network,
        trajectory_path=trajectory_path,
        metrics_path=metrics_path,
        icas=icas,
    )


def load_scenario(path: str) -> Scenario:
    """Parse a scenario file from disk."""
    with open(path, "r", encoding="utf-8") as fh:
        return parse_scenario(fh.read())


def bundled_scenario_names() -> tuple[str, ...]:
    """Names accepted by `bundled_scenario`."""
    return _BUNDLED


def bundled_scenario(name: str) -> Scenario:
    """Load one of the scenarios shipped with the package."""
    if name not in _BUNDLED:
        raise ValueError(
            f"unknown bundled scenario {name!r}; available: "
            f"{', '.join(_BUNDLED)}"
        )
    text = (
        resources.files("kurasync") / "scenarios" / f"{name}.ini"
    ).read_text(encoding="utf-8")
    return parse_scenario(text)


def with_overrides(
    scenario: Scenario,
    step: float | None = None,
    horizon: float | None = None,
    seed: int | None = None,
) -> Scenario:
    """Apply command-line overrides to a parsed scenario."""
    if step is not None:
        scenario = replace(scenario, step=step)
    if horizon is not None:
        scenario = replace(scenario, horizon=horizon)
    if seed is not None and scenario.icas is not None:
        scenario = replace(scenario, icas=replace(scenario.icas, seed=seed))
    return scenario
