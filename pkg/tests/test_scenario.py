"""Scenario text format: parsing, bundled files, overrides."""

import numpy as np
import pytest

from kurasync.scenario import (
    bundled_scenario,
    bundled_scenario_names,
    load_scenario,
    parse_scenario,
    with_overrides,
)
from tests.conftest import STUDY_OMEGA, STUDY_PHASE0

MINIMAL = """
[oscillators]
omega = 1.0 1.2
phase0 = 0.0 0.5

[network]
neighbors_1 = 2
neighbors_2 = 1

[protocol]
kind = kuramoto
coupling = 2.0

[integrator]
step = 0.01
horizon = 1.0
"""


def test_parse_minimal_scenario():
    sc = parse_scenario(MINIMAL)
    assert sc.bank.natural_freq.tolist() == [1.0, 1.2]
    assert sc.bank.initial_phase.tolist() == [0.0, 0.5]
    assert np.array_equal(sc.network.adjacency, np.array([[0, 1], [1, 0]]))
    assert sc.protocol.kind == "kuramoto"
    assert sc.protocol.coupling == 2.0
    assert sc.step == 0.01 and sc.horizon == 1.0
    assert sc.freq_network is None and sc.icas is None
    assert sc.trajectory_path == "trajectory.csv"
    assert sc.metrics_path == "metrics.txt"


def test_parse_strips_inline_comments():
    sc = parse_scenario(MINIMAL.replace(
        "omega = 1.0 1.2", "omega = 1.0 1.2  ; rad/s"
    ).replace("step = 0.01", "step = 0.01  # fixed"))
    assert sc.bank.natural_freq.tolist() == [1.0, 1.2]
    assert sc.step == 0.01


def test_parse_optional_sections():
    text = MINIMAL.replace("kind = kuramoto", "kind = extended_kuramoto")
    text += """
[frequency_network]
neighbors_1 = 2
neighbors_2 = 1
weight = 0.5

[outputs]
trajectory = run.csv
metrics = run_metrics.txt
"""
    sc = parse_scenario(text)
    assert np.array_equal(
        sc.freq_network.adjacency, np.array([[0, 0.5], [0.5, 0]])
    )
    assert sc.trajectory_path == "run.csv"
    assert sc.metrics_path == "run_metrics.txt"


def test_parse_icas_section_broadcasts_scalars():
    text = MINIMAL + """
[icas]
repetition_freq = 6.28 6.40
tone_duration = 0.25
first_tone = 0.0 0.3
tones = 40
k_timing = 1.0
seed = 5
"""
    sc = parse_scenario(text)
    cfg = sc.icas
    assert [tr.tone_duration for tr in cfg.transceivers] == [0.25, 0.25]
    assert [tr.first_tone for tr in cfg.transceivers] == [0.0, 0.3]
    # carriers come from the oscillator section
    assert [tr.carrier_freq for tr in cfg.transceivers] == [1.0, 1.2]
    assert cfg.n_tones == 40 and cfg.seed == 5
    assert cfg.gains.k_timing == 1.0 and cfg.gains.k_carrier == 1.0


def test_parse_errors_name_the_problem():
    with pytest.raises(ValueError, match=r"missing the \[protocol\] section"):
        parse_scenario(MINIMAL.replace("[protocol]", "[protocols]"))
    with pytest.raises(ValueError, match="missing the omega key"):
        parse_scenario(MINIMAL.replace("omega", "omegas"))
    with pytest.raises(ValueError, match="expected numbers"):
        parse_scenario(MINIMAL.replace("1.0 1.2", "1.0 fast"))
    with pytest.raises(ValueError, match="omega has 2 .* phase0 has 3"):
        parse_scenario(MINIMAL.replace("phase0 = 0.0 0.5", "phase0 = 0 0 0"))
    with pytest.raises(ValueError, match="not valid INI"):
        parse_scenario("omega = 1.0\n")  # key before any section header
    with pytest.raises(ValueError, match="unknown protocol kind"):
        parse_scenario(MINIMAL.replace("kind = kuramoto", "kind = kumamoto"))


def test_parse_icas_length_errors():
    text = MINIMAL + """
[icas]
repetition_freq = 6.28
tone_duration = 0.25
"""
    with pytest.raises(ValueError, match="repetition_freq: expected 2"):
        parse_scenario(text)
    bad = text.replace(
        "repetition_freq = 6.28", "repetition_freq = 6.28 6.40"
    ).replace("tone_duration = 0.25", "tone_duration = 0.25 0.25 0.25")
    with pytest.raises(ValueError, match="tone_duration: expected 1 or 2"):
        parse_scenario(bad)


def test_load_scenario_from_disk(tmp_path):
    path = tmp_path / "run.ini"
    path.write_text(MINIMAL, encoding="utf-8")
    sc = load_scenario(str(path))
    assert sc.bank.n_agents == 2


def test_bundled_scenarios_parse():
    assert set(bundled_scenario_names()) == {
        "five_agent", "five_agent_extended", "five_agent_icas",
        "two_agent_icas",
    }
    for name in bundled_scenario_names():
        sc = bundled_scenario(name)
        assert sc.bank.n_agents in (2, 5)
    with pytest.raises(ValueError, match="unknown bundled scenario"):
        bundled_scenario("six_agent")


def test_bundled_five_agent_matches_study():
    sc = bundled_scenario("five_agent")
    assert np.allclose(sc.bank.natural_freq, STUDY_OMEGA)
    assert np.allclose(sc.bank.initial_phase, STUDY_PHASE0)
    assert sc.protocol.kind == "kuramoto"
    assert sc.protocol.coupling == 5.0
    assert sc.step == 0.01 and sc.horizon == 10.0
    assert sc.network.adjacency.sum() == 14  # unit weights, one per edge


def test_with_overrides():
    sc = parse_scenario(MINIMAL + """
[icas]
repetition_freq = 6.28 6.40
tone_duration = 0.25
seed = 0
""")
    changed = with_overrides(sc, step=0.02, horizon=4.0, seed=12)
    assert changed.step == 0.02 and changed.horizon == 4.0
    assert changed.icas.seed == 12
    # absent overrides leave the scenario untouched
    assert with_overrides(sc) is sc
