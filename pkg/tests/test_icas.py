"""Discrete pilot-tone synchronization runs."""

import math

import numpy as np
import pytest

from kurasync.graph import build_network
from kurasync.icas import (
    IcasConfig,
    IcasGains,
    Transceiver,
    measure_pair,
    run_icas,
)
from kurasync.scenario import bundled_scenario

TWO_PI = 2.0 * math.pi


def _pair_config(
    rep=(TWO_PI, TWO_PI),
    first=(0.0, 0.0),
    carriers=(1.0, 1.0),
    n_tones=50,
    gains=None,
    **kwargs,
):
    net = build_network([[2], [1]])
    return IcasConfig(
        transceivers=tuple(
            Transceiver(
                carrier_freq=carriers[i],
                repetition_freq=rep[i],
                tone_duration=0.25,
                first_tone=first[i],
            )
            for i in range(2)
        ),
        network=net,
        gains=gains or IcasGains(),
        n_tones=n_tones,
        **kwargs,
    )


def test_transceiver_validation():
    with pytest.raises(ValueError, match="repetition frequency"):
        Transceiver(carrier_freq=1.0, repetition_freq=0.0, tone_duration=0.1)
    # tone must fit inside the repetition interval (here 1 s)
    with pytest.raises(ValueError, match="shorter than"):
        Transceiver(carrier_freq=1.0, repetition_freq=TWO_PI, tone_duration=1.0)
    with pytest.raises(ValueError, match="nonnegative"):
        Transceiver(
            carrier_freq=1.0, repetition_freq=TWO_PI,
            tone_duration=0.1, first_tone=-0.5,
        )


def test_gains_validation():
    with pytest.raises(ValueError, match="cfo_gain"):
        IcasGains(cfo_gain=0.0)
    with pytest.raises(ValueError, match="to_gain"):
        IcasGains(to_gain=1.5)
    with pytest.raises(ValueError, match="positive"):
        IcasGains(k_timing=-1.0)


def test_config_validation():
    net = build_network([[2], [1]])
    tr = Transceiver(carrier_freq=1.0, repetition_freq=TWO_PI, tone_duration=0.1)
    with pytest.raises(ValueError, match="transceivers"):
        IcasConfig(transceivers=(tr,), network=net, gains=IcasGains(), n_tones=5)
    with pytest.raises(ValueError, match="at least one tone"):
        IcasConfig(
            transceivers=(tr, tr), network=net, gains=IcasGains(), n_tones=0
        )
    with pytest.raises(ValueError, match="noise"):
        IcasConfig(
            transceivers=(tr, tr), network=net, gains=IcasGains(),
            n_tones=5, cfo_noise=-0.1,
        )


def test_measure_pair_ideal_values():
    rng = np.random.default_rng(0)
    cfo, t_hat, p_delta = measure_pair(
        rate_i=1.0, rate_j=1.3, edge_i=2.0, edge_j=1.7,
        tones_i=5, tones_j=7, rng=rng,
    )
    assert cfo == pytest.approx(0.3)
    assert t_hat == pytest.approx(-0.3)
    assert p_delta == 2
    # zero noise levels leave the generator untouched
    state_before = rng.bit_generator.state["state"]["state"]
    measure_pair(1.0, 1.3, 2.0, 1.7, 5, 7, rng)
    assert rng.bit_generator.state["state"]["state"] == state_before


def test_measure_pair_noise_is_seeded():
    a = measure_pair(
        1.0, 1.3, 2.0, 1.7, 5, 7,
        np.random.default_rng(4), cfo_noise=0.1, to_noise=0.05,
    )
    b = measure_pair(
        1.0, 1.3, 2.0, 1.7, 5, 7,
        np.random.default_rng(4), cfo_noise=0.1, to_noise=0.05,
    )
    assert a == b
    assert a[0] != pytest.approx(0.3)


def test_identical_clocks_stay_exactly_aligned():
    result = run_icas(_pair_config())
    assert result.mutual_cfo == 0.0
    assert result.to_phase == 0.0
    assert result.rep_freq_spread == 0.0
    # simultaneous identical clocks: every tone lands on the exact 1 s grid
    for rec in result.records:
        assert rec.time == float(rec.tone_index - 1)
        assert rec.rep_rate == TWO_PI
        measured = rec.max_cfo_measured
        assert measured == 0.0 or math.isnan(measured)


def test_first_tone_has_no_measurement():
    result = run_icas(_pair_config(first=(0.0, 0.3), n_tones=3))
    first, second = result.records[0], result.records[1]
    assert first.agent == 0 and first.time == 0.0
    assert math.isnan(first.max_cfo_measured)
    assert math.isnan(first.max_to_measured)
    assert second.agent == 1 and second.time == 0.3
    assert not math.isnan(second.max_cfo_measured)


def _record_keys(result):
    def flat(x):
        return None if math.isnan(x) else x

    return [
        (
            r.time, r.agent, r.tone_index, r.carrier_phase, r.carrier_rate,
            r.rep_freq, r.rep_rate, flat(r.max_cfo_measured),
            flat(r.max_to_measured),
        )
        for r in result.records
    ]


def test_runs_are_deterministic():
    def config(seed):
        return _pair_config(
            rep=(TWO_PI, TWO_PI * 1.02), first=(0.0, 0.3),
            carriers=(1.0, 1.1), n_tones=40,
            cfo_noise=0.01, to_noise=0.001, seed=seed,
        )

    assert _record_keys(run_icas(config(9))) == _record_keys(run_icas(config(9)))
    assert _record_keys(run_icas(config(10))) != _record_keys(run_icas(config(9)))


def test_tone_indices_count_per_agent():
    result = run_icas(_pair_config(first=(0.0, 0.3), n_tones=5))
    for agent in (0, 1):
        indices = [r.tone_index for r in result.records if r.agent == agent]
        assert indices == list(range(1, len(indices) + 1))
    assert min(result.tones_per_agent) >= 5
    assert len(result.records) == sum(result.tones_per_agent)


def test_detuned_pair_converges_to_exact_alignment():
    config = bundled_scenario("two_agent_icas").icas
    result = run_icas(config)
    assert result.mutual_cfo < 1e-10
    assert result.to_phase < 1e-10
    assert result.rep_freq_spread < 1e-10
    # repetition clocks meet somewhere between their natural values
    naturals = [tr.repetition_freq for tr in config.transceivers]
    for rec in result.records[-2:]:
        assert min(naturals) <= rec.rep_freq <= max(naturals)


def test_overdriven_timing_loop_reports_agent_and_time():
    config = _pair_config(
        first=(0.0, 0.6), n_tones=10, gains=IcasGains(k_timing=30.0)
    )
    with pytest.raises(FloatingPointError, match="agent 2 .* t = 0.6"):
        run_icas(config)
