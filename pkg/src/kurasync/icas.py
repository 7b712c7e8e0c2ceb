"""Discrete pilot-tone synchronization of carrier frequency and timing.

Agents broadcast short pilot tones on their own repetition clocks and,
at each of their own tone emissions, measure every in-neighbor's latest
tone.  Two loops run on those measurements:

Carrier loop (frequency sync).  Each pair keeps an accumulator that
integrates the measured carrier-frequency offset, scaled by the gain
``cfo_gain`` and the tone duration; the agent's carrier rate is its
natural frequency plus coupled sines of the accumulators.  The loop has
the structure of phase-coupled oscillators and drives all carrier rates
to a common value:

    acc_ij(k)  = acc_ij(k-1) + cfo_gain * T_P,i * cfo_ij(k)
    rate_i(k)  = w_i + (k_carrier / N) sum_j a_ij sin(acc_ij(k))
    theta_i(k+1) = theta_i(k) + T_S,i * rate_i(k)

Timing loop (tone alignment).  Mirrors the two-stage oscillator model:
a consensus stage on the repetition frequencies and a phase-coupled
stage on the repetition phases.  The phase difference of a pair follows
from the measured rising-edge offset and the whole-tone count offset,

    Theta_d,ij(k) = -to_gain * (Omega_i(k) * T_hat_ij(k) + 2 pi P_d(k)),

and the agent's next tone is scheduled one full repetition cycle of the
corrected rate ahead, which is how corrections reach the physical grid:

    Omega_i(k+1)   = Omega_i(k) - T_S,i * sum_j aw_ij (Omega_i - Omega_j)
    rep_rate_i(k)  = Omega_i(k) + (k_timing / N) sum_j a_ij sin(Theta_d,ij(k))
    next tone at   t + 2 pi / rep_rate_i(k)

In ideal mode the repetition-frequency difference entering the consensus
stage is the true state difference.  A hardware receiver would estimate
it as the difference quotient of consecutive Theta_d measurements over
the tone interval; that estimator also picks up the deliberate timing
corrections, which makes the closed loop conserve
Omega + freq_weight * L * Theta and pin a permanent misalignment, so the
simulator does not use it.

Events are processed in (time, agent index) order, which makes runs with
a fixed seed bit-reproducible.  With identical clocks and simultaneous
first tones every measurement is exactly zero and the system stays at
the aligned fixed point.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass

import numpy as np

from .graph import Network

__all__ = [
    "Transceiver",
    "IcasGains",
    "IcasConfig",
    "ToneRecord",
    "IcasResult",
    "measure_pair",
    "run_icas",
]

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class Transceiver:
    """Per-agent radio parameters.

    Attributes:
        carrier_freq: Natural carrier frequency w_i in rad/s.
        repetition_freq: Natural tone repetition frequency in rad/s; the
            nominal tone interval is 2 pi over this value.
        tone_duration: Pilot tone length T_P,i in seconds; must fit
            inside the repetition interval.
        first_tone: Emission time of the first tone in seconds.
    """

    carrier_freq: float
    repetition_freq: float
    tone_duration: float
    first_tone: float = 0.0

    def __post_init__(self) -> None:
        if self.repetition_freq <= 0.0:
            raise ValueError("repetition frequency must be positive")
        if not 0.0 < self.tone_duration < TWO_PI / self.repetition_freq:
            raise ValueError(
                "tone duration must be positive and shorter than the "
                "repetition interval"
            )
        if self.first_tone < 0.0:
            raise ValueError("first tone time must be nonnegative")


@dataclass(frozen=True)
class IcasGains:
    """Loop gains; all default to one.

    cfo_gain and to_gain weight the raw measurements and must stay in
    (0, 1]; k_carrier and k_timing enter divided by the agent count;
    freq_weight scales the repetition-frequency consensus.
    """

    k_carrier: float = 1.0
    k_timing: float = 1.0
    freq_weight: float = 1.0
    cfo_gain: float = 1.0
    to_gain: float = 1.0

    def __post_init__(self) -> None:
        if not 0.0 < self.cfo_gain <= 1.0:
            raise ValueError("cfo_gain must lie in (0, 1]")
        if not 0.0 < self.to_gain <= 1.0:
            raise ValueError("to_gain must lie in (0, 1]")
        if self.k_carrier <= 0.0 or self.k_timing <= 0.0 or self.freq_weight <= 0.0:
            raise ValueError("coupling gains must be positive")


@dataclass(frozen=True)
class IcasConfig:
    """A complete pilot-tone run description."""

    transceivers: tuple[Transceiver, ...]
    network: Network
    gains: IcasGains
    n_tones: int
    cfo_noise: float = 0.0
    to_noise: float = 0.0
    seed: int = 0

    def __post_init__(self) -> None:
        if len(self.transceivers) != self.network.n_agents:
            raise ValueError(
                f"{len(self.transceivers)} transceivers for "
                f"{self.network.n_agents} network agents"
            )
        if self.n_tones < 1:
            raise ValueError("need at least one tone per agent")
        if self.cfo_noise < 0.0 or self.to_noise < 0.0:
            raise ValueError("noise levels must be nonnegative")


@dataclass(frozen=True)
class ToneRecord:
    """State snapshot taken when an agent emits a tone.

    max_cfo_measured / max_to_measured are the largest magnitudes among
    this tone's pairwise measurements, NaN when no neighbor had emitted
    yet.
    """

    time: float
    agent: int
    tone_index: int
    carrier_phase: float
    carrier_rate: float
    rep_freq: float
    rep_rate: float
    max_cfo_measured: float
    max_to_measured: float


@dataclass(frozen=True)
class IcasResult:
    """Run output and convergence metrics.

    mutual_cfo is the largest pairwise carrier-rate difference at the end
    of the run; to_phase the largest wrapped pairwise offset of the tone
    grids, evaluated at the last emission time.
    """

    records: tuple[ToneRecord, ...]
    mutual_cfo: float
    to_phase: float
    rep_freq_spread: float
    tones_per_agent: tuple[int, ...]


def measure_pair(
    rate_i: float,
    rate_j: float,
    edge_i: float,
    edge_j: float,
    tones_i: int,
    tones_j: int,
    rng: np.random.Generator,
    cfo_noise: float = 0.0,
    to_noise: float = 0.0,
) -> tuple[float, float, int]:
    """One pairwise pilot-tone measurement taken by receiver i.

    Returns:
        (cfo, t_hat, p_delta): carrier-frequency offset of sender j
        relative to i in rad/s, rising-edge time offset (sender's latest
        edge minus the receiver's current edge) in seconds, and the
        whole-tone count offset (tones sent by j minus tones sent by i).
        Gaussian noise of the given levels is added to the first two when
        nonzero.
    """
    cfo = rate_j - rate_i
    t_hat = edge_j - edge_i
    if cfo_noise > 0.0:
        cfo += cfo_noise * rng.standard_normal()
    if to_noise > 0.0:
        t_hat += to_noise * rng.standard_normal()
    return cfo, t_hat, tones_j - tones_i


def _wrap(x: float) -> float:
    return (x + math.pi) % TWO_PI - math.pi


def run_icas(config: IcasConfig) -> IcasResult:
    """Run the protocol until every agent has emitted n_tones tones."""
    net = config.network
    gains = config.gains
    n = net.n_agents
    a = net.adjacency
    rng = np.random.default_rng(config.seed)
    neighbors = [sorted(int(j) for j in net.in_neighbors(i)) for i in range(n)]

    omega = np.array([tr.carrier_freq for tr in config.transceivers])
    t_pilot = np.array([tr.tone_duration for tr in config.transceivers])
    theta = np.zeros(n)
    carrier_rate = omega.copy()
    rep_freq = np.array([tr.repetition_freq for tr in config.transceivers])
    rep_rate = rep_freq.copy()
    acc = np.zeros((n, n))
    theta_delta = np.zeros((n, n))
    last_edge = np.zeros(n)
    tones = np.zeros(n, dtype=int)

    queue = [(tr.first_tone, i) for i, tr in enumerate(config.transceivers)]
    heapq.heapify(queue)
    records: list[ToneRecord] = []

    while np.any(tones < config.n_tones):
        t, i = heapq.heappop(queue)
        tones[i] += 1
        last_edge[i] = t

        freq_push = 0.0
        max_cfo = math.nan
        max_to = math.nan
        for j in neighbors[i]:
            if tones[j] == 0:
                continue
            cfo, t_hat, p_delta = measure_pair(
                carrier_rate[i], carrier_rate[j],
                t, last_edge[j], int(tones[i]), int(tones[j]),
                rng, config.cfo_noise, config.to_noise,
            )
            acc[i, j] += gains.cfo_gain * t_pilot[i] * cfo
            theta_delta[i, j] = -gains.to_gain * (
                rep_freq[i] * t_hat + TWO_PI * p_delta
            )
            freq_push += -gains.freq_weight * a[i, j] * (rep_freq[i] - rep_freq[j])
            max_cfo = abs(cfo) if math.isnan(max_cfo) else max(max_cfo, abs(cfo))
            wrapped_to = abs(_wrap(theta_delta[i, j]))
            max_to = wrapped_to if math.isnan(max_to) else max(max_to, wrapped_to)

        rate = omega[i] + (gains.k_carrier / n) * sum(
            a[i, j] * math.sin(acc[i, j]) for j in neighbors[i]
        )
        timing_rate = rep_freq[i] + (gains.k_timing / n) * sum(
            a[i, j] * math.sin(theta_delta[i, j]) for j in neighbors[i]
        )
        if timing_rate <= 0.0:
            raise FloatingPointError(
                f"repetition rate of agent {i + 1} became nonpositive at "
                f"t = {t:.6g}"
            )
        interval = TWO_PI / timing_rate

        records.append(ToneRecord(
            time=t,
            agent=i,
            tone_index=int(tones[i]),
            carrier_phase=theta[i],
            carrier_rate=rate,
            rep_freq=rep_freq[i],
            rep_rate=timing_rate,
            max_cfo_measured=max_cfo,
            max_to_measured=max_to,
        ))

        theta[i] += interval * rate
        rep_freq[i] += interval * freq_push
        carrier_rate[i] = rate
        rep_rate[i] = timing_rate
        heapq.heappush(queue, (t + interval, i))

    mutual_cfo = float(max(
        abs(carrier_rate[p] - carrier_rate[q])
        for p in range(n) for q in range(p + 1, n)
    )) if n > 1 else 0.0
    t_ref = float(last_edge.max())
    grid_phase = rep_freq * (t_ref - last_edge)
    to_phase = float(max(
        abs(_wrap(grid_phase[p] - grid_phase[q]))
        for p in range(n) for q in range(p + 1, n)
    )) if n > 1 else 0.0
    return IcasResult(
        records=tuple(records),
        mutual_cfo=mutual_cfo,
        to_phase=to_phase,
        rep_freq_spread=float(rep_freq.max() - rep_freq.min()),
        tones_per_agent=tuple(int(c) for c in tones),
    )
