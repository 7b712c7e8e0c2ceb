"""Continuous-time oscillator and consensus dynamics.

Four protocols share one fixed-step integrator:

* ``static_consensus``   x' = -L x
* ``dynamic_consensus``  x' = u' - L x        (reference inputs u_i)
* ``kuramoto``           th_i' = w_i + (K/N) sum_j a_ij sin(th_j - th_i)
* ``extended_kuramoto``  two stages: a frequency stage that runs linear
  consensus on the momentary frequencies and a phase stage driven by it,
  vt_i' = -sum_j af_ij (vt_i - vt_j),
  th_i' = (K/N) sum_j ap_ij sin(th_j - th_i) + vt_i.

All trajectories are produced by a classical fourth-order Runge-Kutta
scheme with a fixed step; the integrator aborts with the offending time
when a state stops being finite.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING, Callable

import numpy as np

from .graph import Network, laplacian

if TYPE_CHECKING:  # pragma: no cover
    from .scenario import Scenario

__all__ = [
    "OscillatorBank",
    "ProtocolSpec",
    "Trajectory",
    "PROTOCOL_KINDS",
    "static_consensus_rhs",
    "dynamic_consensus_rhs",
    "kuramoto_rhs",
    "extended_kuramoto_rhs",
    "rk4_step",
    "integrate",
]

PROTOCOL_KINDS = (
    "static_consensus",
    "dynamic_consensus",
    "kuramoto",
    "extended_kuramoto",
)


@dataclass(frozen=True)
class OscillatorBank:
    """Natural frequencies and initial phases of the agent population.

    Attributes:
        natural_freq: (N,) natural frequencies w_i in rad/s.
        initial_phase: (N,) initial phases phi_i(0) in rad.
    """

    natural_freq: np.ndarray
    initial_phase: np.ndarray

    def __post_init__(self) -> None:
        w = np.asarray(self.natural_freq, dtype=float)
        p = np.asarray(self.initial_phase, dtype=float)
        if w.ndim != 1 or p.shape != w.shape:
            raise ValueError(
                f"natural_freq {w.shape} and initial_phase {p.shape} must be "
                "1-D arrays of equal length"
            )
        object.__setattr__(self, "natural_freq", w)
        object.__setattr__(self, "initial_phase", p)

    @property
    def n_agents(self) -> int:
        return self.natural_freq.shape[0]


@dataclass(frozen=True)
class ProtocolSpec:
    """Which protocol to run and with what coupling.

    Attributes:
        kind: One of PROTOCOL_KINDS.
        coupling: Total coupling gain K; the phase coupling of each edge
            enters as K divided by the agent count.  Must be positive for
            the phase-coupled protocols; unused by the consensus kinds.
    """

    kind: str
    coupling: float = 1.0

    def __post_init__(self) -> None:
        if self.kind not in PROTOCOL_KINDS:
            raise ValueError(
                f"unknown protocol kind {self.kind!r}; expected one of "
                f"{', '.join(PROTOCOL_KINDS)}"
            )
        if self.kind in ("kuramoto", "extended_kuramoto") and self.coupling <= 0:
            raise ValueError("phase-coupled protocols need coupling > 0")


@dataclass(frozen=True)
class Trajectory:
    """Fixed-grid simulation output.

    Attributes:
        kind: Protocol that produced the run.
        times: (M,) sample times.
        states: (M, N) phases (phase protocols) or consensus states.
        rates: (M, N) state derivatives evaluated on the grid.
        freq_states: (M, N) frequency-stage states of the extended model,
            None for the other protocols.
    """

    kind: str
    times: np.ndarray
    states: np.ndarray
    rates: np.ndarray
    freq_states: np.ndarray | None = None


# ─── right-hand sides ──────────────────────────────────────────────────────


def static_consensus_rhs(x: np.ndarray, net: Network) -> np.ndarray:
    """x' = -L x."""
    return -(laplacian(net) @ x)


def dynamic_consensus_rhs(
    x: np.ndarray, u_dot: np.ndarray, net: Network
) -> np.ndarray:
    """x' = u' - L x, tracking the average of time-varying inputs."""
    return u_dot - laplacian(net) @ x


def kuramoto_rhs(
    theta: np.ndarray, bank: OscillatorBank, spec: ProtocolSpec, net: Network
) -> np.ndarray:
    """Phase-coupled oscillator velocities.

    th_i' = w_i + (K/N) sum over in-neighbors of a_ij sin(th_j - th_i).
    """
    gain = spec.coupling / bank.n_agents
    diff = np.sin(theta[None, :] - theta[:, None])
    return bank.natural_freq + gain * (net.adjacency * diff).sum(axis=1)


def extended_kuramoto_rhs(
    vartheta: np.ndarray,
    theta: np.ndarray,
    t: float,
    bank: OscillatorBank,
    spec: ProtocolSpec,
    freq_net: Network,
    phase_net: Network,
    accel: Callable[[float], np.ndarray] | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Two-stage oscillator velocities (frequency stage, phase stage).

    The frequency stage runs linear consensus on the momentary
    frequencies, perturbed by the second derivative of each agent's
    undisturbed phase ramp (zero for constant natural frequencies); the
    phase stage is phase-coupled with the frequency stage as drift.
    """
    d_vartheta = -(laplacian(freq_net) @ vartheta)
    if accel is not None:
        d_vartheta = d_vartheta + accel(t)
    gain = spec.coupling / bank.n_agents
    diff = np.sin(theta[None, :] - theta[:, None])
    d_theta = gain * (phase_net.adjacency * diff).sum(axis=1) + vartheta
    return d_vartheta, d_theta


# ─── integration ───────────────────────────────────────────────────────────


def rk4_step(
    f: Callable[[float, np.ndarray], np.ndarray],
    t: float,
    y: np.ndarray,
    h: float,
) -> np.ndarray:
    """One classical Runge-Kutta step of size h."""
    k1 = f(t, y)
    k2 = f(t + 0.5 * h, y + 0.5 * h * k1)
    k3 = f(t + 0.5 * h, y + 0.5 * h * k2)
    k4 = f(t + h, y + h * k3)
    return y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _grid(step: float, horizon: float) -> np.ndarray:
    if step <= 0 or horizon <= 0:
        raise ValueError("step and horizon must be positive")
    n_steps = int(round(horizon / step))
    if not np.isclose(n_steps * step, horizon, rtol=1e-9, atol=1e-12):
        raise ValueError(
            f"horizon {horizon} is not an integer number of steps of {step}"
        )
    return step * np.arange(n_steps + 1)


def integrate(
    scenario: "Scenario",
    accel: Callable[[float], np.ndarray] | None = None,
) -> Trajectory:
    """Run the scenario's protocol on a fixed grid.

    Args:
        scenario: Bank, network, protocol, and grid settings.
        accel: Optional frequency-stage disturbance for the extended
            protocol, called with the current time.

    Returns:
        Trajectory sampled on the closed grid [0, horizon].

    Raises:
        FloatingPointError: when the state leaves the finite range; the
            message names the first bad time.
    """
    bank: OscillatorBank = scenario.bank
    net: Network = scenario.network
    spec: ProtocolSpec = scenario.protocol
    times = _grid(scenario.step, scenario.horizon)
    n = bank.n_agents
    kind = spec.kind

    if kind == "extended_kuramoto":
        freq_net = scenario.freq_network or net

        def f(t: float, y: np.ndarray) -> np.ndarray:
            dv, dth = extended_kuramoto_rhs(
                y[:n], y[n:], t, bank, spec, freq_net, net, accel
            )
            return np.concatenate([dv, dth])

        y0 = np.concatenate([bank.natural_freq, bank.initial_phase])
    else:
        if kind == "static_consensus":
            def f(t: float, y: np.ndarray) -> np.ndarray:
                return static_consensus_rhs(y, net)
        elif kind == "dynamic_consensus":
            def f(t: float, y: np.ndarray) -> np.ndarray:
                return dynamic_consensus_rhs(y, bank.natural_freq, net)
        else:
            def f(t: float, y: np.ndarray) -> np.ndarray:
                return kuramoto_rhs(y, bank, spec, net)

        y0 = bank.initial_phase.copy()

    ys = np.empty((times.shape[0], y0.shape[0]))
    ys[0] = y0
    y = y0
    h = scenario.step
    for k in range(times.shape[0] - 1):
        y = rk4_step(f, times[k], y, h)
        if not np.all(np.isfinite(y)):
            raise FloatingPointError(
                f"state diverged at t = {times[k + 1]:.6g}"
            )
        ys[k + 1] = y

    rates = np.array([f(t, y_k) for t, y_k in zip(times, ys)])
    if kind == "extended_kuramoto":
        return Trajectory(
            kind=kind,
            times=times,
            states=ys[:, n:],
            rates=rates[:, n:],
            freq_states=ys[:, :n],
        )
    return Trajectory(kind=kind, times=times, states=ys, rates=rates)
