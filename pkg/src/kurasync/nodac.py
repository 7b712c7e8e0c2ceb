"""Discrete-time dynamic average consensus with difference cascades.

Each agent runs n cascaded stages.  Stage 1 diffuses with its neighbors
and absorbs the n-th backward difference of the local input; every later
stage diffuses and accumulates the freshly updated stage below it:

    x1_i(k+1) = x1_i(k) + sum_j a_ij (x1_j(k) - x1_i(k)) + (D^n u_i)(k+1)
    xl_i(k+1) = xl_i(k) + sum_j a_ij (xl_j(k) - xl_i(k)) + x(l-1)_i(k+1)

On balanced networks the per-stage sums then satisfy
sum_i xl_i(k) = sum_i (D^(n-l) u_i)(k) for all k, which makes the top
stage track the input average with zero steady-state error whenever the
inputs are polynomials of degree at most n - 1.

Warm-up: the order-j difference of a signal first exists at sample j, so
during the first n samples each stage holds the highest-order difference
already observable (zero before that) instead of running the update; the
cascade switches to the update rule once n + 1 samples are buffered.
This seeds exactly the per-stage sums the tracking property needs and
uses no samples from before the start.

Weights must keep the diffusion a contraction: every row sum of the
adjacency must stay below one (uniform weights 1 / (max degree + 1) work
for any graph and are what `stable_weights` assigns).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .graph import Network

__all__ = [
    "NodacState",
    "nth_difference",
    "nodac_init",
    "nodac_step",
    "nodac_run",
    "stable_weights",
]


@dataclass(frozen=True)
class NodacState:
    """Cascade snapshot after consuming `samples` input vectors.

    Attributes:
        stages: (n, N) stage states, stage 1 first.
        history: Up to n + 1 most recent input vectors, oldest first.
        samples: Number of input samples consumed so far.
    """

    stages: np.ndarray
    history: tuple[np.ndarray, ...]
    samples: int

    @property
    def n_stages(self) -> int:
        return self.stages.shape[0]

    @property
    def top(self) -> np.ndarray:
        """Tracking output: the highest stage."""
        return self.stages[-1]


def nth_difference(history: Sequence[np.ndarray], order: int) -> np.ndarray:
    """Backward difference of the given order at the newest sample.

    Args:
        history: Samples oldest to newest; at least order + 1 entries.
        order: 0 returns the newest sample unchanged.
    """
    if order < 0:
        raise ValueError("difference order must be nonnegative")
    if len(history) < order + 1:
        raise ValueError(
            f"order-{order} difference needs {order + 1} samples, "
            f"have {len(history)}"
        )
    window = np.asarray(history[len(history) - (order + 1) :], dtype=float)
    for _ in range(order):
        window = window[1:] - window[:-1]
    return window[-1]


def _check_weights(net: Network) -> None:
    row_sums = net.adjacency.sum(axis=1)
    if np.any(row_sums >= 1.0):
        raise ValueError(
            f"diffusion is unstable: adjacency row sums reach "
            f"{row_sums.max():.3f}, must stay below 1"
        )


def stable_weights(net: Network, eps: float | None = None) -> Network:
    """Reassign every edge the uniform weight eps.

    Defaults to 1 / (max degree + 1), which keeps every row sum strictly
    below one regardless of the graph.
    """
    degree = (net.adjacency > 0).sum(axis=1).max()
    if eps is None:
        eps = 1.0 / (float(degree) + 1.0)
    if eps * degree >= 1.0:
        raise ValueError(f"eps {eps} times max degree {degree} must stay below 1")
    return Network(
        n_agents=net.n_agents,
        adjacency=np.where(net.adjacency > 0, eps, 0.0),
    )


def _warm_stages(
    n_stages: int, history: tuple[np.ndarray, ...], n_agents: int
) -> np.ndarray:
    stages = np.zeros((n_stages, n_agents))
    for stage in range(1, n_stages + 1):
        order = n_stages - stage
        if order <= len(history) - 1:
            stages[stage - 1] = nth_difference(history, order)
    return stages


def nodac_init(net: Network, n_stages: int, u0: np.ndarray) -> NodacState:
    """State after the first input sample.

    Raises:
        ValueError: for n_stages < 1 or unstable diffusion weights.
    """
    if n_stages < 1:
        raise ValueError("need at least one stage")
    _check_weights(net)
    u0 = np.asarray(u0, dtype=float)
    history = (u0,)
    return NodacState(
        stages=_warm_stages(n_stages, history, net.n_agents),
        history=history,
        samples=1,
    )


def nodac_step(state: NodacState, u_next: np.ndarray, net: Network) -> NodacState:
    """Advance the cascade by one input sample."""
    _check_weights(net)
    n = state.n_stages
    u_next = np.asarray(u_next, dtype=float)
    history = (state.history + (u_next,))[-(n + 1) :]
    if state.samples < n:  # warm-up: hold observable differences
        return NodacState(
            stages=_warm_stages(n, history, net.n_agents),
            history=history,
            samples=state.samples + 1,
        )
    a = net.adjacency
    stages = np.empty_like(state.stages)
    diffuse = lambda row: (a * (row[None, :] - row[:, None])).sum(axis=1)
    stages[0] = state.stages[0] + diffuse(state.stages[0]) + nth_difference(history, n)
    for l in range(1, n):
        stages[l] = state.stages[l] + diffuse(state.stages[l]) + stages[l - 1]
    return NodacState(stages=stages, history=history, samples=state.samples + 1)


def nodac_run(
    net: Network,
    inputs: Callable[[int], np.ndarray],
    n_stages: int,
    steps: int,
) -> np.ndarray:
    """Run the cascade over inputs(0..steps) and collect the top stage.

    Returns:
        (steps + 1, N) top-stage trajectory, row k after consuming
        inputs(k).
    """
    state = nodac_init(net, n_stages, inputs(0))
    out = np.empty((steps + 1, net.n_agents))
    out[0] = state.top
    for k in range(1, steps + 1):
        state = nodac_step(state, inputs(k), net)
        out[k] = state.top
    return out
