"""Synchronization metrics and consensus error bounds.

Everything here is pure post-processing: wrapped phase errors against a
fitted consensus line, the Kuramoto order parameter, the steady-state
residual along the consensus direction, worst-case tracking bounds built
from the network spectrum, and the orthogonal split of a consensus error
into its agreement and disagreement parts.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dynamics import Trajectory
from .graph import IncidenceData, SpectralData

__all__ = [
    "ConsensusLine",
    "ErrorBoundReport",
    "DecompositionReport",
    "wrap_phase",
    "order_parameter",
    "fit_consensus",
    "phase_error",
    "max_mutual_difference",
    "detect_transient_end",
    "consensus_frequency",
    "bound_dynamic",
    "bound_alltoall",
    "bound_arbitrary",
    "bound_gamma",
    "residual_gamma",
    "decompose_error",
]

_MIN_FIT_SAMPLES = 10


@dataclass(frozen=True)
class ConsensusLine:
    """Linear consensus trajectory slope * t + intercept.

    Attributes:
        slope: Common phase velocity of the fitted line in rad/s.
        intercept: Phase at t = 0 in rad.
        window: (t_start, t_end) of the samples used for the fit.
    """

    slope: float
    intercept: float
    window: tuple[float, float]

    def at(self, times: np.ndarray) -> np.ndarray:
        return self.slope * np.asarray(times) + self.intercept


@dataclass(frozen=True)
class ErrorBoundReport:
    """A named worst-case bound value with the quantities that formed it."""

    kind: str
    value: float
    inputs: dict[str, float]


@dataclass(frozen=True)
class DecompositionReport:
    """Orthogonal split of a consensus error signal.

    Attributes:
        transform: (N, N) orthogonal matrix T = [gamma_l, R].
        agreement: (M,) component along the consensus direction gamma_l.
        disagreement: (M, N-1) components spanning its complement.
    """

    transform: np.ndarray
    agreement: np.ndarray
    disagreement: np.ndarray


def wrap_phase(x: np.ndarray | float) -> np.ndarray | float:
    """Map angles into the half-open interval [-pi, pi)."""
    return (np.asarray(x) + np.pi) % (2.0 * np.pi) - np.pi


def order_parameter(theta: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Magnitude and mean angle of the phase distribution.

    Args:
        theta: (..., N) phases; the mean runs over the last axis.

    Returns:
        (r, psi) with r in [0, 1].  psi is NaN where r is numerically
        zero (below 1e-12, e.g. antipodal pairs) and the mean angle is
        undefined.
    """
    z = np.exp(1j * np.asarray(theta)).mean(axis=-1)
    r = np.abs(z)
    psi = np.where(r > 1e-12, np.angle(z), np.nan)
    return r, psi


def fit_consensus(
    traj: Trajectory,
    window: tuple[float, float] | None = None,
) -> ConsensusLine:
    """Least-squares line through the unwrapped mean angle psi(t).

    psi is unwrapped over the whole trajectory (anchored at the first
    sample) and fitted inside the window, which defaults to the last 40%
    of the horizon so the fit sees only post-transient samples.

    Raises:
        ValueError: when the window holds fewer than 10 samples.
    """
    times = traj.times
    if window is None:
        t0, t1 = times[0], times[-1]
        window = (t0 + 0.6 * (t1 - t0), float(t1))
    window = (float(window[0]), float(window[1]))
    _, psi = order_parameter(traj.states)
    if np.any(np.isnan(psi)):
        raise ValueError("mean angle undefined (order parameter hit zero)")
    psi = np.unwrap(psi)
    mask = (times >= window[0]) & (times <= window[1])
    if int(mask.sum()) < _MIN_FIT_SAMPLES:
        raise ValueError(
            f"fit window {window} holds {int(mask.sum())} samples; "
            f"at least {_MIN_FIT_SAMPLES} required"
        )
    slope, intercept = np.polyfit(times[mask], psi[mask], 1)
    return ConsensusLine(
        slope=float(slope),
        intercept=float(intercept),
        window=(float(window[0]), float(window[1])),
    )


def phase_error(traj: Trajectory, line: ConsensusLine) -> np.ndarray:
    """(M, N) wrapped deviations of each agent from the consensus line."""
    return wrap_phase(traj.states - line.at(traj.times)[:, None])


def max_mutual_difference(theta: np.ndarray) -> tuple[float, tuple[int, int]]:
    """Largest wrapped pairwise phase difference and its agent pair.

    Args:
        theta: (N,) or (M, N) phases; with a time axis the maximum runs
            over all samples.

    Returns:
        (value, (i, j)) with 0-based agent indices, i < j.
    """
    th = np.atleast_2d(np.asarray(theta))
    diffs = np.abs(wrap_phase(th[:, None, :] - th[:, :, None]))
    per_pair = diffs.max(axis=0)
    i, j = np.unravel_index(np.argmax(per_pair), per_pair.shape)
    pair = (int(min(i, j)), int(max(i, j)))
    return float(per_pair[i, j]), pair


def detect_transient_end(
    traj: Trajectory,
    threshold: float = 1e-5,
    window: float = 0.5,
) -> float | None:
    """First time after which the mutual spread stops changing.

    Scans the per-sample maximum mutual wrapped difference and returns the
    first time whose following `window` seconds vary by less than
    `threshold`; None when the run never settles.
    """
    th = traj.states
    spread = np.abs(wrap_phase(th[:, None, :] - th[:, :, None])).max(axis=(1, 2))
    times = traj.times
    if times.shape[0] < 2:
        return None
    step = times[1] - times[0]
    span = int(round(window / step))
    for k in range(times.shape[0] - span):
        seg = spread[k : k + span + 1]
        if seg.max() - seg.min() < threshold:
            return float(times[k])
    return None


def consensus_frequency(gamma_l: np.ndarray, omega: np.ndarray) -> float:
    """Weighted mean frequency the network agrees on.

    The left null direction of the Laplacian weights each agent's natural
    frequency; for balanced networks this reduces to the arithmetic mean.
    """
    gamma_l = np.asarray(gamma_l, dtype=float)
    return float(gamma_l @ np.asarray(omega, dtype=float) / gamma_l.sum())


# ─── worst-case bounds ─────────────────────────────────────────────────────


def bound_dynamic(
    x0: np.ndarray,
    u0: np.ndarray,
    u_dot_sup_proj: float,
    spec: SpectralData,
    t: float | np.ndarray,
) -> float | np.ndarray:
    """Tracking-error bound for dynamic consensus on balanced networks.

    Combines the decaying disagreement of the initial condition, the
    steady contribution of the projected input rate, and the constant
    initialization offset:

        sqrt( (exp(-l2h t) ||Pi x0|| + sup||Pi u'|| / l2h)^2
              + (sum(x0 - u0) / sqrt(N))^2 )

    with l2h the symmetrized algebraic connectivity.

    Raises:
        ValueError: when l2h is not positive.
    """
    if spec.lambda2_hat <= 0.0:
        raise ValueError("bound needs a positive symmetrized connectivity")
    x0 = np.asarray(x0, dtype=float)
    u0 = np.asarray(u0, dtype=float)
    n = x0.shape[0]
    disagreement = np.linalg.norm(spec.projection @ x0)
    decay = np.exp(-spec.lambda2_hat * np.asarray(t)) * disagreement
    steady = u_dot_sup_proj / spec.lambda2_hat
    offset = float(np.sum(x0 - u0)) / np.sqrt(n)
    out = np.sqrt((decay + steady) ** 2 + offset**2)
    return float(out) if np.isscalar(t) or np.ndim(t) == 0 else out


def bound_alltoall(omega: np.ndarray, spec: SpectralData) -> float:
    """Asymptotic phase-error bound for all-to-all coupling.

    ||omega - mean(omega)|| / l2h, with the arithmetic mean as the
    consensus frequency of the complete network.
    """
    if spec.lambda2_hat <= 0.0:
        raise ValueError("bound needs a positive symmetrized connectivity")
    omega = np.asarray(omega, dtype=float)
    return float(np.linalg.norm(omega - omega.mean()) / spec.lambda2_hat)


def bound_arbitrary(
    omega: np.ndarray,
    spec: SpectralData,
    mean: str = "weighted",
) -> float:
    """Asymptotic phase-error bound for arbitrary connected networks.

    ||Pi (omega - 1 wbar)|| / lambda2, where wbar is the consensus
    frequency (gamma_l-weighted by default, arithmetic on request) and Pi
    removes the gamma_l component.
    """
    omega = np.asarray(omega, dtype=float)
    if mean == "weighted":
        wbar = consensus_frequency(spec.gamma_l, omega)
    elif mean == "arithmetic":
        wbar = float(omega.mean())
    else:
        raise ValueError(f"mean must be 'weighted' or 'arithmetic', got {mean!r}")
    if spec.lambda2 <= 0.0:
        raise ValueError("bound needs a positive algebraic connectivity")
    deviation = spec.projection @ (omega - wbar)
    return float(np.linalg.norm(deviation) / spec.lambda2)


def bound_gamma(
    omega: np.ndarray,
    gamma: np.ndarray,
    lambda2: float,
) -> float:
    """Arbitrary-network bound evaluated with a supplied consensus direction.

    Useful when gamma_l is only an estimate; the projection and the
    weighted mean are rebuilt from the given vector.
    """
    if lambda2 <= 0.0:
        raise ValueError("bound needs a positive algebraic connectivity")
    gamma = np.asarray(gamma, dtype=float)
    norm = np.linalg.norm(gamma)
    if norm == 0.0:
        raise ValueError("consensus direction must be nonzero")
    gamma = gamma / norm
    omega = np.asarray(omega, dtype=float)
    wbar = float(gamma @ omega / gamma.sum())
    deviation = omega - wbar
    deviation = deviation - gamma * (gamma @ deviation)
    return float(np.linalg.norm(deviation) / lambda2)


def residual_gamma(
    theta: np.ndarray,
    inc: IncidenceData,
    gamma_l: np.ndarray,
) -> float:
    """Coupling residual along the consensus direction.

    |gamma_l^T B~ W sin(B^T theta)|; zero exactly when the consensus
    direction of the linear protocol remains valid for the phase-coupled
    steady state.
    """
    edge_angles = inc.incidence.T @ np.asarray(theta, dtype=float)
    per_agent = inc.incidence_in @ (inc.weights * np.sin(edge_angles))
    return float(abs(np.asarray(gamma_l, dtype=float) @ per_agent))


# ─── error decomposition ───────────────────────────────────────────────────


def _completion(gamma: np.ndarray) -> np.ndarray:
    """Orthonormal completion of gamma from the standard basis.

    Deterministic: Gram-Schmidt over the identity columns, skipping the
    index of gamma's largest-magnitude entry.
    """
    n = gamma.shape[0]
    skip = int(np.argmax(np.abs(gamma)))
    basis = [gamma]
    for idx in range(n):
        if idx == skip:
            continue
        v = np.zeros(n)
        v[idx] = 1.0
        for b in basis:
            v = v - (b @ v) * b
        v = v / np.linalg.norm(v)
        basis.append(v)
    return np.column_stack(basis[1:])


def decompose_error(
    errors: np.ndarray,
    spec: SpectralData,
) -> DecompositionReport:
    """Split error samples into agreement and disagreement coordinates.

    Args:
        errors: (N,) or (M, N) consensus error samples.
        spec: Spectral data providing the consensus direction.

    Returns:
        DecompositionReport with T = [gamma_l, R] orthogonal, the scalar
        agreement series gamma_l^T e, and the (N-1)-dim disagreement
        series R^T e.  Norms satisfy |e|^2 = agreement^2 + |disagreement|^2.
    """
    e = np.atleast_2d(np.asarray(errors, dtype=float))
    r = _completion(spec.gamma_l)
    transform = np.column_stack([spec.gamma_l, r])
    rotated = e @ transform
    return DecompositionReport(
        transform=transform,
        agreement=rotated[:, 0],
        disagreement=rotated[:, 1:],
    )
