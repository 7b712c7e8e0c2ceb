"""FastAPI application: one endpoint per kind of run.

POST /simulate  continuous protocols, trajectory plus metrics
POST /bounds    spectral quantities and applicable worst-case bounds
POST /icas      discrete pilot-tone runs, per-tone records plus metrics
POST /verify    built-in verification suite
GET  /health    liveness and version

Configuration errors surface as 400 with the core ValueError message;
diverging runs as 422.
"""

from __future__ import annotations

import numpy as np
from fastapi import FastAPI, HTTPException

from .. import __version__, analysis
from ..dynamics import Trajectory, integrate
from ..graph import incidence, is_balanced, is_connected, spectral
from ..icas import run_icas
from ..scenario import Scenario
from ..verify import run_checks
from .models import (
    BoundsRequest,
    BoundsResponse,
    BoundValue,
    CheckModel,
    FitModel,
    IcasRequest,
    IcasResponse,
    ScenarioModel,
    SimulateRequest,
    SimulateResponse,
    ToneRecordModel,
    VerifyRequest,
    VerifyResponse,
    none_if_nan,
    scenario_from_model,
)

__all__ = ["app", "create_app"]

_PHASE_KINDS = ("kuramoto", "extended_kuramoto")


def _scenario(model: ScenarioModel) -> Scenario:
    try:
        return scenario_from_model(model)
    except ValueError as exc:
        raise HTTPException(status_code=400, detail=str(exc)) from exc


def _phase_metrics(
    sc: Scenario,
    traj: Trajectory,
    fit_window: tuple[float, float] | None,
) -> tuple[dict[str, float], FitModel]:
    data = spectral(sc.network)
    line = analysis.fit_consensus(traj, fit_window)
    mask = traj.times >= line.window[0]
    errors = analysis.phase_error(traj, line)
    mutual, pair = analysis.max_mutual_difference(traj.states[mask])
    inc = incidence(sc.network, coupling=sc.protocol.coupling / sc.network.n_agents)
    r, _ = analysis.order_parameter(traj.states)
    metrics = {
        "fit_slope": line.slope,
        "fit_intercept": line.intercept,
        "fit_window_start": line.window[0],
        "fit_window_end": line.window[1],
        "steady_error_max": float(np.max(np.abs(errors[mask]))),
        "mutual_max": mutual,
        "mutual_agent_a": float(pair[0] + 1),
        "mutual_agent_b": float(pair[1] + 1),
        "consensus_frequency": analysis.consensus_frequency(
            data.gamma_l, sc.bank.natural_freq
        ),
        "residual_gamma_final": analysis.residual_gamma(
            traj.states[-1], inc, data.gamma_l
        ),
        "order_r_final": float(r[-1]),
    }
    if sc.protocol.kind == "kuramoto":
        metrics["steady_error_bound"] = analysis.bound_arbitrary(
            sc.bank.natural_freq, data
        )
    if traj.freq_states is not None:
        metrics["freq_spread_final"] = float(np.ptp(traj.freq_states[-1]))
    transient = analysis.detect_transient_end(traj)
    if transient is not None:
        metrics["transient_end"] = transient
    fit = FitModel(
        slope=line.slope,
        intercept=line.intercept,
        window_start=line.window[0],
        window_end=line.window[1],
    )
    return metrics, fit


def _consensus_metrics(traj: Trajectory) -> dict[str, float]:
    final = traj.states[-1]
    return {
        "final_max": float(final.max()),
        "final_min": float(final.min()),
        "final_spread": float(np.ptp(final)),
        "final_rate_max": float(np.max(np.abs(traj.rates[-1]))),
    }


def create_app() -> FastAPI:
    app = FastAPI(title="kurasync", version=__version__)

    @app.get("/health")
    def health() -> dict[str, str]:
        return {"status": "ok", "version": __version__}

    @app.post("/simulate", response_model=SimulateResponse)
    def simulate(request: SimulateRequest) -> SimulateResponse:
        sc = _scenario(request.scenario)
        if not is_connected(sc.network):
            raise HTTPException(
                status_code=400,
                detail="network is not connected: no agent reaches all others",
            )
        try:
            traj = integrate(sc)
        except ValueError as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc
        except FloatingPointError as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from exc

        fit = None
        order_r = None
        order_psi = None
        if sc.protocol.kind in _PHASE_KINDS:
            try:
                metrics, fit = _phase_metrics(sc, traj, request.fit_window)
            except ValueError as exc:
                raise HTTPException(status_code=400, detail=str(exc)) from exc
            r, psi = analysis.order_parameter(traj.states)
            order_r = [float(v) for v in r]
            order_psi = [none_if_nan(v) for v in psi]
        else:
            metrics = _consensus_metrics(traj)

        return SimulateResponse(
            kind=sc.protocol.kind,
            times=[float(t) for t in traj.times],
            states=traj.states.tolist(),
            rates=traj.rates.tolist(),
            freq_states=(
                traj.freq_states.tolist()
                if traj.freq_states is not None
                else None
            ),
            order_r=order_r,
            order_psi=order_psi,
            fit=fit,
            metrics=metrics,
        )

    @app.post("/bounds", response_model=BoundsResponse)
    def bounds(request: BoundsRequest) -> BoundsResponse:
        sc = _scenario(request.scenario)
        try:
            data = spectral(sc.network)
        except ValueError as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc
        omega = sc.bank.natural_freq
        values = [BoundValue(
            kind="arbitrary_network",
            value=analysis.bound_arbitrary(omega, data),
        )]
        n = sc.network.n_agents
        complete = bool(
            np.all((sc.network.adjacency > 0) == ~np.eye(n, dtype=bool))
        )
        if complete:
            values.append(BoundValue(
                kind="all_to_all", value=analysis.bound_alltoall(omega, data)
            ))
        return BoundsResponse(
            gamma_l=[float(g) for g in data.gamma_l],
            lambda2=data.lambda2,
            lambda2_abs=data.lambda2_abs,
            lambda2_hat=data.lambda2_hat,
            connected=is_connected(sc.network),
            balanced=is_balanced(sc.network),
            consensus_frequency=analysis.consensus_frequency(
                data.gamma_l, omega
            ),
            bounds=values,
        )

    @app.post("/icas", response_model=IcasResponse)
    def icas(request: IcasRequest) -> IcasResponse:
        sc = _scenario(request.scenario)
        if sc.icas is None:
            raise HTTPException(
                status_code=400, detail="scenario has no [icas] section"
            )
        try:
            result = run_icas(sc.icas)
        except FloatingPointError as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from exc
        records = None
        if request.include_records:
            records = [
                ToneRecordModel(
                    time=rec.time,
                    agent=rec.agent + 1,
                    tone_index=rec.tone_index,
                    carrier_phase=rec.carrier_phase,
                    carrier_rate=rec.carrier_rate,
                    rep_freq=rec.rep_freq,
                    rep_rate=rec.rep_rate,
                    max_cfo_measured=none_if_nan(rec.max_cfo_measured),
                    max_to_measured=none_if_nan(rec.max_to_measured),
                )
                for rec in result.records
            ]
        tones = result.tones_per_agent
        metrics = {
            "mutual_cfo": result.mutual_cfo,
            "to_phase": result.to_phase,
            "rep_freq_spread": result.rep_freq_spread,
            "tones_min": float(min(tones)),
            "tones_max": float(max(tones)),
        }
        return IcasResponse(
            mutual_cfo=result.mutual_cfo,
            to_phase=result.to_phase,
            rep_freq_spread=result.rep_freq_spread,
            tones_per_agent=list(tones),
            records=records,
            metrics=metrics,
        )

    @app.post("/verify", response_model=VerifyResponse)
    def verify(request: VerifyRequest) -> VerifyResponse:
        try:
            results = run_checks(request.names)
        except ValueError as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc
        checks = [
            CheckModel(
                name=res.name,
                passed=res.passed,
                measured=res.measured,
                expected=res.expected,
                tolerance=res.tolerance,
                detail=res.detail,
                line=res.line(),
            )
            for res in results
        ]
        return VerifyResponse(
            checks=checks, all_passed=all(c.passed for c in checks)
        )

    return app


app = create_app()
