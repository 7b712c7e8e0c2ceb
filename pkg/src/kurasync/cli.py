"""Scenario-driven command line.

Every subcommand is a thin client of the HTTP service: by default the
FastAPI application is mounted in-process, `--server URL` talks to a
running instance instead.

    kurasync simulate --config five_agent --out-dir runs
    kurasync bounds   --config scenario.ini
    kurasync icas     --config five_agent_icas --seed 3
    kurasync verify
    kurasync serve    --host 0.0.0.0 --port 8000

`--config` accepts a scenario file path or the name of a bundled
scenario.  Trajectories are written as CSV (header row, '.' decimal,
shortest round-trip float format, so identical configs and seeds give
byte-identical files); metrics as `key = value` lines.  Exit status is 0
on success, 1 on any failure, and `verify` fails when a check fails.
"""

from __future__ import annotations

import argparse
import asyncio
import os
import sys
from typing import Any, Iterable, Sequence

import httpx

from . import __version__
from .scenario import (
    Scenario,
    bundled_scenario,
    bundled_scenario_names,
    load_scenario,
    with_overrides,
)
from .service.models import model_from_scenario

__all__ = ["main"]


class _CliError(Exception):
    pass


def _load(config: str) -> Scenario:
    if os.path.exists(config):
        return load_scenario(config)
    if config in bundled_scenario_names():
        return bundled_scenario(config)
    raise _CliError(
        f"config {config!r} is neither a file nor a bundled scenario "
        f"({', '.join(bundled_scenario_names())})"
    )


# ─── service client ─────────────────────────────────────────────────────────


async def _post_async(server: str | None, path: str, payload: dict) -> httpx.Response:
    if server is None:
        from .service.app import create_app

        transport = httpx.ASGITransport(app=create_app())
        async with httpx.AsyncClient(
            transport=transport, base_url="http://kurasync.internal",
            timeout=600.0,
        ) as client:
            return await client.post(path, json=payload)
    async with httpx.AsyncClient(base_url=server, timeout=600.0) as client:
        return await client.post(path, json=payload)


def _post(server: str | None, path: str, payload: dict) -> dict:
    try:
        response = asyncio.run(_post_async(server, path, payload))
    except httpx.HTTPError as exc:
        raise _CliError(f"service request {path} failed: {exc}") from exc
    if response.status_code != 200:
        try:
            detail = response.json().get("detail", response.text)
        except ValueError:
            detail = response.text
        raise _CliError(f"{path} returned {response.status_code}: {detail}")
    return response.json()


# ─── output files ───────────────────────────────────────────────────────────


def _fmt(value: Any) -> str:
    if value is None:
        return ""
    return repr(float(value))


def _write_csv(path: str, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def _write_metrics(path: str, metrics: dict[str, float]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for key, value in metrics.items():
            fh.write(f"{key} = {_fmt(value)}\n")


def _print_metrics(metrics: dict[str, float]) -> None:
    for key, value in metrics.items():
        print(f"{key} = {_fmt(value)}")


def _out_paths(sc: Scenario, out_dir: str) -> tuple[str, str]:
    os.makedirs(out_dir, exist_ok=True)
    return (
        os.path.join(out_dir, sc.trajectory_path),
        os.path.join(out_dir, sc.metrics_path),
    )


def _trajectory_csv(path: str, data: dict) -> None:
    states = data["states"]
    rates = data["rates"]
    freq_states = data.get("freq_states")
    order_r = data.get("order_r")
    order_psi = data.get("order_psi")
    n = len(states[0])

    header = ["time"]
    for i in range(1, n + 1):
        header.append(f"state_{i}")
        header.append(f"rate_{i}")
        if freq_states is not None:
            header.append(f"freq_state_{i}")
    if order_r is not None:
        header += ["order_r", "order_psi"]

    def rows() -> Iterable[list[Any]]:
        for k, t in enumerate(data["times"]):
            row: list[Any] = [t]
            for i in range(n):
                row.append(states[k][i])
                row.append(rates[k][i])
                if freq_states is not None:
                    row.append(freq_states[k][i])
            if order_r is not None:
                row.append(order_r[k])
                row.append(order_psi[k])
            yield row

    _write_csv(path, header, rows())


_TONE_COLUMNS = (
    "time", "agent", "tone_index", "carrier_phase", "carrier_rate",
    "rep_freq", "rep_rate", "max_cfo_measured", "max_to_measured",
)


def _tones_csv(path: str, records: list[dict]) -> None:
    def rows() -> Iterable[list[Any]]:
        for rec in records:
            yield [rec[col] for col in _TONE_COLUMNS]

    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(",".join(_TONE_COLUMNS) + "\n")
        for row in rows():
            time_v, agent, tone_index, *floats = row
            cells = [_fmt(time_v), str(agent), str(tone_index)]
            cells += [_fmt(v) for v in floats]
            fh.write(",".join(cells) + "\n")


# ─── subcommands ────────────────────────────────────────────────────────────


def _scenario_payload(args: argparse.Namespace) -> tuple[Scenario, dict]:
    sc = _load(args.config)
    sc = with_overrides(
        sc,
        step=getattr(args, "step", None),
        horizon=getattr(args, "horizon", None),
        seed=getattr(args, "seed", None),
    )
    try:
        model = model_from_scenario(sc)
    except ValueError as exc:
        raise _CliError(str(exc)) from exc
    return sc, model.model_dump(mode="json")


def _cmd_simulate(args: argparse.Namespace) -> int:
    sc, scenario = _scenario_payload(args)
    payload: dict[str, Any] = {"scenario": scenario}
    if args.fit_window is not None:
        payload["fit_window"] = list(args.fit_window)
    data = _post(args.server, "/simulate", payload)
    traj_path, metrics_path = _out_paths(sc, args.out_dir)
    _trajectory_csv(traj_path, data)
    _write_metrics(metrics_path, data["metrics"])
    _print_metrics(data["metrics"])
    print(f"trajectory: {traj_path} ({len(data['times'])} rows)")
    print(f"metrics: {metrics_path}")
    return 0


def _cmd_bounds(args: argparse.Namespace) -> int:
    _, scenario = _scenario_payload(args)
    data = _post(args.server, "/bounds", {"scenario": scenario})
    print("gamma_l =", " ".join(_fmt(g) for g in data["gamma_l"]))
    for key in ("lambda2", "lambda2_abs", "lambda2_hat", "consensus_frequency"):
        print(f"{key} = {_fmt(data[key])}")
    for key in ("connected", "balanced"):
        print(f"{key} = {'yes' if data[key] else 'no'}")
    for bound in data["bounds"]:
        print(f"bound_{bound['kind']} = {_fmt(bound['value'])}")
    return 0


def _cmd_icas(args: argparse.Namespace) -> int:
    sc, scenario = _scenario_payload(args)
    data = _post(
        args.server, "/icas", {"scenario": scenario, "include_records": True}
    )
    traj_path, metrics_path = _out_paths(sc, args.out_dir)
    _tones_csv(traj_path, data["records"])
    _write_metrics(metrics_path, data["metrics"])
    _print_metrics(data["metrics"])
    print(f"tones: {traj_path} ({len(data['records'])} rows)")
    print(f"metrics: {metrics_path}")
    return 0


def _cmd_verify(args: argparse.Namespace) -> int:
    payload = {"names": args.names if args.names else None}
    data = _post(args.server, "/verify", payload)
    for check in data["checks"]:
        print(check["line"])
    total = len(data["checks"])
    passed = sum(1 for c in data["checks"] if c["passed"])
    print(f"{passed}/{total} checks passed")
    return 0 if data["all_passed"] else 1


def _cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .service.app import create_app

    uvicorn.run(create_app(), host=args.host, port=args.port)
    return 0


# ─── argument parsing ───────────────────────────────────────────────────────


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="kurasync",
        description=(
            "Consensus-based oscillator synchronization: simulations, "
            "error bounds, pilot-tone runs, verification."
        ),
    )
    parser.add_argument(
        "--version", action="version", version=f"%(prog)s {__version__}"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def server_flag(p: argparse.ArgumentParser) -> None:
        p.add_argument(
            "--server",
            help="base URL of a running service; runs in-process when omitted",
        )

    def config_flag(p: argparse.ArgumentParser) -> None:
        p.add_argument(
            "--config", required=True,
            help="scenario file path or bundled scenario name",
        )

    p = sub.add_parser("simulate", help="run a continuous protocol")
    config_flag(p)
    p.add_argument("--step", type=float, help="override the integrator step")
    p.add_argument("--horizon", type=float, help="override the time horizon")
    p.add_argument("--seed", type=int, help="override the [icas] seed")
    p.add_argument("--out-dir", default=".", help="directory for output files")
    p.add_argument(
        "--fit-window", type=float, nargs=2, metavar=("START", "END"),
        help="consensus-fit window in seconds (default: last 40%%)",
    )
    server_flag(p)
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("bounds", help="print spectral data and error bounds")
    config_flag(p)
    server_flag(p)
    p.set_defaults(func=_cmd_bounds)

    p = sub.add_parser("icas", help="run the discrete pilot-tone protocol")
    config_flag(p)
    p.add_argument("--seed", type=int, help="override the [icas] seed")
    p.add_argument("--out-dir", default=".", help="directory for output files")
    server_flag(p)
    p.set_defaults(func=_cmd_icas)

    p = sub.add_parser("verify", help="run the built-in verification suite")
    p.add_argument(
        "--names", nargs="*",
        help="subset of checks to run (default: all)",
    )
    server_flag(p)
    p.set_defaults(func=_cmd_verify)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.set_defaults(func=_cmd_serve)

    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return args.func(args)
    except _CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
