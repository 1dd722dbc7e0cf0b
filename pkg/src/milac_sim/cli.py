"""Thin command-line client of the experiment service.

By default requests are served in-process by the bundled FastAPI app;
--server points the same commands at a remote instance. Exit codes:
0 success, 1 I/O or transport failure, 2 invalid configuration,
3 numerical failure.
"""

from __future__ import annotations

import sys
from pathlib import Path

import click
import httpx

EXIT_IO = 1
EXIT_INVALID_CONFIG = 2
EXIT_NUMERICAL = 3


def _post(server: str | None, route: str, payload: dict) -> dict:
    """POST to a remote server or to the in-process app; exits on error."""
    try:
        if server is None:
            import warnings

            with warnings.catch_warnings():
                warnings.simplefilter("ignore", DeprecationWarning)
                from fastapi.testclient import TestClient

            from .service.app import app

            with TestClient(app, raise_server_exceptions=False) as client:
                response = client.post(route, json=payload)
        else:
            with httpx.Client(base_url=server, timeout=None) as client:
                response = client.post(route, json=payload)
    except httpx.HTTPError as exc:
        click.echo(f"transport error: {exc}", err=True)
        sys.exit(EXIT_IO)

    if response.status_code == 200:
        return response.json()
    try:
        detail = response.json().get("detail")
    except ValueError:
        detail = response.text
    click.echo(f"server returned {response.status_code}: {detail}", err=True)
    if response.status_code == 409:
        sys.exit(EXIT_NUMERICAL)
    if response.status_code in (400, 422):
        sys.exit(EXIT_INVALID_CONFIG)
    sys.exit(EXIT_IO)


def _write_output(out: str, csv_text: str) -> None:
    try:
        Path(out).write_bytes(csv_text.encode("utf-8"))
    except OSError as exc:
        click.echo(f"cannot write {out}: {exc}", err=True)
        sys.exit(EXIT_IO)


def _float_list(_ctx, _param, value):
    if value is None:
        return None
    try:
        return [float(v) for v in value.split(",") if v.strip()]
    except ValueError:
        raise click.BadParameter(f"expected comma-separated numbers, got {value!r}")


def _int_list(_ctx, _param, value):
    if value is None:
        return None
    try:
        return [int(v) for v in value.split(",") if v.strip()]
    except ValueError:
        raise click.BadParameter(f"expected comma-separated integers, got {value!r}")


_VARIANTS = {"consistent": "consistent_gradient", "literal": "paper_literal"}


def _optimizer_payload(tol, inner_iters, max_outer, variant) -> dict:
    payload = {}
    if tol is not None:
        payload["outer_tolerance"] = tol
    if inner_iters is not None:
        payload["inner_iterations"] = inner_iters
    if max_outer is not None:
        payload["max_outer_iterations"] = max_outer
    if variant is not None:
        payload["surrogate_variant"] = _VARIANTS[variant]
    return payload


def _budget_payload(value: str | None) -> dict | None:
    if value is None:
        return None
    if value == "quarter":
        return {"mode": "quarter"}
    if value.startswith("absolute:"):
        try:
            watts = float(value.split(":", 1)[1])
        except ValueError:
            raise click.BadParameter(f"cannot parse watts in {value!r}")
        return {"mode": "absolute", "watts": watts}
    raise click.BadParameter("expected 'quarter' or 'absolute:<watts>'")


def _assemble(pairs) -> dict:
    return {key: value for key, value in pairs if value is not None}


common_options = [
    click.option("--k", type=int, default=None, help="Number of users / RF chains."),
    click.option("--channel", type=click.Choice(["rayleigh", "orthogonal"]), default=None),
    click.option("--realizations", type=int, default=None),
    click.option("--seed", type=int, default=None, help="Base seed of the channel stream."),
    click.option("--tol", type=float, default=None, help="Outer convergence tolerance."),
    click.option("--inner-iters", type=int, default=None, help="Scattering inner iterations."),
    click.option("--max-outer", type=int, default=None, help="Outer iteration cap."),
    click.option("--variant", type=click.Choice(["consistent", "literal"]), default=None),
    click.option("--server", type=str, default=None, help="Remote service URL (default: in-process)."),
    click.option("--out", type=str, required=True, help="Output CSV path."),
]


def _with_options(options):
    def wrap(fn):
        for option in reversed(options):
            fn = option(fn)
        return fn

    return wrap


@click.group()
def main():
    """Analog microwave beamforming simulator."""


@main.command()
@_with_options(common_options)
@click.option("--l", type=int, default=None, help="Number of transmit antennas.")
@click.option("--snr-db-list", callback=_float_list, default=None, help="Comma-separated SNRs in dB.")
def convergence(k, l, snr_db_list, channel, realizations, seed, tol, inner_iters, max_outer, variant, server, out):
    """Optimizer convergence traces, one per (SNR, realization)."""
    payload = _assemble(
        [
            ("k", k),
            ("l", l),
            ("snr_db_list", snr_db_list),
            ("channel_model", channel),
            ("realizations", realizations),
            ("base_seed", seed),
        ]
    )
    optimizer = _optimizer_payload(tol, inner_iters, max_outer, variant)
    if optimizer:
        payload["optimizer"] = optimizer
    body = _post(server, "/experiments/convergence", payload)
    _write_output(out, body["csv"])


@main.command(name="snr-sweep")
@_with_options(common_options)
@click.option("--l", type=int, default=None, help="Number of transmit antennas.")
@click.option("--snr-db-list", callback=_float_list, default=None, help="Comma-separated SNRs in dB.")
@click.option("--digital-budget", type=str, default=None, help="'quarter' or 'absolute:<watts>'.")
def snr_sweep(k, l, snr_db_list, channel, realizations, seed, tol, inner_iters, max_outer, variant, server, out, digital_budget):
    """Mean sum rate vs transmit SNR, analog network vs digital baseline."""
    payload = _assemble(
        [
            ("k", k),
            ("l", l),
            ("snr_db_list", snr_db_list),
            ("channel_model", channel),
            ("realizations", realizations),
            ("base_seed", seed),
            ("digital_budget", _budget_payload(digital_budget)),
        ]
    )
    optimizer = _optimizer_payload(tol, inner_iters, max_outer, variant)
    if optimizer:
        payload["optimizer"] = optimizer
    body = _post(server, "/experiments/snr-sweep", payload)
    _write_output(out, body["csv"])


@main.command(name="array-sweep")
@_with_options(common_options)
@click.option("--l-list", callback=_int_list, default=None, help="Comma-separated antenna counts.")
@click.option("--snr-db", type=float, default=None, help="Transmit SNR in dB.")
@click.option("--digital-budget", type=str, default=None, help="'quarter' or 'absolute:<watts>'.")
def array_sweep(k, l_list, snr_db, channel, realizations, seed, tol, inner_iters, max_outer, variant, server, out, digital_budget):
    """Mean sum rate vs antenna count at a fixed SNR."""
    payload = _assemble(
        [
            ("k", k),
            ("l_list", l_list),
            ("snr_db", snr_db),
            ("channel_model", channel),
            ("realizations", realizations),
            ("base_seed", seed),
            ("digital_budget", _budget_payload(digital_budget)),
        ]
    )
    optimizer = _optimizer_payload(tol, inner_iters, max_outer, variant)
    if optimizer:
        payload["optimizer"] = optimizer
    body = _post(server, "/experiments/array-sweep", payload)
    _write_output(out, body["csv"])


@main.command()
@click.argument("theta_file", type=str)
@click.option("--z0", type=float, default=None, help="Reference impedance in ohms (default 50).")
@click.option("--server", type=str, default=None, help="Remote service URL (default: in-process).")
@click.option("--out", type=str, required=True, help="Output CSV path.")
def synthesize(theta_file, z0, server, out):
    """Branch susceptances realizing a stored scattering matrix."""
    try:
        matrix_text = Path(theta_file).read_text(encoding="utf-8")
    except OSError as exc:
        click.echo(f"cannot read {theta_file}: {exc}", err=True)
        sys.exit(EXIT_IO)
    payload = _assemble([("matrix_text", matrix_text), ("z0", z0)])
    body = _post(server, "/synthesize", payload)
    _write_output(out, body["csv"])


@main.command()
@click.option("--host", type=str, default="127.0.0.1")
@click.option("--port", type=int, default=8000)
def serve(host, port):
    """Run the HTTP service."""
    import uvicorn

    uvicorn.run("milac_sim.service.app:app", host=host, port=port)


if __name__ == "__main__":
    main()
