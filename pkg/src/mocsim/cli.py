"""Command-line client of the simulation service.

Every subcommand talks to the HTTP API. By default the app is mounted
in-process (no server needed, same wire format); pass ``--server`` to work
against a remote instance. ``mocsim serve`` starts one.
"""
from __future__ import annotations

import json
import sys
from pathlib import Path
from typing import Optional

import click
import httpx


def _client(server: Optional[str]) -> httpx.Client:
    if server:
        return httpx.Client(base_url=server, timeout=None)
    # in-process mount of the service: same HTTP surface, no socket
    from fastapi.testclient import TestClient

    from .service.app import create_app
    return TestClient(create_app(), raise_server_exceptions=False)


def _post(client: httpx.Client, path: str, payload: dict) -> dict:
    resp = client.post(path, json=payload)
    if resp.status_code in (400, 422):
        try:
            detail = resp.json().get("detail")
        except Exception:
            detail = resp.text
        raise click.UsageError(f"invalid request: {detail}")
    if resp.status_code != 200:
        raise click.ClickException(f"service error {resp.status_code}: {resp.text}")
    return resp.json()


def _load_config_dict(path: Optional[str], family: str, seed: Optional[int],
                      iterations: Optional[int], workers: Optional[int],
                      checkpoint_dir: Optional[str]) -> dict:
    if path:
        try:
            data = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise click.UsageError(f"cannot read config {path}: {exc}")
    else:
        raise click.UsageError("a --config file is required")
    if data.get("family", family) != family:
        raise click.UsageError(f"config family {data.get('family')!r} does not "
                               f"match this subcommand ({family})")
    data["family"] = family
    if seed is not None:
        data["master_seed"] = seed
    if iterations is not None:
        data["iterations"] = iterations
    if workers is not None:
        data["workers"] = workers
    if checkpoint_dir is not None:
        data["out_dir"] = checkpoint_dir
    return data


def _write_run_artifacts(out: Optional[str], result: dict) -> None:
    if out is None:
        click.echo(result["tally_csv"], nl=False)
        return
    out_dir = Path(out)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "tally.csv").write_text(result["tally_csv"])
    names = ["tally.csv"]
    if result.get("fit_report") is not None:
        (out_dir / "fit_report.json").write_text(
            json.dumps(result["fit_report"], indent=2))
        names.append("fit_report.json")
    wg = result.get("weighted_graph")
    if wg:
        for orient in ("horizontal", "vertical"):
            csv = wg.get(f"{orient}_csv")
            if csv:
                (out_dir / f"weighted_graph_{orient}.csv").write_text(csv)
                names.append(f"weighted_graph_{orient}.csv")
    (out_dir / "run_meta.json").write_text(json.dumps(result["meta"], indent=2))
    names.append("run_meta.json")
    click.echo(f"wrote {', '.join(names)} to {out_dir}", err=True)


def _run_command(family: str):
    @click.option("--config", "config_path", type=click.Path(), required=True,
                  help="run configuration (JSON)")
    @click.option("--seed", type=int, default=None, help="override master seed")
    @click.option("--iterations", type=int, default=None)
    @click.option("--workers", type=int, default=None)
    @click.option("--out", type=click.Path(), default=None,
                  help="directory for tally/report artifacts")
    @click.option("--checkpoint-dir", type=click.Path(), default=None,
                  help="server-side directory for checkpoints and outputs")
    @click.option("--server", default=None, help="remote service URL")
    def cmd(config_path, seed, iterations, workers, out, checkpoint_dir, server):
        data = _load_config_dict(config_path, family, seed, iterations,
                                 workers, checkpoint_dir)
        with _client(server) as client:
            result = _post(client, "/run", {"config": data})
        _write_run_artifacts(out, result)
    return cmd


@click.group()
def main():
    """Monte Carlo percolation toolchain for measurement-only circuits."""


main.command("run-1d", help="Chain-family experiment.")(_run_command("moc1d"))
main.command("run-2d", help="Torus-family experiment.")(_run_command("moc2d"))
main.command("run-hyperbolic",
             help="Tree-structured family experiment.")(_run_command("hyperbolic"))
main.command("run-dyck", help="Brickwork swap family experiment.")(_run_command("dyck"))


@main.command("weighted-graph", help="Measure-weighted edge-graph accumulation.")
@click.option("--config", "config_path", type=click.Path(), required=True)
@click.option("--seed", type=int, default=None)
@click.option("--iterations", type=int, default=None)
@click.option("--workers", type=int, default=None)
@click.option("--out", type=click.Path(), default=None)
@click.option("--server", default=None)
def weighted_graph_cmd(config_path, seed, iterations, workers, out, server):
    data = _load_config_dict(config_path, "moc1d", seed, iterations, workers, None)
    if "weighted_graph" not in data:
        raise click.UsageError("config must carry a weighted_graph section")
    with _client(server) as client:
        result = _post(client, "/weighted-graph", {"config": data})
    _write_run_artifacts(out, result)


@main.command("fit", help="Power-law exponent fits from a tally CSV.")
@click.option("--tally", type=click.Path(), required=True)
@click.option("--family", type=click.Choice(["moc1d", "moc2d", "dyck",
                                             "hyperbolic"]), required=True)
@click.option("--num-sites", type=int, required=True)
@click.option("--prob", type=float, default=0.5)
@click.option("--fit-config", type=click.Path(), default=None,
              help="FitOptions overrides (JSON)")
@click.option("--out", type=click.Path(), default=None, help="report JSON path")
@click.option("--server", default=None)
def fit_cmd(tally, family, num_sites, prob, fit_config, out, server):
    payload = {
        "tally_csv": Path(tally).read_text(),
        "family": family,
        "num_sites": num_sites,
        "prob": prob,
    }
    if fit_config:
        payload["fit"] = json.loads(Path(fit_config).read_text())
    with _client(server) as client:
        result = _post(client, "/fit", payload)
    text = json.dumps(result["report"], indent=2)
    if out:
        Path(out).write_text(text)
        click.echo(f"wrote {out}", err=True)
    else:
        click.echo(text)


@main.command("angle-average", help="Angle-averaged rates at fixed eta values.")
@click.option("--tally", type=click.Path(), required=True)
@click.option("--num-sites", type=int, required=True)
@click.option("--k", type=int, default=2)
@click.option("--radius-sq", type=float, required=True)
@click.option("--eta", "etas", type=float, multiple=True, required=True)
@click.option("--num-angles", type=int, default=64)
@click.option("--measure", type=click.Choice(["gme", "mi"]), default="gme")
@click.option("--out", type=click.Path(), default=None)
@click.option("--server", default=None)
def angle_average_cmd(tally, num_sites, k, radius_sq, etas, num_angles,
                      measure, out, server):
    payload = {
        "tally_csv": Path(tally).read_text(),
        "num_sites": num_sites,
        "k": k,
        "radius_sq": radius_sq,
        "eta_values": list(etas),
        "num_angles": num_angles,
        "measure": measure,
    }
    with _client(server) as client:
        result = _post(client, "/angle-average", payload)
    text = json.dumps(result, indent=2)
    if out:
        Path(out).write_text(text)
    else:
        click.echo(text)


@main.command("oracle-check",
              help="Cross-validate the cluster engine against the stabilizer "
                   "tableau and the flood-fill reference.")
@click.option("--family", "families", multiple=True,
              type=click.Choice(["moc1d", "moc2d", "dyck", "hyperbolic"]),
              default=("moc1d", "moc2d"))
@click.option("--trials", type=int, default=100)
@click.option("--max-sites", type=int, default=8)
@click.option("--max-depth", type=int, default=8)
@click.option("--prob", "probs", type=float, multiple=True,
              default=(0.1, 0.5, 0.9))
@click.option("--seed", type=int, default=0)
@click.option("--server", default=None)
def oracle_check_cmd(families, trials, max_sites, max_depth, probs, seed, server):
    payload = {"families": list(families), "trials": trials,
               "max_sites": max_sites, "max_depth": max_depth,
               "probs": list(probs), "seed": seed}
    with _client(server) as client:
        result = _post(client, "/oracle-check", payload)
    tab = result["tableau"]
    click.echo(f"tableau:   {tab['matched']}/{tab['trials']} matched "
               f"({tab['duration_s']:.1f}s)")
    if result.get("floodfill"):
        ff = result["floodfill"]
        click.echo(f"floodfill: {ff['matched']}/{ff['trials']} matched "
                   f"({ff['duration_s']:.1f}s)")
    if not result["passed"]:
        raise click.ClickException("oracle check FAILED")
    click.echo("oracle check passed")


@main.command("serve", help="Start the HTTP service.")
@click.option("--host", default="127.0.0.1")
@click.option("--port", type=int, default=8000)
def serve_cmd(host, port):
    import uvicorn
    from .service.app import app
    uvicorn.run(app, host=host, port=port)


if __name__ == "__main__":
    main()
