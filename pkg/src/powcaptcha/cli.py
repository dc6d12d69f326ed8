"""Command-line entry points: serve the API, run the simulator."""
from __future__ import annotations

import csv
import io
import json
import logging
import sys
import tempfile
from pathlib import Path
from random import Random

import click

from . import attack_sim, demo_assets, image_bank
from .http_api import ApiConfig, create_app


@click.group()
def main() -> None:
    """PoW-gated image CAPTCHA service and attack-cost simulator."""
    logging.basicConfig(level=logging.INFO, format="%(message)s")


@main.command()
@click.option("--config", "config_path", type=click.Path(exists=True), required=True)
def serve(config_path: str) -> None:
    """Run the HTTP service from a JSON config file."""
    import uvicorn

    config = ApiConfig.from_file(config_path)
    if config.manifest_path is None:
        raise click.UsageError("config must set manifest_path (or POWCAPTCHA_MANIFEST)")
    app = create_app(config)
    uvicorn.run(app, host=config.host, port=config.port)


def _emit(report: dict, as_json: bool) -> None:
    if as_json:
        click.echo(json.dumps(report, indent=2, default=str))
        return
    for key, value in report.items():
        click.echo(f"{key:40} {value}")


@main.command()
@click.option("--bits", type=int, required=True, help="puzzle difficulty in bits")
@click.option("--captchas", type=int, required=True, help="campaign size")
@click.option("--hashrate", type=float, required=True, help="attacker hashes/second")
@click.option("--solver-price", type=float, default=None, help="price per 1000 human solves")
@click.option("--json", "as_json", is_flag=True)
@click.option("--csv", "as_csv", is_flag=True, help="emit the report as CSV")
def simulate(bits, captchas, hashrate, solver_price, as_json, as_csv) -> None:
    """Closed-form campaign cost projection."""
    spec = attack_sim.CampaignSpec(bits, captchas, hashrate, solver_price)
    report = attack_sim.simulate_campaign(spec).to_dict()
    if as_csv:
        flat = {k: v for k, v in report.items() if not isinstance(v, dict)}
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=list(flat))
        writer.writeheader()
        writer.writerow(flat)
        click.echo(buf.getvalue(), nl=False)
        return
    _emit(report, as_json)


@main.command()
@click.option("--bits", type=int, required=True)
@click.option("--n", "trials", type=int, default=200)
@click.option("--seed", type=int, default=None)
@click.option("--json", "as_json", is_flag=True)
def trials(bits, trials, seed, as_json) -> None:
    """Empirical solve-cost trials against the real solver."""
    stats = attack_sim.run_empirical_solve_trials(bits, trials, Random(seed))
    _emit(stats.__dict__, as_json)


@main.command()
@click.option("--trials", "n_trials", type=int, default=100_000)
@click.option("--knows-k", is_flag=True)
@click.option("--manifest", type=click.Path(exists=True), default=None)
@click.option("--seed", type=int, default=None)
@click.option("--json", "as_json", is_flag=True)
def guess(n_trials, knows_k, manifest, seed, as_json) -> None:
    """Random-guess pass-rate simulation over assembled challenges."""
    if manifest is None:
        tmp = tempfile.mkdtemp(prefix="powcaptcha-demo-")
        manifest = demo_assets.make_demo_catalog(Path(tmp))
    catalog = image_bank.load_catalog(manifest)
    stats = attack_sim.simulate_guesser(catalog, n_trials, knows_k, Random(seed))
    _emit(stats.__dict__, as_json)


@main.command()
@click.option("--iters", type=int, default=100_000)
@click.option("--expired", is_flag=True, help="bench the no-hash expired path")
@click.option("--json", "as_json", is_flag=True)
def bench(iters, expired, as_json) -> None:
    """Verification throughput on precomputed solutions."""
    result = attack_sim.bench_verify(iters, expired=expired)
    _emit(result.__dict__, as_json)


@main.command("make-demo-assets")
@click.option("--dest", type=click.Path(), required=True)
@click.option("--per-category", type=int, default=6)
def make_demo_assets(dest, per_category) -> None:
    """Generate a synthetic labeled catalog for demos and tests."""
    manifest = demo_assets.make_demo_catalog(Path(dest), per_category=per_category)
    click.echo(str(manifest))


if __name__ == "__main__":
    main()
