"""Command line entry point."""

from __future__ import annotations

import dataclasses
import json
from typing import Optional

import click
import uvicorn

from .registry import ServerConfig, load_config
from .server import create_app


@click.group()
def main():
    """Reference model-scorer service."""


@main.command()
@click.option(
    "--config",
    "config_path",
    type=click.Path(exists=True, dir_okay=False),
    default=None,
    help="Server config JSON; omit for the built-in local backends.",
)
@click.option("--host", default=None, help="Override the configured host.")
@click.option("--port", type=int, default=None, help="Override the configured port.")
@click.option(
    "--token",
    default=None,
    help="Require this bearer token on every POST route.",
)
def serve(
    config_path: Optional[str],
    host: Optional[str],
    port: Optional[int],
    token: Optional[str],
):
    """Start the scorer service."""
    config = load_config(config_path) if config_path else ServerConfig()
    overrides = {}
    if host is not None:
        overrides["host"] = host
    if port is not None:
        overrides["port"] = port
    if token is not None:
        overrides["token"] = token
    if overrides:
        config = dataclasses.replace(config, **overrides)
    app = create_app(config)
    uvicorn.run(app, host=config.host, port=config.port)


@main.command("default-config")
def default_config():
    """Print the default configuration as JSON."""
    click.echo(json.dumps(dataclasses.asdict(ServerConfig()), indent=2))
