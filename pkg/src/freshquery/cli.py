"""Command-line driver: `freshquery run|compare|policy`."""

import logging
import os
import sys

import click

from .config import load_config, presets
from .ctmc import validate_generator
from .errors import ConfigParseError, FreshqueryError, MissingColumnError
from .experiments import compare_policies, read_dataset, run_experiment, run_sweep_point
from .config import build_delay
from .freshness import EvalContext
from .optimize import SYNTHESIZERS


def _setup_logging():
    level = os.environ.get("FRESHQUERY_LOG", "warning").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING), format="%(levelname)s %(message)s")


@click.group()
def main():
    """Optimal query-waiting policies and mean binary freshness for CTMC monitoring."""
    _setup_logging()


@main.command()
@click.argument("source")
@click.option("--no-sim", is_flag=True, help="Skip Monte Carlo validation columns.")
@click.option("--seed", type=int, default=None, help="Override the base simulation seed.")
@click.option("--workers", type=int, default=1, help="Concurrent sweep-point workers.")
@click.option("--out", type=click.Path(), default=None, help="CSV output path (default: stdout).")
@click.option("--d1-values", default=None, help="Comma-separated override of the sweep values.")
def run(source, no_sim, seed, workers, out, d1_values):
    """Run an experiment preset (exp1/exp2/exp3) or a TOML config file."""
    try:
        cfg = load_config(source)
        if seed is not None:
            cfg.sim.seed = seed
        if d1_values is not None:
            cfg.sweep_values = [float(v) for v in d1_values.split(",")]
        cfg.validate()
    except ConfigParseError as exc:
        click.echo(f"config error: {exc}", err=True)
        sys.exit(2)
    try:
        text = run_experiment(cfg, run_sim=not no_sim, workers=workers, out_path=out)
    except FreshqueryError as exc:
        click.echo(f"numerical failure: {exc}", err=True)
        sys.exit(3)
    if out:
        click.echo(f"wrote {out}")
    else:
        click.echo(text, nl=False)


@main.command()
@click.argument("dataset", type=click.Path(exists=True))
def compare(dataset):
    """Rank policies per sweep value and flag containment violations."""
    try:
        rows = read_dataset(dataset)
        lines, violations = compare_policies(rows)
    except MissingColumnError as exc:
        click.echo(f"dataset error: {exc}", err=True)
        sys.exit(2)
    for line in lines:
        click.echo(line)
    if violations:
        click.echo("violations:", err=True)
        for v in violations:
            click.echo(f"  {v}", err=True)
        sys.exit(1)
    click.echo("no containment violations")


@main.command()
@click.argument("source")
@click.option("--d1", type=float, required=True, help="Sweep-parameter value to synthesize at.")
@click.option("--policy", "policy_name", required=True, type=click.Choice(sorted(SYNTHESIZERS)))
def policy(source, d1, policy_name):
    """Print the synthesized wait table for one policy at one sweep value."""
    try:
        cfg = load_config(source)
    except ConfigParseError as exc:
        click.echo(f"config error: {exc}", err=True)
        sys.exit(2)
    g = validate_generator(cfg.generator_rows)
    y = build_delay(cfg.forward_delay, cfg.sweep_parameter, d1)
    d = build_delay(cfg.backward_delay, cfg.sweep_parameter, d1)
    ctx = EvalContext(g, cfg.estimator, y, d)
    result = SYNTHESIZERS[policy_name](ctx, w_max=cfg.w_max)
    click.echo(f"policy={policy_name} mbf={result.report.mbf:.9g}")
    for part in result.policy.summary().split(";"):
        click.echo(f"  {part}")


if __name__ == "__main__":
    main()
