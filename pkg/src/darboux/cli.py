"""Command-line front end: ``darboux run | export | oracle | demo``."""

from __future__ import annotations

import sys
from pathlib import Path

import click

from darboux import __version__
from darboux import oracle as fd
from darboux.runner import (
    CONFIG_ERRORS,
    EXIT_CONFIG,
    EXIT_FAIL,
    EXIT_PASS,
    ConfigurationError,
    dumps,
    export_curve,
    run_scenario,
    write_tables,
)
from darboux.scenario import ScenarioError, demo_names, demo_text, load


def _config_exit(message: str):
    click.echo(f"error: {message}", err=True)
    sys.exit(EXIT_CONFIG)


def _load(ref: str):
    try:
        return load(ref)
    except ScenarioError as exc:
        _config_exit(str(exc))


@click.group()
@click.version_option(__version__, prog_name="darboux")
def main():
    """Darboux-frame invariants and invariance checks for curves on surfaces."""


@main.command()
@click.argument("scenario")
@click.option("--out", type=click.Path(dir_okay=False), help="Write the JSON report here (default: stdout).")
@click.option("--csv-dir", type=click.Path(file_okay=False), help="Write one sample table per curve.")
@click.option("--tol", type=float, help="Default tolerance for checks without their own.")
@click.option("--seed", type=int, help="Override the scenario seed.")
def run(scenario, out, csv_dir, tol, seed):
    """Run a scenario file or a built-in ``demo:<name>``."""
    sc = _load(scenario)
    if tol is not None and not tol > 0:
        _config_exit("--tol must be positive")
    try:
        outcome = run_scenario(sc, tol=tol, seed=seed)
        csv_dir = csv_dir or sc.outputs.get("csv_dir")
        if csv_dir:
            write_tables(sc, csv_dir)
    except (ConfigurationError, *CONFIG_ERRORS) as exc:
        _config_exit(str(exc))
    out = out or sc.outputs.get("report")
    if out:
        Path(out).parent.mkdir(parents=True, exist_ok=True)
        Path(out).write_text(outcome.text, encoding="utf-8")
    else:
        click.echo(outcome.text, nl=False)
    for c in outcome.report["checks"]:
        click.echo(f"{c['verdict'].upper():4} {c['label']}", err=True)
    sys.exit(outcome.exit_code)


@main.command()
@click.argument("scenario")
@click.argument("curve")
@click.argument("path", type=click.Path(dir_okay=False))
def export(scenario, curve, path):
    """Write the sample table of one curve."""
    sc = _load(scenario)
    try:
        export_curve(sc, curve, path)
    except CONFIG_ERRORS as exc:
        _config_exit(str(exc))
    except OSError as exc:
        _config_exit(f"cannot write {path}: {exc.strerror}")
    sys.exit(EXIT_PASS)


@main.command()
@click.argument("scenario")
@click.option("--fd-step", type=float, default=fd.DEFAULT_STEP, show_default=True)
@click.option("--tol", type=float, default=fd.DEFAULT_TOL, show_default=True)
@click.option("--sweep", "do_sweep", is_flag=True, help="Also report deviations for steps 1e-3, 1e-4, 1e-5.")
def oracle(scenario, fd_step, tol, do_sweep):
    """Compare jet derivatives with finite differences."""
    sc = _load(scenario)
    try:
        report = fd.run_oracle(sc, fd_step, tol)
        summary = report.summary()
        if do_sweep:
            summary["sweep"] = fd.sweep(sc)
    except (fd.OracleError, *CONFIG_ERRORS) as exc:
        _config_exit(str(exc))
    click.echo(dumps(summary), nl=False)
    sys.exit(EXIT_PASS if report.passed else EXIT_FAIL)


@main.command()
@click.option("--list", "list_", is_flag=True, help="List built-in demo scenarios.")
@click.argument("name", required=False)
def demo(list_, name):
    """List demos, or print one demo's scenario text."""
    if list_ or name is None:
        for n in demo_names():
            click.echo(n)
        return
    try:
        click.echo(demo_text(name), nl=False)
    except ScenarioError as exc:
        _config_exit(str(exc))


if __name__ == "__main__":  # pragma: no cover
    main()
