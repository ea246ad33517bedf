"""Command-line interface.

Subcommands: run, sweep, omega-star, validate, rho. Exit codes: 0 success,
2 validation failure, 3 divergence, 4 scenario parse error.
"""

from __future__ import annotations

import sys
from dataclasses import replace

import click

from . import __version__
from .averaging import find_rho
from .dynamics import vdp_damping
from .harness import EXIT_PARSE, EXIT_VALIDATION, run_scenario, validate_scenario
from .scenario import ScenarioError, load_scenario


def _common_options(fn):
    fn = click.option("--out-dir", default=None, help="Directory for output files.")(fn)
    fn = click.option("--seed", type=int, default=None, help="Override the scenario seed.")(fn)
    fn = click.option("--quiet", is_flag=True, help="Suppress progress output.")(fn)
    return fn


def _echo(quiet: bool, message: str):
    if not quiet:
        click.echo(message)


def _finish(result, quiet: bool) -> None:
    if not quiet:
        for name, path in sorted(result.files.items()):
            click.echo(f"wrote {name}: {path}")
        if result.status == EXIT_VALIDATION:
            for p in result.summary.get("results", {}).get("validation_problems", []):
                click.echo(f"validation: {p}", err=True)
        elif "error" in result.summary:
            click.echo(result.summary["error"], err=True)
    sys.exit(result.status)


@click.group()
@click.version_option(version=__version__, prog_name="oscsync")
def main():
    """Simulate and analyze synchronization in coupled planar oscillator networks."""


@main.command()
@click.argument("scenario_file", type=click.Path())
@click.option("--tidy", is_flag=True, help="Also write a long-format (t, series, value) CSV.")
@click.option("--workers", type=int, default=1, show_default=True, help="Parallel workers.")
@_common_options
def run(scenario_file, tidy, workers, out_dir, seed, quiet):
    """Execute the experiment a scenario file declares."""
    result = run_scenario(scenario_file, out_dir=out_dir, seed=seed, tidy=tidy, workers=workers)
    _finish(result, quiet)


@main.command()
@click.argument("scenario_file", type=click.Path())
@click.option(
    "--omega",
    "omegas",
    required=True,
    help="Comma-separated frequencies, e.g. 10,30,100.",
)
@click.option("--workers", type=int, default=1, show_default=True, help="Parallel workers.")
@_common_options
def sweep(scenario_file, omegas, workers, out_dir, seed, quiet):
    """Run the scenario once per frequency with identical initial conditions."""
    try:
        omega_list = tuple(float(w) for w in omegas.split(","))
    except ValueError:
        click.echo(f"--omega: could not parse {omegas!r} as floats", err=True)
        sys.exit(EXIT_PARSE)
    try:
        sc = load_scenario(scenario_file)
    except ScenarioError as exc:
        click.echo(str(exc), err=True)
        sys.exit(EXIT_PARSE)
    sc = replace(sc, experiment=replace(sc.experiment, kind="omega-sweep", omegas=omega_list))
    result = run_scenario(sc, out_dir=out_dir, seed=seed, workers=workers)
    _finish(result, quiet)


@main.command(name="omega-star")
@click.argument("scenario_file", type=click.Path())
@click.option("--Delta", "Delta", type=float, required=True, help="Initial-state norm bound.")
@click.option("--delta", "delta", type=float, required=True, help="Target residual.")
@_common_options
def omega_star(scenario_file, Delta, delta, out_dir, seed, quiet):
    """Search for a frequency past which all seeded runs settle to the target."""
    try:
        sc = load_scenario(scenario_file)
    except ScenarioError as exc:
        click.echo(str(exc), err=True)
        sys.exit(EXIT_PARSE)
    sc = replace(
        sc,
        experiment=replace(sc.experiment, kind="omega-star-search", Delta=Delta, delta=delta),
    )
    result = run_scenario(sc, out_dir=out_dir, seed=seed)
    if not quiet and result.ok:
        found = result.summary["results"].get("found")
        star = result.summary["results"].get("omega_star")
        _echo(quiet, f"omega* = {star}" if found else "omega*: not found below cap")
    _finish(result, quiet)


@main.command()
@click.argument("scenario_file", type=click.Path())
@_common_options
def validate(scenario_file, out_dir, seed, quiet):
    """Check the scenario's network against the coupling and damping axioms."""
    del out_dir, seed  # accepted for interface symmetry; validation writes nothing
    try:
        sc = load_scenario(scenario_file)
    except ScenarioError as exc:
        click.echo(str(exc), err=True)
        sys.exit(EXIT_PARSE)
    net, problems = validate_scenario(sc)
    if problems:
        for p in problems:
            click.echo(f"FAIL {p}", err=True)
        sys.exit(EXIT_VALIDATION)
    _echo(quiet, f"ok: network of {sc.network.m} oscillators passes validation")
    sys.exit(0)


@main.command()
@click.option("--damping", type=click.Choice(["vdp"]), default="vdp", show_default=True)
@click.option("--epsilon", type=float, default=1.0, show_default=True)
def rho(damping, epsilon):
    """Print the synchronization magnitude for a damping profile."""
    del damping  # only the van der Pol family is built in
    try:
        d = vdp_damping(epsilon)
    except ValueError as exc:
        click.echo(str(exc), err=True)
        sys.exit(EXIT_VALIDATION)
    click.echo(repr(find_rho(d)))


if __name__ == "__main__":
    main()
