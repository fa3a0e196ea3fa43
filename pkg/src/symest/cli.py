"""Command-line front end.

Usage:
    symest run --strategy adaptive --n-max 20 --trials 10000 --out results/
    symest compare --out results/
    symest snapshot --snapshot-steps 1,5,20 --out results/
    symest verify

Settings resolve as: built-in defaults, then ``--config`` JSON, then flags.
"""

from __future__ import annotations

import functools
import json
import logging
import os
import sys
from pathlib import Path

import click

from .checks import MUTATIONS, run_checks
from .harness import ExperimentConfig, fidelity_curve, simulate, snapshot_from_arrays

log = logging.getLogger("symest")

# flag name -> ExperimentConfig field
FIELDS = {
    "strategy": "strategy",
    "n_max": "n_max",
    "trials": "trials",
    "seed": "master_seed",
    "mle_grid": "mle_grid",
    "search_grid": "search_grid",
    "hyp_grid": "hyp_grid",
    "snapshot_steps": "snapshot_steps",
}


def fmt(x) -> str:
    if isinstance(x, int):
        return str(x)
    return format(float(x), ".12g")


def write_csv(path: Path, header: list[str], rows) -> None:
    lines = [",".join(header)]
    lines.extend(",".join(fmt(v) for v in row) for row in rows)
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def parse_steps(ctx, param, value):
    if value is None:
        return None
    try:
        steps = tuple(int(s) for s in value.split(",") if s.strip())
    except ValueError:
        raise click.BadParameter(f"expected comma-separated integers, got {value!r}")
    if not steps:
        raise click.BadParameter("at least one step required")
    return steps


def experiment_options(func):
    options = [
        click.option("--strategy", type=click.Choice(["random", "adaptive"]), default=None, help="Reference selection policy [adaptive]."),
        click.option("--n-max", type=int, default=None, help="Copies per trial [20]."),
        click.option("--trials", type=int, default=None, help="Monte Carlo trials [10000]."),
        click.option("--seed", type=int, default=None, help="Master seed, unsigned 64-bit [42]."),
        click.option("--mle-grid", type=int, default=None, help="Estimator grid points [1024]."),
        click.option("--search-grid", type=int, default=None, help="Adaptive candidate grid points [512]."),
        click.option("--hyp-grid", type=int, default=None, help="Grid for hypothetical estimates [256]."),
        click.option("--snapshot-steps", callback=parse_steps, default=None, help="Comma-separated steps [1,5,20]."),
        click.option("--out", "out", type=click.Path(file_okay=False), default="results", show_default=True),
        click.option("--config", "config_path", type=click.Path(dir_okay=False), default=None, help="JSON config to start from."),
    ]
    for opt in reversed(options):
        func = opt(func)

    @functools.wraps(func)
    def wrapper(out, config_path, **flags):
        config = resolve_config(config_path, flags)
        out_dir = prepare_output(out)
        return func(config, out_dir)

    return wrapper


def resolve_config(config_path, flags) -> ExperimentConfig:
    values = {}
    if config_path is not None:
        try:
            with open(config_path, encoding="utf-8") as fh:
                loaded = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise click.UsageError(f"cannot read config {config_path}: {exc}")
        if not isinstance(loaded, dict):
            raise click.UsageError("config file must hold a JSON object")
        unknown = set(loaded) - set(FIELDS.values())
        if unknown:
            raise click.UsageError(f"unknown config keys: {sorted(unknown)}")
        values.update(loaded)
    for flag, value in flags.items():
        if value is not None:
            values[FIELDS[flag]] = value
    try:
        return ExperimentConfig.from_dict(values)
    except (TypeError, ValueError) as exc:
        raise click.UsageError(str(exc))


def prepare_output(out) -> Path:
    path = Path(out)
    try:
        path.mkdir(parents=True, exist_ok=True)
        probe = path / ".write-test"
        probe.write_text("")
        probe.unlink()
    except OSError as exc:
        click.echo(f"error: output directory {path} is not writable: {exc}", err=True)
        sys.exit(2)
    return path


def write_config(config: ExperimentConfig, out: Path) -> None:
    with open(out / "config.json", "w", encoding="utf-8", newline="\n") as fh:
        json.dump(config.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")


def _write(fn):
    try:
        fn()
    except OSError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(2)


@click.group()
@click.option("-v", "--verbose", is_flag=True, help="Log progress to stderr.")
def cli(verbose):
    """Qubit estimation from symmetry measurements against reference states."""
    logging.basicConfig(level=logging.DEBUG if verbose else logging.WARNING, format="%(name)s: %(message)s")


@cli.command()
@experiment_options
def run(config: ExperimentConfig, out: Path):
    """Mean fidelity per step for one strategy -> fidelity_curve.csv."""
    curve = fidelity_curve(simulate(config))

    def emit():
        write_csv(out / "fidelity_curve.csv", ["N", "mean_fidelity", "std_error", "optimal_bound"], curve.rows())
        write_config(config, out)

    _write(emit)
    click.echo(f"wrote {out / 'fidelity_curve.csv'}")


@cli.command()
@experiment_options
def compare(config: ExperimentConfig, out: Path):
    """Adaptive vs random references on the same trial seeds -> comparison.csv."""
    ada = fidelity_curve(simulate(config.with_strategy("adaptive")))
    rnd = fidelity_curve(simulate(config.with_strategy("random")))
    rows = [
        (int(ada.n[i]), ada.mean[i], ada.std_error[i], rnd.mean[i], rnd.std_error[i], ada.optimal[i])
        for i in range(len(ada.n))
    ]

    def emit():
        write_csv(
            out / "comparison.csv",
            ["N", "adaptive_mean", "adaptive_se", "random_mean", "random_se", "optimal_bound"],
            rows,
        )
        write_config(config, out)

    _write(emit)
    click.echo(f"wrote {out / 'comparison.csv'}")


@cli.command()
@experiment_options
def snapshot(config: ExperimentConfig, out: Path):
    """Rotated-frame estimate and reference distributions at selected steps."""
    if not config.snapshot_steps:
        raise click.UsageError("no snapshot steps within n_max")
    arrays = simulate(config)

    def emit():
        for step in config.snapshot_steps:
            snap = snapshot_from_arrays(arrays, step)
            edges = snap.bin_edges
            for kind, cos, phi, counts in (
                ("estimates", snap.estimate_cos, snap.estimate_phi, snap.estimate_counts),
                ("references", snap.reference_cos, snap.reference_phi, snap.reference_counts),
            ):
                write_csv(out / f"{kind}_N{step}.csv", ["cos_theta_rot", "phi_rot"], zip(cos, phi))
                write_csv(
                    out / f"hist_{kind}_N{step}.csv",
                    ["bin_left", "bin_right", "count"],
                    ((edges[i], edges[i + 1], int(counts[i])) for i in range(len(counts))),
                )
        write_config(config, out)

    _write(emit)
    click.echo(f"wrote snapshots for steps {list(config.snapshot_steps)} to {out}")


@cli.command()
@click.option(
    "--mutate",
    type=click.Choice(MUTATIONS),
    default=None,
    help="Deliberately break a code path to confirm the checks catch it.",
)
def verify(mutate):
    """Run the oracle checks; exit 1 if any fails."""
    results = run_checks(mutate)
    width = max(len(r.name) for r in results)
    for r in results:
        click.echo(f"{'PASS' if r.passed else 'FAIL'}  {r.name:<{width}}  {r.detail}  ({r.seconds:.1f}s)")
    failed = sum(not r.passed for r in results)
    click.echo(f"{len(results) - failed}/{len(results)} checks passed")
    sys.exit(1 if failed else 0)


def main(argv=None):
    cli.main(args=argv, prog_name="symest")


if __name__ == "__main__":
    main()
