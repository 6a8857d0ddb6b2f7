"""
Command-line interface.

Examples
--------
$ splinefuse simulate data/lissajous --shape lissajous --seed 1
$ splinefuse run data/lissajous --output results/ --rate 100
$ splinefuse evaluate results/trajectory.csv data/lissajous/groundtruth.csv
$ splinefuse fit-orientation --scale 5
$ splinefuse gradcheck --instances 200
"""

import json
import logging
import sys
from dataclasses import replace
from pathlib import Path
from typing import Optional

import click

from . import __version__
from .analysis import evaluate_ape, render_table, run_gradcheck
from .analysis.gradcheck import SUITES, TOLERANCE
from .analysis.utils import format_metric
from .config import FusionConfig
from .core import FusionPipeline, fit_orientation
from .data import (
    OrientationSequenceConfig,
    ScenarioConfig,
    read_trajectory,
    synth_fusion_scenario,
    synth_orientation_sequence,
)
from .data.synthetic import SHAPES
from .exceptions import SplineFusionError

logger = logging.getLogger(__name__)


def _configure_logging(verbose: int) -> None:
    level = {0: logging.WARNING, 1: logging.INFO}.get(verbose, logging.DEBUG)
    logging.basicConfig(level=level, format="%(asctime)s %(name)s %(levelname)s: %(message)s")


def _load_config(path: Optional[str]) -> Optional[FusionConfig]:
    return FusionConfig.from_yaml(path) if path else None


@click.group()
@click.version_option(__version__, prog_name="splinefuse")
@click.option("-v", "--verbose", count=True, help="INFO with -v, DEBUG with -vv.")
def cli(verbose: int):
    """Continuous-time UWB/IMU fusion with cubic B-splines."""
    _configure_logging(verbose)


@cli.command("fit-orientation")
@click.option("--scale", default=1, show_default=True, type=click.IntRange(min=1),
              help="Multiply knot and measurement counts.")
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--knots", default=100, show_default=True, type=click.IntRange(min=4),
              help="Knots at scale 1.")
@click.option("--orientation-sigma", default=1e-2, show_default=True, type=float)
@click.option("--gyro-sigma", default=1e-2, show_default=True, type=float)
@click.option("--orientation-rate", default=1000.0, show_default=True, type=float,
              help="Orientation samples per second.")
@click.option("--gyro-rate", default=1000.0, show_default=True, type=float,
              help="Gyroscope samples per second.")
@click.option("--repeats", default=1, show_default=True, type=click.IntRange(min=1),
              help="Time the fit this many times.")
def fit_orientation_cmd(
    scale,
    seed,
    knots,
    orientation_sigma,
    gyro_sigma,
    orientation_rate,
    gyro_rate,
    repeats,
):
    """Batch-fit a rotation spline to synthetic orientation and gyroscope data."""
    try:
        sequence = synth_orientation_sequence(
            OrientationSequenceConfig(
                n_knots=knots,
                orientation_sigma=orientation_sigma,
                gyro_sigma=gyro_sigma,
                orientation_rate=orientation_rate,
                gyro_rate=gyro_rate,
                scale=scale,
                seed=seed,
            )
        )
        result = fit_orientation(sequence, repeats=repeats)
    except SplineFusionError as exc:
        raise click.ClickException(str(exc)) from exc

    rows = [
        ("Knots", str(sequence.truth.grid.count)),
        ("Measurements", str(len(sequence))),
        ("SO(3) RMSE [rad]", format_metric(result.rmse)),
        ("Iterations", str(result.stats.iterations)),
        ("Wall time [s]", f"{result.runtime_s:.4f}"),
    ]
    click.echo(render_table(rows))


@cli.command()
@click.argument("dataset", type=click.Path(exists=True, file_okay=False))
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False),
              help="YAML configuration; defaults to the dataset's config.yaml.")
@click.option("--output", type=click.Path(file_okay=False),
              help="Directory for trajectory.csv and report.json.")
@click.option("--rate", default=100.0, show_default=True, type=float,
              help="Trajectory export rate in Hz.")
@click.option("--downsample-imu", type=click.IntRange(min=1), help="Keep every n-th IMU sample.")
@click.option("--downsample-uwb", type=click.IntRange(min=1), help="Keep every n-th UWB sample.")
@click.option("--gate-threshold", type=float,
              help="UWB outlier gate in meters; 0 disables gating.")
@click.option("--no-calib", is_flag=True, help="Skip the calibration phase.")
@click.option("--uwb-only", is_flag=True, help="Ignore the IMU and estimate positions only.")
@click.option("--progress/--no-progress", default=False, help="Show a progress bar.")
def run(dataset, config_path, output, rate, downsample_imu, downsample_uwb, gate_threshold,
        no_calib, uwb_only, progress):
    """Sliding-window estimation over a dataset directory."""
    try:
        pipeline = FusionPipeline(_load_config(config_path), output_dir=output, progress=progress)
        pipeline.load(dataset)

        window = pipeline.config.window
        changes = {}
        if downsample_imu is not None:
            changes["imu_downsample"] = downsample_imu
        if downsample_uwb is not None:
            changes["uwb_downsample"] = downsample_uwb
        if gate_threshold is not None:
            changes["gate_threshold"] = gate_threshold if gate_threshold > 0 else None
        if no_calib:
            changes["calib_enabled"] = False
        if uwb_only:
            changes["use_imu"] = False
        if changes:
            pipeline.config = replace(pipeline.config, window=replace(window, **changes))

        result = pipeline.run(rate=rate)
    except (SplineFusionError, ValueError, OSError) as exc:
        raise click.ClickException(str(exc)) from exc

    rows = [
        ("Trajectory samples", str(len(result.trajectory))),
        ("Knots", str(result.estimator.knot_count)),
    ]
    rows += [(f"Count: {name}", str(value)) for name, value in sorted(result.counters.items())]
    if result.report is not None:
        rows += list(result.report.rows())
    click.echo(render_table(rows))

    if output and result.report is not None:
        report_path = Path(output) / "report.json"
        report_path.write_text(json.dumps(result.report.to_dict(), indent=2))
        click.echo(f"Report written to {report_path}")


@cli.command()
@click.argument("output", type=click.Path(file_okay=False))
@click.option("--shape", type=click.Choice(SHAPES), default="lissajous", show_default=True)
@click.option("--mode", type=click.Choice(["toa", "tdoa"]), default="toa", show_default=True)
@click.option("--duration", default=20.0, show_default=True, type=float, help="Seconds.")
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--outlier-rate", default=0.0, show_default=True, type=float)
@click.option("--noise-free", is_flag=True, help="Zero sensor noise and no outliers.")
@click.option("--true-calib", is_flag=True,
              help="Store the true calibration as the initial value in config.yaml.")
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False),
              help="Base configuration stored with the dataset.")
def simulate(output, shape, mode, duration, seed, outlier_rate, noise_free, true_calib,
             config_path):
    """Generate a synthetic UWB/IMU dataset directory."""
    try:
        scenario_cfg = ScenarioConfig(
            shape=shape, uwb_mode=mode, duration=duration, outlier_rate=outlier_rate, seed=seed
        )
        if noise_free:
            scenario_cfg = scenario_cfg.noise_free()
        scenario = synth_fusion_scenario(scenario_cfg)
        config = scenario.fusion_config(_load_config(config_path), initial_calibration=true_calib)
        bundle = scenario.to_bundle(output, config)
    except (SplineFusionError, ValueError, OSError) as exc:
        raise click.ClickException(str(exc)) from exc

    rows = [
        ("IMU samples", str(len(scenario.imu))),
        ("UWB samples", str(len(scenario.toa) + len(scenario.tdoa))),
        ("Anchors", str(len(scenario.anchors))),
        ("Outliers", str(int(scenario.outliers.sum()))),
    ]
    click.echo(render_table(rows))
    click.echo(f"Dataset written to {bundle.anchors.parent}")


@cli.command()
@click.option("--instances", default=200, show_default=True, type=click.IntRange(min=1))
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--tolerance", default=TOLERANCE, show_default=True, type=float)
@click.option("--suite", "suites", multiple=True, type=click.Choice(sorted(SUITES)),
              help="Run only these suites (repeatable).")
def gradcheck(instances, seed, tolerance, suites):
    """Compare analytic Jacobians with finite differences."""
    results = run_gradcheck(instances, seed, tolerance, suites or None)
    rows = [
        (r.name, r.instances, f"{r.max_error:.2e}", "ok" if r.passed else "FAIL")
        for r in results
    ]
    click.echo(render_table(rows, headers=("Suite", "Entries", "Max error", "Status")))
    failed = [r.name for r in results if not r.passed]
    if failed:
        click.echo(f"{len(failed)} suite(s) failed: {', '.join(failed)}", err=True)
        sys.exit(1)


@cli.command()
@click.argument("estimated", type=click.Path(exists=True, dir_okay=False))
@click.argument("groundtruth", type=click.Path(exists=True, dir_okay=False))
@click.option("--max-dt", default=0.05, show_default=True, type=float,
              help="Association tolerance in seconds.")
@click.option("--json", "as_json", is_flag=True, help="Print the report as JSON.")
def evaluate(estimated, groundtruth, max_dt, as_json):
    """Absolute position error between two trajectory files."""
    try:
        report = evaluate_ape(read_trajectory(estimated), read_trajectory(groundtruth), max_dt)
    except SplineFusionError as exc:
        raise click.ClickException(str(exc)) from exc
    if as_json:
        click.echo(json.dumps(report.to_dict(), indent=2))
    else:
        click.echo(render_table(report.rows()))


def main():
    cli()


if __name__ == "__main__":
    main()
