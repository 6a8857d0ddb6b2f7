"""
Integration tests for splinefuse full workflow.

Tests end-to-end estimation on synthetic scenarios: noise-free recovery,
sliding-window against batch consistency, calibration, outlier robustness,
dataset pipelines and batch orientation fitting.
"""

from dataclasses import replace

import numpy as np
import pytest

from splinefuse.core import (
    FusionPipeline,
    batch_fit,
    evaluate_groundtruth,
    fit_orientation,
    run_estimator,
)
from splinefuse.data import (
    OrientationSequenceConfig,
    ScenarioConfig,
    synth_fusion_scenario,
    synth_orientation_sequence,
)
from splinefuse.estimator import sample_arrays
from splinefuse.geometry import quaternion as quat
from splinefuse.geometry.sphere import angle_between
from splinefuse.residuals import Calibration

pytestmark = pytest.mark.integration


def _with_window(config, **changes):
    return replace(config, window=replace(config.window, **changes))


class TestNoiseFreeRecovery:
    """Test the estimator reproduces noise-free ground truth."""

    def test_toa(self, short_scenario, short_scenario_config):
        """Test ToA ranging with IMU recovers position and orientation."""
        estimator = run_estimator(
            short_scenario.measurements(), short_scenario.anchors, short_scenario_config
        )
        report = evaluate_groundtruth(estimator, short_scenario.groundtruth)
        assert report.n_samples > 500
        assert report.ape_rmse < 1e-4
        assert report.orientation_rmse < 1e-4
        assert estimator.counters["rejected"] == 0

    def test_tdoa(self, fast_config):
        """Test TDoA ranging with IMU recovers position."""
        scenario = synth_fusion_scenario(
            ScenarioConfig(duration=3.0, uwb_mode="tdoa", seed=7).noise_free()
        )
        config = _with_window(
            scenario.fusion_config(fast_config, initial_calibration=True), window_knots=10
        )
        estimator = run_estimator(scenario.measurements(), scenario.anchors, config)
        report = evaluate_groundtruth(estimator, scenario.groundtruth)
        assert report.ape_rmse < 1e-4

    def test_uwb_only(self, short_scenario, short_scenario_config):
        """Test ranging alone recovers the position spline."""
        config = _with_window(short_scenario_config, use_imu=False)
        estimator = run_estimator(short_scenario.measurements(), short_scenario.anchors, config)
        assert estimator.counters["ignored_imu"] == len(short_scenario.imu)
        report = evaluate_groundtruth(estimator, short_scenario.groundtruth)
        assert report.ape_rmse < 1e-4

    def test_uwb_only_away_from_origin(self, fast_config):
        """Test a trajectory that starts away from the origin is tracked exactly."""
        scenario = synth_fusion_scenario(
            ScenarioConfig(duration=3.0, start_offset=(1.0, -0.5, 0.3), seed=7).noise_free()
        )
        config = _with_window(
            scenario.fusion_config(fast_config, initial_calibration=True),
            window_knots=10,
            use_imu=False,
        )
        estimator = run_estimator(scenario.measurements(), scenario.anchors, config)
        report = evaluate_groundtruth(estimator, scenario.groundtruth)
        assert report.ape_rmse < 1e-4

    def test_identity_scenario_is_stationary(self, fast_config):
        """Test a resting tag with identity calibration stays at identity."""
        scenario = synth_fusion_scenario(
            ScenarioConfig(
                shape="static",
                duration=2.0,
                yaw_WU_deg=0.0,
                t_WU=(0.0, 0.0, 0.0),
                gravity_tilt_deg=0.0,
                bias_accel=(0.0, 0.0, 0.0),
                bias_gyro=(0.0, 0.0, 0.0),
            ).noise_free()
        )
        config = _with_window(scenario.fusion_config(fast_config), window_knots=10)
        estimator = run_estimator(scenario.measurements(), scenario.anchors, config)
        calib = estimator.calib
        assert quat.geodesic_angle(calib.q_WU, quat.identity()) < 1e-6
        np.testing.assert_allclose(calib.t_WU, 0.0, atol=1e-6)
        np.testing.assert_allclose(calib.g_dir, [0.0, 0.0, 1.0], atol=1e-6)
        np.testing.assert_allclose(estimator.snapshot().p, 0.0, atol=1e-6)


@pytest.mark.slow
class TestSlidingWindowConsistency:
    """Test sliding-window estimates agree with one batch solve."""

    def test_matches_batch(self, short_scenario, short_scenario_config):
        """Test exported positions match the batch fit over the whole run."""
        estimator = run_estimator(
            short_scenario.measurements(), short_scenario.anchors, short_scenario_config
        )
        batch_config = replace(
            short_scenario_config,
            solver=replace(short_scenario_config.solver, max_iters=100),
        )
        batch, stats = batch_fit(
            short_scenario.measurement_set(),
            batch_config,
            0.0,
            short_scenario.config.duration,
            calibration=short_scenario.calibration,
        )
        assert stats.final_cost < stats.initial_cost

        times = estimator.sample_times(20.0)
        sliding = estimator.sample(times)["p"]
        batched = sample_arrays(batch, times)["p"]
        truth = sample_arrays(short_scenario.truth, times)["p"]
        np.testing.assert_allclose(sliding, batched, atol=1e-4)
        np.testing.assert_allclose(batched, truth, atol=1e-4)

    def test_noise_free_batch_is_exact(self, short_scenario, short_scenario_config):
        """Test one batch solve from identity knots reproduces noise-free truth."""
        config = replace(
            short_scenario_config,
            solver=replace(short_scenario_config.solver, max_iters=100),
        )
        duration = short_scenario.config.duration
        batch, stats = batch_fit(
            short_scenario.measurement_set(),
            config,
            0.0,
            duration,
            calibration=short_scenario.calibration,
        )
        assert stats.converged
        times = np.linspace(0.0, duration, 61)
        truth = sample_arrays(short_scenario.truth, times)["p"]
        error = sample_arrays(batch, times)["p"] - truth
        assert np.sqrt(np.mean(np.sum(error**2, axis=1))) <= 1e-6


@pytest.mark.slow
class TestCalibration:
    """Test online calibration during the growing phase."""

    def test_recovers_extrinsic_and_gravity(self, fast_config):
        """Test a perturbed initial calibration converges to the truth."""
        scenario = synth_fusion_scenario(ScenarioConfig(duration=6.0, seed=3).noise_free())
        truth = scenario.calibration
        initial = Calibration(
            q_WU=quat.plus(truth.q_WU, np.array([0.0, 0.0, np.deg2rad(2.5)])),
            t_WU=truth.t_WU + np.array([0.2, -0.2, 0.1]),
            g_dir=quat.rotate(
                quat.from_axis_angle(np.array([1.0, 0.0, 0.0]), np.deg2rad(3.0)), truth.g_dir
            ),
            g_mag=truth.g_mag,
        )
        config = _with_window(scenario.fusion_config(fast_config), window_knots=40)
        estimator = run_estimator(scenario.measurements(), scenario.anchors, config, initial)

        calib = estimator.calib
        assert np.linalg.norm(calib.t_WU - truth.t_WU) < 0.05
        assert np.rad2deg(quat.geodesic_angle(calib.q_WU, truth.q_WU)) < 1.0
        assert np.rad2deg(angle_between(calib.g_dir, truth.g_dir)) < 0.5
        assert estimator.phase.value == "sliding"

    def test_world_frame_follows_first_knot(self, fast_config):
        """Test the extrinsic is estimated in the frame of a first knot off the origin."""
        offset = np.array([1.0, -0.5, 0.3])
        scenario = synth_fusion_scenario(
            ScenarioConfig(duration=6.0, start_offset=tuple(offset), seed=3).noise_free()
        )
        truth = scenario.calibration
        config = _with_window(
            scenario.fusion_config(fast_config, initial_calibration=True), window_knots=40
        )
        estimator = run_estimator(scenario.measurements(), scenario.anchors, config)

        calib = estimator.calib
        np.testing.assert_allclose(calib.t_WU, truth.to_uwb(offset), atol=0.05)
        assert np.rad2deg(quat.geodesic_angle(calib.q_WU, truth.q_WU)) < 1.0
        np.testing.assert_allclose(estimator.snapshot().p[0], 0.0, atol=1e-6)


@pytest.mark.slow
class TestOutlierRobustness:
    """Test gating keeps UWB outliers from degrading the estimate."""

    def _ape(self, fast_config, outlier_rate):
        scenario = synth_fusion_scenario(
            ScenarioConfig(duration=8.0, sigma_uwb=0.1, outlier_rate=outlier_rate, seed=5)
        )
        config = _with_window(
            scenario.fusion_config(fast_config, initial_calibration=True),
            window_knots=30,
            gate_threshold=0.5,
        )
        estimator = run_estimator(scenario.measurements(), scenario.anchors, config)
        return evaluate_groundtruth(estimator, scenario.groundtruth).ape_rmse, estimator

    def test_gated_outliers(self, fast_config):
        """Test five percent outliers stay within three times the clean error."""
        clean, _ = self._ape(fast_config, 0.0)
        corrupted, estimator = self._ape(fast_config, 0.05)
        assert clean < 0.15
        assert corrupted < 3.0 * clean
        assert estimator.counters["rejected"] > 0


class TestPipeline:
    """Test FusionPipeline on a dataset directory."""

    def test_run_on_bundle(self, short_scenario, short_scenario_config, temp_output_dir):
        """Test a written scenario runs end to end."""
        data_dir = temp_output_dir / "dataset"
        short_scenario.to_bundle(data_dir, short_scenario_config)

        result = FusionPipeline(output_dir=temp_output_dir / "results").load(data_dir).run(
            rate=50.0
        )
        assert result.validation["passed"]
        assert (temp_output_dir / "results" / "trajectory.csv").exists()
        assert len(result.trajectory) == len(result.estimator.sample_times(50.0))
        assert result.report.ape_rmse < 1e-4
        assert result.report.solver["steps"] > 0
        assert result.counters["toa"] == len(short_scenario.toa)

    def test_run_requires_load(self):
        """Test running before loading raises RuntimeError."""
        with pytest.raises(RuntimeError):
            FusionPipeline().run()


class TestOrientationFitting:
    """Test batch orientation spline fitting."""

    @pytest.mark.parametrize("seed", [0, 1, 2, 3])
    def test_noisy_sequence(self, seed):
        """Test the fit stays below a milliradian on noisy data."""
        sequence = synth_orientation_sequence(OrientationSequenceConfig(n_knots=100, seed=seed))
        result = fit_orientation(sequence)
        assert result.rmse <= 1e-3
        assert result.stats.final_cost < result.stats.initial_cost

    def test_noise_free_sequence(self):
        """Test exact samples give an exact fit."""
        sequence = synth_orientation_sequence(
            OrientationSequenceConfig(n_knots=100, orientation_sigma=0.0, gyro_sigma=0.0)
        )
        assert fit_orientation(sequence).rmse <= 1e-8

    def test_repeats_are_timed(self):
        """Test every repeat is timed."""
        sequence = synth_orientation_sequence(OrientationSequenceConfig(n_knots=20))
        result = fit_orientation(sequence, repeats=3)
        assert len(result.runtimes_s) == 3
        assert result.runtime_s == pytest.approx(np.mean(result.runtimes_s))
