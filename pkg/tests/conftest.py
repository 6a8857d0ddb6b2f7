"""
Pytest configuration and shared fixtures for splinefuse tests.

This module provides common fixtures and configuration for all tests.
"""

import sys
from dataclasses import replace
from pathlib import Path

import numpy as np
import pytest

# Add splinefuse to path
sys.path.insert(0, str(Path(__file__).parent.parent))

from splinefuse.analysis.gradcheck import random_anchors, random_window  # noqa: E402
from splinefuse.config import FusionConfig, SolverConfig, WindowConfig  # noqa: E402
from splinefuse.data import ScenarioConfig, synth_fusion_scenario  # noqa: E402
from splinefuse.estimator import WindowState  # noqa: E402
from splinefuse.geometry import quaternion as quat  # noqa: E402
from splinefuse.residuals import AnchorMap  # noqa: E402
from splinefuse.spline import KnotGrid  # noqa: E402


@pytest.fixture
def rng():
    """Seeded random generator."""
    return np.random.default_rng(42)


@pytest.fixture
def random_state(rng):
    """
    Random eight-knot window with a non-trivial calibration.

    Returns
    -------
    WindowState
        Knots on ``KnotGrid(0.0, 0.1, 8)``, span ``[0.2, 0.7]``.
    """
    return random_window(rng)


@pytest.fixture
def anchors(rng):
    """Six random anchors around the origin."""
    return random_anchors(rng)


@pytest.fixture
def box_anchors():
    """Eight anchors on the corners of a 10 m x 10 m x 4 m box."""
    corners = np.array(np.meshgrid([-5.0, 5.0], [-5.0, 5.0], [-2.0, 2.0])).T.reshape(-1, 3)
    return AnchorMap({f"a{i}": c for i, c in enumerate(corners)})


@pytest.fixture
def identity_state():
    """Six identity knots at the origin, ``dt = 0.1`` starting at ``t = 0``."""
    count = 6
    return WindowState(
        grid=KnotGrid(0.0, 0.1, count),
        q=quat.identity((count,)),
        p=np.zeros((count, 3)),
        b=np.zeros((count, 6)),
    )


@pytest.fixture
def fast_config():
    """Small window so estimator tests run quickly."""
    return FusionConfig(
        window=WindowConfig(knot_dt=0.1, window_knots=10, gate_threshold=None),
        solver=SolverConfig(max_iters=20),
    )


@pytest.fixture
def short_scenario():
    """
    Three-second noise-free Lissajous scenario with ToA ranging.

    Returns
    -------
    SyntheticScenario
    """
    cfg = ScenarioConfig(duration=3.0, seed=7).noise_free()
    return synth_fusion_scenario(cfg)


@pytest.fixture
def short_scenario_config(short_scenario, fast_config):
    """Configuration matched to :func:`short_scenario` starting at the true calibration."""
    config = short_scenario.fusion_config(fast_config, initial_calibration=True)
    return replace(config, window=replace(config.window, window_knots=10))


@pytest.fixture
def temp_output_dir(tmp_path):
    """
    Create a temporary directory for test outputs.

    Parameters
    ----------
    tmp_path : pathlib.Path
        Pytest's built-in temporary directory fixture

    Returns
    -------
    pathlib.Path
        Path to temporary output directory
    """
    output_dir = tmp_path / "outputs"
    output_dir.mkdir()
    return output_dir


def pytest_configure(config):
    """Configure pytest with custom markers."""
    config.addinivalue_line(
        "markers", "slow: marks tests as slow (deselect with '-m \"not slow\"')"
    )
    config.addinivalue_line(
        "markers", "integration: marks tests as integration tests"
    )
    config.addinivalue_line(
        "markers", "unit: marks tests as unit tests"
    )
