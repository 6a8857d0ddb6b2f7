#!/usr/bin/env python3
"""
Test script to verify splinefuse package installation and core functionality.

Runs under pytest or directly as ``python tests/test_package_installation.py``.
"""

import sys

import numpy as np


def test_basic_import():
    """Test basic package import."""
    import splinefuse

    assert splinefuse.__version__
    print(f"✅ splinefuse imported successfully (version: {splinefuse.__version__})")


def test_subpackage_import():
    """Test subpackage imports."""
    from splinefuse.estimator import SplineFusionEstimator  # noqa: F401
    from splinefuse.geometry import quaternion  # noqa: F401
    from splinefuse.solver import solve  # noqa: F401
    from splinefuse.spline import KnotGrid  # noqa: F401

    print("✅ Estimator, geometry, solver and spline modules imported successfully")


def test_cli_entry_point():
    """Test the console entry point is importable."""
    from splinefuse.cli import cli, main

    assert callable(main)
    assert "run" in cli.commands
    print("✅ Command-line interface imported successfully")


def test_basic_functionality():
    """Test a short estimator run on a resting tag."""
    from splinefuse import FusionConfig, SolverConfig, WindowConfig, run_estimator
    from splinefuse.data import ScenarioConfig, synth_fusion_scenario

    scenario = synth_fusion_scenario(
        ScenarioConfig(shape="static", duration=1.0, uwb_rate=20.0).noise_free()
    )
    config = scenario.fusion_config(
        FusionConfig(
            window=WindowConfig(window_knots=10, gate_threshold=None),
            solver=SolverConfig(max_iters=5),
        ),
        initial_calibration=True,
    )
    estimator = run_estimator(scenario.measurements(), scenario.anchors, config)
    assert estimator.counters["solves"] > 0
    assert np.all(np.isfinite(estimator.export_arrays(20.0)["p"]))
    print(f"✅ Estimator run works ({estimator.counters['solves']} window solves)")


def main():
    """Run all tests."""
    print("🧪 Testing splinefuse Package Installation")
    print("=" * 50)

    tests = [
        test_basic_import,
        test_subpackage_import,
        test_cli_entry_point,
        test_basic_functionality,
    ]

    passed = 0
    for test in tests:
        try:
            test()
            passed += 1
        except Exception as e:
            print(f"❌ {test.__name__} failed: {e}")
        print()

    print("=" * 50)
    print(f"📊 Test Results: {passed}/{len(tests)} tests passed")

    if passed == len(tests):
        print("🎉 All tests passed! splinefuse is ready for use.")
        return 0
    print("⚠️  Some tests failed. Please check the installation.")
    return 1


if __name__ == "__main__":
    sys.exit(main())
