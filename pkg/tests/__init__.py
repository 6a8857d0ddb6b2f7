"""
Test suite for splinefuse package.

This module contains unit tests for the geometry, spline, residual, solver,
estimator and data layers, and integration tests of the full workflow.
"""
