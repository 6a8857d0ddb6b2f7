"""
Dataset input/output, validation and synthetic data generation.

Datasets are directories of CSV streams (IMU, UWB ToA, UWB TDoA), an
anchor JSON file and optional ground truth and YAML configuration.
"""

from .io import (
    FILE_NAMES,
    SCHEMAS,
    DatasetBundle,
    LoadedDataset,
    frame_from_measurements,
    load_dataset,
    read_anchors,
    read_measurements,
    read_table,
    read_trajectory,
    trajectory_frame,
    write_anchors,
    write_dataset,
    write_measurements,
    write_table,
    write_trajectory,
)
from .synthetic import (
    OrientationSequence,
    OrientationSequenceConfig,
    ScenarioConfig,
    SyntheticScenario,
    synth_fusion_scenario,
    synth_orientation_sequence,
)
from .validation import groundtruth_overlap, validate_dataset, validate_imu, validate_uwb

__all__ = [
    # I/O functions
    "SCHEMAS",
    "FILE_NAMES",
    "DatasetBundle",
    "LoadedDataset",
    "read_table",
    "write_table",
    "read_anchors",
    "write_anchors",
    "read_measurements",
    "write_measurements",
    "frame_from_measurements",
    "trajectory_frame",
    "read_trajectory",
    "write_trajectory",
    "load_dataset",
    "write_dataset",
    # Validation functions
    "validate_imu",
    "validate_uwb",
    "validate_dataset",
    "groundtruth_overlap",
    # Synthetic data
    "ScenarioConfig",
    "SyntheticScenario",
    "synth_fusion_scenario",
    "OrientationSequenceConfig",
    "OrientationSequence",
    "synth_orientation_sequence",
]
