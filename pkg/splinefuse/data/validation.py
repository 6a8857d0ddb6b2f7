"""
Data validation functions for sensor streams.

Each validator inspects one stream table and returns a report dict with
blocking ``issues``, non-blocking ``warnings`` and a ``passed`` flag.
"""

from typing import Any, Dict, Optional

import numpy as np
import pandas as pd

from ..residuals import AnchorMap

#: Accelerometer magnitudes above this (m/s^2) are flagged as saturated.
ACCEL_LIMIT = 16 * 9.81
#: Gyroscope magnitudes above this (rad/s) are flagged as saturated.
GYRO_LIMIT = 35.0


def _new_report(stream: str, data: pd.DataFrame) -> Dict[str, Any]:
    return {
        "stream": stream,
        "n_samples": len(data),
        "issues": [],
        "warnings": [],
        "passed": True,
    }


def _check_timing(report: Dict[str, Any], t: np.ndarray) -> None:
    if len(t) < 2:
        return
    dt = np.diff(t)
    duplicates = int(np.count_nonzero(dt == 0))
    if duplicates:
        report["warnings"].append(f"Found {duplicates} duplicate timestamps")
    positive = dt[dt > 0]
    if positive.size:
        median = float(np.median(positive))
        report["rate_hz"] = 1.0 / median
        gaps = int(np.count_nonzero(positive > 5.0 * median))
        if gaps:
            report["warnings"].append(f"Found {gaps} gaps longer than 5 sample periods")
    report["duration_s"] = float(t[-1] - t[0])


def validate_imu(data: pd.DataFrame) -> Dict[str, Any]:
    """
    Validate an IMU stream table.

    Parameters
    ----------
    data : pd.DataFrame
        Table with ``t, ax, ay, az, gx, gy, gz``.

    Returns
    -------
    dict
        Validation report with issues and summary
    """
    report = _new_report("imu", data)
    if data.empty:
        report["warnings"].append("IMU stream is empty")
        return report
    _check_timing(report, data["t"].to_numpy())

    accel = data[["ax", "ay", "az"]].to_numpy()
    gyro = data[["gx", "gy", "gz"]].to_numpy()
    if not (np.all(np.isfinite(accel)) and np.all(np.isfinite(gyro))):
        report["issues"].append("Non-finite IMU values")
        report["passed"] = False
        return report

    saturated = int(np.count_nonzero(np.linalg.norm(accel, axis=1) > ACCEL_LIMIT))
    if saturated:
        report["warnings"].append(f"{saturated} accelerometer samples above {ACCEL_LIMIT:.0f} m/s^2")
    spinning = int(np.count_nonzero(np.linalg.norm(gyro, axis=1) > GYRO_LIMIT))
    if spinning:
        report["warnings"].append(f"{spinning} gyroscope samples above {GYRO_LIMIT:.0f} rad/s")
    report["mean_accel_norm"] = float(np.linalg.norm(accel, axis=1).mean())
    return report


def validate_uwb(
    data: pd.DataFrame, anchors: AnchorMap, mode: str = "toa"
) -> Dict[str, Any]:
    """
    Validate a ToA or TDoA stream table against the anchor map.

    Unknown anchors and negative ranges fail the report; TDoA differences
    larger than the anchor baseline are only warned about.
    """
    report = _new_report(mode, data)
    if data.empty:
        report["issues"].append("UWB stream is empty")
        report["passed"] = False
        return report
    _check_timing(report, data["t"].to_numpy())

    id_columns = ["anchor"] if mode == "toa" else ["anchor_i", "anchor_j"]
    used = set()
    for col in id_columns:
        used.update(str(a) for a in data[col].unique())
    unknown = sorted(a for a in used if a not in anchors)
    if unknown:
        report["issues"].append(f"Unknown anchors: {unknown}")
        report["passed"] = False
    report["anchors_used"] = sorted(used)

    if mode == "toa":
        negative = int((data["range"] < 0).sum())
        if negative:
            report["issues"].append(f"Found {negative} negative ranges")
            report["passed"] = False
    else:
        same = int((data["anchor_i"].astype(str) == data["anchor_j"].astype(str)).sum())
        if same:
            report["issues"].append(f"Found {same} TDoA rows with identical anchors")
            report["passed"] = False
        if not unknown and not same:
            a_i = anchors.positions(data["anchor_i"].astype(str))
            a_j = anchors.positions(data["anchor_j"].astype(str))
            baseline = np.linalg.norm(a_i - a_j, axis=1)
            implausible = int(np.count_nonzero(np.abs(data["ddist"].to_numpy()) > baseline))
            if implausible:
                report["warnings"].append(
                    f"{implausible} range differences exceed the anchor baseline"
                )
    return report


def validate_dataset(dataset, strict: bool = False) -> Dict[str, Any]:
    """
    Validate every stream of a loaded dataset.

    Parameters
    ----------
    dataset : LoadedDataset
        Dataset returned by :func:`~splinefuse.data.io.load_dataset`.
    strict : bool, default False
        Treat warnings as issues.

    Returns
    -------
    dict
        Combined report with one sub-report per stream.
    """
    from .io import frame_from_measurements

    reports = {}
    if dataset.imu:
        reports["imu"] = validate_imu(frame_from_measurements("imu", dataset.imu))
    for mode in ("toa", "tdoa"):
        items = getattr(dataset, mode)
        if items:
            reports[mode] = validate_uwb(frame_from_measurements(mode, items), dataset.anchors, mode)

    summary: Dict[str, Any] = {"streams": reports, "issues": [], "warnings": [], "passed": True}
    for name, report in reports.items():
        summary["issues"].extend(f"{name}: {msg}" for msg in report["issues"])
        summary["warnings"].extend(f"{name}: {msg}" for msg in report["warnings"])
    for name, count in (dataset.reordered or {}).items():
        if count:
            summary["warnings"].append(f"{name}: {count} rows were out of order")
    if summary["issues"] or (strict and summary["warnings"]):
        summary["passed"] = False
    return summary


def groundtruth_overlap(groundtruth: Optional[pd.DataFrame], start: float, end: float) -> float:
    """Fraction of ground-truth samples inside ``[start, end]``."""
    if groundtruth is None or groundtruth.empty:
        return 0.0
    t = groundtruth["t"].to_numpy()
    return float(np.count_nonzero((t >= start) & (t <= end)) / len(t))
