"""
Custom exceptions for splinefuse package.

This module defines all custom exceptions used throughout the splinefuse package
to provide clear, informative error messages for the different ways spline
evaluation, residual construction, optimization and data handling can fail.
"""


def _with_details(message, **details):
    """Append non-empty keyword details to a message, one per line."""
    full_message = message
    for key, value in details.items():
        if value is not None:
            full_message += f"\n  {key}: {value}"
    return full_message


class SplineFusionError(Exception):
    """
    Base exception class for all splinefuse errors.

    All custom exceptions in splinefuse inherit from this base class,
    making it easy to catch all splinefuse-specific errors.

    Examples
    --------
    >>> try:
    ...     # Some splinefuse operation
    ...     pass
    ... except SplineFusionError as e:
    ...     print(f"splinefuse error occurred: {e}")
    """

    pass


class AntipodalInput(SplineFusionError):
    """
    Raised when the logarithm map is evaluated at the antipode of identity.

    The quaternion [-1, 0, 0, 0] has no principal logarithm: every rotation
    axis is equally valid.

    Parameters
    ----------
    message : str
        Description of the error
    quaternion : array-like, optional
        The offending quaternion
    """

    def __init__(self, message, quaternion=None):
        self.quaternion = quaternion
        super().__init__(_with_details(message, Quaternion=quaternion))


class OutOfRange(SplineFusionError):
    """
    Raised when a spline is evaluated outside its valid interpolation span.

    Parameters
    ----------
    message : str
        Description of the error
    t : float, optional
        Requested timestamp
    span : tuple of float, optional
        Valid ``(start, end)`` span

    Examples
    --------
    >>> raise OutOfRange("Timestamp outside spline", t=3.2, span=(0.2, 3.0))
    Traceback (most recent call last):
        ...
    splinefuse.exceptions.OutOfRange: Timestamp outside spline
      Time: 3.2
      Span: (0.2, 3.0)
    """

    def __init__(self, message, t=None, span=None):
        self.t = t
        self.span = span
        super().__init__(_with_details(message, Time=t, Span=span))


class OutOfWindow(OutOfRange):
    """Raised when a measurement is not interpolable inside the current window."""

    pass


class UnknownAnchor(SplineFusionError):
    """
    Raised when a UWB measurement references an anchor missing from the map.

    Parameters
    ----------
    message : str
        Description of the error
    anchor : str, optional
        The unknown anchor identifier
    """

    def __init__(self, message, anchor=None):
        self.anchor = anchor
        super().__init__(_with_details(message, Anchor=anchor))


class DegenerateGeometry(SplineFusionError):
    """
    Raised when the tag coincides with an anchor so the range gradient is undefined.

    Parameters
    ----------
    message : str
        Description of the error
    count : int, optional
        Number of degenerate measurements in the batch
    """

    def __init__(self, message, count=None):
        self.count = count
        super().__init__(_with_details(message, Count=count))


class NonSPDCovariance(SplineFusionError):
    """
    Raised when a noise covariance is not symmetric positive definite.

    Parameters
    ----------
    message : str
        Description of the error
    kind : str, optional
        Residual kind whose covariance failed
    """

    def __init__(self, message, kind=None):
        self.kind = kind
        super().__init__(_with_details(message, Kind=kind))


class SingularSystem(SplineFusionError):
    """
    Raised when the damped normal equations cannot be factorized.

    Parameters
    ----------
    message : str
        Description of the error
    damping : float, optional
        Damping factor in effect when factorization failed
    """

    def __init__(self, message, damping=None):
        self.damping = damping
        super().__init__(_with_details(message, Damping=damping))


class NoMeasurements(SplineFusionError):
    """Raised when a window solve is requested without any usable measurement."""

    pass


class NonMonotonicTimestamp(SplineFusionError):
    """
    Raised (or counted) when a stream delivers a timestamp older than its last one.

    Parameters
    ----------
    message : str
        Description of the error
    stream : str, optional
        Stream name ("imu", "toa", "tdoa")
    t : float, optional
        Offending timestamp
    last : float, optional
        Last accepted timestamp of the stream
    """

    def __init__(self, message, stream=None, t=None, last=None):
        self.stream = stream
        self.t = t
        self.last = last
        super().__init__(_with_details(message, Stream=stream, Time=t, Last=last))


class CalibrationUnobservable(SplineFusionError):
    """
    Raised when the calibration block of the normal equations is rank deficient.

    Parameters
    ----------
    message : str
        Description of the error
    condition : float, optional
        Condition number of the calibration Schur complement
    threshold : float, optional
        Threshold above which calibration is declared unobservable
    """

    def __init__(self, message, condition=None, threshold=None):
        self.condition = condition
        self.threshold = threshold
        super().__init__(
            _with_details(message, Condition=condition, Threshold=threshold)
        )


class SchemaError(SplineFusionError):
    """
    Raised when an input file does not follow its documented schema.

    This exception is raised when:
    - Required columns are missing from a CSV file
    - A cell cannot be parsed as a number
    - A JSON anchors file is not a mapping of id to [x, y, z]

    Parameters
    ----------
    message : str
        Description of the schema error
    file : str, optional
        File that failed validation
    line : int, optional
        1-based line number in the file (header is line 1)
    column : str, optional
        Name of the column that failed validation

    Examples
    --------
    >>> raise SchemaError("Non-numeric value", file="imu.csv", line=3, column="ax")
    Traceback (most recent call last):
        ...
    splinefuse.exceptions.SchemaError: Non-numeric value
      File: imu.csv
      Line: 3
      Column: ax
    """

    def __init__(self, message, file=None, line=None, column=None):
        self.file = file
        self.line = line
        self.column = column
        super().__init__(_with_details(message, File=file, Line=line, Column=column))


class NoOverlap(SplineFusionError):
    """Raised when two trajectories share no associable timestamps."""

    pass


class ConfigurationError(SplineFusionError):
    """
    Raised when configuration is invalid or incomplete.

    This exception is raised when:
    - Required configuration parameters are missing
    - Configuration values violate their invariants
    - Configuration file cannot be loaded

    Parameters
    ----------
    message : str
        Description of the configuration error
    parameter : str, optional
        Name of the configuration parameter
    value : str, optional
        Invalid value that was provided

    Examples
    --------
    >>> raise ConfigurationError(
    ...     "Window too short",
    ...     parameter="window_knots",
    ...     value=4
    ... )
    """

    def __init__(self, message, parameter=None, value=None):
        self.parameter = parameter
        self.value = value
        super().__init__(_with_details(message, Parameter=parameter, Value=value))


class EstimatorStateError(SplineFusionError):
    """
    Raised when an estimator operation is called in the wrong lifecycle phase.

    Parameters
    ----------
    message : str
        Description of the error
    state : str, optional
        Current estimator phase
    expected_state : str, optional
        Phase required by the operation

    Examples
    --------
    >>> raise EstimatorStateError(
    ...     "Calibration is frozen",
    ...     state="sliding",
    ...     expected_state="growing"
    ... )
    """

    def __init__(self, message, state=None, expected_state=None):
        self.state = state
        self.expected_state = expected_state
        super().__init__(
            _with_details(
                message, **{"Current state": state, "Expected state": expected_state}
            )
        )


# Convenience function for raising schema errors
def validate_required_columns(df, required_columns, dataset_name="dataset"):
    """
    Validate that required columns exist in a DataFrame.

    Parameters
    ----------
    df : pandas.DataFrame
        DataFrame to validate
    required_columns : list of str
        List of required column names
    dataset_name : str, optional
        Name of the dataset for error messages

    Raises
    ------
    SchemaError
        If any required columns are missing

    Examples
    --------
    >>> import pandas as pd
    >>> df = pd.DataFrame({'t': [0.0], 'ax': [0.0]})
    >>> validate_required_columns(df, ['t', 'ax', 'ay'], 'imu.csv')
    Traceback (most recent call last):
        ...
    splinefuse.exceptions.SchemaError: Missing required columns in imu.csv
      File: imu.csv
      Line: 1
      Column: ay
    """
    missing = [col for col in required_columns if col not in df.columns]
    if missing:
        raise SchemaError(
            f"Missing required columns in {dataset_name}",
            file=dataset_name,
            line=1,
            column=", ".join(missing),
        )
