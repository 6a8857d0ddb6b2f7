"""
Utility functions for formatting results.
"""

from typing import Iterable, Optional, Sequence

import numpy as np
from tabulate import tabulate


def format_mean_sd(
    mean: float, sd: float, mean_digits: int = 1, sd_digits: int = 2
) -> str:
    """
    Format mean and standard deviation for reporting.

    Parameters
    ----------
    mean : float
        Mean value
    sd : float
        Standard deviation
    mean_digits : int, default 1
        Number of decimal places for mean
    sd_digits : int, default 2
        Number of decimal places for standard deviation

    Returns
    -------
    str
        Formatted string "mean (sd)"

    Examples
    --------
    >>> format_mean_sd(42.31, 1.9)
    '42.3 (1.90)'
    """
    if np.isnan(mean) or np.isnan(sd):
        return "N/A"

    mean_str = f"{mean:.{mean_digits}f}"
    sd_str = f"{sd:.{sd_digits}f}"

    return f"{mean_str} ({sd_str})"


def format_metric(value: Optional[float], digits: int = 4) -> str:
    """
    Format an error metric, switching to scientific notation for small values.

    Examples
    --------
    >>> format_metric(0.09412)
    '0.0941'
    >>> format_metric(2.21e-4)
    '2.2100e-04'
    """
    if value is None or np.isnan(value):
        return "N/A"
    if value != 0 and abs(value) < 10 ** (-digits + 1):
        return f"{value:.{digits}e}"
    return f"{value:.{digits}f}"


def render_table(
    rows: Iterable[Sequence], headers: Sequence[str] = ("Metric", "Value")
) -> str:
    """Plain-text table for terminal output."""
    return tabulate(list(rows), headers=list(headers), tablefmt="simple")
