"""Compensated summation helpers.

Every reduction in the package goes through these so results do not depend
on evaluation order and constant series give exactly zero dispersion.
"""

import math

import numpy as np


def fsum(x: np.ndarray) -> float:
    return math.fsum(np.asarray(x, dtype=float).ravel().tolist())


def fmean(x: np.ndarray) -> float:
    """Correctly rounded mean with one refinement pass.

    The refinement makes the mean of a constant series equal to that constant
    bit for bit, so its deviations vanish exactly.
    """
    x = np.asarray(x, dtype=float)
    n = x.size
    m = fsum(x) / n
    return m + fsum(x - m) / n


def fcov(x: np.ndarray, y: np.ndarray, mx: float | None = None, my: float | None = None) -> float:
    """Population (1/N) covariance of two equally long series."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if mx is None:
        mx = fmean(x)
    if my is None:
        my = fmean(y)
    return fsum((x - mx) * (y - my)) / x.size


def rel_close(a: float, b: float, rtol: float, atol: float = 0.0) -> bool:
    return abs(a - b) <= max(rtol * max(abs(a), abs(b)), atol)
