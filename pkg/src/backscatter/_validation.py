"""Input validation helpers shared by the public functions and estimators."""
import numbers

import numpy as np


def check_radii(radii, min_length=1, name="radii"):
    """Return ``radii`` as a 1-D float array of nonnegative finite entries."""
    arr = np.atleast_1d(np.asarray(radii, dtype=float))
    if arr.ndim != 1:
        raise ValueError(f"{name} must be one-dimensional, got shape {arr.shape}")
    if arr.size < min_length:
        raise ValueError(f"{name} needs at least {min_length} entries, got {arr.size}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} must be finite")
    if np.any(arr < 0):
        raise ValueError(f"{name} must be nonnegative")
    return arr


def check_shift(sigma):
    """Complex Laplace shift with strictly positive real part."""
    sigma = complex(sigma)
    if not sigma.real > 0:
        raise ValueError(f"sigma must have positive real part, got {sigma}")
    return sigma


def check_positive(value, name):
    if not isinstance(value, numbers.Real) or not np.isfinite(value) or value <= 0:
        raise ValueError(f"{name} must be a positive real, got {value!r}")
    return float(value)


def check_order(N, minimum=2, name="N"):
    if isinstance(N, bool) or not isinstance(N, numbers.Integral) or N < minimum:
        raise ValueError(f"{name} must be an integer >= {minimum}, got {N!r}")
    return int(N)


def check_cube(samples, name="samples"):
    """Validate an M x M x M array with M even and M >= 8."""
    arr = np.asarray(samples)
    if arr.ndim != 3 or len(set(arr.shape)) != 1:
        raise ValueError(f"{name} must be a cubic 3-D array, got shape {arr.shape}")
    M = arr.shape[0]
    if M % 2 or M < 8:
        raise ValueError(f"{name} needs even side length >= 8, got {M}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} has non-finite entries")
    return arr
