"""Input validation helpers used throughout the package."""

from __future__ import annotations

import numpy as np

from .exceptions import UsageError


def check_vector(x, dim: int | None = None, name: str = "x") -> np.ndarray:
    """Coerce to a finite 1-d float array, optionally of a fixed length."""
    arr = np.asarray(x, dtype=float)
    if arr.ndim != 1:
        raise UsageError(f"{name} must be a 1-d vector, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise UsageError(f"{name} contains non-finite entries")
    if dim is not None and arr.shape[0] != dim:
        raise UsageError(f"{name} has dimension {arr.shape[0]}, expected {dim}")
    return arr


def check_points(x, dim: int | None = None, name: str = "x") -> tuple[np.ndarray, bool]:
    """Coerce to points of shape (n, d).

    Accepts a single point (d,) or a batch (n, d). Returns the 2-d array
    and a flag telling whether the input was a single point, so callers
    can squeeze their output back.
    """
    arr = np.asarray(x, dtype=float)
    single = arr.ndim == 1
    if single:
        arr = arr[None, :]
    if arr.ndim != 2:
        raise UsageError(f"{name} must have shape (d,) or (n, d), got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise UsageError(f"{name} contains non-finite entries")
    if dim is not None and arr.shape[1] != dim:
        raise UsageError(f"{name} has dimension {arr.shape[1]}, expected {dim}")
    return arr, single


def check_samples(x, dim: int | None = None, name: str = "samples") -> np.ndarray:
    """Coerce to a nonempty (n, d) point cloud."""
    arr = np.asarray(x, dtype=float)
    if arr.ndim != 2:
        raise UsageError(f"{name} must be a 2-d array of points, got shape {arr.shape}")
    if arr.shape[0] == 0:
        raise UsageError(f"{name} is empty")
    if not np.all(np.isfinite(arr)):
        raise UsageError(f"{name} contains non-finite entries")
    if dim is not None and arr.shape[1] != dim:
        raise UsageError(f"{name} has dimension {arr.shape[1]}, expected {dim}")
    return arr


def check_square_matrix(a, name: str = "matrix") -> np.ndarray:
    """Coerce to a finite square 2-d float array."""
    arr = np.asarray(a, dtype=float)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise UsageError(f"{name} must be square, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise UsageError(f"{name} contains non-finite entries")
    return arr
