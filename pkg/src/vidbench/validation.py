"""Input validation helpers for clips, feature arrays, and label vectors."""

import numpy as np

from .errors import DataError


def check_clip(clip) -> np.ndarray:
    """Validate a video clip as a T x H x W x 3 uint8 array.

    Returns a C-contiguous view (copying only if needed). Raises DataError on
    any shape or dtype violation.
    """
    arr = np.asarray(clip)
    if arr.ndim != 4:
        raise DataError(f"clip must be 4-dimensional (T,H,W,C), got shape {arr.shape}")
    t, h, w, c = arr.shape
    if c != 3:
        raise DataError(f"clip must have 3 channels, got {c}")
    if t < 1 or h < 1 or w < 1:
        raise DataError(f"clip dimensions must be positive, got shape {arr.shape}")
    if arr.dtype != np.uint8:
        raise DataError(f"clip dtype must be uint8, got {arr.dtype}")
    return np.ascontiguousarray(arr)


def check_feature_matrix(X, dim: int | None = None) -> np.ndarray:
    """Validate an (n_samples, dim) float feature matrix; returns float64."""
    arr = np.asarray(X, dtype=np.float64)
    if arr.ndim != 2:
        raise DataError(f"feature matrix must be 2-dimensional, got shape {arr.shape}")
    if arr.shape[0] < 1:
        raise DataError("feature matrix has no rows")
    if dim is not None and arr.shape[1] != dim:
        raise DataError(f"feature dimension mismatch: expected {dim}, got {arr.shape[1]}")
    if not np.isfinite(arr).all():
        raise DataError("feature matrix contains non-finite values")
    return arr


def check_token_stack(X, dim: int | None = None) -> np.ndarray:
    """Validate an (n_samples, n_tokens, dim) token feature stack; float64."""
    arr = np.asarray(X, dtype=np.float64)
    if arr.ndim != 3:
        raise DataError(f"token stack must be 3-dimensional, got shape {arr.shape}")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise DataError(f"token stack has empty sample or token axis: {arr.shape}")
    if dim is not None and arr.shape[2] != dim:
        raise DataError(f"token dimension mismatch: expected {dim}, got {arr.shape[2]}")
    if not np.isfinite(arr).all():
        raise DataError("token stack contains non-finite values")
    return arr


def check_labels(y, n_samples: int | None = None) -> np.ndarray:
    """Validate an integer label vector; returns int64."""
    arr = np.asarray(y)
    if arr.ndim != 1:
        raise DataError(f"labels must be 1-dimensional, got shape {arr.shape}")
    if not np.issubdtype(arr.dtype, np.integer):
        as_int = arr.astype(np.int64)
        if not np.array_equal(as_int, arr):
            raise DataError("labels must be integers")
        arr = as_int
    if n_samples is not None and arr.shape[0] != n_samples:
        raise DataError(f"label count {arr.shape[0]} does not match sample count {n_samples}")
    if arr.size and arr.min() < 0:
        raise DataError("labels must be non-negative")
    return arr.astype(np.int64)


def check_vector(v, dim: int | None = None, name: str = "vector") -> np.ndarray:
    arr = np.asarray(v, dtype=np.float64).reshape(-1)
    if dim is not None and arr.shape[0] != dim:
        raise DataError(f"{name} has dimension {arr.shape[0]}, expected {dim}")
    if not np.isfinite(arr).all():
        raise DataError(f"{name} contains non-finite values")
    return arr
