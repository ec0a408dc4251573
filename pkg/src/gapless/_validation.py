"""Small input-validation helpers used by the estimators."""

import numpy as np

from .exceptions import InvalidInputError


def as_float_matrix(X, name="X") -> np.ndarray:
    """Coerce to a 2-d float64 array; 1-d input becomes a single row."""
    A = np.asarray(X, dtype=np.float64)
    if A.ndim == 1:
        A = A.reshape(1, -1)
    if A.ndim != 2:
        raise InvalidInputError(f"{name} must be 1-d or 2-d, got ndim={A.ndim}")
    return A


def as_float_vector(x, name="x") -> np.ndarray:
    v = np.asarray(x, dtype=np.float64)
    if v.ndim != 1:
        raise InvalidInputError(f"{name} must be 1-d, got ndim={v.ndim}")
    return v


def check_n_features(X: np.ndarray, expected: int, name="X") -> None:
    if X.shape[-1] != expected:
        raise InvalidInputError(
            f"{name} has {X.shape[-1]} features, expected {expected}"
        )


def check_unit_interval(x: np.ndarray, name="x") -> None:
    if x.size and (np.min(x) < 0.0 or np.max(x) > 1.0):
        raise InvalidInputError(f"{name} must lie in [0, 1]")


def check_finite(x: np.ndarray, name="x") -> None:
    if not np.all(np.isfinite(x)):
        raise InvalidInputError(f"{name} contains non-finite values")
