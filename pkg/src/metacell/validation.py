"""Input validation helpers for the estimator-facing API."""

from __future__ import annotations

import numpy as np


class NotFittedError(ValueError):
    """Estimator used before fit()."""


def check_array(X, width, name="X"):
    """Coerce to a finite 2-D float array with the given column count.

    A single sample may be passed 1-D and comes back as one row.
    """
    arr = np.asarray(X, dtype=float)
    if arr.ndim == 1:
        arr = arr.reshape(1, -1)
    if arr.ndim != 2:
        raise ValueError(f"{name} must be 1-D or 2-D, got ndim={arr.ndim}")
    if arr.shape[1] != width:
        raise ValueError(f"{name} must have {width} columns, got {arr.shape[1]}")
    if arr.shape[0] == 0:
        raise ValueError(f"{name} must contain at least one row")
    if not np.isfinite(arr).all():
        raise ValueError(f"{name} contains non-finite values")
    return arr


def check_is_fitted(estimator, attribute="network_"):
    if getattr(estimator, attribute, None) is None:
        raise NotFittedError(
            f"{type(estimator).__name__} is not fitted yet; call fit() first")
