"""Shared argument validation helpers."""

from __future__ import annotations

import numpy as np
import numpy.typing as npt

from .errors import ValidationError

FloatArray = npt.NDArray[np.float64]
ComplexArray = npt.NDArray[np.complex128]

__all__ = ["FloatArray", "ComplexArray", "as_float_array", "as_points", "as_point"]


def as_float_array(values, *, name: str = "array") -> FloatArray:
    """Coerce to a float64 array, rejecting non-finite entries."""
    arr = np.asarray(values, dtype=np.float64)
    if not np.all(np.isfinite(arr)):
        raise ValidationError(f"{name} contains non-finite entries")
    return arr


def as_points(values, *, name: str = "points") -> FloatArray:
    """Coerce to an (..., 2) array of plane points."""
    arr = as_float_array(values, name=name)
    if arr.ndim < 1 or arr.shape[-1] != 2:
        raise ValidationError(f"{name} must have trailing dimension 2, got shape {arr.shape}")
    return arr


def as_point(value, *, name: str = "point") -> FloatArray:
    """Coerce to a single (2,) plane point."""
    arr = as_points(value, name=name)
    if arr.shape != (2,):
        raise ValidationError(f"{name} must be a single 2-vector, got shape {arr.shape}")
    return arr
