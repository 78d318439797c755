"""Small input-validation helpers shared across the package."""

import numpy as np


def check_range(name: str, value: float, lo: float, hi: float) -> float:
    """Validate a scalar against closed bounds and return it as float."""
    value = float(value)
    if not np.isfinite(value) or not (lo <= value <= hi):
        raise ValueError(f"{name} must be in [{lo}, {hi}], got {value}")
    return value


def check_positive(name: str, value: float) -> float:
    value = float(value)
    if not np.isfinite(value) or value <= 0:
        raise ValueError(f"{name} must be positive, got {value}")
    return value


def check_positive_int(name: str, value: int) -> int:
    if int(value) != value or value <= 0:
        raise ValueError(f"{name} must be a positive integer, got {value}")
    return int(value)


def check_power_of_two(name: str, value: int) -> int:
    value = check_positive_int(name, value)
    if value & (value - 1) != 0:
        raise ValueError(f"{name} must be a power of two, got {value}")
    return value


def as_sample_array(samples) -> np.ndarray:
    """Coerce to a 1-D float64 sample vector."""
    arr = np.asarray(samples, dtype=np.float64)
    if arr.ndim != 1:
        raise ValueError(f"expected a 1-D sample vector, got shape {arr.shape}")
    return arr
