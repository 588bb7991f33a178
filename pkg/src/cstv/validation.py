"""Input validation helpers shared across operators, denoiser and solvers."""

from __future__ import annotations

import numpy as np


def is_power_of_two(n: int) -> bool:
    return n > 0 and (n & (n - 1)) == 0


def check_power_of_two(n: int, name: str = "n") -> int:
    n = int(n)
    if not is_power_of_two(n):
        raise ValueError(f"{name} must be a positive power of two, got {n}")
    return n


def as_float_array(x, name: str = "x") -> np.ndarray:
    """Coerce to a C-contiguous float64 ndarray, rejecting non-finite input."""
    arr = np.ascontiguousarray(x, dtype=np.float64)
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} must contain only finite values")
    return arr


def check_signal(x, domain_shape: tuple[int, ...], name: str = "x") -> np.ndarray:
    """Validate a signal against an operator's domain.

    Accepts either the grid-shaped array or its flattened form and always
    returns the grid-shaped float64 view.
    """
    arr = as_float_array(x, name)
    n = int(np.prod(domain_shape))
    if arr.shape == tuple(domain_shape):
        return arr
    if arr.ndim == 1 and arr.size == n:
        return arr.reshape(domain_shape)
    raise ValueError(
        f"{name} has shape {arr.shape}, expected {tuple(domain_shape)} "
        f"or a flat vector of length {n}"
    )


def check_measurement(y, n_rows: int, name: str = "y") -> np.ndarray:
    arr = as_float_array(y, name)
    if arr.size != n_rows:
        raise ValueError(f"{name} has {arr.size} entries, operator produces {n_rows}")
    return arr.reshape(-1)
