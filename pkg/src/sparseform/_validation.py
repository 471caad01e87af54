"""Input checks shared by the estimator wrappers."""
from __future__ import annotations

import math

import numpy as np
from sklearn.utils.validation import check_array

from .dyadic import MAX_DEPTH
from .forms import ExponentConfig


def check_exponents(p0, q0, p, q) -> ExponentConfig:
    q0 = math.inf if q0 is None else q0
    return ExponentConfig(float(p0), float(q0), float(p), float(q))


def check_weight_pairs(X, depth=None) -> tuple[np.ndarray, int]:
    """Rows ``[a | b]`` of two positive leaf vectors of length ``2^L`` each.

    Returns the validated float array and ``L``.
    """
    X = check_array(X, dtype=np.float64, ensure_2d=True)
    width = X.shape[1]
    half = width // 2
    if width % 2 or half & (half - 1):
        raise ValueError(f"expected 2 * 2^L columns, got {width}")
    L = half.bit_length() - 1
    if L > MAX_DEPTH:
        raise ValueError(f"grid depth {L} exceeds {MAX_DEPTH}")
    if depth is not None and L != depth:
        raise ValueError(f"X has depth {L} but the estimator was fitted at depth {depth}")
    if np.any(X <= 0):
        raise ValueError("weights must be strictly positive")
    return X, L


def split_pair(row: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    half = row.size // 2
    return row[:half], row[half:]
