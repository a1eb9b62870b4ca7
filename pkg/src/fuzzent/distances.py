"""Pointwise and aggregate dissimilarities used by objectives and assignments."""
from __future__ import annotations

from enum import Enum

import numpy as np

from .exceptions import DimensionMismatch, LengthMismatch


class PointwiseKind(Enum):
    SQUARED_DIFF = "squared"
    ABS_DIFF = "abs"


def pointwise_array(kind: PointwiseKind, diff: np.ndarray) -> np.ndarray:
    """Elementwise ``diff**2`` or ``|diff|``; the kernel behind all weighted sums."""
    if kind is PointwiseKind.SQUARED_DIFF:
        return np.square(diff)
    return np.abs(diff)


def pointwise(kind: PointwiseKind, x: float, g: float) -> float:
    return float(pointwise_array(kind, np.float64(x) - np.float64(g)))


def weighted_distance(kind: PointwiseKind, x, g, v) -> float:
    """``sum_j v_j * d(x_j, g_j)`` with per-feature relevance weights."""
    x = np.asarray(x, dtype=np.float64)
    g = np.asarray(g, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if not (x.shape == g.shape == v.shape) or x.ndim != 1:
        raise LengthMismatch(f"x, g, v must be 1-D of equal length, got {x.shape}, {g.shape}, {v.shape}")
    return float(np.sum(pointwise_array(kind, x - g) * v))


def mahalanobis(x, g, m) -> float:
    """Quadratic form ``(x-g)^T M (x-g)``; nonnegative for SPD ``m``."""
    x = np.asarray(x, dtype=np.float64)
    g = np.asarray(g, dtype=np.float64)
    m = np.asarray(m, dtype=np.float64)
    if x.shape != g.shape or x.ndim != 1 or m.shape != (x.size, x.size):
        raise DimensionMismatch(
            f"incompatible shapes: x {x.shape}, g {g.shape}, m {m.shape}"
        )
    diff = x - g
    return max(0.0, float(diff @ m @ diff))
