"""Numerical kernels: SPD inversion, weighted medians, stabilized exponentials.

Pure functions over numpy arrays; safe for concurrent use.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .exceptions import (
    AllZeroWeights,
    EmptyInput,
    NonFiniteScore,
    NonSymmetric,
    NotPositiveDefinite,
    ValidationError,
)

# Ridge escalation for near-singular scatter matrices: start tiny relative to
# the mean diagonal, grow x10 until Cholesky succeeds or the cap is reached.
RIDGE_START_FACTOR = 1e-10
RIDGE_CAP_FACTOR = 1e-2
# Factorizations beyond this condition estimate are treated as failures so the
# ridge escalates; keeps det(normalized inverse) accurate to well under 1e-6.
CONDITION_LIMIT = 1e8

IRLS_FLOOR = 1e-10


@dataclass(frozen=True)
class SpdResult:
    inverse: np.ndarray
    determinant: float
    log_determinant: float

    def __post_init__(self):
        if not (self.determinant > 0):
            raise ValidationError(f"determinant must be positive, got {self.determinant}")


def _try_cholesky(a: np.ndarray, ridge: float) -> SpdResult | None:
    p = a.shape[0]
    try:
        lower = np.linalg.cholesky(a + ridge * np.eye(p) if ridge else a)
    except np.linalg.LinAlgError:
        return None
    pivots = np.diag(lower)
    if (pivots.max() / pivots.min()) ** 2 > CONDITION_LIMIT:
        return None
    log_det = 2.0 * float(np.sum(np.log(pivots)))
    inv_lower = np.linalg.inv(lower)
    inverse = inv_lower.T @ inv_lower
    inverse = 0.5 * (inverse + inverse.T)
    return SpdResult(inverse=inverse, determinant=math.exp(log_det), log_determinant=log_det)


def spd_invert_det(a, ridge: float = 0.0) -> SpdResult:
    """Invert a symmetric positive definite matrix via Cholesky factorization.

    Returns the inverse and determinant of ``a + ridge*I``.  If that matrix is
    not positive definite, the ridge is escalated geometrically (x10) starting
    at ``1e-10 * trace/P`` up to ``1e-2 * trace/P`` before failing.
    """
    a = np.asarray(a, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise NonSymmetric(f"expected a square matrix, got shape {a.shape}")
    if ridge < 0:
        raise ValidationError(f"ridge must be nonnegative, got {ridge}")
    if np.max(np.abs(a - a.T)) > 1e-9:
        raise NonSymmetric("matrix is not symmetric within 1e-9")
    a = 0.5 * (a + a.T)

    result = _try_cholesky(a, ridge)
    if result is not None:
        return result

    scale = float(np.trace(a)) / a.shape[0]
    if scale > 0:
        step = RIDGE_START_FACTOR * scale
        cap = RIDGE_CAP_FACTOR * scale
        while step <= cap:
            result = _try_cholesky(a, step)
            if result is not None:
                return result
            step *= 10.0
    raise NotPositiveDefinite(
        f"matrix is not positive definite after ridge escalation (trace {np.trace(a):.3e})"
    )


def det_normalized_inverse(a) -> np.ndarray:
    """Return ``det(A)^(1/P) * A^-1``, which has unit determinant."""
    res = spd_invert_det(a)
    p = res.inverse.shape[0]
    return math.exp(res.log_determinant / p) * res.inverse


def weighted_median(values, weights, *, order: np.ndarray | None = None) -> float:
    """Return a minimizer of ``sum_i weights_i * |values_i - a|``.

    Classic cumulative-weight rule: sort by value and return the first value
    where the cumulative weight reaches half the total; when it hits half
    exactly, return the midpoint of the two adjacent values.  ``order`` may
    carry a precomputed argsort of ``values`` to skip the sort.
    """
    values = np.asarray(values, dtype=np.float64)
    weights = np.asarray(weights, dtype=np.float64)
    if values.size == 0:
        raise EmptyInput("weighted_median needs at least one value")
    if values.shape != weights.shape or values.ndim != 1:
        raise ValidationError("values and weights must be 1-D arrays of equal length")
    if weights.min() < 0:
        raise ValidationError("weights must be nonnegative")
    if order is None:
        order = np.argsort(values, kind="stable")
    sorted_vals = values[order]
    cum = np.cumsum(weights[order])
    total = cum[-1]
    if total <= 0:
        raise AllZeroWeights("weights sum to zero")
    half = 0.5 * total
    idx = int(np.searchsorted(cum, half, side="left"))
    if cum[idx] == half and idx + 1 < sorted_vals.size:
        return 0.5 * (sorted_vals[idx] + sorted_vals[idx + 1])
    return float(sorted_vals[idx])


def irls_prototype(values, memberships, g_prev: float, floor: float = IRLS_FLOOR) -> float:
    """One reweighting step of the L1 prototype.

    Weights each value by ``membership / max(|value - g_prev|, floor)`` and
    returns the weighted mean; iterated to a fixed point this converges to the
    weighted median.
    """
    values = np.asarray(values, dtype=np.float64)
    memberships = np.asarray(memberships, dtype=np.float64)
    if not (floor > 0):
        raise ValidationError(f"floor must be positive, got {floor}")
    if memberships.sum() <= 0:
        raise AllZeroWeights("memberships sum to zero")
    w = memberships / np.maximum(np.abs(values - g_prev), floor)
    return float(np.sum(w * values) / np.sum(w))


def stable_normalized_exponentials(scores, temperature: float) -> np.ndarray:
    """Normalized ``exp(-scores/temperature)`` along the last axis, overflow-safe.

    The minimum score is subtracted before exponentiation (the result is
    invariant to shifting all scores by a constant), so arbitrarily large
    score magnitudes never produce NaN.  Outputs are strictly positive and
    sum to 1 along the last axis.
    """
    scores = np.asarray(scores, dtype=np.float64)
    if not np.all(np.isfinite(scores)):
        raise NonFiniteScore("scores must be finite")
    if not (temperature > 0):
        raise ValidationError(f"temperature must be positive, got {temperature}")
    shifted = scores - scores.min(axis=-1, keepdims=True)
    p = np.exp(-shifted / temperature)
    p = np.maximum(p, np.finfo(np.float64).tiny)
    return p / p.sum(axis=-1, keepdims=True)
