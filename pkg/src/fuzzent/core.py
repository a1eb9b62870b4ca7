"""Domain types shared by every module.

All types are immutable after construction: arrays are copied in and marked
read-only, so values can be shared freely across threads.  Every constructor
validates its invariants and raises :class:`ValidationError` on violation.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Union

import numpy as np

from .exceptions import ValidationError

ROW_SUM_TOL = 1e-9
SYMMETRY_TOL = 1e-9
DET_ONE_TOL = 1e-6
PRODUCT_ONE_TOL = 1e-6


def _frozen_f64(value, name: str, ndim: int) -> np.ndarray:
    arr = np.array(value, dtype=np.float64, copy=True)
    if arr.ndim != ndim:
        raise ValidationError(f"{name} must be {ndim}-dimensional, got shape {arr.shape}")
    arr.setflags(write=False)
    return arr


class Variant(str, Enum):
    """The twelve supported clustering algorithms."""

    FCM_ER_L2 = "fcm-er-l2"
    FCM_ER_L1 = "fcm-er-l1"
    AFCM_ER_M = "afcm-er-m"
    AFCM_ER_MK = "afcm-er-mk"
    AFCM_ER_GS_L2 = "afcm-er-gs-l2"
    AFCM_ER_GS_L1 = "afcm-er-gs-l1"
    AFCM_ER_GP_L2 = "afcm-er-gp-l2"
    AFCM_ER_GP_L1 = "afcm-er-gp-l1"
    AFCM_ER_LS_L2 = "afcm-er-ls-l2"
    AFCM_ER_LS_L1 = "afcm-er-ls-l1"
    AFCM_ER_LP_L2 = "afcm-er-lp-l2"
    AFCM_ER_LP_L1 = "afcm-er-lp-l1"

    @classmethod
    def parse(cls, name: str) -> "Variant":
        try:
            return cls(name.strip().lower())
        except ValueError:
            known = ", ".join(v.value for v in cls)
            raise ValidationError(f"unknown variant {name!r}; known variants: {known}") from None

    @property
    def uses_tv(self) -> bool:
        """True for the sum-constrained (GS/LS) families, which carry a T_v entropy term."""
        return "-gs-" in self.value or "-ls-" in self.value


class WeightConstraint(Enum):
    SUM_TO_ONE = "sum"
    PRODUCT_TO_ONE = "product"


@dataclass(frozen=True)
class Dataset:
    """An N x P feature matrix with optional integer class labels."""

    features: np.ndarray
    labels: Optional[np.ndarray] = None
    feature_names: Optional[tuple[str, ...]] = None

    def __post_init__(self):
        feats = _frozen_f64(self.features, "features", 2)
        if not np.all(np.isfinite(feats)):
            raise ValidationError("features must be finite (no NaN/Inf)")
        n, p = feats.shape
        if n < 2:
            raise ValidationError(f"need at least 2 objects, got {n}")
        if p < 1:
            raise ValidationError(f"need at least 1 feature, got {p}")
        object.__setattr__(self, "features", feats)

        if self.labels is not None:
            labels = np.array(self.labels, dtype=np.int64, copy=True)
            if labels.shape != (n,):
                raise ValidationError(f"labels must have shape ({n},), got {labels.shape}")
            if labels.min() < 0:
                raise ValidationError("labels must be nonnegative class ids")
            labels.setflags(write=False)
            object.__setattr__(self, "labels", labels)

        if self.feature_names is not None:
            names = tuple(str(s) for s in self.feature_names)
            if len(names) != p:
                raise ValidationError(f"expected {p} feature names, got {len(names)}")
            object.__setattr__(self, "feature_names", names)

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def p(self) -> int:
        return self.features.shape[1]

    @property
    def n_classes(self) -> int:
        if self.labels is None:
            raise ValidationError("dataset has no labels")
        return int(self.labels.max()) + 1


@dataclass(frozen=True)
class FuzzyPartition:
    """N x C membership matrix; each row lies on the probability simplex."""

    u: np.ndarray

    def __post_init__(self):
        u = _frozen_f64(self.u, "u", 2)
        if not np.all(np.isfinite(u)):
            raise ValidationError("membership degrees must be finite")
        if u.min() < 0.0 or u.max() > 1.0:
            raise ValidationError("membership degrees must lie in [0, 1]")
        row_sums = u.sum(axis=1)
        worst = np.max(np.abs(row_sums - 1.0))
        if worst > ROW_SUM_TOL:
            raise ValidationError(f"membership rows must sum to 1 (worst deviation {worst:.3e})")
        object.__setattr__(self, "u", u)

    @property
    def n(self) -> int:
        return self.u.shape[0]

    @property
    def c(self) -> int:
        return self.u.shape[1]


@dataclass(frozen=True)
class PrototypeSet:
    """C x P matrix of cluster representatives."""

    g: np.ndarray

    def __post_init__(self):
        g = _frozen_f64(self.g, "g", 2)
        if not np.all(np.isfinite(g)):
            raise ValidationError("prototypes must be finite")
        object.__setattr__(self, "g", g)

    @property
    def c(self) -> int:
        return self.g.shape[0]

    @property
    def p(self) -> int:
        return self.g.shape[1]


def _check_spd_unit_det(m: np.ndarray, name: str) -> None:
    if np.max(np.abs(m - m.T)) > SYMMETRY_TOL:
        raise ValidationError(f"{name} must be symmetric within {SYMMETRY_TOL:g}")
    eigvals = np.linalg.eigvalsh(m)
    if eigvals.min() <= 0.0:
        raise ValidationError(f"{name} must be positive definite (min eigenvalue {eigvals.min():.3e})")
    det = float(np.prod(eigvals)) if m.shape[0] < 64 else float(np.exp(np.sum(np.log(eigvals))))
    if abs(det - 1.0) > DET_ONE_TOL:
        raise ValidationError(f"{name} must have determinant 1 within {DET_ONE_TOL:g}, got {det!r}")


def _check_weight_vector(v: np.ndarray, constraint: WeightConstraint, name: str) -> None:
    if constraint is WeightConstraint.SUM_TO_ONE:
        if v.min() < 0.0 or v.max() > 1.0:
            raise ValidationError(f"{name} entries must lie in [0, 1] under the sum constraint")
        if abs(v.sum() - 1.0) > ROW_SUM_TOL:
            raise ValidationError(f"{name} must sum to 1 within {ROW_SUM_TOL:g}")
    else:
        if v.min() <= 0.0:
            raise ValidationError(f"{name} entries must be positive under the product constraint")
        prod = float(np.exp(np.sum(np.log(v))))
        if abs(prod - 1.0) > PRODUCT_ONE_TOL:
            raise ValidationError(f"{name} must have product 1 within {PRODUCT_ONE_TOL:g}, got {prod!r}")


@dataclass(frozen=True)
class NoMetric:
    """Placeholder metric for the non-adaptive FCM-ER variants."""


@dataclass(frozen=True)
class GlobalCov:
    """One P x P unit-determinant SPD matrix shared by all clusters."""

    m: np.ndarray

    def __post_init__(self):
        m = _frozen_f64(self.m, "m", 2)
        if m.shape[0] != m.shape[1]:
            raise ValidationError(f"m must be square, got {m.shape}")
        _check_spd_unit_det(m, "m")
        object.__setattr__(self, "m", m)


@dataclass(frozen=True)
class LocalCov:
    """C stacked P x P unit-determinant SPD matrices, one per cluster."""

    ms: np.ndarray

    def __post_init__(self):
        ms = _frozen_f64(self.ms, "ms", 3)
        if ms.shape[1] != ms.shape[2]:
            raise ValidationError(f"ms must stack square matrices, got {ms.shape}")
        for k in range(ms.shape[0]):
            _check_spd_unit_det(ms[k], f"ms[{k}]")
        object.__setattr__(self, "ms", ms)


@dataclass(frozen=True)
class GlobalWeights:
    """One positive relevance weight per feature, shared by all clusters."""

    v: np.ndarray
    constraint: WeightConstraint

    def __post_init__(self):
        v = _frozen_f64(self.v, "v", 1)
        _check_weight_vector(v, self.constraint, "v")
        object.__setattr__(self, "v", v)


@dataclass(frozen=True)
class LocalWeights:
    """A C x P matrix of relevance weights, one row per cluster."""

    vs: np.ndarray
    constraint: WeightConstraint

    def __post_init__(self):
        vs = _frozen_f64(self.vs, "vs", 2)
        for k in range(vs.shape[0]):
            _check_weight_vector(vs[k], self.constraint, f"vs[{k}]")
        object.__setattr__(self, "vs", vs)


MetricState = Union[NoMetric, GlobalCov, LocalCov, GlobalWeights, LocalWeights]

_TV_VARIANTS = frozenset(
    {Variant.AFCM_ER_GS_L2, Variant.AFCM_ER_GS_L1, Variant.AFCM_ER_LS_L2, Variant.AFCM_ER_LS_L1}
)


@dataclass(frozen=True)
class AlgorithmSpec:
    """Full configuration of one clustering run."""

    variant: Variant
    c: int
    t_u: float
    t_v: Optional[float] = None
    max_iter: int = 100
    epsilon: float = 1e-5
    seed: int = 0

    def __post_init__(self):
        variant = self.variant if isinstance(self.variant, Variant) else Variant.parse(self.variant)
        object.__setattr__(self, "variant", variant)
        if self.c < 2:
            raise ValidationError(f"cluster count must be at least 2, got {self.c}")
        if not (self.t_u > 0):
            raise ValidationError(f"t_u must be positive, got {self.t_u}")
        if variant in _TV_VARIANTS:
            if self.t_v is None or not (self.t_v > 0):
                raise ValidationError(f"variant {variant.value} requires a positive t_v")
        if self.max_iter < 1:
            raise ValidationError("max_iter must be a positive integer")
        if not (self.epsilon > 0):
            raise ValidationError("epsilon must be positive")


class Termination(Enum):
    CONVERGED = "converged"
    MAX_ITERATIONS = "max_iterations"


@dataclass(frozen=True)
class FitResult:
    """Converged state of one run plus its objective trace.

    ``rescue_steps`` holds the 0-based positions in ``objective_trace`` whose
    iteration reseeded an empty cluster; the non-increase invariant is not
    required across those steps because reseeding is not a descent move.
    """

    partition: FuzzyPartition
    prototypes: PrototypeSet
    metric: MetricState
    objective_trace: np.ndarray
    iterations: int
    termination: Termination
    rescue_steps: tuple[int, ...] = ()

    def __post_init__(self):
        trace = _frozen_f64(self.objective_trace, "objective_trace", 1)
        if not np.all(np.isfinite(trace)):
            raise ValidationError("objective trace must be finite")
        skip = set(self.rescue_steps)
        diffs = np.diff(trace)
        for t, d in enumerate(diffs, start=1):
            if t in skip:
                continue
            if d > ROW_SUM_TOL:
                raise ValidationError(
                    f"objective trace increased by {d:.3e} at step {t} (tolerance {ROW_SUM_TOL:g})"
                )
        if self.iterations != len(trace):
            raise ValidationError("iterations must equal the trace length")
        object.__setattr__(self, "objective_trace", trace)

    @property
    def final_objective(self) -> float:
        return float(self.objective_trace[-1])
