"""The three-step alternating optimizer behind all twelve variants.

Each iteration runs representation (prototypes), weighting (covariances or
relevance weights) and assignment (memberships); every step is the exact
minimizer of the objective over its block with the other blocks fixed, so the
objective is non-increasing along the trace.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Optional

import numpy as np

from .core import (
    AlgorithmSpec,
    Dataset,
    FitResult,
    FuzzyPartition,
    GlobalCov,
    GlobalWeights,
    LocalCov,
    LocalWeights,
    MetricState,
    NoMetric,
    PrototypeSet,
    Termination,
    Variant,
    WeightConstraint,
)
from .distances import PointwiseKind, pointwise_array
from .exceptions import (
    EmptyCluster,
    MetricMismatch,
    NonDecreasingObjective,
    ShapeMismatch,
    ValidationError,
)
from .linalg import det_normalized_inverse, stable_normalized_exponentials, weighted_median

EMPTY_MASS_FLOOR = 1e-12
ENTROPY_CLAMP = 1e-300
WEIGHT_FLOOR = 1e-10  # floor on per-feature dispersions in the product-constraint update
OBJECTIVE_RAISE_TOL = 1e-6
_SCATTER_TRACE_FLOOR = 1e-30


class MetricScope(Enum):
    NONE = "none"
    GLOBAL_COV = "global_cov"
    LOCAL_COV = "local_cov"
    GLOBAL_WEIGHTS = "global_weights"
    LOCAL_WEIGHTS = "local_weights"


@dataclass(frozen=True)
class VariantDescriptor:
    """Structural description of one variant.

    ``pointwise`` is None for the Mahalanobis (quadratic-form) variants.
    ``uses_tv`` is true exactly for the sum-constrained families, whose
    objective carries the T_v weight-entropy term.
    """

    pointwise: Optional[PointwiseKind]
    metric_scope: MetricScope
    weight_constraint: Optional[WeightConstraint]
    uses_tv: bool


_SQ = PointwiseKind.SQUARED_DIFF
_AB = PointwiseKind.ABS_DIFF
_SUM = WeightConstraint.SUM_TO_ONE
_PROD = WeightConstraint.PRODUCT_TO_ONE

DESCRIPTORS: dict[Variant, VariantDescriptor] = {
    Variant.FCM_ER_L2: VariantDescriptor(_SQ, MetricScope.NONE, None, False),
    Variant.FCM_ER_L1: VariantDescriptor(_AB, MetricScope.NONE, None, False),
    Variant.AFCM_ER_M: VariantDescriptor(None, MetricScope.GLOBAL_COV, None, False),
    Variant.AFCM_ER_MK: VariantDescriptor(None, MetricScope.LOCAL_COV, None, False),
    Variant.AFCM_ER_GS_L2: VariantDescriptor(_SQ, MetricScope.GLOBAL_WEIGHTS, _SUM, True),
    Variant.AFCM_ER_GS_L1: VariantDescriptor(_AB, MetricScope.GLOBAL_WEIGHTS, _SUM, True),
    Variant.AFCM_ER_GP_L2: VariantDescriptor(_SQ, MetricScope.GLOBAL_WEIGHTS, _PROD, False),
    Variant.AFCM_ER_GP_L1: VariantDescriptor(_AB, MetricScope.GLOBAL_WEIGHTS, _PROD, False),
    Variant.AFCM_ER_LS_L2: VariantDescriptor(_SQ, MetricScope.LOCAL_WEIGHTS, _SUM, True),
    Variant.AFCM_ER_LS_L1: VariantDescriptor(_AB, MetricScope.LOCAL_WEIGHTS, _SUM, True),
    Variant.AFCM_ER_LP_L2: VariantDescriptor(_SQ, MetricScope.LOCAL_WEIGHTS, _PROD, False),
    Variant.AFCM_ER_LP_L1: VariantDescriptor(_AB, MetricScope.LOCAL_WEIGHTS, _PROD, False),
}

_EXPECTED_METRIC_TYPE = {
    MetricScope.NONE: NoMetric,
    MetricScope.GLOBAL_COV: GlobalCov,
    MetricScope.LOCAL_COV: LocalCov,
    MetricScope.GLOBAL_WEIGHTS: GlobalWeights,
    MetricScope.LOCAL_WEIGHTS: LocalWeights,
}


def descriptor_for(variant: Variant) -> VariantDescriptor:
    return DESCRIPTORS[variant]


def _check_metric(desc: VariantDescriptor, metric: MetricState) -> None:
    expected = _EXPECTED_METRIC_TYPE[desc.metric_scope]
    if not isinstance(metric, expected):
        raise MetricMismatch(
            f"variant expects metric state {expected.__name__}, got {type(metric).__name__}"
        )
    if isinstance(metric, (GlobalWeights, LocalWeights)) and metric.constraint is not desc.weight_constraint:
        raise MetricMismatch(
            f"variant expects {desc.weight_constraint} weights, got {metric.constraint}"
        )


def _check_shapes(spec: AlgorithmSpec, data: Dataset, u: np.ndarray | None, g: np.ndarray | None) -> None:
    if u is not None and u.shape != (data.n, spec.c):
        raise ShapeMismatch(f"membership matrix must be {(data.n, spec.c)}, got {u.shape}")
    if g is not None and g.shape != (spec.c, data.p):
        raise ShapeMismatch(f"prototype matrix must be {(spec.c, data.p)}, got {g.shape}")


def _scores(desc: VariantDescriptor, x: np.ndarray, g: np.ndarray, metric: MetricState) -> np.ndarray:
    """N x C matrix of variant distances between every object and prototype."""
    diffs = x[:, None, :] - g[None, :, :]
    scope = desc.metric_scope
    if scope is MetricScope.GLOBAL_COV:
        return np.sum((diffs @ metric.m) * diffs, axis=-1)
    if scope is MetricScope.LOCAL_COV:
        return np.sum(np.einsum("ncp,cpq->ncq", diffs, metric.ms) * diffs, axis=-1)
    d = pointwise_array(desc.pointwise, diffs)
    if scope is MetricScope.GLOBAL_WEIGHTS:
        v = metric.v
    elif scope is MetricScope.LOCAL_WEIGHTS:
        v = metric.vs
    else:
        v = np.ones(x.shape[1])
    return np.sum(d * v, axis=-1)


def _entropy(a: np.ndarray) -> float:
    # 0*ln(0) evaluates to 0 thanks to the clamp (0 * ln(1e-300) == -0.0).
    return float(np.sum(a * np.log(np.maximum(a, ENTROPY_CLAMP))))


def _objective_value(
    spec: AlgorithmSpec, desc: VariantDescriptor, u: np.ndarray, scores: np.ndarray, metric: MetricState
) -> float:
    j = float(np.sum(u * scores)) + spec.t_u * _entropy(u)
    if desc.uses_tv:
        weights = metric.v if isinstance(metric, GlobalWeights) else metric.vs
        j += spec.t_v * _entropy(weights)
    return j


def objective(
    spec: AlgorithmSpec,
    data: Dataset,
    partition: FuzzyPartition,
    prototypes: PrototypeSet,
    metric: MetricState,
) -> float:
    """Evaluate the variant's objective at the given state."""
    desc = descriptor_for(spec.variant)
    _check_metric(desc, metric)
    _check_shapes(spec, data, partition.u, prototypes.g)
    scores = _scores(desc, data.features, prototypes.g, metric)
    return _objective_value(spec, desc, partition.u, scores, metric)


def _prototype_matrix(
    desc: VariantDescriptor,
    x: np.ndarray,
    u: np.ndarray,
    rng: Optional[np.random.Generator],
    column_orders: Optional[list[np.ndarray]] = None,
) -> tuple[np.ndarray, bool]:
    """Membership-weighted means (L2/Mahalanobis) or medians (L1).

    Returns the prototype matrix and whether any empty cluster was reseeded.
    """
    n, p = x.shape
    c = u.shape[1]
    mass = u.sum(axis=0)
    empty = mass < EMPTY_MASS_FLOOR
    rescued = bool(empty.any())
    if rescued and rng is None:
        raise EmptyCluster(f"clusters {np.flatnonzero(empty).tolist()} have no membership mass")

    if desc.pointwise is PointwiseKind.ABS_DIFF:
        if column_orders is None:
            column_orders = [np.argsort(x[:, j], kind="stable") for j in range(p)]
        g = np.empty((c, p))
        for k in range(c):
            if empty[k]:
                continue
            for j in range(p):
                g[k, j] = weighted_median(x[:, j], u[:, k], order=column_orders[j])
    else:
        safe_mass = np.where(empty, 1.0, mass)
        g = (u.T @ x) / safe_mass[:, None]

    for k in np.flatnonzero(empty):
        g[k] = x[rng.integers(n)]
    return g, rescued


def update_prototypes(
    spec: AlgorithmSpec,
    data: Dataset,
    partition: FuzzyPartition,
    metric: MetricState | None = None,
    *,
    rng: Optional[np.random.Generator] = None,
) -> PrototypeSet:
    """Representation step: block minimizer of the objective over prototypes.

    The minimizer does not depend on the metric state (weights and covariance
    matrices factor out coordinate-wise), so ``metric`` is accepted only for
    interface symmetry.  Raises :class:`EmptyCluster` when a cluster has no
    membership mass unless a ``rng`` is supplied to reseed it from the data.
    """
    desc = descriptor_for(spec.variant)
    _check_shapes(spec, data, partition.u, None)
    g, _ = _prototype_matrix(desc, data.features, partition.u, rng)
    return PrototypeSet(g)


def _product_constrained_weights(d: np.ndarray) -> np.ndarray:
    """``(prod_w D_w)^(1/P) / D_j`` along the last axis, with a degeneracy floor."""
    if np.all(d == 0.0):
        return np.ones_like(d)
    floored = np.maximum(d, WEIGHT_FLOOR)
    log_geo_mean = np.mean(np.log(floored), axis=-1, keepdims=True)
    return np.exp(log_geo_mean - np.log(floored))


def _metric_matrix_from_scatter(scatter: np.ndarray) -> np.ndarray:
    # A scatter of (numerically) zero trace means a perfectly fit cluster; the
    # neutral identity metric keeps the iteration going in that degenerate case.
    if float(np.trace(scatter)) < _SCATTER_TRACE_FLOOR:
        return np.eye(scatter.shape[0])
    return det_normalized_inverse(scatter)


def _metric_from_arrays(
    spec: AlgorithmSpec, desc: VariantDescriptor, x: np.ndarray, u: np.ndarray, g: np.ndarray
) -> MetricState:
    scope = desc.metric_scope
    if scope is MetricScope.NONE:
        return NoMetric()

    if scope in (MetricScope.GLOBAL_COV, MetricScope.LOCAL_COV):
        diffs = x[:, None, :] - g[None, :, :]
        scatters = np.einsum("nc,ncp,ncq->cpq", u, diffs, diffs)
        if scope is MetricScope.GLOBAL_COV:
            return GlobalCov(_metric_matrix_from_scatter(scatters.sum(axis=0)))
        return LocalCov(np.stack([_metric_matrix_from_scatter(s) for s in scatters]))

    d = pointwise_array(desc.pointwise, x[:, None, :] - g[None, :, :])
    if scope is MetricScope.GLOBAL_WEIGHTS:
        dispersion = np.einsum("nc,ncp->p", u, d)
        if desc.weight_constraint is WeightConstraint.SUM_TO_ONE:
            return GlobalWeights(stable_normalized_exponentials(dispersion, spec.t_v), _SUM)
        return GlobalWeights(_product_constrained_weights(dispersion), _PROD)

    dispersion = np.einsum("nc,ncp->cp", u, d)
    if desc.weight_constraint is WeightConstraint.SUM_TO_ONE:
        return LocalWeights(stable_normalized_exponentials(dispersion, spec.t_v), _SUM)
    return LocalWeights(_product_constrained_weights(dispersion), _PROD)


def update_metric(
    spec: AlgorithmSpec, data: Dataset, partition: FuzzyPartition, prototypes: PrototypeSet
) -> MetricState:
    """Weighting step: block minimizer over covariances or relevance weights."""
    desc = descriptor_for(spec.variant)
    _check_shapes(spec, data, partition.u, prototypes.g)
    return _metric_from_arrays(spec, desc, data.features, partition.u, prototypes.g)


def update_membership(
    spec: AlgorithmSpec, data: Dataset, prototypes: PrototypeSet, metric: MetricState
) -> FuzzyPartition:
    """Assignment step: normalized exponentials of the variant distances."""
    desc = descriptor_for(spec.variant)
    _check_metric(desc, metric)
    _check_shapes(spec, data, None, prototypes.g)
    scores = _scores(desc, data.features, prototypes.g, metric)
    return FuzzyPartition(stable_normalized_exponentials(scores, spec.t_u))


def _neutral_metric(desc: VariantDescriptor, c: int, p: int) -> MetricState:
    """Identity covariances / unit (or uniform) weights; used by ``freeze_metric``."""
    scope = desc.metric_scope
    if scope is MetricScope.NONE:
        return NoMetric()
    if scope is MetricScope.GLOBAL_COV:
        return GlobalCov(np.eye(p))
    if scope is MetricScope.LOCAL_COV:
        return LocalCov(np.stack([np.eye(p)] * c))
    if desc.weight_constraint is WeightConstraint.SUM_TO_ONE:
        w = np.full(p, 1.0 / p)
    else:
        w = np.ones(p)
    if scope is MetricScope.GLOBAL_WEIGHTS:
        return GlobalWeights(w, desc.weight_constraint)
    return LocalWeights(np.tile(w, (c, 1)), desc.weight_constraint)


def initial_membership(n: int, c: int, rng: np.random.Generator) -> np.ndarray:
    """Rows drawn uniformly on the probability simplex (normalized exponential variates)."""
    e = rng.standard_exponential((n, c))
    return e / e.sum(axis=1, keepdims=True)


def _irls_prototypes(
    x: np.ndarray, u: np.ndarray, g_prev: np.ndarray, empty: np.ndarray, max_steps: int = 100
) -> np.ndarray:
    """Iterate the reweighted-mean form of the L1 prototype to a fixed point."""
    g = g_prev.copy()
    for _ in range(max_steps):
        w = u[:, :, None] / np.maximum(np.abs(x[:, None, :] - g[None, :, :]), WEIGHT_FLOOR)
        new = np.einsum("ncp,np->cp", w, x) / w.sum(axis=0)
        new[empty] = g[empty]
        if np.max(np.abs(new - g)) < 1e-12:
            return new
        g = new
    return g


def fit(
    spec: AlgorithmSpec,
    data: Dataset,
    *,
    initial: Optional[FuzzyPartition] = None,
    freeze_metric: bool = False,
    l1_solver: str = "median",
) -> FitResult:
    """Run the three-step loop until memberships stabilize or ``max_iter``.

    The membership matrix is initialized row-wise uniformly on the simplex
    from ``spec.seed`` (or taken from ``initial``).  The loop stops when
    ``max |u - u_prev| < spec.epsilon``.  ``freeze_metric`` pins the weighting
    step to the neutral state (identity covariances, unit or uniform weights),
    which reduces the adaptive variants to their non-adaptive counterparts.
    ``l1_solver`` selects the City-Block representation step: the exact
    ``"median"`` solver or the iterated reweighting form ``"irls"``.
    """
    desc = descriptor_for(spec.variant)
    if spec.c > data.n:
        raise ValidationError(f"cluster count {spec.c} exceeds the number of objects {data.n}")
    if l1_solver not in ("median", "irls"):
        raise ValidationError(f"l1_solver must be 'median' or 'irls', got {l1_solver!r}")

    x = data.features
    n, p = x.shape
    rng = np.random.default_rng(spec.seed)
    u = initial.u if initial is not None else initial_membership(n, spec.c, rng)
    _check_shapes(spec, data, u, None)

    use_irls = l1_solver == "irls" and desc.pointwise is PointwiseKind.ABS_DIFF
    column_orders = None
    if desc.pointwise is PointwiseKind.ABS_DIFF and not use_irls:
        column_orders = [np.argsort(x[:, j], kind="stable") for j in range(p)]

    frozen = _neutral_metric(desc, spec.c, p) if freeze_metric else None
    g = None
    metric: MetricState = NoMetric()
    trace: list[float] = []
    rescue_steps: list[int] = []
    termination = Termination.MAX_ITERATIONS
    iterations = 0

    for _ in range(spec.max_iter):
        if use_irls:
            mass = u.sum(axis=0)
            empty = mass < EMPTY_MASS_FLOOR
            rescued = bool(empty.any())
            if g is None:
                safe = np.where(empty, 1.0, mass)
                g = (u.T @ x) / safe[:, None]
            g = _irls_prototypes(x, u, g, empty)
            for k in np.flatnonzero(empty):
                g[k] = x[rng.integers(n)]
        else:
            g, rescued = _prototype_matrix(desc, x, u, rng, column_orders)

        metric = frozen if frozen is not None else _metric_from_arrays(spec, desc, x, u, g)
        scores = _scores(desc, x, g, metric)
        new_u = stable_normalized_exponentials(scores, spec.t_u)
        j = _objective_value(spec, desc, new_u, scores, metric)

        if rescued:
            rescue_steps.append(len(trace))
        elif trace and j > trace[-1] + OBJECTIVE_RAISE_TOL:
            raise NonDecreasingObjective(
                f"objective rose from {trace[-1]!r} to {j!r} at iteration {iterations + 1}"
            )
        trace.append(j)
        iterations += 1

        delta = float(np.max(np.abs(new_u - u)))
        u = new_u
        if delta < spec.epsilon:
            termination = Termination.CONVERGED
            break

    return FitResult(
        partition=FuzzyPartition(u),
        prototypes=PrototypeSet(g),
        metric=metric,
        objective_trace=np.array(trace),
        iterations=iterations,
        termination=termination,
        rescue_steps=tuple(rescue_steps),
    )
