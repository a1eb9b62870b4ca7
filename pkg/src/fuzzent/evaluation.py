"""Cluster validity indices and hard-partition extraction."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import FuzzyPartition, PrototypeSet
from .exceptions import (
    IdenticalIdealCenters,
    LengthMismatch,
    UndefinedIndex,
    ValidationError,
)

_HUL_BLOCK = 512


@dataclass(frozen=True)
class HardPartition:
    """Length-N vector of crisp cluster assignments in ``[0, n_clusters)``."""

    assign: np.ndarray
    n_clusters: int

    def __post_init__(self):
        assign = np.array(self.assign, dtype=np.int64, copy=True)
        if assign.ndim != 1:
            raise ValidationError("assignments must be a 1-D vector")
        if assign.size and (assign.min() < 0 or assign.max() >= self.n_clusters):
            raise ValidationError(f"assignments must lie in [0, {self.n_clusters})")
        assign.setflags(write=False)
        object.__setattr__(self, "assign", assign)

    @property
    def n(self) -> int:
        return self.assign.size


def hard_partition(partition: FuzzyPartition) -> HardPartition:
    """Assign every object to its highest-membership cluster (ties to the lowest index)."""
    return HardPartition(np.argmax(partition.u, axis=1), partition.c)


def _pair_counts(labels: np.ndarray) -> np.ndarray:
    _, encoded = np.unique(labels, return_inverse=True)
    return np.bincount(encoded)


def adjusted_rand_index(a, b) -> float:
    """Hubert-Arabie adjusted Rand index between two hard partitions.

    Accepts :class:`HardPartition` or plain label vectors; invariant to
    relabeling of either argument.
    """
    a = a.assign if isinstance(a, HardPartition) else np.asarray(a)
    b = b.assign if isinstance(b, HardPartition) else np.asarray(b)
    if a.shape != b.shape or a.ndim != 1:
        raise LengthMismatch(f"partitions must be 1-D of equal length, got {a.shape} and {b.shape}")
    n = a.size
    if n < 2:
        raise UndefinedIndex("the adjusted Rand index needs at least 2 objects")

    _, ai = np.unique(a, return_inverse=True)
    _, bi = np.unique(b, return_inverse=True)
    contingency = np.zeros((ai.max() + 1, bi.max() + 1), dtype=np.int64)
    np.add.at(contingency, (ai, bi), 1)

    def comb2(x):
        return x * (x - 1) // 2

    sum_cells = comb2(contingency).sum()
    sum_rows = comb2(contingency.sum(axis=1)).sum()
    sum_cols = comb2(contingency.sum(axis=0)).sum()
    expected = sum_rows * sum_cols / comb2(n)
    max_index = 0.5 * (sum_rows + sum_cols)
    if max_index == expected:
        # Both partitions are single-cluster (or equivalent degenerate cases).
        return 1.0
    return float((sum_cells - expected) / (max_index - expected))


def hullermeier_index(partition: FuzzyPartition, labels) -> float:
    """Fuzzy-partition agreement with a crisp labeling via pairwise equivalence.

    Equivalence degree between two objects is ``1 - 0.5 * ||u_i - u_i'||_1``;
    the index averages the absolute disagreement with the crisp labeling's
    equivalence (1 for same label, 0 otherwise) over all object pairs.
    """
    labels = np.asarray(labels)
    u = partition.u
    n = u.shape[0]
    if labels.shape != (n,):
        raise LengthMismatch(f"labels must have shape ({n},), got {labels.shape}")
    if n < 2:
        raise UndefinedIndex("the Hullermeier index needs at least 2 objects")

    total = 0.0
    for start in range(0, n, _HUL_BLOCK):
        stop = min(start + _HUL_BLOCK, n)
        block = u[start:stop]
        # pairwise normalized L1 distances between the block and all later rows
        dist = 0.5 * np.abs(block[:, None, :] - u[None, :, :]).sum(axis=-1)
        eq_u = 1.0 - dist
        eq_y = (labels[start:stop, None] == labels[None, :]).astype(np.float64)
        gap = np.abs(eq_u - eq_y)
        cols = np.arange(n)[None, :]
        rows = np.arange(start, stop)[:, None]
        total += float(gap[cols > rows].sum())
    return 1.0 - 2.0 * total / (n * (n - 1))


def robustness_detection(prototypes: PrototypeSet, ideal, *, paper_formula: bool = False) -> float:
    """Prototype-recovery index for two-cluster fits against ideal centers.

    Sums the four prototype-to-ideal Euclidean distances and divides by twice
    the ideal separation, so the index is exactly 1 when the prototypes
    coincide with the ideal centers.  ``paper_formula`` switches to the
    published numerator, which repeats the (ideal 2, prototype 1) term instead
    of including (ideal 2, prototype 2).
    """
    ideal = np.asarray(ideal, dtype=np.float64)
    if prototypes.c != 2:
        raise ValidationError(f"robustness detection needs exactly 2 clusters, got {prototypes.c}")
    if ideal.shape != (2, prototypes.p):
        raise ValidationError(f"ideal centers must have shape (2, {prototypes.p}), got {ideal.shape}")
    separation = float(np.linalg.norm(ideal[0] - ideal[1]))
    if separation == 0.0:
        raise IdenticalIdealCenters("ideal centers coincide")
    g = prototypes.g

    def dist(i, k):
        return float(np.linalg.norm(ideal[i] - g[k]))

    last = dist(1, 0) if paper_formula else dist(1, 1)
    return (dist(0, 0) + dist(0, 1) + dist(1, 0) + last) / (2.0 * separation)
