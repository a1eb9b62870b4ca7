"""Synthetic dataset generators, CSV ingestion and z-score standardization."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .core import Dataset
from .exceptions import ParseError, UnknownLabelColumn, ValidationError

OUTLIER_LABEL = 2
_CONSTANT_STD_FLOOR = 1e-12


@dataclass(frozen=True)
class GaussianClassSpec:
    """Bivariate normal component: means, variances, correlation and size."""

    mu: tuple[float, float]
    sigma2: tuple[float, float]
    rho: float
    n: int

    def __post_init__(self):
        if not (-1.0 < self.rho < 1.0):
            raise ValidationError(f"rho must lie in (-1, 1), got {self.rho}")
        if self.sigma2[0] <= 0 or self.sigma2[1] <= 0:
            raise ValidationError("variances must be positive")
        if self.n < 1:
            raise ValidationError("class size must be positive")

    @property
    def covariance(self) -> np.ndarray:
        s1 = math.sqrt(self.sigma2[0])
        s2 = math.sqrt(self.sigma2[1])
        off = s1 * s2 * self.rho
        return np.array([[self.sigma2[0], off], [off, self.sigma2[1]]])

    def sample(self, rng: np.random.Generator) -> np.ndarray:
        chol = np.linalg.cholesky(self.covariance)
        z = rng.standard_normal((self.n, 2))
        return np.asarray(self.mu) + z @ chol.T


# Four synthetic configurations: 450 points in four classes of sizes
# (150, 150, 50, 100), with diagonal/non-diagonal, equal/unequal covariances.
GAUSSIAN_CONFIGS: dict[int, tuple[GaussianClassSpec, ...]] = {
    1: (
        GaussianClassSpec((45.0, 30.0), (100.0, 9.0), 0.0, 150),
        GaussianClassSpec((70.0, 38.0), (81.0, 16.0), 0.0, 150),
        GaussianClassSpec((45.0, 42.0), (100.0, 16.0), 0.0, 50),
        GaussianClassSpec((42.0, 20.0), (81.0, 9.0), 0.0, 100),
    ),
    2: (
        GaussianClassSpec((45.0, 22.0), (144.0, 9.0), 0.0, 150),
        GaussianClassSpec((70.0, 38.0), (81.0, 36.0), 0.0, 150),
        GaussianClassSpec((50.0, 42.0), (36.0, 81.0), 0.0, 50),
        GaussianClassSpec((42.0, 2.0), (9.0, 144.0), 0.0, 100),
    ),
    3: (
        GaussianClassSpec((45.0, 30.0), (100.0, 9.0), 0.7, 150),
        GaussianClassSpec((70.0, 38.0), (81.0, 16.0), 0.8, 150),
        GaussianClassSpec((45.0, 42.0), (100.0, 16.0), 0.7, 50),
        GaussianClassSpec((42.0, 20.0), (81.0, 9.0), 0.8, 100),
    ),
    4: (
        GaussianClassSpec((45.0, 22.0), (144.0, 9.0), 0.7, 150),
        GaussianClassSpec((70.0, 38.0), (81.0, 36.0), 0.8, 150),
        GaussianClassSpec((50.0, 42.0), (36.0, 81.0), 0.7, 50),
        GaussianClassSpec((42.0, 2.0), (9.0, 144.0), 0.8, 100),
    ),
}

# Two tight base classes plus a wide outlier component for the robustness study.
OUTLIER_BASE_CLASSES = (
    GaussianClassSpec((0.0, 0.0), (0.05, 0.05), 0.0, 40),
    GaussianClassSpec((0.8, 0.8), (0.05, 0.05), 0.0, 40),
)
OUTLIER_COMPONENT_MU = (0.8, 1.0)
OUTLIER_COMPONENT_SIGMA2 = (5.0, 5.0)
OUTLIER_PERCENTAGES = (0, 10, 20, 30)


def ideal_outlier_centers() -> np.ndarray:
    """Generating class means of the outlier experiment's two base classes."""
    return np.array([c.mu for c in OUTLIER_BASE_CLASSES])


def generate_config(config_id: int, seed: int) -> Dataset:
    """Sample one 450-point labeled dataset from configuration 1..4."""
    if config_id not in GAUSSIAN_CONFIGS:
        raise ValidationError(f"config_id must be in 1..4, got {config_id}")
    rng = np.random.default_rng(seed)
    blocks, labels = [], []
    for cls, spec in enumerate(GAUSSIAN_CONFIGS[config_id]):
        blocks.append(spec.sample(rng))
        labels.extend([cls] * spec.n)
    return Dataset(np.vstack(blocks), np.asarray(labels), ("x1", "x2"))


def generate_outlier_set(pct: int, seed: int) -> Dataset:
    """80 base points in two tight classes plus ``ceil(pct% of 80)`` outliers.

    Outliers are labeled :data:`OUTLIER_LABEL` (2) so evaluation can exclude
    them from the two-class ground truth or treat them as a third class.
    """
    if pct not in OUTLIER_PERCENTAGES:
        raise ValidationError(f"pct must be one of {OUTLIER_PERCENTAGES}, got {pct}")
    rng = np.random.default_rng(seed)
    blocks, labels = [], []
    for cls, spec in enumerate(OUTLIER_BASE_CLASSES):
        blocks.append(spec.sample(rng))
        labels.extend([cls] * spec.n)
    n_out = math.ceil(0.01 * pct * 80)
    if n_out:
        noise = GaussianClassSpec(OUTLIER_COMPONENT_MU, OUTLIER_COMPONENT_SIGMA2, 0.0, n_out)
        blocks.append(noise.sample(rng))
        labels.extend([OUTLIER_LABEL] * n_out)
    return Dataset(np.vstack(blocks), np.asarray(labels), ("x1", "x2"))


def load_csv(path, label_column: str | None = None) -> Dataset:
    """Read a comma-separated, headered, UTF-8 CSV into a Dataset.

    Every column except ``label_column`` must parse as a finite number; labels
    are integer-encoded in order of first appearance.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError(0, "<header>", "<empty file>") from None
        header = [h.strip() for h in header]
        if label_column is not None and label_column not in header:
            raise UnknownLabelColumn(
                f"label column {label_column!r} not found; header has {header}"
            )
        label_idx = header.index(label_column) if label_column is not None else None
        feature_names = tuple(h for i, h in enumerate(header) if i != label_idx)

        rows: list[list[float]] = []
        raw_labels: list[str] = []
        for row_num, row in enumerate(reader, start=1):
            if not row or all(cell.strip() == "" for cell in row):
                continue
            if len(row) != len(header):
                raise ParseError(row_num, "<row>", f"expected {len(header)} cells, got {len(row)}")
            values = []
            for i, cell in enumerate(row):
                if i == label_idx:
                    raw_labels.append(cell.strip())
                    continue
                try:
                    value = float(cell)
                except ValueError:
                    raise ParseError(row_num, header[i], cell) from None
                if not math.isfinite(value):
                    raise ParseError(row_num, header[i], cell)
                values.append(value)
            rows.append(values)

    labels = None
    if label_column is not None:
        seen: dict[str, int] = {}
        labels = np.array([seen.setdefault(lab, len(seen)) for lab in raw_labels])
    return Dataset(np.asarray(rows), labels, feature_names)


def save_csv(dataset: Dataset, path) -> None:
    """Write a Dataset back out, appending a ``label`` column when present."""
    names = dataset.feature_names or tuple(f"x{j + 1}" for j in range(dataset.p))
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(list(names) + (["label"] if dataset.labels is not None else []))
        for i in range(dataset.n):
            row = [format(v, ".17g") for v in dataset.features[i]]
            if dataset.labels is not None:
                row.append(int(dataset.labels[i]))
            writer.writerow(row)


@dataclass(frozen=True)
class StandardizeResult:
    """Standardized dataset plus the column statistics needed to invert it."""

    dataset: Dataset
    means: np.ndarray
    stds: np.ndarray
    constant_columns: np.ndarray

    def restore_points(self, points: np.ndarray) -> np.ndarray:
        """Map points (e.g. prototypes) from standardized back to original space."""
        return points * self.stds + self.means


def standardize(dataset: Dataset) -> StandardizeResult:
    """Transform each column to zero mean and unit (population) standard deviation.

    Columns whose standard deviation falls below 1e-12 are centered only and
    flagged in ``constant_columns``.
    """
    x = dataset.features
    means = x.mean(axis=0)
    stds = x.std(axis=0)
    constant = stds < _CONSTANT_STD_FLOOR
    safe_stds = np.where(constant, 1.0, stds)
    transformed = (x - means) / safe_stds
    out = Dataset(transformed, dataset.labels, dataset.feature_names)
    return StandardizeResult(out, means, safe_stds, constant)
