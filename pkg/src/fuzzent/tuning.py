"""Unsupervised T_u / (T_u, T_v) selection, restart management, Monte Carlo harness."""
from __future__ import annotations

import dataclasses
import io
import warnings
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .core import AlgorithmSpec, Dataset, FitResult, FuzzyPartition, PrototypeSet, Variant
from .data import (
    OUTLIER_LABEL,
    generate_config,
    generate_outlier_set,
    ideal_outlier_centers,
    standardize,
)
from .engine import fit
from .evaluation import adjusted_rand_index, hard_partition, hullermeier_index, robustness_detection
from .exceptions import MissingTvGrid, ValidationError

DEFAULT_TV_GRID = (1.0, 5.0, 10.0, 50.0, 100.0, 500.0)
CONFIG_EXPERIMENTS = ("config1", "config2", "config3", "config4")
OUTLIER_EXPERIMENT = "outliers"

# The sweep's first crossing marks the fuzzifier at which two prototypes have
# already merged, i.e. the upper threshold of meaningful fuzziness, so the
# experiment protocol runs at a fixed fraction of it.
TU_BACKOFF = 0.25
TUNING_RESTARTS = 10


@dataclass(frozen=True)
class SweepConfig:
    """Grid and stopping threshold for the unsupervised fuzzifier sweep."""

    tu_min: float = 0.01
    tu_max: float = 100.0
    tu_step: float = 0.01
    tv_grid: Optional[tuple[float, ...]] = None
    min_centroid_threshold: float = 0.1
    restarts_per_candidate: int = 1
    exact: bool = False

    def __post_init__(self):
        if not (0 < self.tu_min < self.tu_max):
            raise ValidationError("need 0 < tu_min < tu_max")
        if not (self.tu_step > 0):
            raise ValidationError("tu_step must be positive")
        if not (self.min_centroid_threshold > 0):
            raise ValidationError("min_centroid_threshold must be positive")
        if self.restarts_per_candidate < 1:
            raise ValidationError("restarts_per_candidate must be at least 1")
        if self.tv_grid is not None:
            grid = tuple(float(v) for v in self.tv_grid)
            if not grid or any(v <= 0 for v in grid):
                raise ValidationError("tv_grid entries must be positive")
            object.__setattr__(self, "tv_grid", grid)

    def candidates(self) -> np.ndarray:
        count = int(np.floor((self.tu_max - self.tu_min) / self.tu_step + 1e-9)) + 1
        return self.tu_min + self.tu_step * np.arange(count)


def min_centroid_distance(prototypes: PrototypeSet) -> float:
    g = prototypes.g
    diffs = g[:, None, :] - g[None, :, :]
    dist = np.sqrt(np.sum(diffs * diffs, axis=-1))
    return float(dist[~np.eye(g.shape[0], dtype=bool)].min())


def best_of_restarts(
    spec: AlgorithmSpec, data: Dataset, n_restarts: int, seed: int, *, l1_solver: str = "median"
) -> FitResult:
    """Run ``n_restarts`` fits with seeds ``seed..seed+n-1``; keep the lowest objective."""
    if n_restarts < 1:
        raise ValidationError("n_restarts must be at least 1")
    best: Optional[FitResult] = None
    for i in range(n_restarts):
        result = fit(dataclasses.replace(spec, seed=seed + i), data, l1_solver=l1_solver)
        if best is None or result.final_objective < best.final_objective:
            best = result
    return best


class _CandidateEvaluator:
    """Caches min-centroid-distance evaluations along the T_u grid."""

    def __init__(self, template: AlgorithmSpec, data: Dataset, cfg: SweepConfig):
        self.template = template
        self.data = data
        self.cfg = cfg
        self.cache: dict[int, float] = {}

    def distance(self, idx: int, candidates: np.ndarray) -> float:
        if idx not in self.cache:
            spec = dataclasses.replace(self.template, t_u=float(candidates[idx]))
            result = best_of_restarts(spec, self.data, self.cfg.restarts_per_candidate, spec.seed)
            self.cache[idx] = min_centroid_distance(result.prototypes)
        return self.cache[idx]

    def below(self, idx: int, candidates: np.ndarray) -> bool:
        return self.distance(idx, candidates) < self.cfg.min_centroid_threshold


def _first_crossing_index(ev: _CandidateEvaluator, candidates: np.ndarray) -> Optional[int]:
    m = len(candidates)
    if ev.cfg.exact:
        for i in range(m):
            if ev.below(i, candidates):
                return i
        return None
    # Coarse pass, then binary refinement: the merge curve is monotone near the
    # crossing, so this returns the same index as the exact walk there.
    stride = max(1, m // 40)
    coarse = list(range(0, m, stride))
    if coarse[-1] != m - 1:
        coarse.append(m - 1)
    hit = None
    for pos, i in enumerate(coarse):
        if ev.below(i, candidates):
            hit = pos
            break
    if hit is None:
        return None
    if hit == 0:
        return coarse[0]
    lo, hi = coarse[hit - 1], coarse[hit]  # distance(lo) >= threshold > distance(hi)
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if ev.below(mid, candidates):
            hi = mid
        else:
            lo = mid
    return hi


def _select_tu_with_distance(
    template: AlgorithmSpec, data: Dataset, cfg: SweepConfig
) -> tuple[float, float, dict[int, float]]:
    candidates = cfg.candidates()
    ev = _CandidateEvaluator(template, data, cfg)
    idx = _first_crossing_index(ev, candidates)
    if idx is None:
        warnings.warn(
            "minimum centroid distance never fell below "
            f"{cfg.min_centroid_threshold}; returning tu_max={cfg.tu_max}",
            stacklevel=2,
        )
        idx = len(candidates) - 1
    return float(candidates[idx]), ev.distance(idx, candidates), ev.cache


def select_tu(template: AlgorithmSpec, data: Dataset, cfg: SweepConfig = SweepConfig()) -> float:
    """Sweep T_u ascending and return the first candidate at which the minimum
    pairwise prototype distance falls below the threshold.

    Expects standardized data (the 0.1 threshold is calibrated for unit-scale
    features).  Falls back to ``tu_max`` with a warning when no candidate merges
    the prototypes.
    """
    tu, _, _ = _select_tu_with_distance(template, data, cfg)
    return tu


def sweep_curve(template: AlgorithmSpec, data: Dataset, cfg: SweepConfig) -> list[tuple[float, float]]:
    """(T_u, min centroid distance) pairs evaluated by the sweep, in grid order."""
    candidates = cfg.candidates()
    _, _, cache = _select_tu_with_distance(template, data, cfg)
    return [(float(candidates[i]), cache[i]) for i in sorted(cache)]


def select_tu_tv(
    template: AlgorithmSpec, data: Dataset, cfg: SweepConfig = SweepConfig()
) -> tuple[float, float]:
    """Joint selection for the sum-constrained families.

    Runs the T_u sweep once per T_v candidate and returns the (T_u, T_v) pair
    whose selected fit kept the largest minimum centroid distance; ties break
    toward smaller T_v, then smaller T_u.
    """
    if not template.variant.uses_tv:
        raise ValidationError(f"variant {template.variant.value} does not use t_v")
    if cfg.tv_grid is None:
        raise MissingTvGrid("select_tu_tv needs cfg.tv_grid")
    results = []
    for tv in cfg.tv_grid:
        tu, dist, _ = _select_tu_with_distance(dataclasses.replace(template, t_v=tv), data, cfg)
        results.append((dist, tv, tu))
    results.sort(key=lambda r: (-r[0], r[1], r[2]))
    _, tv, tu = results[0]
    return tu, tv


@dataclass(frozen=True)
class ReportRow:
    variant: Variant
    index: str
    mean: float
    std: float


@dataclass(frozen=True)
class Report:
    """Per-variant mean/std of validity indices over Monte Carlo replications."""

    experiment: str
    variants: tuple[Variant, ...]
    indices: tuple[str, ...]
    rows: tuple[ReportRow, ...]
    replications: int
    restarts: int
    seed: int

    def to_csv(self) -> str:
        out = io.StringIO()
        out.write("variant,index,mean,std\n")
        for row in self.rows:
            out.write(f"{row.variant.value},{row.index},{row.mean:.17g},{row.std:.17g}\n")
        return out.getvalue()

    def to_text(self) -> str:
        width = max(len(v.value) for v in self.variants) + 2
        head = "".join(f"{idx:>18}" for idx in self.indices)
        lines = [f"{self.experiment}: {self.replications} replications x {self.restarts} restarts"]
        lines.append(" " * width + head)
        by_variant: dict[Variant, dict[str, ReportRow]] = {}
        for row in self.rows:
            by_variant.setdefault(row.variant, {})[row.index] = row
        for variant in self.variants:
            cells = []
            for idx in self.indices:
                row = by_variant[variant][idx]
                cells.append(f"{row.mean:.4f} ({row.std:.4f})".rjust(18))
            lines.append(variant.value.ljust(width) + "".join(cells))
        return "\n".join(lines) + "\n"

    def mean(self, variant: Variant, index: str) -> float:
        for row in self.rows:
            if row.variant is variant and row.index == index:
                return row.mean
        raise KeyError((variant, index))


def _generate_experiment(experiment: str, pct: Optional[int], seed: int) -> Dataset:
    if experiment in CONFIG_EXPERIMENTS:
        return generate_config(int(experiment[-1]), seed)
    if experiment == OUTLIER_EXPERIMENT:
        if pct is None:
            raise ValidationError("the outlier experiment needs pct")
        return generate_outlier_set(pct, seed)
    raise ValidationError(
        f"unknown experiment {experiment!r}; expected one of {CONFIG_EXPERIMENTS + (OUTLIER_EXPERIMENT,)}"
    )


def _experiment_cluster_count(experiment: str) -> int:
    return 4 if experiment in CONFIG_EXPERIMENTS else 2


def tuned_tu_tv(
    variant: Variant,
    data: Dataset,
    c: int,
    seed: int,
    cfg: Optional[SweepConfig] = None,
    backoff: float = TU_BACKOFF,
) -> tuple[float, Optional[float]]:
    """Unsupervised (T_u[, T_v]) for one variant: sweep threshold times backoff."""
    if cfg is None:
        cfg = SweepConfig(tv_grid=DEFAULT_TV_GRID, restarts_per_candidate=TUNING_RESTARTS)
    if variant.uses_tv:
        grid = cfg.tv_grid or DEFAULT_TV_GRID
        if cfg.tv_grid is None:
            cfg = dataclasses.replace(cfg, tv_grid=grid)
        template = AlgorithmSpec(variant, c, t_u=1.0, t_v=grid[0], seed=seed)
        tu, tv = select_tu_tv(template, data, cfg)
        return backoff * tu, tv
    template = AlgorithmSpec(variant, c, t_u=1.0, seed=seed)
    return backoff * select_tu(template, data, cfg), None


def resolve_params(
    experiment: str,
    variants: Sequence[Variant],
    seed: int,
    pct: Optional[int] = None,
    sweep: Optional[SweepConfig] = None,
    tv_grid: Sequence[float] = DEFAULT_TV_GRID,
    backoff: float = TU_BACKOFF,
) -> dict[Variant, tuple[float, Optional[float]]]:
    """Tune (T_u[, T_v]) per variant on the replication-0 dataset, unsupervised."""
    data = standardize(_generate_experiment(experiment, pct, seed)).dataset
    c = _experiment_cluster_count(experiment)
    cfg = sweep if sweep is not None else SweepConfig(
        tv_grid=tuple(tv_grid), restarts_per_candidate=TUNING_RESTARTS
    )
    if cfg.tv_grid is None:
        cfg = dataclasses.replace(cfg, tv_grid=tuple(tv_grid))
    return {
        variant: tuned_tu_tv(variant, data, c, seed, cfg, backoff) for variant in variants
    }


def _replication_task(args) -> tuple[int, dict[Variant, dict[str, float]]]:
    (experiment, pct, variants, params, restarts, seed, r, include_outliers) = args
    raw = _generate_experiment(experiment, pct, seed + r)
    std = standardize(raw)
    c = _experiment_cluster_count(experiment)
    restart_base = seed + r * restarts

    out: dict[Variant, dict[str, float]] = {}
    for variant in variants:
        tu, tv = params[variant]
        spec = AlgorithmSpec(variant, c, t_u=tu, t_v=tv, seed=restart_base)
        result = best_of_restarts(spec, std.dataset, restarts, restart_base)
        u = result.partition.u
        labels = raw.labels
        if experiment == OUTLIER_EXPERIMENT and not include_outliers:
            keep = labels != OUTLIER_LABEL
            u_eval = FuzzyPartition(u[keep])
            labels_eval = labels[keep]
        else:
            u_eval = result.partition
            labels_eval = labels
        metrics = {
            "HUL": hullermeier_index(u_eval, labels_eval),
            "ARI": adjusted_rand_index(hard_partition(u_eval), labels_eval),
        }
        if experiment == OUTLIER_EXPERIMENT:
            raw_prototypes = PrototypeSet(std.restore_points(result.prototypes.g))
            metrics["rd"] = robustness_detection(raw_prototypes, ideal_outlier_centers())
        out[variant] = metrics
    return r, out


def monte_carlo(
    experiment: str,
    variants: Sequence[Variant],
    replications: int,
    restarts: int,
    seed: int,
    *,
    pct: Optional[int] = None,
    params: Optional[dict[Variant, tuple[float, Optional[float]]]] = None,
    tv_grid: Sequence[float] = DEFAULT_TV_GRID,
    sweep: Optional[SweepConfig] = None,
    backoff: float = TU_BACKOFF,
    n_jobs: int = 1,
    include_outliers: bool = False,
    keep_going: bool = False,
) -> Report:
    """Replicated experiment: regenerate the dataset per replication, run the
    best-of-restarts protocol per variant, and aggregate HUL/ARI (plus rd for
    the outlier experiment) into per-variant mean and standard deviation.

    The report is a pure function of its arguments; replication ``r`` draws its
    dataset from ``seed + r`` and its restarts from ``seed + r*restarts``
    onward, so serial and parallel execution produce identical reports.
    ``params`` fixes (T_u, T_v) per variant; when omitted they are tuned,
    unsupervised, on the replication-0 dataset.
    """
    variants = tuple(variants)
    if replications < 1:
        raise ValidationError("replications must be at least 1")
    if restarts < 1:
        raise ValidationError("restarts must be at least 1")
    if params is None:
        params = resolve_params(
            experiment, variants, seed, pct=pct, sweep=sweep, tv_grid=tv_grid, backoff=backoff
        )
    else:
        missing = [v for v in variants if v not in params]
        if missing:
            raise ValidationError(f"params missing variants: {[v.value for v in missing]}")

    tasks = [
        (experiment, pct, variants, params, restarts, seed, r, include_outliers)
        for r in range(replications)
    ]
    results: dict[int, dict[Variant, dict[str, float]]] = {}
    failures: list[tuple[int, Exception]] = []
    if n_jobs > 1:
        with ProcessPoolExecutor(max_workers=n_jobs) as pool:
            futures = {pool.submit(_replication_task, task): task[6] for task in tasks}
            for future in as_completed(futures):
                try:
                    r, metrics = future.result()
                    results[r] = metrics
                except Exception as exc:  # noqa: BLE001 - keep_going mode collects failures
                    if not keep_going:
                        raise
                    failures.append((futures[future], exc))
    else:
        for task in tasks:
            try:
                r, metrics = _replication_task(task)
                results[r] = metrics
            except Exception as exc:  # noqa: BLE001 - keep_going mode collects failures
                if not keep_going:
                    raise
                failures.append((task[6], exc))

    if failures:
        warnings.warn(f"{len(failures)} replication(s) failed and were skipped", stacklevel=2)
    completed = sorted(results)
    if not completed:
        raise ValidationError("every replication failed")

    indices = ("HUL", "ARI", "rd") if experiment == OUTLIER_EXPERIMENT else ("HUL", "ARI")
    rows = []
    for variant in variants:
        for index in indices:
            values = np.array([results[r][variant][index] for r in completed])
            rows.append(ReportRow(variant, index, float(values.mean()), float(values.std())))
    return Report(
        experiment=experiment if pct is None else f"{experiment}-{pct}",
        variants=variants,
        indices=indices,
        rows=tuple(rows),
        replications=replications,
        restarts=restarts,
        seed=seed,
    )
