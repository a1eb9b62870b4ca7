"""Shared helpers for randomized oracles."""
import numpy as np

from fuzzent.core import (
    AlgorithmSpec,
    Dataset,
    FuzzyPartition,
    GlobalCov,
    GlobalWeights,
    LocalCov,
    LocalWeights,
    PrototypeSet,
    Variant,
    WeightConstraint,
)
from fuzzent.engine import update_metric


def make_spec(variant, c=2, t_u=1.0, t_v=1.5, seed=0, **kw):
    return AlgorithmSpec(variant, c, t_u=t_u, t_v=t_v if variant.uses_tv else None, seed=seed, **kw)


def random_instance(variant, rng, n=8, c=2, p=3):
    """Random consistent (spec, data, partition, prototypes, metric)."""
    spec = make_spec(variant, c=c)
    data = Dataset(rng.normal(size=(n, p)) * rng.uniform(0.5, 2.0, size=p))
    partition = FuzzyPartition(rng.dirichlet(np.ones(c), size=n))
    prototypes = PrototypeSet(rng.normal(size=(c, p)))
    metric = update_metric(spec, data, partition, prototypes)
    return spec, data, partition, prototypes, metric


def perturb_spd(m, rng, scale):
    """Congruence perturbation renormalized to unit determinant (stays SPD)."""
    p = m.shape[0]
    factor = np.eye(p) + scale * rng.normal(size=(p, p)) / p
    out = factor @ m @ factor.T
    out = 0.5 * (out + out.T)
    return out / np.linalg.det(out) ** (1.0 / p)


def perturb_metric_state(metric, rng, scale=0.2):
    """Random feasible perturbation of a metric state (constraints preserved)."""
    if isinstance(metric, GlobalWeights):
        v = metric.v * np.exp(rng.normal(scale=scale, size=metric.v.shape))
        if metric.constraint is WeightConstraint.SUM_TO_ONE:
            v = v / v.sum()
        else:
            v = v / np.exp(np.mean(np.log(v)))
        return GlobalWeights(v, metric.constraint)
    if isinstance(metric, LocalWeights):
        vs = metric.vs * np.exp(rng.normal(scale=scale, size=metric.vs.shape))
        if metric.constraint is WeightConstraint.SUM_TO_ONE:
            vs = vs / vs.sum(axis=1, keepdims=True)
        else:
            vs = vs / np.exp(np.mean(np.log(vs), axis=1, keepdims=True))
        return LocalWeights(vs, metric.constraint)
    if isinstance(metric, GlobalCov):
        return GlobalCov(perturb_spd(metric.m, rng, scale))
    if isinstance(metric, LocalCov):
        return LocalCov(np.stack([perturb_spd(m, rng, scale) for m in metric.ms]))
    return metric
