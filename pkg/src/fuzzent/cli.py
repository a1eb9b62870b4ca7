"""Command-line interface: clustering, tuning, generation, evaluation, experiments.

Exit codes: 0 success, 1 data or convergence failure (diagnostic on stderr),
2 bad arguments (usage text).  Every command is deterministic given its full
flag set including --seed.
"""
from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import sys
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .core import (
    AlgorithmSpec,
    FuzzyPartition,
    GlobalCov,
    GlobalWeights,
    LocalCov,
    LocalWeights,
    PrototypeSet,
    Variant,
)
from .data import load_csv, save_csv, standardize
from .engine import DESCRIPTORS
from .evaluation import adjusted_rand_index, hard_partition, hullermeier_index, robustness_detection
from .exceptions import FuzzentError
from .tuning import (
    DEFAULT_TV_GRID,
    TUNING_RESTARTS,
    SweepConfig,
    best_of_restarts,
    monte_carlo,
    select_tu,
    select_tu_tv,
    sweep_curve,
    tuned_tu_tv,
)

_FMT = ".17g"


def _fmt(x: float) -> str:
    return format(float(x), _FMT)


def _write_matrix(path: Path, header: list[str], rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) if isinstance(v, float) else v for v in row])


def _read_matrix(path) -> tuple[list[str], np.ndarray]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = [[float(c) for c in row] for row in reader if row]
    return header, np.asarray(rows)


def _write_metric_csv(path: Path, metric, feature_names) -> bool:
    names = list(feature_names)
    if isinstance(metric, GlobalWeights):
        _write_matrix(path, names, [[float(v) for v in metric.v]])
    elif isinstance(metric, LocalWeights):
        _write_matrix(
            path,
            ["cluster"] + names,
            [[k] + [float(v) for v in metric.vs[k]] for k in range(metric.vs.shape[0])],
        )
    elif isinstance(metric, GlobalCov):
        _write_matrix(path, names, [[float(v) for v in row] for row in metric.m])
    elif isinstance(metric, LocalCov):
        rows = []
        for k in range(metric.ms.shape[0]):
            rows.extend([k] + [float(v) for v in row] for row in metric.ms[k])
        _write_matrix(path, ["cluster"] + names, rows)
    else:
        return False
    return True


def _variant_lines() -> list[str]:
    lines = ["variant          distance                weighting"]
    dist = {
        "fcm-er-l2": "squared Euclidean",
        "fcm-er-l1": "City-Block",
    }
    for variant, desc in DESCRIPTORS.items():
        if desc.pointwise is None:
            d = "Mahalanobis"
        else:
            d = "squared Euclidean" if desc.pointwise.value == "squared" else "City-Block"
        scope = desc.metric_scope.value.replace("_", " ")
        constraint = f", {desc.weight_constraint.value}=1" if desc.weight_constraint else ""
        lines.append(f"{variant.value:<16} {d:<22} {scope}{constraint}")
    return lines


def _labels_from_csv(path, column: str) -> np.ndarray:
    """Integer-encode one column of a CSV in order of first appearance."""
    from .exceptions import UnknownLabelColumn

    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = [h.strip() for h in next(reader)]
        if column not in header:
            raise UnknownLabelColumn(f"label column {column!r} not found; header has {header}")
        idx = header.index(column)
        seen: dict[str, int] = {}
        labels = [
            seen.setdefault(row[idx].strip(), len(seen))
            for row in reader
            if row and any(cell.strip() for cell in row)
        ]
    return np.asarray(labels)


def _utc_now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def _parse_tv_grid(text: str) -> tuple[float, ...]:
    return tuple(float(v) for v in text.split(","))


def cmd_cluster(args, parser: argparse.ArgumentParser) -> int:
    if args.from_manifest:
        with open(args.from_manifest, encoding="utf-8") as fh:
            manifest = json.load(fh)
        spec_d = manifest["spec"]
        args.input = manifest["input"]
        args.variant = spec_d["variant"]
        args.clusters = spec_d["c"]
        args.tu = spec_d["t_u"]
        args.tv = spec_d["t_v"]
        args.max_iter = spec_d["max_iter"]
        args.epsilon = spec_d["epsilon"]
        args.seed = spec_d["seed"]
        args.restarts = manifest["restarts"]
        args.standardize = manifest["standardize"]
        args.label_column = manifest["label_column"]
        args.l1_solver = manifest["l1_solver"]
    if args.input is None:
        parser.error("an input CSV is required (or --from-manifest)")
    if args.variant is None or args.clusters is None:
        parser.error("--variant and --clusters are required")

    variant = Variant.parse(args.variant)
    data = load_csv(args.input, label_column=args.label_column)
    std = standardize(data) if args.standardize else None
    fit_data = std.dataset if std is not None else data

    tu, tv = args.tu, args.tv
    if tu is None:
        cfg = SweepConfig(
            tu_min=args.tu_min,
            tu_max=args.tu_max,
            tu_step=args.tu_step,
            tv_grid=_parse_tv_grid(args.tv_grid) if variant.uses_tv else None,
            restarts_per_candidate=TUNING_RESTARTS,
        )
        tu, tv = tuned_tu_tv(
            variant, fit_data, args.clusters, args.seed, cfg, backoff=args.tu_backoff
        )
        print(f"tuned t_u={_fmt(tu)}" + (f" t_v={_fmt(tv)}" if tv is not None else ""))
    if variant.uses_tv and tv is None:
        parser.error(f"variant {variant.value} requires --tv (or let tuning pick it)")

    spec = AlgorithmSpec(
        variant, args.clusters, t_u=tu, t_v=tv,
        max_iter=args.max_iter, epsilon=args.epsilon, seed=args.seed,
    )
    result = best_of_restarts(spec, fit_data, args.restarts, args.seed, l1_solver=args.l1_solver)

    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    names = list(data.feature_names or (f"x{j + 1}" for j in range(data.p)))
    c = spec.c

    prototypes = result.prototypes.g
    if std is not None:
        prototypes = std.restore_points(prototypes)

    _write_matrix(
        out_dir / "memberships.csv",
        [f"cluster_{k}" for k in range(c)],
        [[float(v) for v in row] for row in result.partition.u],
    )
    _write_matrix(out_dir / "prototypes.csv", names, [[float(v) for v in row] for row in prototypes])
    hard = hard_partition(result.partition)
    _write_matrix(out_dir / "assignments.csv", ["cluster"], [[int(a)] for a in hard.assign])
    _write_matrix(
        out_dir / "objective_trace.csv",
        ["iteration", "objective"],
        [[t + 1, float(j)] for t, j in enumerate(result.objective_trace)],
    )
    outputs = {
        "memberships": "memberships.csv",
        "prototypes": "prototypes.csv",
        "assignments": "assignments.csv",
        "objective_trace": "objective_trace.csv",
    }
    if _write_metric_csv(out_dir / "metric.csv", result.metric, names):
        outputs["metric"] = "metric.csv"

    manifest = {
        "tool": "fuzzent",
        "version": __version__,
        "command": "cluster",
        "created": _utc_now(),
        "input": str(Path(args.input).resolve()),
        "label_column": args.label_column,
        "standardize": bool(args.standardize),
        "restarts": args.restarts,
        "l1_solver": args.l1_solver,
        "prototypes_space": "original",
        "spec": {
            "variant": spec.variant.value,
            "c": spec.c,
            "t_u": spec.t_u,
            "t_v": spec.t_v,
            "max_iter": spec.max_iter,
            "epsilon": spec.epsilon,
            "seed": spec.seed,
        },
        "outputs": outputs,
    }
    with open(out_dir / "manifest.json", "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")

    print(
        f"{spec.variant.value}: objective {_fmt(result.final_objective)} "
        f"after {result.iterations} iterations ({result.termination.value})"
    )
    if data.labels is not None:
        ari = adjusted_rand_index(hard, data.labels)
        hul = hullermeier_index(result.partition, data.labels)
        print(f"ARI {ari:.4f}  HUL {hul:.4f}")
    print(f"outputs written to {out_dir}")
    return 0


def cmd_generate(args, parser: argparse.ArgumentParser) -> int:
    from .data import generate_config, generate_outlier_set

    if args.experiment == "outliers":
        if args.pct is None:
            parser.error("--pct is required for the outlier experiment")
        ds = generate_outlier_set(args.pct, args.seed)
    else:
        if args.pct is not None:
            parser.error("--pct only applies to the outlier experiment")
        ds = generate_config(int(args.experiment[-1]), args.seed)
    save_csv(ds, args.out)
    print(f"wrote {ds.n} rows to {args.out}")
    return 0


def cmd_tune(args, parser: argparse.ArgumentParser) -> int:
    variant = Variant.parse(args.variant)
    data = load_csv(args.input, label_column=args.label_column)
    if args.standardize:
        data = standardize(data).dataset
    cfg = SweepConfig(
        tu_min=args.tu_min,
        tu_max=args.tu_max,
        tu_step=args.tu_step,
        tv_grid=_parse_tv_grid(args.tv_grid) if args.tv_grid else None,
        min_centroid_threshold=args.threshold,
        restarts_per_candidate=args.restarts,
        exact=args.exact,
    )
    template = AlgorithmSpec(
        variant, args.clusters, t_u=1.0,
        t_v=(cfg.tv_grid or DEFAULT_TV_GRID)[0] if variant.uses_tv else None,
        seed=args.seed,
    )
    if variant.uses_tv:
        if cfg.tv_grid is None:
            cfg = dataclasses.replace(cfg, tv_grid=DEFAULT_TV_GRID)
        tu, tv = select_tu_tv(template, data, cfg)
        print(f"t_u {_fmt(tu)}")
        print(f"t_v {_fmt(tv)}")
        curve_template = dataclasses.replace(template, t_v=tv)
    else:
        tu = select_tu(template, data, cfg)
        print(f"t_u {_fmt(tu)}")
        curve_template = template
    if args.curve_out:
        curve = sweep_curve(curve_template, data, cfg)
        _write_matrix(Path(args.curve_out), ["t_u", "min_centroid_distance"], curve)
        print(f"curve written to {args.curve_out}")
    return 0


def cmd_evaluate(args, parser: argparse.ArgumentParser) -> int:
    header, u = _read_matrix(args.membership)
    partition = FuzzyPartition(u)
    labels = _labels_from_csv(args.labels, args.label_column)
    hul = hullermeier_index(partition, labels)
    ari = adjusted_rand_index(hard_partition(partition), labels)
    values = {"hul": hul, "ari": ari}
    if args.prototypes or args.ideal_centers:
        if not (args.prototypes and args.ideal_centers):
            parser.error("--prototypes and --ideal-centers must be given together")
        _, g = _read_matrix(args.prototypes)
        _, ideal = _read_matrix(args.ideal_centers)
        values["rd"] = robustness_detection(
            PrototypeSet(g), ideal, paper_formula=args.paper_rd
        )
    if args.json:
        print(json.dumps(values, sort_keys=True))
    else:
        for key in ("hul", "ari", "rd"):
            if key in values:
                print(f"{key.upper():>4} {values[key]:.4f}")
    return 0


def cmd_experiment(args, parser: argparse.ArgumentParser) -> int:
    if args.replications < 1:
        parser.error("--replications must be at least 1")
    if args.restarts < 1:
        parser.error("--restarts must be at least 1")
    if args.experiment == "outliers" and args.pct is None:
        parser.error("--pct is required for the outlier experiment")
    if args.variants.strip().lower() == "all":
        variants = list(Variant)
    else:
        variants = [Variant.parse(v) for v in args.variants.split(",")]
    params = None
    if args.tu is not None:
        params = {
            v: (args.tu, args.tv if v.uses_tv else None) for v in variants
        }
        missing_tv = [v.value for v in variants if v.uses_tv and args.tv is None]
        if missing_tv:
            parser.error(f"--tv is required for variants {missing_tv}")
    report = monte_carlo(
        args.experiment,
        variants,
        args.replications,
        args.restarts,
        args.seed,
        pct=args.pct,
        params=params,
        tv_grid=_parse_tv_grid(args.tv_grid),
        n_jobs=args.jobs,
        include_outliers=args.include_outliers,
        keep_going=args.keep_going,
    )
    print(report.to_text())
    if args.out:
        Path(args.out).write_text(report.to_csv(), encoding="utf-8")
        print(f"report written to {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fuzzent",
        description="Entropy-regularized fuzzy clustering with adaptive distances.",
    )
    parser.add_argument("--version", action="version", version=f"fuzzent {__version__}")
    parser.add_argument(
        "--list-variants", action="store_true", help="print the variant table and exit"
    )
    sub = parser.add_subparsers(dest="command")

    p = sub.add_parser("cluster", help="fit one variant on a CSV dataset")
    p.add_argument("input", nargs="?", help="input CSV (header row required)")
    p.add_argument("--variant", help="algorithm variant (see --list-variants)")
    p.add_argument("--clusters", type=int, help="number of clusters")
    p.add_argument("--tu", type=float, default=None, help="fuzzifier; tuned when omitted")
    p.add_argument("--tv", type=float, default=None, help="weight fuzzifier (GS/LS variants)")
    p.add_argument("--restarts", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--standardize", action="store_true")
    p.add_argument("--label-column", default=None)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--max-iter", type=int, default=100)
    p.add_argument("--epsilon", type=float, default=1e-5)
    p.add_argument("--l1-solver", choices=("median", "irls"), default="median")
    p.add_argument("--tu-min", type=float, default=0.01)
    p.add_argument("--tu-max", type=float, default=100.0)
    p.add_argument("--tu-step", type=float, default=0.01)
    p.add_argument("--tv-grid", default=",".join(str(v) for v in DEFAULT_TV_GRID))
    p.add_argument(
        "--tu-backoff", type=float, default=0.25,
        help="run at this fraction of the swept merge threshold when tuning",
    )
    p.add_argument("--from-manifest", default=None, help="replay a previous run's manifest")

    p = sub.add_parser("generate", help="write a synthetic experiment dataset as CSV")
    p.add_argument(
        "--experiment", required=True,
        choices=("config1", "config2", "config3", "config4", "outliers"),
    )
    p.add_argument("--pct", type=int, choices=(0, 10, 20, 30), default=None)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)

    p = sub.add_parser("tune", help="unsupervised T_u (and T_v) selection")
    p.add_argument("input")
    p.add_argument("--variant", required=True)
    p.add_argument("--clusters", type=int, required=True)
    p.add_argument("--label-column", default=None)
    p.add_argument("--standardize", action="store_true")
    p.add_argument("--tu-min", type=float, default=0.01)
    p.add_argument("--tu-max", type=float, default=100.0)
    p.add_argument("--tu-step", type=float, default=0.01)
    p.add_argument("--threshold", type=float, default=0.1)
    p.add_argument("--tv-grid", default=None)
    p.add_argument("--restarts", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--exact", action="store_true", help="walk every grid point (no bisection)")
    p.add_argument("--curve-out", default=None)

    p = sub.add_parser("evaluate", help="compute HUL/ARI (and rd) from CSV artifacts")
    p.add_argument("--membership", required=True)
    p.add_argument("--labels", required=True)
    p.add_argument("--label-column", default="label")
    p.add_argument("--prototypes", default=None)
    p.add_argument("--ideal-centers", default=None)
    p.add_argument("--paper-rd", action="store_true", help="use the uncorrected published numerator")
    p.add_argument("--json", action="store_true")

    p = sub.add_parser("experiment", help="Monte Carlo replication study")
    p.add_argument(
        "--experiment", required=True,
        choices=("config1", "config2", "config3", "config4", "outliers"),
    )
    p.add_argument("--pct", type=int, choices=(0, 10, 20, 30), default=None)
    p.add_argument("--variants", default="all")
    p.add_argument("--replications", type=int, required=True)
    p.add_argument("--restarts", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tu", type=float, default=None, help="fix T_u for all variants (skip tuning)")
    p.add_argument("--tv", type=float, default=None)
    p.add_argument("--tv-grid", default=",".join(str(v) for v in DEFAULT_TV_GRID))
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--keep-going", action="store_true")
    p.add_argument("--include-outliers", action="store_true")
    p.add_argument("--out", default=None, help="write the report CSV here")

    return parser


_COMMANDS = {
    "cluster": cmd_cluster,
    "generate": cmd_generate,
    "tune": cmd_tune,
    "evaluate": cmd_evaluate,
    "experiment": cmd_experiment,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.list_variants:
        print("\n".join(_variant_lines()))
        return 0
    if args.command is None:
        parser.error("a command is required (cluster, generate, tune, evaluate, experiment)")
    try:
        return _COMMANDS[args.command](args, parser)
    except FuzzentError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
