"""Command-line surface: train, predict and benchmark subcommands."""

from __future__ import annotations

import argparse
import json
import math
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .datasets import load, subsample, train_test_split
from .estimator import TIRRegressor
from .evolution import compute_budget
from .expressions import deserialize, eval_tir, serialize, serialize_text, to_text
from .fitting import penalty_active
from .intervals import load_domain_file
from .metrics import bootstrap_median_ci, mae, mse, r2_score

__all__ = ["main"]


def _parse_exp_range(text: str) -> tuple[int, int]:
    try:
        lo, hi = (int(v) for v in text.replace("(", "").replace(")", "").split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(
            f"expected an integer pair like '-5,5', got {text!r}"
        ) from None
    return lo, hi


def _add_search_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--target", default="target", help="target column name or index")
    p.add_argument("--seed", type=int, default=0, help="run seed")
    p.add_argument("--pop", type=int, default=1000, help="population size")
    p.add_argument("--gens", type=int, default=500, help="generations")
    p.add_argument("--pc", type=float, default=0.30, help="crossover probability")
    p.add_argument("--pm", type=float, default=0.70, help="mutation probability")
    p.add_argument(
        "--budget",
        type=int,
        default=None,
        help="max total terms; default max(5, min(15, n_train // 10))",
    )
    p.add_argument(
        "--exp-range",
        type=_parse_exp_range,
        default=(-5, 5),
        help="inclusive exponent range 'lo,hi' (default -5,5)",
    )
    p.add_argument(
        "--grid-search",
        action="store_true",
        help="pick the exponent range by cross-validation over the six standard ranges",
    )
    p.add_argument("--folds", type=int, default=5, help="grid-search folds")
    p.add_argument("--cv-pop", type=int, default=100, help="grid-search population")
    p.add_argument("--cv-gens", type=int, default=20, help="grid-search generations")
    p.add_argument(
        "--penalty-rule",
        choices=("none", "samples", "dim", "points"),
        default="none",
        help="when to penalize fitness by model size",
    )
    p.add_argument("--penalty-c", type=float, default=0.01, help="size penalty constant")
    p.add_argument(
        "--train-ratio", type=float, default=0.75, help="train fraction of the split"
    )
    p.add_argument(
        "--domains",
        default=None,
        help="optional per-variable domain file: one 'name lo hi' line per variable",
    )


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tirgp",
        description="Symbolic regression over transformation-interaction-rational models",
    )
    parser.add_argument("--version", action="version", version=f"tirgp {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    train = sub.add_parser("train", help="fit a model and write a run report")
    train.add_argument("--dataset", required=True, help="CSV/TSV(.gz) with a header row")
    _add_search_flags(train)
    train.add_argument("--out", default="tirgp_report.json", help="report path")

    predict = sub.add_parser("predict", help="evaluate a saved model on a dataset")
    predict.add_argument("--model", required=True, help="model document path")
    predict.add_argument("--dataset", required=True, help="input CSV/TSV(.gz)")
    predict.add_argument(
        "--target", default="target", help="target column to drop if present"
    )
    predict.add_argument("--out", default="predictions.txt", help="output path")

    bench = sub.add_parser("benchmark", help="repeated runs over a dataset manifest")
    bench.add_argument("--manifest", required=True, help="JSON manifest of datasets")
    bench.add_argument(
        "--repeats", type=int, default=10, help="runs per dataset (seeds 0..repeats-1)"
    )
    bench.add_argument(
        "--seeds", default=None, help="comma-separated seeds overriding --repeats"
    )
    _add_search_flags(bench)
    bench.add_argument("--bootstrap-iters", type=int, default=1000)
    bench.add_argument("--bootstrap-seed", type=int, default=0)
    bench.add_argument("--confidence", type=float, default=0.95)
    bench.add_argument("--out", default="benchmark_report.json", help="report path")
    return parser


def _jsonable(v):
    if isinstance(v, float) and not math.isfinite(v):
        return None
    return v


def _fit_report(args, dataset_path: str, seed: int) -> dict:
    ds = load(dataset_path, args.target)
    if ds.rejected_rows:
        print(
            f"warning: dropped {ds.rejected_rows} non-numeric rows from {dataset_path}",
            file=sys.stderr,
        )
    if ds.n == 0:
        raise ValueError(f"{dataset_path}: no usable rows")
    train_ds, test_ds = train_test_split(ds, args.train_ratio, seed)
    train_ds = subsample(train_ds, seed=seed)

    domains = None
    if args.domains:
        box = load_domain_file(args.domains, ds.names)
        domains = [(iv.lo, iv.hi) for iv in box.intervals]

    reg = TIRRegressor(
        pop_size=args.pop,
        generations=args.gens,
        crossover_prob=args.pc,
        mutation_prob=args.pm,
        budget=args.budget,
        exp_range=args.exp_range,
        grid_search=args.grid_search,
        folds=args.folds,
        cv_pop_size=args.cv_pop,
        cv_generations=args.cv_gens,
        penalty_rule=args.penalty_rule,
        penalty_c=args.penalty_c,
        domains=domains,
        random_state=seed,
    )
    reg.fit(train_ds.X, train_ds.y)

    pred_train = reg.predict(train_ds.X)
    report = {
        "dataset": str(dataset_path),
        "seed": seed,
        "r2_train": _jsonable(r2_score(train_ds.y, pred_train)),
        "r2_test": None,
        "mse_test": None,
        "mae_test": None,
        "size": reg.size_,
        "runtime_seconds": reg.evolve_seconds_,
        "model": serialize(reg.model_),
        "model_text": {
            "infix": to_text(reg.model_, "infix"),
            "python": to_text(reg.model_, "python-syntax"),
            "s_expression": to_text(reg.model_, "s-expression"),
        },
        "config": {
            "pop": args.pop,
            "gens": args.gens,
            "pc": args.pc,
            "pm": args.pm,
            "budget": args.budget
            if args.budget is not None
            else compute_budget(train_ds.n),
            "exp_range": list(reg.exp_range_),
            "grid_search": args.grid_search,
            "penalty_rule": args.penalty_rule,
            "penalty_c": args.penalty_c,
            "penalty_applied": penalty_active(
                train_ds.n, train_ds.d, args.penalty_rule
            ),
            "train_ratio": args.train_ratio,
            "target": args.target,
        },
    }
    if test_ds.n > 0:
        pred_test = reg.predict(test_ds.X)
        report["r2_test"] = _jsonable(r2_score(test_ds.y, pred_test))
        report["mse_test"] = _jsonable(mse(test_ds.y, pred_test))
        report["mae_test"] = _jsonable(mae(test_ds.y, pred_test))
    return report


def _model_path_for(out: str) -> Path:
    out = Path(out)
    return out.with_name(out.stem + ".model.json")


def cmd_train(args) -> int:
    report = _fit_report(args, args.dataset, args.seed)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(json.dumps(report, indent=2) + "\n", encoding="utf-8")
    model_path = _model_path_for(args.out)
    model_path.write_text(
        serialize_text(deserialize(report["model"])) + "\n", encoding="utf-8"
    )
    print(f"report: {out}")
    print(f"model: {model_path}")
    print(f"expression: {report['model_text']['infix']}")
    return 0


def cmd_predict(args) -> int:
    model = deserialize(Path(args.model).read_text(encoding="utf-8"))
    ds = load(args.dataset, args.target, target_required=False)
    terms = model.p.terms + model.q.terms
    d = len(terms[0].exponents) if terms else ds.d
    if ds.d != d:
        raise ValueError(
            f"{args.dataset}: expected {d} feature columns, found {ds.d}"
        )
    preds = np.asarray(eval_tir(model, ds.X), dtype=float).reshape(ds.n)
    n_bad = int(np.sum(~np.isfinite(preds)))
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    with out.open("w", encoding="utf-8") as fh:
        for v in preds:
            fh.write(repr(float(v)) if math.isfinite(v) else "NaN")
            fh.write("\n")
    if n_bad:
        print(f"warning: {n_bad} non-finite predictions", file=sys.stderr)
    print(f"predictions: {out}")
    return 0


def cmd_benchmark(args) -> int:
    manifest = json.loads(Path(args.manifest).read_text(encoding="utf-8"))
    entries = manifest["datasets"] if isinstance(manifest, dict) else manifest
    if args.seeds:
        seeds = [int(s) for s in args.seeds.split(",")]
    else:
        seeds = list(range(args.repeats))

    per_dataset = []
    for entry in entries:
        path = entry["path"] if isinstance(entry, dict) else entry
        target = entry.get("target", args.target) if isinstance(entry, dict) else args.target
        runs = []
        for seed in seeds:
            run_args = argparse.Namespace(**vars(args))
            run_args.target = target
            t0 = time.perf_counter()
            report = _fit_report(run_args, path, seed)
            runs.append(
                {
                    "seed": seed,
                    "r2_test": report["r2_test"],
                    "mse_test": report["mse_test"],
                    "mae_test": report["mae_test"],
                    "size": report["size"],
                    "runtime_seconds": time.perf_counter() - t0,
                }
            )
        scores = [r["r2_test"] for r in runs if r["r2_test"] is not None]
        per_dataset.append(
            {
                "path": str(path),
                "target": target,
                "median_r2_test": float(np.median(scores)) if scores else None,
                "runs": runs,
            }
        )

    medians = [e["median_r2_test"] for e in per_dataset if e["median_r2_test"] is not None]
    median, lo, hi = bootstrap_median_ci(
        medians, args.bootstrap_iters, args.confidence, args.bootstrap_seed
    )
    aggregate = {
        "median_of_medians_r2": _jsonable(median),
        "ci_low": _jsonable(lo),
        "ci_high": _jsonable(hi),
        "confidence": args.confidence,
        "bootstrap_iters": args.bootstrap_iters,
        "bootstrap_seed": args.bootstrap_seed,
        "seeds": seeds,
    }
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(
        json.dumps({"datasets": per_dataset, "aggregate": aggregate}, indent=2) + "\n",
        encoding="utf-8",
    )
    print(f"benchmark report: {out}")
    print(
        f"median of medians R2: {aggregate['median_of_medians_r2']} "
        f"[{aggregate['ci_low']}, {aggregate['ci_high']}]"
    )
    return 0


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    handlers = {"train": cmd_train, "predict": cmd_predict, "benchmark": cmd_benchmark}
    try:
        return handlers[args.command](args)
    except (OSError, ValueError, RuntimeError, KeyError, json.JSONDecodeError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
