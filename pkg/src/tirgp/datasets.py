"""Dataset ingestion, splitting and the exponent-range grid search.

Files are headed CSV or TSV, optionally gzipped. Rows that fail numeric
parsing are dropped and counted rather than aborting the load; structural
problems (missing target, ragged rows, empty file) raise.
"""

from __future__ import annotations

import csv
import gzip
import math
import warnings
from dataclasses import dataclass, replace

import numpy as np

from .evolution import EXP_RANGES, SearchConfig, evolve_run, overlap_bounds
from .expressions import eval_tir

__all__ = [
    "Dataset",
    "load",
    "train_test_split",
    "subsample",
    "split_overlap",
    "grid_search",
    "SUBSAMPLE_CAP",
]

SUBSAMPLE_CAP = 10_000


@dataclass
class Dataset:
    X: np.ndarray
    y: np.ndarray
    names: list[str]
    rejected_rows: int = 0

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def d(self) -> int:
        return self.X.shape[1]

    def take(self, idx) -> "Dataset":
        return Dataset(self.X[idx], self.y[idx], self.names, 0)


def _open_text(path: str):
    if str(path).endswith(".gz"):
        return gzip.open(path, "rt", encoding="utf-8", newline="")
    return open(path, "r", encoding="utf-8", newline="")


def _delimiter(path: str) -> str:
    base = str(path)
    if base.endswith(".gz"):
        base = base[:-3]
    return "\t" if base.endswith((".tsv", ".tab")) else ","


def load(path, target="target", target_required: bool = True) -> Dataset:
    """Read a headed CSV/TSV(.gz) file into features and a target column.

    ``target`` selects the column by header name, or by index when it parses
    as an integer and no header matches. With ``target_required=False`` a file
    without the target column loads with every column as a feature (used for
    prediction inputs).
    """
    with _open_text(path) as fh:
        reader = csv.reader(fh, delimiter=_delimiter(path))
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError(f"{path}: empty file") from None
        header = [h.strip() for h in header]

        target_idx: int | None = None
        if str(target) in header:
            target_idx = header.index(str(target))
        else:
            try:
                idx = int(target)
            except (TypeError, ValueError):
                idx = None
            if idx is not None and -len(header) <= idx < len(header):
                target_idx = idx % len(header)
            elif target_required:
                raise ValueError(f"{path}: target column {target!r} not found")

        rows, targets, rejected = [], [], 0
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise ValueError(
                    f"{path}:{lineno}: expected {len(header)} fields, got {len(row)}"
                )
            try:
                values = [float(cell) for cell in row]
            except ValueError:
                rejected += 1
                continue
            if not all(math.isfinite(v) for v in values):
                rejected += 1
                continue
            if target_idx is None:
                rows.append(values)
            else:
                targets.append(values.pop(target_idx))
                rows.append(values)

    names = [h for i, h in enumerate(header) if i != target_idx]
    d = len(names)
    X = np.array(rows, dtype=float).reshape(len(rows), d)
    y = np.array(targets, dtype=float) if target_idx is not None else np.zeros(len(rows))
    return Dataset(X, y, names, rejected)


def train_test_split(ds: Dataset, ratio: float = 0.75, seed: int = 0):
    """Seeded shuffle then split; the train part keeps the shuffled order."""
    if not 0.0 < ratio <= 1.0:
        raise ValueError("ratio must be in (0, 1]")
    perm = np.random.default_rng(seed).permutation(ds.n)
    k = int(ds.n * ratio)
    if k == ds.n:
        warnings.warn("train/test split ratio 1.0 leaves an empty test set")
    return ds.take(perm[:k]), ds.take(perm[k:])


def subsample(train: Dataset, cap: int = SUBSAMPLE_CAP, seed: int = 0) -> Dataset:
    """Uniform subsample without replacement when the training set exceeds cap."""
    if train.n <= cap:
        return train
    idx = np.random.default_rng(seed).choice(train.n, size=cap, replace=False)
    return train.take(idx)


def split_overlap(train: Dataset, frac: float = 0.9):
    """Overlapping slices: the first ceil(frac*n) rows fit the coefficients,
    the last ceil(frac*n) rows score the fitness."""
    if not 0.0 < frac <= 1.0:
        raise ValueError("frac must be in (0, 1]")
    m, start = overlap_bounds(train.n, frac)
    return train.take(np.arange(0, m)), train.take(np.arange(start, train.n))


def _fold_indices(n: int, folds: int, seed: int):
    perm = np.random.default_rng(seed).permutation(n)
    return np.array_split(perm, folds)


def _r2(y_true: np.ndarray, pred: np.ndarray) -> float:
    ss_tot = float(np.sum((y_true - y_true.mean()) ** 2))
    if ss_tot == 0.0 or not np.all(np.isfinite(pred)):
        return -math.inf
    return 1.0 - float(np.sum((y_true - pred) ** 2)) / ss_tot


def grid_search(
    cfg_base: SearchConfig,
    train: Dataset,
    combos=EXP_RANGES,
    folds: int = 5,
    seed: int = 0,
    cv_pop_size: int = 100,
    cv_generations: int = 20,
) -> SearchConfig:
    """Pick the exponent range by k-fold cross-validated mean R squared.

    Each combo runs a reduced evolution per fold; ties break toward the
    narrower range, then toward the earlier combo. Folds with a constant
    target are skipped; if every fold of every combo is skipped the range
    falls back to (-1, 1).
    """
    parts = _fold_indices(train.n, folds, seed)
    results = []
    for ci, combo in enumerate(combos):
        scores = []
        for fi in range(folds):
            val_idx = parts[fi]
            tr_idx = np.concatenate([parts[j] for j in range(folds) if j != fi])
            y_val = train.y[val_idx]
            if len(val_idx) == 0 or len(tr_idx) < 2 or np.all(y_val == y_val[0]):
                continue
            sub_seed = int(
                np.random.SeedSequence(seed, spawn_key=(ci, fi)).generate_state(1)[0]
            )
            cfg = replace(
                cfg_base,
                exp_range=tuple(combo),
                pop_size=cv_pop_size,
                generations=cv_generations,
                seed=sub_seed,
            )
            try:
                best = evolve_run(cfg, train.X[tr_idx], train.y[tr_idx])
            except RuntimeError:
                continue
            scores.append(_r2(y_val, eval_tir(best.expr, train.X[val_idx])))
        if scores:
            width = combo[1] - combo[0]
            results.append((-float(np.mean(scores)), width, ci, combo))
    if not results:
        return replace(cfg_base, exp_range=(-1, 1))
    results.sort()
    return replace(cfg_base, exp_range=tuple(results[0][3]))
