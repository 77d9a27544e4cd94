"""Shuffle-permutation feature importance with a pluggable predictor and a
built-in bagged decision-tree ensemble.

Metric 1 shuffles every column derived from a source feature jointly and
records base_score - shuffled_score (for the classification accuracy metric,
higher means more important). Metric 2 shuffles all siblings of each derived
column except the column itself and records the raw resulting score (lower
means relatively more important within the feature).
"""

from __future__ import annotations

import hashlib
import json
import logging
from dataclasses import dataclass

import numpy as np

from .encoders import CLASS_PASSTHROUGH
from .errors import ConfigError, DataError
from .registry import BEHAVIORS
from .tidytable import Cell, TidyTable, as_number, canon_text
from .treeengine import FitArtifact, apply

logger = logging.getLogger(__name__)

TASK_CLASSIFICATION = "classification"
TASK_REGRESSION = "regression"


@dataclass
class PredictorAdapter:
    """Opaque model hooks: train on features/labels, predict deterministically."""

    train: callable
    predict: callable
    task: str


@dataclass
class ImportanceReport:
    task: str
    base_score: float
    metric1: dict[str, float]
    metric2: dict[str, float]
    seed: int
    val_fraction: float
    repeats: int = 1

    def to_jsonable(self) -> dict:
        return {
            "task": self.task,
            "base_score": self.base_score,
            "metric1": dict(sorted(self.metric1.items())),
            "metric2": dict(sorted(self.metric2.items())),
            "seed": self.seed,
            "val_fraction": self.val_fraction,
            "repeats": self.repeats,
        }

    def to_json(self) -> bytes:
        return json.dumps(self.to_jsonable(), sort_keys=True, ensure_ascii=False,
                          allow_nan=False, separators=(",", ":")).encode("utf-8")

    def sorted_table(self) -> str:
        """Plain-text rendering, features sorted by metric1 descending."""
        lines = [f"task: {self.task}", f"base_score: {self.base_score:.6f}", ""]
        lines.append("metric1 (source features, higher = more important):")
        for name in sorted(self.metric1, key=lambda k: (-self.metric1[k], k)):
            lines.append(f"  {name}: {self.metric1[name]:+.6f}")
        lines.append("")
        lines.append("metric2 (derived columns, lower = more relative importance):")
        for name in sorted(self.metric2, key=lambda k: (self.metric2[k], k)):
            lines.append(f"  {name}: {self.metric2[name]:.6f}")
        return "\n".join(lines) + "\n"


def _feature_seed(seed: int, name: str, repeat: int) -> int:
    digest = hashlib.sha256(f"{seed}:{repeat}:{name}".encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big")


def _feature_matrix(artifact: FitArtifact, encoded: TidyTable):
    """Numeric matrix over non-passthrough derived columns, grouped by source."""
    col_index: dict[str, int] = {}
    groups: dict[str, list[str]] = {}
    arrays = []
    for source, plan in artifact.per_source.items():
        headers = []
        for rec in plan.steps:
            if not rec.retained:
                continue
            if BEHAVIORS[rec.behavior].coltype_class == CLASS_PASSTHROUGH:
                continue
            headers.extend(rec.output_headers)
        groups[source] = headers
        for h in headers:
            col_index[h] = len(arrays)
            raw = encoded.column(h)
            arrays.append(np.array(
                [v if isinstance(v, float) else 0.0 for v in raw], dtype=float
            ))
    if arrays:
        X = np.column_stack(arrays)
    else:
        X = np.zeros((encoded.row_count, 0))
    return X, col_index, groups


def _score(task: str, predictions: np.ndarray, truth: np.ndarray) -> float:
    if task == TASK_CLASSIFICATION:
        return float(np.mean(predictions == truth))
    p = np.log1p(np.maximum(predictions, 0.0))
    t = np.log1p(np.maximum(truth, 0.0))
    return float(np.mean((p - t) ** 2))


def _encode_labels(labels: list[Cell], task: str):
    keep = [i for i, v in enumerate(labels) if v is not None]
    if task == TASK_CLASSIFICATION:
        texts = [canon_text(labels[i]) for i in keep]
        classes = sorted(set(texts))
        code = {c: i for i, c in enumerate(classes)}
        return keep, np.array([code[t] for t in texts], dtype=int)
    values = []
    kept = []
    for i in keep:
        v = as_number(labels[i])
        if v is not None:
            kept.append(i)
            values.append(v)
    return kept, np.array(values, dtype=float)


def permutation_importance(artifact: FitArtifact, table: TidyTable,
                           labels: list[Cell], adapter: PredictorAdapter,
                           val_fraction: float = 0.2, seed: int = 0,
                           repeats: int = 1) -> ImportanceReport:
    """Seeded split, base score, then per-feature and per-column shuffle metrics."""
    if len(labels) != table.row_count:
        raise DataError("labels length does not match table rows")
    encoded = apply(artifact, table)
    X_all, col_index, groups = _feature_matrix(artifact, encoded)
    keep, y_all = _encode_labels(labels, adapter.task)
    X_all = X_all[keep]

    n = len(y_all)
    val_count = int(round(n * val_fraction))
    if val_count < 5:
        raise DataError("at least 5 validation rows required; grow the data or val_fraction")
    rng = np.random.default_rng(seed)
    perm = rng.permutation(n)
    val_idx, train_idx = perm[:val_count], perm[val_count:]
    if len(train_idx) == 0:
        raise DataError("empty training split")
    y_val = y_all[val_idx]
    if adapter.task == TASK_CLASSIFICATION and len(np.unique(y_val)) < 2:
        raise ConfigError(
            "validation split holds a single class; rerun with another seed"
        )

    model = adapter.train(X_all[train_idx], y_all[train_idx])
    X_val = X_all[val_idx]
    base = _score(adapter.task, adapter.predict(model, X_val), y_val)

    def rescore(shuffle_headers: list[str], feature: str, repeat: int) -> float:
        idxs = [col_index[h] for h in shuffle_headers]
        if not idxs:
            return base
        p = np.random.default_rng(_feature_seed(seed, feature, repeat)).permutation(len(val_idx))
        shuffled = X_val.copy()
        shuffled[:, idxs] = X_val[p][:, idxs]
        return _score(adapter.task, adapter.predict(model, shuffled), y_val)

    metric1: dict[str, float] = {}
    metric2: dict[str, float] = {}
    for source, headers in groups.items():
        deltas = [base - rescore(headers, source, r) for r in range(repeats)]
        metric1[source] = float(np.mean(deltas))
        for target in headers:
            siblings = [h for h in headers if h != target]
            scores = [rescore(siblings, source, r) for r in range(repeats)]
            metric2[target] = float(np.mean(scores))
    return ImportanceReport(
        task=adapter.task,
        base_score=base,
        metric1=metric1,
        metric2=metric2,
        seed=seed,
        val_fraction=val_fraction,
        repeats=repeats,
    )


# Built-in predictor: bagged CART trees, gini for classification and variance
# for regression, seeded bootstraps, majority vote / mean aggregation.

def _best_split(X, y, features, task: str, n_classes: int, parent_imp: float):
    n = len(y)
    best = None
    for j in features:
        order = np.argsort(X[:, j], kind="stable")
        xs, ys = X[order, j], y[order]
        cuts = np.nonzero(xs[1:] > xs[:-1])[0]
        if len(cuts) == 0:
            continue
        nl = cuts + 1.0
        nr = n - nl
        if task == TASK_CLASSIFICATION:
            onehot = np.zeros((n, n_classes))
            onehot[np.arange(n), ys] = 1.0
            cum = np.cumsum(onehot, axis=0)
            lc = cum[cuts]
            rc = cum[-1] - lc
            imp_l = 1.0 - ((lc / nl[:, None]) ** 2).sum(axis=1)
            imp_r = 1.0 - ((rc / nr[:, None]) ** 2).sum(axis=1)
        else:
            cs = np.cumsum(ys)
            css = np.cumsum(ys.astype(float) ** 2)
            sl, ssl = cs[cuts], css[cuts]
            sr, ssr = cs[-1] - sl, css[-1] - ssl
            imp_l = ssl / nl - (sl / nl) ** 2
            imp_r = ssr / nr - (sr / nr) ** 2
        weighted = (nl * imp_l + nr * imp_r) / n
        k = int(np.argmin(weighted))
        if weighted[k] < parent_imp - 1e-12 and (best is None or weighted[k] < best[0] - 1e-12):
            threshold = (xs[cuts[k]] + xs[cuts[k] + 1]) / 2.0
            best = (float(weighted[k]), j, float(threshold))
    return best


def _impurity(y, task: str, n_classes: int) -> float:
    if task == TASK_CLASSIFICATION:
        probs = np.bincount(y, minlength=n_classes) / len(y)
        return float(1.0 - (probs ** 2).sum())
    return float(np.var(y))


def _leaf_value(y, task: str) -> float:
    if task == TASK_CLASSIFICATION:
        return float(np.argmax(np.bincount(y)))
    return float(np.mean(y))


def _grow(X, y, depth, max_depth, task, n_classes, rng, feature_subsample):
    if depth >= max_depth or len(y) < 2 or len(np.unique(y)) == 1:
        return {"leaf": _leaf_value(y, task)}
    d = X.shape[1]
    if feature_subsample and d > 1:
        k = max(1, int(np.sqrt(d)))
        features = sorted(rng.choice(d, size=k, replace=False).tolist())
    else:
        features = range(d)
    parent = _impurity(y, task, n_classes)
    split = _best_split(X, y, features, task, n_classes, parent)
    if split is None:
        return {"leaf": _leaf_value(y, task)}
    _, j, threshold = split
    mask = X[:, j] <= threshold
    return {
        "feature": j,
        "threshold": threshold,
        "left": _grow(X[mask], y[mask], depth + 1, max_depth, task, n_classes, rng,
                      feature_subsample),
        "right": _grow(X[~mask], y[~mask], depth + 1, max_depth, task, n_classes, rng,
                       feature_subsample),
    }


def _predict_tree(node, X) -> np.ndarray:
    out = np.empty(len(X))
    stack = [(node, np.arange(len(X)))]
    while stack:
        nd, idx = stack.pop()
        if len(idx) == 0:
            continue
        if "leaf" in nd:
            out[idx] = nd["leaf"]
            continue
        mask = X[idx, nd["feature"]] <= nd["threshold"]
        stack.append((nd["left"], idx[mask]))
        stack.append((nd["right"], idx[~mask]))
    return out


def builtin_tree(task: str, max_depth: int = 8, n_trees: int = 10, seed: int = 0,
                 feature_subsample: bool = False) -> PredictorAdapter:
    """Small bagged-CART ensemble; deterministic for a given seed."""
    if task not in (TASK_CLASSIFICATION, TASK_REGRESSION):
        raise ConfigError(f"unknown task {task!r}")

    def train(X, y):
        X = np.asarray(X, dtype=float)
        if len(X) == 0:
            raise DataError("empty training set")
        if task == TASK_CLASSIFICATION:
            y = np.asarray(y, dtype=int)
            n_classes = int(y.max()) + 1 if len(y) else 1
        else:
            y = np.asarray(y, dtype=float)
            n_classes = 0
        trees = []
        for child in np.random.SeedSequence(seed).spawn(n_trees):
            rng = np.random.default_rng(child)
            idx = rng.integers(0, len(y), len(y))
            trees.append(_grow(X[idx], y[idx], 0, max_depth, task, n_classes, rng,
                               feature_subsample))
        return {"trees": trees, "n_classes": n_classes}

    def predict(model, X):
        X = np.asarray(X, dtype=float)
        preds = np.stack([_predict_tree(t, X) for t in model["trees"]])
        if task == TASK_CLASSIFICATION:
            votes = np.zeros((len(X), max(model["n_classes"], 1)))
            for row in preds.astype(int):
                votes[np.arange(len(X)), row] += 1.0
            return votes.argmax(axis=1)
        return preds.mean(axis=0)

    return PredictorAdapter(train=train, predict=predict, task=task)
