"""Splitting, confusion-matrix metrics, method comparison and the
convergence sweep. Melanoma (class 2) is the positive class."""

import csv
import math
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from . import anfis
from .errors import UndefinedMetricError
from .features import fit_standardizer, to_matrix
from .training import train

POSITIVE = 2
REPORT_HEADER = ("method", "seed", "split", "subset_size", "iterations", "accuracy", "sensitivity",
                 "specificity", "tp", "fn", "tn", "fp", "wall_seconds")


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int = 0
    fn: int = 0
    tn: int = 0
    fp: int = 0

    @property
    def total(self):
        return self.tp + self.fn + self.tn + self.fp


def _codes(values, what):
    arr = np.asarray(values).ravel()
    if arr.size and not np.all(np.isin(arr, (1, 2))):
        raise ValueError(f"{what} must contain only class codes 1 and 2")
    return arr.astype(int)


def confusion(predictions, labels):
    p = _codes(predictions, "predictions")
    y = _codes(labels, "labels")
    if p.shape != y.shape:
        raise ValueError(f"{p.size} predictions for {y.size} labels")
    pos_pred, pos_true = p == POSITIVE, y == POSITIVE
    return ConfusionMatrix(
        tp=int(np.sum(pos_pred & pos_true)),
        fn=int(np.sum(~pos_pred & pos_true)),
        tn=int(np.sum(~pos_pred & ~pos_true)),
        fp=int(np.sum(pos_pred & ~pos_true)),
    )


def accuracy(cm):
    """(TP + TN) / (TP + FN + FP + TN)"""
    if cm.total == 0:
        raise ValueError("accuracy of an empty confusion matrix is undefined")
    return (cm.tp + cm.tn) / (cm.tp + cm.fn + cm.fp + cm.tn)


def sensitivity(cm):
    """TP / (TP + FN); raises when there are no positive samples."""
    if cm.tp + cm.fn == 0:
        raise UndefinedMetricError("sensitivity needs at least one positive (melanoma) sample")
    return cm.tp / (cm.tp + cm.fn)


def specificity(cm):
    """TN / (TN + FP). Reported alongside the two headline metrics."""
    if cm.tn + cm.fp == 0:
        raise UndefinedMetricError("specificity needs at least one negative sample")
    return cm.tn / (cm.tn + cm.fp)


def _or_nan(metric, cm):
    try:
        return metric(cm)
    except ValueError:
        return math.nan


# ----------------------------------------------------------------- splitting

def _allocate(class_sizes, fraction):
    """Per-class counts: floor(fraction * n) each, then the leftover slots of
    round(fraction * total) go to the largest fractional parts."""
    sizes = np.asarray(class_sizes)
    exact = fraction * sizes
    base = np.floor(exact + 1e-9).astype(int)
    target = int(math.floor(fraction * sizes.sum() + 0.5 + 1e-9))
    frac = exact - base
    for i in np.argsort(-frac, kind="stable")[: max(0, target - int(base.sum()))]:
        base[i] += 1
    return base


def split(labels, train_fraction=0.7, seed=0):
    """Stratified shuffle split; returns sorted ``(train_idx, test_idx)``.

    Each class keeps at least one sample on both sides.
    """
    if not 0.0 < train_fraction < 1.0:
        raise ValueError("train_fraction must lie strictly between 0 and 1")
    y = np.asarray(labels)
    classes = sorted(set(y.tolist()))
    members = [np.flatnonzero(y == c) for c in classes]
    for c, m in zip(classes, members):
        if len(m) < 2:
            raise ValueError(f"class {c} has {len(m)} sample(s); a stratified split needs at least 2")
    counts = _allocate([len(m) for m in members], train_fraction)
    rng = np.random.default_rng(seed)
    train_idx, test_idx = [], []
    for m, n in zip(members, counts):
        n = min(max(int(n), 1), len(m) - 1)
        shuffled = m[rng.permutation(len(m))]
        train_idx.append(shuffled[:n])
        test_idx.append(shuffled[n:])
    return np.sort(np.concatenate(train_idx)), np.sort(np.concatenate(test_idx))


def stratified_subsample(labels, size, seed=0):
    y = np.asarray(labels)
    if size > len(y):
        raise ValueError(f"subset of {size} requested from {len(y)} samples")
    classes = sorted(set(y.tolist()))
    members = [np.flatnonzero(y == c) for c in classes]
    counts = _allocate([len(m) for m in members], size / len(y))
    rng = np.random.default_rng(seed)
    picked = [m[rng.permutation(len(m))[:n]] for m, n in zip(members, counts)]
    return np.sort(np.concatenate(picked))


# ------------------------------------------------------------------- reports

@dataclass
class RunReport:
    method: str
    seed: int
    train_cm: ConfusionMatrix
    test_cm: ConfusionMatrix
    history: list = field(default_factory=list)
    config: dict = field(default_factory=dict)
    wall_seconds: float = 0.0
    subset_size: Optional[int] = None
    iterations: Optional[int] = None

    @property
    def train_accuracy(self):
        return _or_nan(accuracy, self.train_cm)

    @property
    def test_accuracy(self):
        return _or_nan(accuracy, self.test_cm)

    @property
    def train_sensitivity(self):
        return _or_nan(sensitivity, self.train_cm)

    @property
    def test_sensitivity(self):
        return _or_nan(sensitivity, self.test_cm)


def fit_and_evaluate(method, vectors, train_idx, test_idx, cfg, seed, iterations=None):
    """Standardize on the training part, train, and score both parts.

    Returns ``(report, outcome, standardizer)``.
    """
    x, y = to_matrix(vectors)
    y = np.asarray(y)
    xtr, ytr, xte, yte = x[train_idx], y[train_idx], x[test_idx], y[test_idx]
    st = fit_standardizer(xtr) if cfg.standardize else None
    if st is not None:
        xtr, xte = st.transform(xtr), st.transform(xte)
    t0 = time.perf_counter()
    outcome = train(method, xtr, ytr, cfg, seed, iterations=iterations)
    wall = time.perf_counter() - t0
    report = RunReport(
        method=outcome.method,
        seed=seed,
        train_cm=confusion(anfis.predict(outcome.model, xtr), ytr),
        test_cm=confusion(anfis.predict(outcome.model, xte), yte) if len(yte) else ConfusionMatrix(),
        history=list(outcome.history),
        config=cfg.to_dict(),
        wall_seconds=wall,
        iterations=iterations,
    )
    return report, outcome, st


def compare_methods(vectors, methods=("ica_anfis", "gd_anfis", "aco_anfis"), seeds=(0,), cfg=None):
    """One shared stratified split per seed; every method trains on it."""
    from .config import PipelineConfig

    cfg = cfg or PipelineConfig()
    if not seeds:
        raise ValueError("at least one seed is required")
    _, y = to_matrix(vectors)
    reports = []
    for seed in seeds:
        tr, te = split(y, cfg.train_fraction, seed)
        for m in methods:
            reports.append(fit_and_evaluate(m, vectors, tr, te, cfg, seed)[0])
    return reports


def convergence_sweep(vectors, subset_sizes=(50, 100, 200, 300, 400), iteration_counts=(50, 100, 200),
                      seeds=(0,), cfg=None, method="ica_anfis"):
    """Train on stratified subsets of each size with each iteration budget."""
    from .config import PipelineConfig

    cfg = cfg or PipelineConfig()
    y = np.asarray(to_matrix(vectors)[1])
    if max(subset_sizes) > len(y):
        raise ValueError(f"largest subset ({max(subset_sizes)}) exceeds the dataset size ({len(y)})")
    reports = []
    for seed in seeds:
        for size in subset_sizes:
            sub = stratified_subsample(y, size, seed)
            sub_vectors = [vectors[i] for i in sub]
            tr, te = split(y[sub], cfg.train_fraction, seed)
            for iters in iteration_counts:
                rep = fit_and_evaluate(method, sub_vectors, tr, te, cfg, seed, iterations=iters)[0]
                rep.subset_size = size
                reports.append(rep)
    return reports


# ----------------------------------------------------------------- summaries

def summarize(reports):
    """Mean metrics per method, in first-seen method order."""
    order, groups = [], {}
    for r in reports:
        if r.method not in groups:
            order.append(r.method)
            groups[r.method] = []
        groups[r.method].append(r)
    rows = []
    for m in order:
        g = groups[m]
        rows.append({
            "method": m,
            "runs": len(g),
            "train_accuracy": float(np.mean([r.train_accuracy for r in g])),
            "test_accuracy": float(np.mean([r.test_accuracy for r in g])),
            "train_sensitivity": float(np.mean([r.train_sensitivity for r in g])),
            "test_sensitivity": float(np.mean([r.test_sensitivity for r in g])),
        })
    return rows


def _table(title, rows, left, right, width):
    head = ("Method", left, right)
    body = [(r["method"], f"{100 * r[a]:.1f}%", f"{100 * r[b]:.1f}%") for r, (a, b) in rows]
    widths = [max(len(str(x[i])) for x in [head] + body) for i in range(3)]
    line = lambda cells: "  ".join(str(c).ljust(w) if i == 0 else str(c).rjust(w)
                                   for i, (c, w) in enumerate(zip(cells, widths)))
    rule = "-" * max(width, len(line(head)))
    return "\n".join([title, rule, line(head), rule] + [line(b) for b in body] + [rule])


def format_summary(reports):
    """Plain-text sensitivity and accuracy tables, means over seeds."""
    rows = summarize(reports)
    seeds = sorted({r.seed for r in reports})
    sens = _table("SENSITIVITY RESULTS", [(r, ("train_sensitivity", "test_sensitivity")) for r in rows],
                  "Training sensitivity", "Test sensitivity", 40)
    acc = _table("ACCURACY RESULTS", [(r, ("train_accuracy", "test_accuracy")) for r in rows],
                 "Training accuracy", "Test accuracy", 40)
    return f"{sens}\n\n{acc}\n\nmeans over {len(seeds)} seed(s): {', '.join(map(str, seeds))}\n"


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return "nan" if math.isnan(v) else repr(v)
    return str(v)


def report_rows(reports, record_timing=True):
    for r in reports:
        for name, cm in (("train", r.train_cm), ("test", r.test_cm)):
            yield [r.method, r.seed, name, r.subset_size, r.iterations,
                   _or_nan(accuracy, cm), _or_nan(sensitivity, cm), _or_nan(specificity, cm),
                   cm.tp, cm.fn, cm.tn, cm.fp, r.wall_seconds if record_timing else 0.0]


def write_report_csv(path, reports, record_timing=True):
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(REPORT_HEADER)
        for row in report_rows(reports, record_timing):
            w.writerow([_fmt(v) for v in row])
    return Path(path)


def read_report_csv(path):
    with Path(path).open(newline="") as fh:
        return list(csv.DictReader(fh))


def write_history_csv(path, history):
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["iteration", "best_cost"])
        for i, c in enumerate(history):
            w.writerow([i, repr(float(c))])
    return Path(path)


def grid_means(reports):
    """Mean metrics per (subset_size, iterations) cell."""
    cells = {}
    for r in reports:
        cells.setdefault((r.subset_size, r.iterations), []).append(r)
    out = []
    for (size, iters), g in sorted(cells.items()):
        out.append({
            "subset_size": size,
            "iterations": iters,
            "runs": len(g),
            "train_accuracy": float(np.mean([r.train_accuracy for r in g])),
            "train_sensitivity": float(np.mean([r.train_sensitivity for r in g])),
            "test_accuracy": float(np.mean([r.test_accuracy for r in g])),
            "test_sensitivity": float(np.mean([r.test_sensitivity for r in g])),
        })
    return out


def write_grid_csv(path, reports):
    cols = ("subset_size", "iterations", "runs", "train_accuracy", "train_sensitivity",
            "test_accuracy", "test_sensitivity")
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(cols)
        for row in grid_means(reports):
            w.writerow([_fmt(row[c]) for c in cols])
    return Path(path)
