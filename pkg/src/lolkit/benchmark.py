"""Dataset ingestion, cross-validation protocol and comparison metrics.

The protocol: stratified k-fold assignment, per-fold training subsample
of size min(floor(n (k-1) / k), p - 1), projections fitted once per fold
at the maximum dimension and reused through column prefixes for every
r, a classifier per r, evaluation on the held-out fold.  Errors during a
single (algorithm, fold, r) cell are recorded as missing instead of
aborting the sweep.
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass

import numpy as np

from . import embeddings as emb
from .classifiers import fit_lda, fit_qda, misclassification_rate, predict_lda, predict_qda
from .errors import (
    DegenerateLabels,
    EmptyCurve,
    LolkitError,
    NoBaseline,
    ParseFailure,
    ShapeMismatch,
    TooManyFolds,
)
from .model import DataMatrix, LabeledDataset

SCHEMA_VERSION = 1

_MISSING = {"", "na", "nan", "n/a", "?", "null", "none"}

# features with fewer distinct values than this are one-hot encoded
ONE_HOT_THRESHOLD = 10


@dataclass(frozen=True)
class LoadedCsv:
    dataset: LabeledDataset
    feature_names: tuple
    label_mapping: dict       # original label value -> dense 0..C-1
    n_dropped_rows: int


def load_csv(path, label_column, delimiter=None) -> LoadedCsv:
    """Load a delimited text file into a LabeledDataset.

    Rows with any missing entry are dropped; feature columns with fewer
    than ONE_HOT_THRESHOLD unique values are one-hot encoded; the rest
    must parse as reals.  ``label_column`` is a header name or integer
    index.
    """
    with open(path, newline="") as fh:
        first = fh.readline()
        if not first:
            raise ParseFailure(f"{path}: empty file")
        if delimiter is None:
            delimiter = "\t" if "\t" in first else ","
        header = next(csv.reader([first], delimiter=delimiter))
        rows = []
        for lineno, row in enumerate(csv.reader(fh, delimiter=delimiter), start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise ParseFailure(
                    f"{path}:{lineno}: expected {len(header)} fields, got {len(row)}"
                )
            rows.append([cell.strip() for cell in row])

    if isinstance(label_column, int):
        label_idx = label_column
        if not 0 <= label_idx < len(header):
            raise ParseFailure(f"label column index {label_column} out of range")
    else:
        try:
            label_idx = header.index(label_column)
        except ValueError:
            raise ParseFailure(f"label column {label_column!r} not in header") from None

    kept = [r for r in rows if not any(c.lower() in _MISSING for c in r)]
    n_dropped = len(rows) - len(kept)
    if len(kept) < 2:
        raise DegenerateLabels(f"{path}: fewer than 2 complete rows")

    raw_labels = [r[label_idx] for r in kept]
    classes = sorted(set(raw_labels))
    if len(classes) < 2:
        raise DegenerateLabels(f"{path}: fewer than 2 classes after cleaning")
    mapping = {v: i for i, v in enumerate(classes)}
    labels = np.array([mapping[v] for v in raw_labels], dtype=np.int64)

    feature_cols = []
    feature_names = []
    for j, name in enumerate(header):
        if j == label_idx:
            continue
        col = [r[j] for r in kept]
        uniq = sorted(set(col))
        if len(uniq) < ONE_HOT_THRESHOLD:
            for v in uniq:
                feature_names.append(f"{name}={v}")
                feature_cols.append(np.array([1.0 if c == v else 0.0 for c in col]))
        else:
            try:
                feature_cols.append(np.array([float(c) for c in col]))
            except ValueError as exc:
                raise ParseFailure(
                    f"{path}: column {name!r} is non-numeric with "
                    f"{len(uniq)} distinct values"
                ) from exc
            feature_names.append(name)

    x = np.vstack(feature_cols)  # p x n
    dataset = LabeledDataset(DataMatrix(x), labels, len(classes))
    return LoadedCsv(dataset, tuple(feature_names), mapping, n_dropped)


@dataclass(frozen=True)
class FoldPlan:
    folds: tuple              # k disjoint index arrays covering 0..n-1
    train_subsets: tuple      # per fold, stratified subsample of the complement
    seed: int

    @property
    def k(self):
        return len(self.folds)


def _stratified_subsample(indices, labels, size, rng):
    # proportional allocation with at least one sample per class present
    classes = np.unique(labels[indices])
    if size < classes.size:
        raise ShapeMismatch(
            f"subsample size {size} cannot cover {classes.size} classes"
        )
    per_class = {c: indices[labels[indices] == c] for c in classes}
    counts = np.array([per_class[c].size for c in classes], dtype=np.float64)
    exact = size * counts / counts.sum()
    alloc = np.maximum(np.floor(exact).astype(int), 1)
    alloc = np.minimum(alloc, counts.astype(int))
    # distribute the remainder by largest fractional part
    order = np.argsort(-(exact - np.floor(exact)))
    i = 0
    while alloc.sum() < size:
        j = order[i % order.size]
        if alloc[j] < counts[j]:
            alloc[j] += 1
        i += 1
        if i > 10 * order.size and alloc.sum() < size:
            break
    while alloc.sum() > size:
        j = int(np.argmax(alloc))
        if alloc[j] > 1:
            alloc[j] -= 1
    picked = []
    for c, m in zip(classes, alloc):
        idx = per_class[c]
        picked.append(rng.choice(idx, size=int(m), replace=False))
    return np.sort(np.concatenate(picked))


def make_fold_plan(n, p, num_classes, k, labels, seed) -> FoldPlan:
    """Stratified fold assignment plus per-fold training subsamples of
    size min(floor(n (k-1) / k), p - 1)."""
    if k > n:
        raise TooManyFolds(f"k={k} exceeds n={n}")
    if k < 2:
        raise TooManyFolds("need at least 2 folds")
    labels = np.asarray(labels, dtype=np.int64)
    rng = np.random.default_rng(np.random.SeedSequence((seed, 0xF01D)))
    assignment = np.empty(n, dtype=np.int64)
    offset = 0
    for c in range(num_classes):
        idx = np.flatnonzero(labels == c)
        idx = rng.permutation(idx)
        assignment[idx] = (np.arange(idx.size) + offset) % k
        offset += idx.size
    folds = tuple(np.flatnonzero(assignment == j) for j in range(k))

    size = min(math.floor(n * (k - 1) / k), p - 1)
    subsets = []
    for j in range(k):
        train = np.flatnonzero(assignment != j)
        sub_rng = np.random.default_rng(np.random.SeedSequence((seed, 1 + j)))
        subsets.append(_stratified_subsample(train, labels, size, sub_rng))
    return FoldPlan(folds=folds, train_subsets=tuple(subsets), seed=seed)


@dataclass(frozen=True)
class ErrorCurve:
    algorithm: str
    rates: np.ndarray         # (k, d_max), NaN marks a failed cell

    @property
    def mean(self):
        return self._nan_aggregate(np.nanmean)

    @property
    def median(self):
        return self._nan_aggregate(np.nanmedian)

    def _nan_aggregate(self, fun):
        # all-NaN columns (every fold failed at that r) stay NaN silently
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            return fun(self.rates, axis=0)


_SEEDED_FITS = {
    "lol": emb.fit_lol,
    "pca": emb.fit_pca,
    "rrlda": emb.fit_rrlda,
    "qoq": emb.fit_qoq,
    "rlol": emb.fit_rlol,
}

ALGORITHMS = ("lol", "pca", "rrlda", "qoq", "rlol", "lfl", "rp", "cca", "pls")


def _fit_projection(tag, train, d, svd_mode, seed):
    if tag in _SEEDED_FITS:
        return _SEEDED_FITS[tag](train, d, svd_mode=svd_mode, seed=seed)
    if tag == "lfl":
        return emb.fit_lfl(train, d, seed=seed)
    if tag == "rp":
        return emb.fit_rp(train, d, seed=seed)
    if tag == "cca":
        return emb.fit_lrcca(train, min(d, train.num_classes - 1))
    if tag == "pls":
        return emb.fit_pls(train, min(d, train.p, train.n - 1))
    raise ShapeMismatch(f"unknown algorithm {tag!r}; choose from {ALGORITHMS}")


def sweep(dataset: LabeledDataset, algorithms, d_max, plan: FoldPlan,
          classifier="lda", svd_mode="auto", fit_data=None):
    """Error curves for every algorithm over r = 1..d_max.

    ``fit_data``, when given, is an alternative LabeledDataset (same
    column indexing) used only for fitting projections; classifiers are
    always trained on ``dataset``.  This is how the Robust protocol wires
    outlier-contaminated projection fits to clean classifier training.
    """
    if d_max > dataset.p - 1:
        raise ShapeMismatch(f"d_max={d_max} must be <= p-1={dataset.p - 1}")
    fit_cls, predict = (fit_qda, predict_qda) if classifier == "qda" else (fit_lda, predict_lda)
    x = dataset.data.values
    y = dataset.labels
    c = dataset.num_classes
    xf = fit_data.data.values if fit_data is not None else x
    yf = fit_data.labels if fit_data is not None else y

    curves = []
    for tag in algorithms:
        rates = np.full((plan.k, d_max), np.nan)
        for j in range(plan.k):
            tr = plan.train_subsets[j]
            te = plan.folds[j]
            try:
                fit_ds = LabeledDataset(DataMatrix(xf[:, tr]), yf[tr], c)
                train_ds = LabeledDataset(DataMatrix(x[:, tr]), y[tr], c)
                proj = _fit_projection(tag, fit_ds, d_max, svd_mode, plan.seed)
            except LolkitError:
                continue
            test = DataMatrix(x[:, te])
            for r in range(1, min(d_max, proj.d) + 1):
                try:
                    pre = proj.prefix(r)
                    clf = fit_cls(emb.embed(pre, train_ds.data), train_ds.labels, c)
                    pred = predict(clf, emb.embed(pre, test))
                    rates[j, r - 1] = misclassification_rate(pred, y[te])
                except LolkitError:
                    continue
        curves.append(ErrorCurve(algorithm=tag, rates=rates))
    return curves


def select_rstar(curve: ErrorCurve):
    """Smallest r whose mean error is within 5% of the best dimension's."""
    means = curve.mean
    finite = np.isfinite(means)
    if not np.any(finite):
        raise EmptyCurve(f"no successful cells for {curve.algorithm}")
    best = np.nanmin(means)
    threshold = 1.05 * best
    ok = np.flatnonzero(finite & (means < threshold))
    if ok.size == 0:
        # strict inequality unachievable (best == 0); fall back to argmin
        return int(np.nanargmin(means)) + 1
    return int(ok[0]) + 1


def _chance_rates(labels, plan):
    rates = np.empty(plan.k)
    for j in range(plan.k):
        train_labels = labels[plan.train_subsets[j]]
        mode = int(np.argmax(np.bincount(train_labels)))
        rate = float(np.mean(labels[plan.folds[j]] != mode))
        rates[j] = rate if rate > 0 else np.nan  # degenerate fold: no chance scale
    return rates


def normalized_report(curves, plan: FoldPlan, dataset: LabeledDataset):
    """Per-algorithm r*, error at r*, and LOL-relative normalized metrics."""
    by_tag = {c.algorithm: c for c in curves}
    if "lol" not in by_tag:
        raise NoBaseline("normalized metrics require an 'lol' curve")
    p = dataset.p
    chance = _chance_rates(dataset.labels, plan)

    lol_curve = by_tag["lol"]
    r_lol = select_rstar(lol_curve)
    lol_fold = lol_curve.rates[:, r_lol - 1]

    report = {"schema_version": SCHEMA_VERSION, "k": plan.k, "p": p,
              "n": dataset.n, "algorithms": {}}
    flagged = []
    for curve in curves:
        tag = curve.algorithm
        r_star = select_rstar(curve)
        fold_rates = curve.rates[:, r_star - 1]
        diffs = (lol_fold - fold_rates) / chance
        good = np.isfinite(diffs)
        entry = {
            "r_star": r_star,
            "mean_error_at_r_star": float(np.nanmean(fold_rates)),
            "norm_embedding_dim": (r_lol - r_star) / p,
            "norm_error_mean": float(np.mean(diffs[good])) if np.any(good) else None,
            "norm_error_median": float(np.median(diffs[good])) if np.any(good) else None,
            "folds_ok_at_r_star": int(np.sum(np.isfinite(fold_rates))),
        }
        if entry["folds_ok_at_r_star"] < plan.k / 2:
            flagged.append(tag)
        report["algorithms"][tag] = entry
    report["flagged_low_coverage"] = sorted(flagged)
    return report


def curves_rows(curves):
    """Flatten curves to (algorithm, r, fold, error) rows for curves.csv."""
    rows = []
    for curve in curves:
        k, d_max = curve.rates.shape
        for j in range(k):
            for r in range(d_max):
                v = curve.rates[j, r]
                rows.append((curve.algorithm, r + 1, j, "" if np.isnan(v) else f"{v:.17g}"))
    return rows
