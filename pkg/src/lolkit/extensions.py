"""Projection-then-test and projection-then-regress pipelines.

Hotelling's two-sample T^2 on embedded data, power experiments over the
Toeplitz settings, quantile partitioning of a real-valued target, and
least-squares regression on LOL embeddings.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.stats import f as f_dist

from .benchmark import _fit_projection
from .classifiers import _sample_class
from .embeddings import embed
from .errors import DegenerateTarget, ShapeMismatch, UnderdeterminedTest, TooManyBins
from .model import DataMatrix, LabeledDataset, Projection
from .simulations import SimSpec, population_model


@dataclass(frozen=True)
class HotellingResult:
    t_squared: float
    f_statistic: float
    df1: int
    df2: int
    p_value: float


def hotelling_two_sample(e0: DataMatrix, e1: DataMatrix) -> HotellingResult:
    """Two-sample Hotelling T^2 with pooled covariance (divide by
    n0 + n1 - 2) and the exact F reference distribution."""
    if e0.p != e1.p:
        raise ShapeMismatch(f"dimension mismatch: {e0.p} vs {e1.p}")
    d = e0.p
    n0, n1 = e0.n, e1.n
    if n0 + n1 - 2 < d:
        raise UnderdeterminedTest(f"d={d} exceeds n0+n1-2={n0 + n1 - 2}")
    m0 = e0.values.mean(axis=1)
    m1 = e1.values.mean(axis=1)
    c0 = e0.values - m0[:, None]
    c1 = e1.values - m1[:, None]
    pooled = (c0 @ c0.T + c1 @ c1.T) / (n0 + n1 - 2)
    diff = m0 - m1
    t2 = float(n0 * n1 / (n0 + n1) * diff @ np.linalg.solve(pooled, diff))
    df1 = d
    df2 = n0 + n1 - d - 1
    f_stat = t2 * df2 / (d * (n0 + n1 - 2))
    p_value = float(f_dist.sf(f_stat, df1, df2)) if df2 > 0 else 1.0
    return HotellingResult(t_squared=t2, f_statistic=f_stat, df1=df1, df2=df2,
                           p_value=p_value)


def _rep_seed(seed, rep):
    return int(np.random.SeedSequence((seed, rep)).generate_state(1)[0])


def projected_test_power(spec: SimSpec, method, d, alpha=0.05, reps=200, seed=0,
                         n_per_group=None, split=False):
    """Empirical rejection rate of projection + Hotelling over ``reps``
    draws from a two-class simulation setting.

    The projection is fitted on the same sample being tested, matching
    the pipeline under study; pass ``split=True`` for the calibrated
    split-sample variant (fit on one half, test on the other).
    """
    if spec.family not in ("toeplitz_diag", "toeplitz_dense", "trunk", "stacked_cigars"):
        raise ShapeMismatch(f"unsupported testing family {spec.family!r}")
    m = n_per_group or spec.n // 2
    if m < 2:
        raise ShapeMismatch("need at least 2 samples per group")
    rejections = 0
    for rep in range(reps):
        rs = _rep_seed(seed, rep)
        model = population_model(SimSpec(spec.family, spec.p, 2, rs, dict(spec.params)))
        rng = np.random.default_rng(np.random.SeedSequence((seed, rep, 1)))
        x0 = _sample_class(model, 0, m, rng)
        x1 = _sample_class(model, 1, m, rng)
        if split:
            h = m // 2
            fit0, test0 = x0[:, :h], x0[:, h:]
            fit1, test1 = x1[:, :h], x1[:, h:]
        else:
            fit0 = test0 = x0
            fit1 = test1 = x1
        fit_ds = LabeledDataset(
            DataMatrix(np.hstack([fit0, fit1])),
            np.repeat([0, 1], [fit0.shape[1], fit1.shape[1]]),
            2,
        )
        proj = _fit_projection(method, fit_ds, d, "auto", rs)
        res = hotelling_two_sample(
            embed(proj, DataMatrix(test0)), embed(proj, DataMatrix(test1))
        )
        if res.p_value < alpha:
            rejections += 1
    return rejections / reps


@dataclass(frozen=True)
class QuantilePartition:
    boundaries: np.ndarray    # K-1 monotone percentile cut points
    labels: np.ndarray
    num_classes: int


def quantile_partition(y, num_bins) -> QuantilePartition:
    """Split a real target into num_bins percentile classes.

    Values equal to a boundary go to the lower class.  Empty bins (tied
    targets) are dropped and the labels re-densified; a target with a
    single surviving class is an error.
    """
    y = np.asarray(y, dtype=np.float64)
    if num_bins > y.shape[0]:
        raise TooManyBins(f"K={num_bins} exceeds n={y.shape[0]}")
    if num_bins < 2:
        raise TooManyBins("need at least 2 bins")
    edges = np.quantile(y, np.arange(1, num_bins) / num_bins)
    labels = np.searchsorted(edges, y, side="left")
    present = np.unique(labels)
    if present.size < 2:
        raise DegenerateTarget("target collapses to a single class")
    remap = {c: i for i, c in enumerate(present)}
    dense = np.array([remap[v] for v in labels], dtype=np.int64)
    return QuantilePartition(boundaries=edges, labels=dense, num_classes=present.size)


@dataclass(frozen=True)
class EmbeddedRegression:
    projection: object
    intercept: float
    coef: np.ndarray

    def predict(self, x: DataMatrix):
        e = embed(self.projection, x)
        return self.intercept + self.coef @ e.values


def lol_regression(x: DataMatrix, y, num_bins=4, d=5, svd_mode="auto",
                   seed=0) -> EmbeddedRegression:
    """Quantile-partition the target, fit LOL on the induced classes,
    then ordinary least squares with intercept on the embedded data."""
    part = quantile_partition(y, num_bins)
    dataset = LabeledDataset(x, part.labels, part.num_classes)
    proj = _fit_projection("lol", dataset, d, svd_mode, seed)
    e = embed(proj, x).values
    design = np.vstack([np.ones(e.shape[1]), e]).T
    beta, *_ = np.linalg.lstsq(design, np.asarray(y, dtype=np.float64), rcond=None)
    return EmbeddedRegression(projection=proj, intercept=float(beta[0]), coef=beta[1:])


def pls1_regression(x: DataMatrix, y, d) -> EmbeddedRegression:
    """PLS1 regression baseline: NIPALS weight vectors against the
    centered scalar target, then least squares on the scores."""
    xv = x.values
    yv = np.asarray(y, dtype=np.float64)
    xm = xv.mean(axis=1, keepdims=True)
    ym = yv.mean()
    xc = xv - xm
    yc = yv - ym
    weights = np.empty((x.p, d))
    for comp in range(d):
        w = xc @ yc
        nw = np.linalg.norm(w)
        if nw == 0:
            raise DegenerateTarget("target uncorrelated with all features")
        w /= nw
        t = xc.T @ w
        tt = t @ t
        p_load = xc @ t / tt
        q = yc @ t / tt
        xc = xc - np.outer(p_load, t)
        yc = yc - q * t
        weights[:, comp] = w
    proj = Projection(weights, method_tag="pls1")
    e = proj.directions.T @ xv
    design = np.vstack([np.ones(e.shape[1]), e]).T
    beta, *_ = np.linalg.lstsq(design, yv, rcond=None)
    return EmbeddedRegression(projection=proj, intercept=float(beta[0]), coef=beta[1:])


def mean_squared_error(model: EmbeddedRegression, x: DataMatrix, y):
    pred = model.predict(x)
    return float(np.mean((pred - np.asarray(y, dtype=np.float64)) ** 2))
