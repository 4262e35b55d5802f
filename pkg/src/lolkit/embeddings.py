"""Projection fits: LOL and its variants, plus the comparator methods.

Every ``fit_*`` returns a :class:`~lolkit.model.Projection` whose columns
are projection directions.  Methods built from a mean-difference block
followed by eigenvectors (LOL, QOQ, RLOL, LFL) and the plain eigenvector
methods (PCA, RR-LDA) are *nested*: the first d' columns of a d-dim fit
equal the d'-dim fit on the same data and seed.

The mean-difference block is deliberately not orthogonalized against the
eigenvector block; pass ``orthogonalize=True`` to experiment with the
Gram-Schmidt variant.
"""

from __future__ import annotations

import numpy as np

from .errors import DegenerateMeans, PlsNoConvergence, ShapeMismatch, TooFewDims
from .linalg import orthonormalize, sparse_random_columns, truncated_svd, implicit_cca_eigs
from .model import (
    ClassStats,
    DataMatrix,
    LabeledDataset,
    Projection,
    center_class_conditional,
    center_pooled,
    class_stats,
)


def _sorted_class_order(priors):
    # decreasing prior, ties broken by ascending class index
    c = priors.shape[0]
    return np.lexsort((np.arange(c), -priors))


def mean_difference_matrix(stats: ClassStats) -> np.ndarray:
    """Unit-norm mean-difference columns, p x (C-1).

    Classes are sorted by decreasing prior (ties: ascending index) and
    column j is mu_(1) - mu_(j+1), normalized.
    """
    order = _sorted_class_order(stats.priors)
    mu = stats.class_means[:, order]
    anchor = mu[:, 0]
    deltas = anchor[:, None] - mu[:, 1:]
    norms = np.linalg.norm(deltas, axis=0)
    floor = 1e-12 * max(1.0, np.linalg.norm(anchor))
    bad = np.flatnonzero(norms < floor)
    if bad.size:
        j = int(bad[0])
        raise DegenerateMeans(
            f"classes {order[0]} and {order[j + 1]} have (near-)identical means"
        )
    return deltas / norms


def _delta_block_from_locations(locations, priors):
    """mean_difference_matrix on arbitrary location estimates (p x C)."""
    order = _sorted_class_order(priors)
    loc = locations[:, order]
    deltas = loc[:, 0:1] - loc[:, 1:]
    norms = np.linalg.norm(deltas, axis=0)
    floor = 1e-12 * max(1.0, np.linalg.norm(loc[:, 0]))
    bad = np.flatnonzero(norms < floor)
    if bad.size:
        j = int(bad[0])
        raise DegenerateMeans(
            f"classes {order[0]} and {order[j + 1]} have (near-)identical locations"
        )
    return deltas / norms


def _assemble(delta, eigvecs, tag, seed=None, orthogonalize=False):
    cols = np.hstack([delta, eigvecs]) if eigvecs.shape[1] else delta
    if orthogonalize:
        cols = orthonormalize(cols)
    return Projection(cols, method_tag=tag, seed=seed)


def fit_lol(dataset: LabeledDataset, d, svd_mode="auto", seed=0,
            orthogonalize=False) -> Projection:
    """Mean-difference columns followed by the top eigenvectors of the
    class-conditionally centered data."""
    c = dataset.num_classes
    if d < c - 1:
        raise TooFewDims(f"d={d} below C-1={c - 1}")
    if d > dataset.p:
        raise TooFewDims(f"d={d} exceeds p={dataset.p}")
    stats = class_stats(dataset)
    delta = mean_difference_matrix(stats)
    k = d - (c - 1)
    if k > 0:
        centered = center_class_conditional(dataset, stats)
        eig = truncated_svd(centered.values, k, mode=svd_mode, seed=seed).U
    else:
        eig = np.empty((dataset.p, 0))
    return _assemble(delta, eig, "lol", seed, orthogonalize)


def fit_pca(dataset: LabeledDataset, d, svd_mode="auto", seed=0) -> Projection:
    """Top-d eigenvectors of the pooled-centered data (label-blind)."""
    stats = class_stats(dataset)
    centered = center_pooled(dataset, stats)
    u = truncated_svd(centered.values, d, mode=svd_mode, seed=seed).U
    return Projection(u, method_tag="pca", seed=seed)


def fit_rrlda(dataset: LabeledDataset, d, svd_mode="auto", seed=0) -> Projection:
    """Top-d eigenvectors of the class-conditionally centered data."""
    stats = class_stats(dataset)
    centered = center_class_conditional(dataset, stats)
    u = truncated_svd(centered.values, d, mode=svd_mode, seed=seed).U
    return Projection(u, method_tag="rrlda", seed=seed)


def fit_qoq(dataset: LabeledDataset, d, svd_mode="auto", seed=0) -> Projection:
    """Per-class eigenvectors merged by decreasing singular value, with
    the mean-difference block prepended."""
    c = dataset.num_classes
    if d < c - 1:
        raise TooFewDims(f"d={d} below C-1={c - 1}")
    stats = class_stats(dataset)
    delta = mean_difference_matrix(stats)
    k = d - (c - 1)
    if k > 0:
        vecs, svals, keys = [], [], []
        for j in range(c):
            xc = dataset.data.values[:, dataset.labels == j]
            xc = xc - xc.mean(axis=1, keepdims=True)
            kk = min(xc.shape[0], xc.shape[1])
            res = truncated_svd(xc, kk, mode=svd_mode, seed=seed)
            for i in range(kk):
                vecs.append(res.U[:, i])
                svals.append(res.S[i])
                keys.append((j, i))
        # decreasing singular value; deterministic tie-break on (class, index)
        order = sorted(range(len(svals)), key=lambda t: (-svals[t], keys[t]))
        eig = np.column_stack([vecs[i] for i in order[:k]])
    else:
        eig = np.empty((dataset.p, 0))
    return _assemble(delta, eig, "qoq", seed)


def _winsorize_by_mad(z):
    # clip each coordinate at +-3 robust standard deviations; coordinates
    # with zero MAD are left untouched
    med = np.median(z, axis=1, keepdims=True)
    mad = np.median(np.abs(z - med), axis=1, keepdims=True)
    sigma = 1.4826 * mad
    lo = -3.0 * sigma
    hi = 3.0 * sigma
    keep = sigma[:, 0] == 0
    out = np.clip(z, lo, hi)
    out[keep] = z[keep]
    return out


def fit_rlol(dataset: LabeledDataset, d, svd_mode="auto", seed=0) -> Projection:
    """Robust LOL: class medians as locations, MAD-winsorized centered
    data for the eigenvector block."""
    c = dataset.num_classes
    if d < c - 1:
        raise TooFewDims(f"d={d} below C-1={c - 1}")
    x = dataset.data.values
    y = dataset.labels
    medians = np.empty((dataset.p, c))
    for j in range(c):
        medians[:, j] = np.median(x[:, y == j], axis=1)
    priors = np.bincount(y, minlength=c) / dataset.n
    delta = _delta_block_from_locations(medians, priors)
    k = d - (c - 1)
    if k > 0:
        centered = x - medians[:, y]
        eig = truncated_svd(_winsorize_by_mad(centered), k, mode=svd_mode, seed=seed).U
    else:
        eig = np.empty((dataset.p, 0))
    return _assemble(delta, eig, "rlol", seed)


def _unit_columns(m):
    # degenerate all-zero columns (possible only for tiny p) get a
    # deterministic basis vector so normalization stays well defined
    m = m.copy()
    norms = np.linalg.norm(m, axis=0)
    for j in np.flatnonzero(norms == 0):
        m[j % m.shape[0], j] = 1.0
        norms[j] = 1.0
    return m / norms


def fit_lfl(dataset: LabeledDataset, d, seed=0) -> Projection:
    """LOL with very sparse random directions replacing the eigenvectors."""
    c = dataset.num_classes
    if d < c - 1:
        raise TooFewDims(f"d={d} below C-1={c - 1}")
    stats = class_stats(dataset)
    delta = mean_difference_matrix(stats)
    k = d - (c - 1)
    if k > 0:
        rand = _unit_columns(sparse_random_columns(dataset.p, k, seed))
    else:
        rand = np.empty((dataset.p, 0))
    return _assemble(delta, rand, "lfl", seed)


def fit_rp(dataset: LabeledDataset, d, seed=0) -> Projection:
    """Label-blind sparse random projection."""
    cols = _unit_columns(sparse_random_columns(dataset.p, d, seed))
    return Projection(cols, method_tag="rp", seed=seed)


def fit_lrcca(dataset: LabeledDataset, d) -> Projection:
    """Low-rank CCA via the implicit-operator eigensolver (d <= C-1)."""
    stats = class_stats(dataset)
    centered = center_pooled(dataset, stats)
    vecs = implicit_cca_eigs(
        centered.values, stats.class_means, stats.pooled_mean, stats.counts, d
    )
    return Projection(vecs, method_tag="cca")


def fit_pls(dataset: LabeledDataset, d, tol=1e-10, max_iter=500) -> Projection:
    """NIPALS PLS2 weight vectors against one-hot class labels.

    X is pooled-centered and Y row-centered internally; successive
    components deflate X, so the returned weight vectors are mutually
    orthogonal.
    """
    if d > min(dataset.p, dataset.n - 1):
        raise TooFewDims(f"d={d} exceeds min(p, n-1)={min(dataset.p, dataset.n - 1)}")
    stats = class_stats(dataset)
    x = center_pooled(dataset, stats).values.copy()
    yhot = np.zeros((dataset.num_classes, dataset.n))
    yhot[dataset.labels, np.arange(dataset.n)] = 1.0
    yres = yhot - yhot.mean(axis=1, keepdims=True)

    weights = np.empty((dataset.p, d))
    for comp in range(d):
        u = yres[np.argmax(np.einsum("ij,ij->i", yres, yres))]
        t_old = None
        for _ in range(max_iter):
            w = x @ u
            nw = np.linalg.norm(w)
            if nw == 0:
                raise PlsNoConvergence(comp, f"zero weight vector at component {comp}")
            w /= nw
            t = x.T @ w
            tt = t @ t
            if tt == 0:
                raise PlsNoConvergence(comp, f"zero score vector at component {comp}")
            q = yres @ t / tt
            u = yres.T @ q / (q @ q)
            if t_old is not None and np.linalg.norm(t - t_old) <= tol * np.linalg.norm(t):
                break
            t_old = t
        else:
            raise PlsNoConvergence(comp)
        weights[:, comp] = w
        p_load = x @ t / tt
        x -= np.outer(p_load, t)
        yres = yres - np.outer(q, t)
    return Projection(weights, method_tag="pls")


def embed(proj: Projection, m: DataMatrix) -> DataMatrix:
    """Apply a projection: returns the d x n matrix directions^T @ M."""
    if proj.p != m.p:
        raise ShapeMismatch(f"projection is for p={proj.p}, data has p={m.p}")
    return DataMatrix(proj.directions.T @ m.values)


# --- serialization ---------------------------------------------------------
#
# Text format, one file per projection:
#   line 1:  lolkit-projection,v1,<p>,<d>,<method_tag>,<seed-or-empty>
#   lines 2..d+1:  one column per line, p comma-separated %.17g doubles
#                  (column-major, round-trip exact)

def save_projection(proj: Projection, path):
    lines = [
        f"lolkit-projection,v1,{proj.p},{proj.d},{proj.method_tag},"
        f"{'' if proj.seed is None else proj.seed}"
    ]
    for j in range(proj.d):
        lines.append(",".join(f"{v:.17g}" for v in proj.directions[:, j]))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def load_projection(path) -> Projection:
    with open(path) as fh:
        header = fh.readline().strip().split(",")
        if header[:2] != ["lolkit-projection", "v1"]:
            raise ShapeMismatch(f"not a v1 projection file: {path}")
        p, d = int(header[2]), int(header[3])
        tag = header[4]
        seed = int(header[5]) if header[5] else None
        cols = np.empty((p, d))
        for j in range(d):
            cols[:, j] = np.array(fh.readline().split(","), dtype=np.float64)
    return Projection(cols, method_tag=tag, seed=seed)
