"""Chernoff information between Gaussians and closed-form projection gaps.

Two conventions appear side by side and are labelled explicitly:

* ``scaled`` -- the Chernoff information proper; for equal covariances it
  equals delta' Sigma^-1 delta / 8 with optimizer t* = 1/2.
* ``raw`` -- the quadratic form delta' A (A' Sigma A)^-1 A' delta used by
  the projection-gap identities (scaled = raw / 8 when covariances are
  equal).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import linalg as sla

from .errors import (
    DegenerateGamma,
    NotPositiveDefinite,
    PooledDenominatorDegenerate,
    SingularProjectedCov,
)
from .model import Projection, cov_as_dense

GOLDEN = (np.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class ChernoffReport:
    value: float
    t_star: float
    convention: str  # "scaled" or "raw"


def _check_pd(cov, name):
    cov = np.asarray(cov, dtype=np.float64)
    try:
        chol = np.linalg.cholesky(cov)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefinite(f"{name} is not positive definite") from exc
    return cov, chol


def chernoff_divergence_t(f0, f1, t):
    """Chernoff divergence C_t between Gaussians f = (mean, covariance)."""
    mu0, sig0 = f0
    mu1, sig1 = f1
    sig0, chol0 = _check_pd(sig0, "Sigma0")
    sig1, chol1 = _check_pd(sig1, "Sigma1")
    diff = np.asarray(mu1, dtype=np.float64) - np.asarray(mu0, dtype=np.float64)
    sig_t = t * sig0 + (1.0 - t) * sig1
    chol_t = np.linalg.cholesky(sig_t)
    quad = diff @ sla.cho_solve((chol_t, True), diff)
    logdet_t = 2.0 * np.sum(np.log(np.diag(chol_t)))
    logdet0 = 2.0 * np.sum(np.log(np.diag(chol0)))
    logdet1 = 2.0 * np.sum(np.log(np.diag(chol1)))
    return 0.5 * t * (1.0 - t) * quad + 0.5 * (logdet_t - t * logdet0 - (1.0 - t) * logdet1)


def _golden_max(fun, lo, hi, tol):
    a, b = lo, hi
    x1 = b - GOLDEN * (b - a)
    x2 = a + GOLDEN * (b - a)
    f1, f2 = fun(x1), fun(x2)
    while b - a > tol:
        if f1 < f2:
            a, x1, f1 = x1, x2, f2
            x2 = a + GOLDEN * (b - a)
            f2 = fun(x2)
        else:
            b, x2, f2 = x2, x1, f1
            x1 = b - GOLDEN * (b - a)
            f1 = fun(x1)
    t = 0.5 * (a + b)
    return t, fun(t)


def chernoff_gaussian(f0, f1, tol=1e-10):
    """Chernoff information C(F0, F1) = sup_t C_t, scaled convention.

    Maximized by golden-section search; a coarse grid scan guards against
    the (non-unimodal in principle) search settling on a local optimum.
    """
    fun = lambda t: chernoff_divergence_t(f0, f1, t)
    t_star, val = _golden_max(fun, 1e-12, 1.0 - 1e-12, tol)
    grid = np.linspace(1e-4, 1.0 - 1e-4, 9999)
    vals = np.array([fun(t) for t in grid])
    i = int(np.argmax(vals))
    if vals[i] > val + 1e-12:
        lo = grid[max(i - 1, 0)]
        hi = grid[min(i + 1, grid.size - 1)]
        t_star, val = _golden_max(fun, lo, hi, tol)
    return ChernoffReport(value=float(val), t_star=float(t_star), convention="scaled")


def _as_matrix(a):
    return a.directions if isinstance(a, Projection) else np.asarray(a, dtype=np.float64)


def projected_chernoff_quadform(a, delta, sigma):
    """delta' A (A' Sigma A)^-1 A' delta (raw convention; scaled = /8)."""
    a = _as_matrix(a)
    delta = np.asarray(delta, dtype=np.float64)
    sigma = np.asarray(sigma, dtype=np.float64)
    proj_cov = a.T @ sigma @ a
    proj_delta = a.T @ delta
    try:
        chol = np.linalg.cholesky(proj_cov)
    except np.linalg.LinAlgError:
        d = proj_cov.shape[0]
        ridged = proj_cov + 1e-8 * np.trace(proj_cov) / d * np.eye(d)
        try:
            chol = np.linalg.cholesky(ridged)
        except np.linalg.LinAlgError as exc:
            raise SingularProjectedCov("projected covariance is singular") from exc
    return float(proj_delta @ sla.cho_solve((chol, True), proj_delta))


def _eigh_desc(sigma):
    lam, u = np.linalg.eigh(np.asarray(sigma, dtype=np.float64))
    return lam[::-1], u[:, ::-1]


def _truncated_pinv_quad(delta, lam, u, d):
    # delta' Sigma_d^+ delta with Sigma_d the rank-d spectral truncation
    if d == 0:
        return 0.0
    ud = u[:, :d]
    lam_d = lam[:d]
    good = lam_d > 1e-14 * max(lam[0], 1.0)
    coef = (ud.T @ delta)[good]
    return float(np.sum(coef * coef / lam_d[good]))


def lol_vs_lda_gap(delta, sigma, d):
    """Closed-form Chernoff gap (raw convention) between the LOL map
    [delta | U_{d-1}] and the eigenvector map U_d of Sigma."""
    delta = np.asarray(delta, dtype=np.float64)
    sigma = np.asarray(sigma, dtype=np.float64)
    if not np.any(delta):
        return 0.0
    lam, u = _eigh_desc(sigma)
    ud1 = u[:, : d - 1]
    resid = delta - ud1 @ (ud1.T @ delta)
    num = float(delta @ resid)
    gamma = float(delta @ sigma @ delta) - float(
        np.sum((ud1.T @ delta) ** 2 * lam[: d - 1])
    )
    if gamma < 1e-14 * (delta @ delta) * lam[0]:
        raise DegenerateGamma("delta lies in the span of the top d-1 eigenvectors")
    lol_term = num * num / gamma + _truncated_pinv_quad(delta, lam, u, d - 1)
    lda_term = _truncated_pinv_quad(delta, lam, u, d)
    return lol_term - lda_term


def lol_vs_pca_gap(delta, sigma, d):
    """Closed-form Chernoff gap (raw convention) between LOL and PCA on
    the pooled covariance Sigma + delta delta'/4."""
    delta = np.asarray(delta, dtype=np.float64)
    sigma = np.asarray(sigma, dtype=np.float64)
    if not np.any(delta):
        return 0.0
    lam, u = _eigh_desc(sigma)
    ud1 = u[:, : d - 1]
    resid = delta - ud1 @ (ud1.T @ delta)
    num = float(delta @ resid)
    gamma = float(delta @ sigma @ delta) - float(
        np.sum((ud1.T @ delta) ** 2 * lam[: d - 1])
    )
    if gamma < 1e-14 * (delta @ delta) * lam[0]:
        raise DegenerateGamma("delta lies in the span of the top d-1 eigenvectors")
    lol_term = num * num / gamma + _truncated_pinv_quad(delta, lam, u, d - 1)

    pooled = sigma + 0.25 * np.outer(delta, delta)
    lam_p, u_p = _eigh_desc(pooled)
    q = _truncated_pinv_quad(delta, lam_p, u_p, d)
    denom = 4.0 - q
    if denom < 1e-12:
        raise PooledDenominatorDegenerate(f"4 - delta' pooled_d^+ delta = {denom}")
    return lol_term - 4.0 * q / denom


def pooled_top_eigvecs(delta, sigma, d):
    """Top-d eigenvectors of Sigma + delta delta'/4 (the PCA map)."""
    pooled = np.asarray(sigma, dtype=np.float64) + 0.25 * np.outer(delta, delta)
    _, u = _eigh_desc(pooled)
    return u[:, :d]


def min_pairwise_chernoff(model):
    """Multi-class rate: min over class pairs of the Chernoff information."""
    best = None
    for i in range(model.num_classes):
        for j in range(i + 1, model.num_classes):
            rep = chernoff_gaussian(
                (model.means[:, i], cov_as_dense(model.covariance_of(i))),
                (model.means[:, j], cov_as_dense(model.covariance_of(j))),
            )
            if best is None or rep.value < best.value:
                best = rep
    return best
