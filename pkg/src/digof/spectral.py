"""Truncated SVD, largest singular value, k-means and spectral co-clustering."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from ._rng import derive_seed, make_rng
from .model import LabelVector, check_adjacency

SVD_TOL = 1e-10
SVD_MAX_ITER = 500
SVD_OVERSAMPLE = 4
SIGMA1_TOL = 1e-10
SIGMA1_MAX_ITER = 1000
KMEANS_RESTARTS = 10
KMEANS_MAX_ITER = 100


class ConvergenceError(RuntimeError):
    """An iterative solver stopped before reaching its tolerance."""

    def __init__(self, message, residual):
        super().__init__(f"{message} (residual {residual:.3e})")
        self.residual = residual


@dataclass(frozen=True)
class SvdFactors:
    u: np.ndarray
    sigma: np.ndarray
    v: np.ndarray
    iterations: int = 0


@dataclass(frozen=True)
class KMeansResult:
    labels: LabelVector
    centers: np.ndarray
    inertia: float
    iterations: int


def truncated_svd(m, k, tol=SVD_TOL, max_iter=SVD_MAX_ITER, seed=0, oversample=SVD_OVERSAMPLE):
    """Top-``k`` singular triplets by block power iteration with Rayleigh-Ritz extraction.

    The block carries ``k + oversample`` columns (capped at the matrix size).
    Iteration stops once every one of the top ``k`` singular values moves by at
    most ``tol * sigma_1`` between sweeps.
    """
    m = np.asarray(m, dtype=np.float64)
    rows, cols = m.shape
    if not 1 <= k <= min(rows, cols):
        raise ValueError(f"k must lie in 1..{min(rows, cols)}, got {k}")
    p = min(k + oversample, rows, cols)
    rng = make_rng(seed)
    q, _ = np.linalg.qr(rng.standard_normal((cols, p)))
    mq = m @ q
    prev = None
    for it in range(1, max_iter + 1):
        y, _ = np.linalg.qr(mq)
        z, _ = np.linalg.qr(m.T @ y)
        mq = m @ z
        small = y.T @ mq
        su, sigma, svt = np.linalg.svd(small)
        sigma = sigma[:k]
        if prev is not None and np.all(np.abs(sigma - prev) <= tol * max(sigma[0], np.finfo(float).tiny)):
            u = y @ su[:, :k]
            v = z @ svt[:k].T
            return SvdFactors(u, sigma, v, it)
        prev = sigma
    u = y @ su[:, :k]
    v = z @ svt[:k].T
    residual = float(np.linalg.norm(m @ v - u * sigma))
    raise ConvergenceError(f"truncated_svd did not converge in {max_iter} iterations", residual)


def largest_singular_value(m, tol=SIGMA1_TOL, max_iter=SIGMA1_MAX_ITER, seed=0, method="lanczos"):
    """Largest singular value of ``m`` to relative tolerance ``tol``.

    ``method="lanczos"`` runs Golub-Kahan bidiagonalization with full
    reorthogonalization, i.e. it extracts the best estimate from the same
    Krylov space that power iteration on ``m.T @ m`` explores.
    ``method="power"`` is plain power iteration.
    """
    m = np.asarray(m, dtype=np.float64)
    if m.size == 0:
        raise ValueError("matrix must be non-empty")
    if not np.any(m):
        return 0.0
    if method == "lanczos":
        return _sigma1_lanczos(m, tol, max_iter, seed)
    if method == "power":
        return _sigma1_power(m, tol, max_iter, seed)
    raise ValueError(f"unknown method {method!r}")


def _sigma1_power(m, tol, max_iter, seed):
    x = make_rng(seed).standard_normal(m.shape[1])
    x /= np.linalg.norm(x)
    est = 0.0
    for _ in range(max_iter):
        y = m.T @ (m @ x)
        norm = np.linalg.norm(y)
        if norm == 0.0:
            return 0.0
        new = float(np.sqrt(norm))
        x = y / norm
        if abs(new - est) <= tol * new:
            return new
        est = new
    raise ConvergenceError("power iteration did not converge", abs(new - est))


def _sigma1_lanczos(m, tol, max_iter, seed):
    rows, cols = m.shape
    steps = min(max_iter, rows, cols)
    vs = np.zeros((steps + 1, cols))
    us = np.zeros((steps, rows))
    alphas = np.zeros(steps)
    betas = np.zeros(steps)
    v = make_rng(seed).standard_normal(cols)
    vs[0] = v / np.linalg.norm(v)
    beta = 0.0
    est = 0.0
    gap = np.inf
    for k in range(steps):
        u = m @ vs[k]
        if k:
            u -= beta * us[k - 1]
            u -= us[:k].T @ (us[:k] @ u)
        alpha = np.linalg.norm(u)
        alphas[k] = alpha
        if alpha == 0.0:
            return est if k else 0.0
        us[k] = u / alpha
        w = m.T @ us[k] - alpha * vs[k]
        w -= vs[: k + 1].T @ (vs[: k + 1] @ w)
        beta = np.linalg.norm(w)
        betas[k] = beta
        bidiag = np.diag(alphas[: k + 1]) + np.diag(betas[:k], 1)
        new = float(np.linalg.svd(bidiag, compute_uv=False)[0])
        gap = abs(new - est)
        # beta ~ 0: the Krylov space is invariant and the estimate is exact
        if gap <= tol * new or beta <= tol * new:
            return new
        est = new
        vs[k + 1] = w / beta
    if steps == min(rows, cols):
        return est
    raise ConvergenceError(f"lanczos did not converge in {max_iter} steps", gap)


def _kmeans_pp(points, k, rng):
    n = points.shape[0]
    centers = np.empty((k, points.shape[1]))
    centers[0] = points[rng.integers(n)]
    d2 = ((points - centers[0]) ** 2).sum(axis=1)
    for c in range(1, k):
        total = d2.sum()
        if total > 0:
            idx = int(np.searchsorted(np.cumsum(d2), rng.random() * total, side="right"))
            idx = min(idx, n - 1)
        else:
            idx = int(rng.integers(n))
        centers[c] = points[idx]
        d2 = np.minimum(d2, ((points - centers[c]) ** 2).sum(axis=1))
    return centers


def _repair_empty(points, labels, dist, counts):
    """Give each empty cluster the point farthest from its current center."""
    labels = labels.copy()
    dist = dist.copy()
    for c in np.flatnonzero(counts == 0):
        donors = counts[labels] > 1
        if not donors.any():
            break
        cand = np.where(donors, dist, -1.0)
        i = int(np.argmax(cand))
        counts[labels[i]] -= 1
        labels[i] = c
        counts[c] = 1
        dist[i] = 0.0
    return labels


def _lloyd(points, k, rng, max_iter):
    centers = _kmeans_pp(points, k, rng)
    labels, dist = kernels.nearest_center(points, centers)
    it = 0
    for it in range(1, max_iter + 1):
        centers, counts = kernels.centroids(points, labels, k)
        if counts.min() == 0:
            labels = _repair_empty(points, labels, dist, counts)
            centers, counts = kernels.centroids(points, labels, k)
        new_labels, dist = kernels.nearest_center(points, centers)
        if np.array_equal(new_labels, labels):
            break
        labels = new_labels
    counts = np.bincount(labels, minlength=k)
    if counts.min() == 0:
        labels = _repair_empty(points, labels, dist, counts)
    centers, _ = kernels.centroids(points, labels, k)
    inertia = float(((points - centers[labels]) ** 2).sum())
    return labels, centers, inertia, it


def kmeans(points, k, seed, restarts=KMEANS_RESTARTS, max_iter=KMEANS_MAX_ITER):
    """Lloyd's algorithm from k-means++ starts; keeps the lowest-inertia restart.

    Restart ``r`` draws from the seed stream ``(seed, r)``. Earlier restarts win
    ties in inertia.
    """
    points = np.ascontiguousarray(points, dtype=np.float64)
    if points.ndim == 1:
        points = points[:, None]
    n = points.shape[0]
    if not 1 <= k <= n:
        raise ValueError(f"need n >= k >= 1, got n={n}, k={k}")
    if k == n:
        order = np.arange(n)
        return KMeansResult(LabelVector(order, k), points.copy(), 0.0, 0)
    best = None
    for r in range(max(1, restarts)):
        labels, centers, inertia, it = _lloyd(points, k, make_rng(seed, r), max_iter)
        if best is None or inertia < best[2]:
            best = (labels, centers, inertia, it)
    labels, centers, inertia, it = best
    return KMeansResult(LabelVector(labels, k), centers, inertia, it)


def spectral_cocluster(a, ks0, kr0, seed, restarts=KMEANS_RESTARTS, max_iter=KMEANS_MAX_ITER):
    """Sender and receiver labels from k-means on the singular vectors of ``a``.

    Both sides use the rank ``min(ks0, kr0)`` truncated SVD. Seed streams:
    ``(seed, 0)`` SVD start, ``(seed, 1)`` sender k-means, ``(seed, 2)``
    receiver k-means.
    """
    a = check_adjacency(a)
    n = a.shape[0]
    if not (1 <= ks0 <= n and 1 <= kr0 <= n):
        raise ValueError(f"community counts must lie in 1..{n}, got ({ks0}, {kr0})")
    if ks0 == 1 and kr0 == 1:
        zero = LabelVector(np.zeros(n, dtype=np.int64), 1)
        return zero, zero
    svd = truncated_svd(a.astype(np.float64), min(ks0, kr0), seed=derive_seed(seed, 0))
    gs = _side_labels(svd.u, ks0, derive_seed(seed, 1), restarts, max_iter)
    gr = _side_labels(svd.v, kr0, derive_seed(seed, 2), restarts, max_iter)
    return gs, gr


def _side_labels(vectors, k, seed, restarts, max_iter):
    if k == 1:
        return LabelVector(np.zeros(vectors.shape[0], dtype=np.int64), 1)
    return kmeans(vectors, k, seed, restarts, max_iter).labels
