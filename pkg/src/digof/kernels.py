"""Hot inner loops, each with a numba and a numpy implementation.

The public names at the bottom dispatch to the numba variant unless
``DIGOF_DISABLE_NUMBA`` is set. Both variants are importable directly so the
benchmark and the equivalence tests can run them side by side.
"""
import numpy as np

from ._accel import USE_NUMBA, njit

__all__ = [
    "nearest_center",
    "centroids",
    "block_counts",
    "residual_fill",
    "KERNELS",
]


# -- k-means assignment --------------------------------------------------------


@njit
def _nearest_center_numba(points, centers):
    n, d = points.shape
    k = centers.shape[0]
    labels = np.empty(n, dtype=np.int64)
    dist = np.empty(n, dtype=np.float64)
    for i in range(n):
        best = np.inf
        best_j = 0
        for j in range(k):
            s = 0.0
            for t in range(d):
                diff = points[i, t] - centers[j, t]
                s += diff * diff
            # strict < keeps the lowest index on exact ties
            if s < best:
                best = s
                best_j = j
        labels[i] = best_j
        dist[i] = best
    return labels, dist


def _nearest_center_numpy(points, centers):
    diff = points[:, None, :] - centers[None, :, :]
    d2 = np.einsum("ijk,ijk->ij", diff, diff)
    labels = d2.argmin(axis=1)
    return labels.astype(np.int64), d2[np.arange(points.shape[0]), labels]


# -- k-means center update -----------------------------------------------------


@njit
def _centroids_numba(points, labels, k):
    n, d = points.shape
    sums = np.zeros((k, d), dtype=np.float64)
    counts = np.zeros(k, dtype=np.int64)
    for i in range(n):
        c = labels[i]
        counts[c] += 1
        for t in range(d):
            sums[c, t] += points[i, t]
    for c in range(k):
        if counts[c] > 0:
            for t in range(d):
                sums[c, t] /= counts[c]
    return sums, counts


def _centroids_numpy(points, labels, k):
    d = points.shape[1]
    counts = np.bincount(labels, minlength=k).astype(np.int64)
    sums = np.empty((k, d), dtype=np.float64)
    for t in range(d):
        sums[:, t] = np.bincount(labels, weights=points[:, t], minlength=k)
    nonempty = counts > 0
    sums[nonempty] /= counts[nonempty, None]
    return sums, counts


# -- edge counts per (sender block, receiver block) ---------------------------


@njit
def _block_counts_numba(a, gs, gr, ks, kr):
    n = a.shape[0]
    out = np.zeros((ks, kr), dtype=np.int64)
    for i in range(n):
        row = gs[i]
        for j in range(n):
            if a[i, j] != 0:
                out[row, gr[j]] += 1
    return out


def _block_counts_numpy(a, gs, gr, ks, kr):
    zr = np.zeros((a.shape[1], kr), dtype=np.float64)
    zr[np.arange(a.shape[1]), gr] = 1.0
    per_node = a.astype(np.float64) @ zr
    out = np.empty((ks, kr), dtype=np.int64)
    for l in range(kr):
        out[:, l] = np.rint(np.bincount(gs, weights=per_node[:, l], minlength=ks))
    return out


# -- normalized residual -------------------------------------------------------


@njit
def _residual_fill_numba(a, omega):
    n = a.shape[0]
    scale = n - 1.0
    out = np.zeros((n, n), dtype=np.float64)
    for i in range(n):
        for j in range(n):
            if i != j:
                w = omega[i, j]
                out[i, j] = (a[i, j] - w) / np.sqrt(scale * w * (1.0 - w))
    return out


def _residual_fill_numpy(a, omega):
    n = a.shape[0]
    scale = n - 1.0
    with np.errstate(divide="ignore", invalid="ignore"):
        out = (a - omega) / np.sqrt(scale * omega * (1.0 - omega))
    np.fill_diagonal(out, 0.0)
    return out


KERNELS = {
    "nearest_center": (_nearest_center_numba, _nearest_center_numpy),
    "centroids": (_centroids_numba, _centroids_numpy),
    "block_counts": (_block_counts_numba, _block_counts_numpy),
    "residual_fill": (_residual_fill_numba, _residual_fill_numpy),
}

_pick = 0 if USE_NUMBA else 1
nearest_center = KERNELS["nearest_center"][_pick]
centroids = KERNELS["centroids"][_pick]
block_counts = KERNELS["block_counts"][_pick]
residual_fill = KERNELS["residual_fill"][_pick]
