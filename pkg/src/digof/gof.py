"""Goodness-of-fit statistic from the largest singular value of the normalized residual."""
from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from . import kernels
from ._rng import derive_seed
from .model import LabelVector, check_adjacency
from .spectral import largest_singular_value, spectral_cocluster


class EmptyCommunityError(ValueError):
    def __init__(self, side, index, pair=None):
        where = f" for candidate {pair}" if pair is not None else ""
        super().__init__(f"{side} community {index + 1} is empty{where}")
        self.side = side
        self.index = index
        self.pair = pair


@dataclass(frozen=True)
class GofResult:
    t_hat: float
    sigma1: float
    b_hat: np.ndarray
    sender_labels: LabelVector
    receiver_labels: LabelVector
    clamped_cells: int

    def to_dict(self):
        return {
            "statistic": self.t_hat,
            "sigma1": self.sigma1,
            "ks0": int(self.b_hat.shape[0]),
            "kr0": int(self.b_hat.shape[1]),
            "b_hat": self.b_hat.tolist(),
            "sender_sizes": self.sender_labels.sizes().tolist(),
            "receiver_sizes": self.receiver_labels.sizes().tolist(),
            "clamped_cells": self.clamped_cells,
        }

    def to_json(self):
        return json.dumps(self.to_dict())


def clamp_bounds(n):
    eps = 1.0 / (n * (n - 1))
    return eps, 1.0 - eps


def _raw_block_estimate(a, gs, gr):
    a = check_adjacency(a)
    n = a.shape[0]
    if gs.n != n or gr.n != n:
        raise ValueError(f"label vectors must have length {n}")
    s_sizes, r_sizes = gs.sizes(), gr.sizes()
    for side, sizes in (("sender", s_sizes), ("receiver", r_sizes)):
        empty = np.flatnonzero(sizes == 0)
        if empty.size:
            raise EmptyCommunityError(side, int(empty[0]))
    counts = kernels.block_counts(a, gs.codes, gr.codes, gs.k, gr.k)
    # denominator counts all ordered pairs, diagonal slots included
    return counts / np.outer(s_sizes, r_sizes).astype(np.float64)


def estimate_block_matrix(a, gs, gr, clamp=True):
    """Plug-in block probabilities: edges in block over ``|sender block| * |receiver block|``.

    With ``clamp`` the entries are pushed into ``[1/(n(n-1)), 1 - 1/(n(n-1))]``
    so the residual normalization never divides by zero.
    """
    b = _raw_block_estimate(a, gs, gr)
    if clamp:
        lo, hi = clamp_bounds(gs.n)
        b = np.clip(b, lo, hi)
    return b


def estimated_omega(b_hat, gs, gr):
    b_hat = np.asarray(b_hat, dtype=np.float64)
    if b_hat.shape != (gs.k, gr.k):
        raise ValueError(f"b_hat shape {b_hat.shape} does not match label counts ({gs.k}, {gr.k})")
    if gs.n != gr.n:
        raise ValueError("label vectors differ in length")
    omega = b_hat[gs.codes[:, None], gr.codes[None, :]]
    np.fill_diagonal(omega, 0.0)
    return omega


def residual_matrix(a, omega):
    """``(A - Omega) / sqrt((n - 1) Omega (1 - Omega))`` off the diagonal, zero on it."""
    a = check_adjacency(a)
    omega = np.ascontiguousarray(omega, dtype=np.float64)
    if omega.shape != a.shape:
        raise ValueError(f"omega shape {omega.shape} does not match adjacency {a.shape}")
    off = ~np.eye(a.shape[0], dtype=bool)
    vals = omega[off]
    if vals.size and not (np.all(vals > 0.0) and np.all(vals < 1.0)):
        raise ValueError("off-diagonal expected edge probabilities must lie strictly inside (0, 1)")
    return kernels.residual_fill(a, omega)


def test_statistic(a, ks0, kr0, seed, sigma1_tol=1e-10):
    """Fit ``(ks0, kr0)`` communities by spectral co-clustering and return the statistic.

    Clustering draws from the seed stream ``(seed, ks0, kr0)``.
    """
    a = check_adjacency(a)
    n = a.shape[0]
    gs, gr = spectral_cocluster(a, ks0, kr0, derive_seed(seed, ks0, kr0))
    try:
        raw = _raw_block_estimate(a, gs, gr)
    except EmptyCommunityError as exc:
        raise EmptyCommunityError(exc.side, exc.index, (ks0, kr0)) from None
    lo, hi = clamp_bounds(n)
    clamped = int(np.count_nonzero((raw < lo) | (raw > hi)))
    b_hat = np.clip(raw, lo, hi)
    r_hat = residual_matrix(a, estimated_omega(b_hat, gs, gr))
    sigma1 = largest_singular_value(r_hat, tol=sigma1_tol, seed=derive_seed(seed, ks0, kr0, 1))
    return GofResult(sigma1 - 2.0, sigma1, b_hat, gs, gr, clamped)


# pytest would otherwise try to collect the public name above
test_statistic.__test__ = False


def ideal_statistic(a, omega_true, sigma1_tol=1e-10, seed=0):
    """Statistic built from the true expected adjacency instead of fitted blocks."""
    r = residual_matrix(a, omega_true)
    return largest_singular_value(r, tol=sigma1_tol, seed=seed) - 2.0
