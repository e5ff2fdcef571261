"""Stochastic co-block model: parameters, sampling and diagnostics.

Conventions used across the package:

* an adjacency matrix is an ``n x n`` ``uint8`` array with a zero diagonal;
* a block matrix is a ``ks x kr`` float array with entries in ``[0, 1]``;
* community labels are stored 0-based (:attr:`LabelVector.codes`) and shown
  1-based (:attr:`LabelVector.labels`, JSON, CLI output).
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ._rng import derive_seed, make_rng

MAX_NODES = 10_000
LABEL_RETRIES = 1000


class ModelError(ValueError):
    """Invalid model parameters or malformed model data."""


@dataclass(frozen=True)
class LabelVector:
    """Community assignment for one side (senders or receivers)."""

    codes: np.ndarray
    k: int

    def __post_init__(self):
        codes = np.asarray(self.codes)
        if codes.ndim != 1 or codes.size < 1:
            raise ModelError("labels must be a non-empty 1-d sequence")
        if not np.issubdtype(codes.dtype, np.integer):
            if not np.all(codes == np.round(codes)):
                raise ModelError("labels must be integers")
        codes = codes.astype(np.int64)
        if self.k < 1:
            raise ModelError(f"community count must be >= 1, got {self.k}")
        if codes.min() < 0 or codes.max() >= self.k:
            raise ModelError(f"labels must lie in 1..{self.k}")
        codes.setflags(write=False)
        object.__setattr__(self, "codes", codes)
        object.__setattr__(self, "k", int(self.k))

    @classmethod
    def from_labels(cls, labels, k=None):
        """Build from 1-based labels; ``k`` defaults to the largest label."""
        labels = np.asarray(labels, dtype=np.int64)
        if k is None:
            k = int(labels.max()) if labels.size else 0
        return cls(labels - 1, k)

    @property
    def labels(self):
        return self.codes + 1

    @property
    def n(self):
        return self.codes.size

    def sizes(self):
        return np.bincount(self.codes, minlength=self.k)

    def __len__(self):
        return self.codes.size

    def __eq__(self, other):
        if not isinstance(other, LabelVector):
            return NotImplemented
        return self.k == other.k and np.array_equal(self.codes, other.codes)

    def __hash__(self):
        return hash((self.k, self.codes.tobytes()))


def as_block_matrix(values):
    """Validate and return a block probability matrix as a float array."""
    b = np.array(values, dtype=np.float64, ndmin=2)
    if b.ndim != 2 or b.shape[0] < 1 or b.shape[1] < 1:
        raise ModelError(f"block matrix must be 2-d with at least one row and column, got shape {b.shape}")
    if not np.all(np.isfinite(b)) or b.min() < 0.0 or b.max() > 1.0:
        raise ModelError("block matrix entries must lie in [0, 1]")
    return b


def check_adjacency(a):
    """Validate a binary directed adjacency matrix and return it as ``uint8``."""
    a = np.asarray(a)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
        raise ModelError(f"adjacency must be a non-empty square matrix, got shape {a.shape}")
    if a.dtype != np.uint8:
        if not np.all((a == 0) | (a == 1)):
            raise ModelError("adjacency entries must be 0 or 1")
        a = a.astype(np.uint8)
    elif a.max(initial=0) > 1:
        raise ModelError("adjacency entries must be 0 or 1")
    if np.any(np.diagonal(a)):
        raise ModelError("adjacency must have a zero diagonal (no self-loops)")
    return a


@dataclass(frozen=True)
class ScbmSpec:
    n: int
    block: np.ndarray
    sender: LabelVector
    receiver: LabelVector

    def __post_init__(self):
        block = as_block_matrix(self.block)
        block.setflags(write=False)
        object.__setattr__(self, "block", block)
        if not 1 <= self.n <= MAX_NODES:
            raise ModelError(f"n must be in 1..{MAX_NODES}, got {self.n}")
        if self.sender.n != self.n or self.receiver.n != self.n:
            raise ModelError("label vectors must have length n")
        if self.sender.k != block.shape[0] or self.receiver.k != block.shape[1]:
            raise ModelError(
                f"label counts ({self.sender.k}, {self.receiver.k}) do not match "
                f"block shape {block.shape}"
            )

    @property
    def ks(self):
        return self.block.shape[0]

    @property
    def kr(self):
        return self.block.shape[1]

    def to_dict(self):
        return {
            "n": self.n,
            "ks": self.ks,
            "kr": self.kr,
            "b": self.block.ravel().tolist(),
            "gs": self.sender.labels.tolist(),
            "gr": self.receiver.labels.tolist(),
        }

    @classmethod
    def from_dict(cls, doc):
        try:
            n, ks, kr = int(doc["n"]), int(doc["ks"]), int(doc["kr"])
            flat = np.asarray(doc["b"], dtype=np.float64)
            gs, gr = doc["gs"], doc["gr"]
        except (KeyError, TypeError, ValueError) as exc:
            raise ModelError(f"malformed model document: {exc}") from exc
        if flat.size != ks * kr:
            raise ModelError(f"b has {flat.size} entries, expected ks*kr = {ks * kr}")
        return cls(n, flat.reshape(ks, kr), LabelVector.from_labels(gs, ks), LabelVector.from_labels(gr, kr))

    def to_json(self, path=None):
        text = json.dumps(self.to_dict())
        if path is not None:
            Path(path).write_text(text + "\n")
        return text

    @classmethod
    def from_json(cls, source):
        """Load from a JSON string or a path to a JSON file."""
        if isinstance(source, Path) or (isinstance(source, str) and not source.lstrip().startswith("{")):
            source = Path(source).read_text()
        return cls.from_dict(json.loads(source))


def planted_block_matrix(ks, kr, alpha=0.7, beta=0.2, rho=1.0):
    """Block matrix ``rho * (alpha + beta)`` on the leading diagonal, ``rho * beta`` elsewhere."""
    if ks < 1 or kr < 1:
        raise ModelError(f"ks and kr must be >= 1, got ({ks}, {kr})")
    if not 0.0 < rho <= 1.0:
        raise ModelError(f"rho must lie in (0, 1], got {rho}")
    b = np.full((ks, kr), rho * beta, dtype=np.float64)
    d = min(ks, kr)
    b[np.arange(d), np.arange(d)] = rho * (alpha + beta)
    if b.min() < 0.0 or b.max() > 1.0:
        raise ModelError(f"planted entries fall outside [0, 1] for alpha={alpha}, beta={beta}, rho={rho}")
    return b


def assign_balanced_labels(n, k, seed, max_retries=LABEL_RETRIES):
    """Uniform i.i.d. labels, redrawn until every community is non-empty."""
    if not 1 <= k <= n:
        raise ModelError(f"need n >= k >= 1, got n={n}, k={k}")
    rng = make_rng(seed)
    for _ in range(max_retries):
        codes = rng.integers(0, k, size=n)
        if np.bincount(codes, minlength=k).min() > 0:
            return LabelVector(codes, k)
    raise ModelError(f"could not fill all {k} communities of {n} nodes after {max_retries} draws")


def planted_spec(n, ks, kr, rho, seed, alpha=0.7, beta=0.2, block=None):
    """Spec with balanced random labels; ``block`` overrides the planted matrix (scaled by ``rho``).

    Sender labels use stream ``(seed, 0)`` and receiver labels ``(seed, 1)``.
    """
    if block is None:
        b = planted_block_matrix(ks, kr, alpha, beta, rho)
    else:
        b = as_block_matrix(rho * np.asarray(block, dtype=np.float64))
        ks, kr = b.shape
    gs = assign_balanced_labels(n, ks, derive_seed(seed, 0))
    gr = assign_balanced_labels(n, kr, derive_seed(seed, 1))
    return ScbmSpec(n, b, gs, gr)


def omega_from_blocks(block, sender, receiver):
    """``Omega(i, j) = block(g_s(i), g_r(j))`` off the diagonal, zero on it."""
    omega = np.asarray(block)[sender.codes[:, None], receiver.codes[None, :]]
    np.fill_diagonal(omega, 0.0)
    return omega


def expected_adjacency(spec):
    return omega_from_blocks(spec.block, spec.sender, spec.receiver)


def sample_adjacency(spec, seed):
    """Draw ``A(i, j) ~ Bernoulli(Omega(i, j))`` independently; diagonal stays zero."""
    omega = expected_adjacency(spec)
    rng = make_rng(seed)
    a = (rng.random(omega.shape) < omega).astype(np.uint8)
    np.fill_diagonal(a, 0)
    return a


def community_separation(b):
    """Smallest worst-case difference between two rows or two columns of ``b``.

    Returns ``None`` when ``b`` is 1x1 (no pair to compare on either side).
    """
    b = as_block_matrix(b)
    terms = []
    if b.shape[0] > 1:
        row_gap = np.abs(b[:, None, :] - b[None, :, :]).max(axis=2)
        terms.append(row_gap[~np.eye(b.shape[0], dtype=bool)].min())
    if b.shape[1] > 1:
        col_gap = np.abs(b[:, :, None] - b[:, None, :]).max(axis=0)
        terms.append(col_gap[~np.eye(b.shape[1], dtype=bool)].min())
    if not terms:
        return None
    return float(min(terms))


@dataclass(frozen=True)
class AssumptionReport:
    edge_bound: float
    edge_bound_ok: bool
    min_sender_size: int
    min_receiver_size: int
    sender_balance: float
    receiver_balance: float
    separation: float | None
    complexity: float | None

    def to_dict(self):
        return {
            "edge_bound": self.edge_bound,
            "edge_bound_ok": self.edge_bound_ok,
            "min_sender_size": self.min_sender_size,
            "min_receiver_size": self.min_receiver_size,
            "sender_balance": self.sender_balance,
            "receiver_balance": self.receiver_balance,
            "separation": "not applicable" if self.separation is None else self.separation,
            "complexity": self.complexity,
        }


def check_assumptions(spec):
    """Diagnostic summary of the regularity conditions. Never raises on a valid spec.

    * ``edge_bound``: min over blocks of ``min(B, 1 - B)``; must be > 0.
    * ``*_balance``: smallest community size divided by ``n / K``.
    * ``complexity``: ``K_max^2 * max(log n, separation^-2) / n`` (``inf`` when
      the separation is 0, ``None`` when it is not applicable).
    """
    b = spec.block
    edge_bound = float(np.minimum(b, 1.0 - b).min())
    s_sizes, r_sizes = spec.sender.sizes(), spec.receiver.sizes()
    sep = community_separation(b)
    if sep is None:
        complexity = None
    else:
        kmax = max(spec.ks, spec.kr)
        inv_sq = math.inf if sep == 0 else sep ** -2
        complexity = kmax ** 2 * max(math.log(spec.n), inv_sq) / spec.n
    return AssumptionReport(
        edge_bound=edge_bound,
        edge_bound_ok=edge_bound > 0,
        min_sender_size=int(s_sizes.min()),
        min_receiver_size=int(r_sizes.min()),
        sender_balance=float(s_sizes.min() / (spec.n / spec.ks)),
        receiver_balance=float(r_sizes.min() / (spec.n / spec.kr)),
        separation=sep,
        complexity=complexity,
    )


# -- adjacency serialization -----------------------------------------------------


def adjacency_to_edge_lines(a):
    src, dst = np.nonzero(a)
    return [f"{i + 1}\t{j + 1}" for i, j in zip(src.tolist(), dst.tolist())]


def write_edge_list(a, path):
    """Write ``i<TAB>j`` lines, 1-based, sorted by source then target."""
    lines = adjacency_to_edge_lines(a)
    Path(path).write_text("".join(line + "\n" for line in lines))


def write_dense_csv(a, path):
    np.savetxt(path, np.asarray(a), fmt="%d", delimiter=",")


def read_dense_csv(path):
    a = np.loadtxt(path, delimiter=",", dtype=np.int64, ndmin=2)
    return check_adjacency(a)
