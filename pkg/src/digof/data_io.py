"""Reading real directed networks from edge-list files."""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from .estimators import DEFAULT_TAU, full_trace
from .model import MAX_NODES, adjacency_to_edge_lines

FORMATS = ("tsv", "konect")
REAL_DATA_KMAX = 8


class DataError(ValueError):
    """Unreadable or unusable network data."""


@dataclass(frozen=True)
class EdgeList:
    """Raw edges as read, keyed by the original node ids.

    ``node_ids`` lists every id in order of first appearance; ``sources`` and
    ``targets`` index into it.
    """

    edges: tuple
    node_ids: tuple
    sources: np.ndarray
    targets: np.ndarray

    def __len__(self):
        return len(self.edges)


@dataclass(frozen=True)
class PreprocessStats:
    raw_edges: int
    self_loops: int
    unique_edges: int
    raw_nodes: int
    components: int
    n: int
    edges: int


def _token(tok):
    try:
        return int(tok)
    except ValueError:
        return tok


def parse_edge_list(path, fmt="tsv"):
    """Read one edge per line.

    ``tsv`` accepts tab- or space-separated pairs and skips ``#`` comments;
    ``konect`` skips ``%`` comments and ignores columns past the second.
    Blank lines are skipped in both. Duplicate edges and self-loops are kept.
    """
    if fmt not in FORMATS:
        raise DataError(f"unknown format {fmt!r}; expected one of {FORMATS}")
    comment = "%" if fmt == "konect" else "#"
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    edges = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith(comment):
            continue
        parts = line.split()
        if len(parts) < 2 or (fmt == "tsv" and len(parts) != 2):
            raise DataError(f"{path}:{lineno}: expected two node ids, got {line!r}")
        edges.append((_token(parts[0]), _token(parts[1])))
    if not edges:
        raise DataError(f"{path}: no edges found")
    index = {}
    for s, t in edges:
        index.setdefault(s, len(index))
        index.setdefault(t, len(index))
    sources = np.fromiter((index[s] for s, _ in edges), dtype=np.int64, count=len(edges))
    targets = np.fromiter((index[t] for _, t in edges), dtype=np.int64, count=len(edges))
    return EdgeList(tuple(edges), tuple(index), sources, targets)


def _node_order(ids, keep):
    """Dense order for retained nodes: numeric when every id is an int, else first appearance."""
    kept = np.flatnonzero(keep)
    if all(isinstance(ids[i], int) for i in kept):
        return kept[np.argsort([ids[i] for i in kept], kind="stable")]
    return kept


def preprocess_with_stats(edges):
    """Like :func:`preprocess` but also returns the retained ids and counts."""
    if len(edges) == 0:
        raise DataError("edge list is empty")
    src, dst = edges.sources, edges.targets
    loops = src == dst
    src, dst = src[~loops], dst[~loops]
    m = len(edges.node_ids)
    pairs = np.unique(np.stack([src, dst], axis=1), axis=0) if src.size else np.empty((0, 2), np.int64)
    if pairs.shape[0] == 0:
        raise DataError("no edges left after removing self-loops")
    graph = coo_matrix((np.ones(pairs.shape[0]), (pairs[:, 0], pairs[:, 1])), shape=(m, m)).tocsr()
    degree = np.asarray(graph.sum(axis=0)).ravel() + np.asarray(graph.sum(axis=1)).ravel()
    ncomp, comp = connected_components(graph, directed=True, connection="weak")
    sizes = np.bincount(comp[degree > 0], minlength=ncomp)
    # ties go to the component holding the earliest-seen node
    best = -1
    for node in range(m):
        if degree[node] > 0 and (best < 0 or sizes[comp[node]] > sizes[best]):
            best = comp[node]
    keep = (comp == best) & (degree > 0)
    order = _node_order(edges.node_ids, keep)
    if order.size > MAX_NODES:
        raise DataError(f"largest component has {order.size} nodes; the dense limit is {MAX_NODES}")
    new_index = np.full(m, -1, dtype=np.int64)
    new_index[order] = np.arange(order.size)
    inside = keep[pairs[:, 0]] & keep[pairs[:, 1]]
    n = order.size
    a = np.zeros((n, n), dtype=np.uint8)
    a[new_index[pairs[inside, 0]], new_index[pairs[inside, 1]]] = 1
    stats = PreprocessStats(
        raw_edges=len(edges),
        self_loops=int(loops.sum()),
        unique_edges=int(pairs.shape[0]),
        raw_nodes=m,
        components=int((sizes > 0).sum()),
        n=n,
        edges=int(a.sum()),
    )
    return a, tuple(edges.node_ids[i] for i in order), stats


def preprocess(edges):
    """Binary adjacency of the largest weakly connected component.

    Self-loops are dropped, repeated edges collapse to one and isolated nodes
    disappear. Retained nodes are numbered in increasing id order when the ids
    are integers, otherwise in order of first appearance.
    """
    return preprocess_with_stats(edges)[0]


def export_edge_list(a, path):
    """Canonical export: ``i<TAB>j``, 1-based, sorted."""
    Path(path).write_text("".join(line + "\n" for line in adjacency_to_edge_lines(a)))


def analyze_network(a, kmax=None, tau=DEFAULT_TAU, seed=0, jobs=1):
    """RDiGoF over a real network plus the full statistic trace.

    ``kmax`` defaults to 8 (capped at ``n``). Returns ``(trace, (ks_hat, kr_hat))``.
    """
    n = a.shape[0]
    kmax = min(REAL_DATA_KMAX if kmax is None else kmax, n)
    trace = full_trace(a, kmax=kmax, tau=tau, seed=seed, jobs=jobs)
    return trace, tuple(trace.accepted)

