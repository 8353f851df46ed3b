"""Agglomerative dendrogram over the embedding, annotated with per-node statistics.

Node numbering follows the usual linkage-matrix convention: leaves are
``0..n-1``, the k-th merge creates node ``n + k`` and the root is ``2n - 2``.
"""
from __future__ import annotations

import csv
import dataclasses
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .dataset_io import Dataset, Embedding, Kind, is_number
from .errors import ParseError, SizeError
from .stats import (
    CategoricalStats,
    NumericStats,
    Stats,
    category_offsets,
    merge_moments,
)

LINKAGES = ("ward", "single", "complete", "average")


@dataclass(frozen=True, eq=False)
class NodeStats:
    """Statistics of every dendrogram node, one row per node."""

    kind: Kind
    count: np.ndarray
    mean: np.ndarray | None = None
    var: np.ndarray | None = None
    counts: np.ndarray | None = None
    offsets: tuple[int, ...] | None = None

    def __getitem__(self, node: int) -> Stats:
        if self.kind is Kind.NUMERIC:
            return NumericStats(int(self.count[node]), self.mean[node], self.var[node])
        return CategoricalStats(int(self.count[node]), self.counts[node], self.offsets)


@dataclass(frozen=True, eq=False)
class Dendrogram:
    n: int
    left: np.ndarray
    right: np.ndarray
    height: np.ndarray
    count: np.ndarray
    parent: np.ndarray
    stats: NodeStats | None = None

    @property
    def root(self) -> int:
        return 2 * self.n - 2

    @property
    def n_nodes(self) -> int:
        return 2 * self.n - 1

    def children(self, node: int) -> tuple[int, int] | None:
        if node < self.n:
            return None
        k = node - self.n
        return int(self.left[k]), int(self.right[k])

    def leaves(self, node: int) -> np.ndarray:
        """Leaf indices under ``node``, in left-to-right order."""
        out = []
        stack = [node]
        while stack:
            v = stack.pop()
            if v < self.n:
                out.append(v)
            else:
                k = v - self.n
                stack.append(int(self.right[k]))
                stack.append(int(self.left[k]))
        return np.array(out, dtype=np.int64)

    def ancestors(self, node: int) -> list[int]:
        out = []
        p = int(self.parent[node])
        while p >= 0:
            out.append(p)
            p = int(self.parent[p])
        return out

    @classmethod
    def from_merges(cls, n: int, left, right, height, counts=None) -> "Dendrogram":
        """Validate a merge list and derive counts and parent links."""
        left = np.asarray(left, dtype=np.int64)
        right = np.asarray(right, dtype=np.int64)
        height = np.asarray(height, dtype=float)
        if n < 2:
            raise SizeError("a dendrogram needs at least 2 leaves")
        if not (len(left) == len(right) == len(height) == n - 1):
            raise SizeError(f"expected {n - 1} merges for {n} leaves, got {len(left)}")
        count = np.zeros(2 * n - 1, dtype=np.int64)
        count[:n] = 1
        parent = np.full(2 * n - 1, -1, dtype=np.int64)
        for k in range(n - 1):
            node = n + k
            for child in (left[k], right[k]):
                if not (0 <= child < node):
                    raise ParseError(f"merge {k}: child {child} is not an existing node")
                if parent[child] >= 0:
                    raise ParseError(f"merge {k}: node {child} already has a parent")
                parent[child] = node
            if left[k] == right[k]:
                raise ParseError(f"merge {k}: a node cannot merge with itself")
            count[node] = count[left[k]] + count[right[k]]
            if counts is not None and int(counts[k]) != count[node]:
                raise ParseError(f"merge {k}: declared count {counts[k]} but subtree has {count[node]}")
        return cls(n, left, right, height, count, parent)


# -- construction ---------------------------------------------------------------

def build_dendrogram(embedding: Embedding, linkage: str = "ward") -> Dendrogram:
    """Agglomerate the embedded points with the nearest-neighbour-chain algorithm.

    Exact distance ties are resolved deterministically: a chain tail prefers its
    predecessor, otherwise the candidate with the smallest cluster id wins, and
    an emptied chain restarts from the most recently created cluster. Heights
    are Euclidean for single/complete/average and the usual
    sqrt(2 |A||B| / (|A|+|B|)) * ||c_A - c_B|| for ward.
    """
    if linkage not in LINKAGES:
        raise ValueError(f"unknown linkage {linkage!r}; expected one of {LINKAGES}")
    x = np.asarray(embedding.coords, dtype=float)
    n = x.shape[0]
    if n < 2:
        raise SizeError("need at least 2 points")

    ids = np.arange(n, dtype=np.int64)
    size = np.ones(n, dtype=float)
    if linkage == "ward":
        cx, cy = x[:, 0].copy(), x[:, 1].copy()

        def row(a):
            dx = cx - cx[a]
            dy = cy - cy[a]
            w = size * (2.0 * size[a]) / (size + size[a])
            d = w * (dx * dx + dy * dy)
            d[a] = np.inf
            return d
    else:
        diff = x[:, None, :] - x[None, :, :]
        dist = np.sqrt((diff**2).sum(axis=2))
        del diff
        np.fill_diagonal(dist, np.inf)

        def row(a):
            return dist[a]

    raw = []  # (id_a, id_b, height) in creation order
    chain: list[int] = []
    last = 0
    while len(raw) < n - 1:
        if not chain:
            chain.append(last)
        a = chain[-1]
        d = row(a)
        dmin = d.min()
        prev = chain[-2] if len(chain) > 1 else -1
        if prev >= 0 and d[prev] == dmin:
            b = prev
        else:
            cand = np.flatnonzero(d == dmin)
            b = int(cand[np.argmin(ids[cand])]) if len(cand) > 1 else int(cand[0])
        if b != prev:
            chain.append(b)
            continue
        chain.pop()
        chain.pop()
        s, t = min(a, b), max(a, b)
        sa, sb = size[a], size[b]
        if linkage == "ward":
            h = float(np.sqrt(dmin))
            cx[s] = (sa * cx[a] + sb * cx[b]) / (sa + sb)
            cy[s] = (sa * cy[a] + sb * cy[b]) / (sa + sb)
            cx[t] = cy[t] = np.inf
        else:
            h = float(dmin)
            if linkage == "single":
                new = np.minimum(dist[a], dist[b])
            elif linkage == "complete":
                new = np.maximum(dist[a], dist[b])
            else:
                new = (sa * dist[a] + sb * dist[b]) / (sa + sb)
            dist[s, :] = new
            dist[:, s] = new
            dist[s, s] = np.inf
            dist[t, :] = np.inf
            dist[:, t] = np.inf
        raw.append((int(ids[a]), int(ids[b]), h))
        size[s] = sa + sb
        size[t] = 1.0
        ids[s] = n + len(raw) - 1
        ids[t] = -1
        last = s
    return _from_chain_merges(n, raw)


def _from_chain_merges(n: int, raw) -> Dendrogram:
    """Order chain merges by height and relabel internal nodes accordingly."""
    h = np.array([r[2] for r in raw], dtype=float)
    for k, (a, b, _) in enumerate(raw):
        for c in (a, b):
            if c >= n:
                h[k] = max(h[k], h[c - n])
    order = np.argsort(h, kind="stable")
    rank = np.empty(n - 1, dtype=np.int64)
    rank[order] = np.arange(n - 1)

    def relabel(c):
        return c if c < n else n + int(rank[c - n])

    left = np.empty(n - 1, dtype=np.int64)
    right = np.empty(n - 1, dtype=np.int64)
    for k, (a, b, _) in enumerate(raw):
        a, b = relabel(a), relabel(b)
        left[rank[k]], right[rank[k]] = min(a, b), max(a, b)
    return Dendrogram.from_merges(n, left, right, h[order])


def load_dendrogram(path, n: int) -> Dendrogram:
    """Read a merge table with rows ``left_child,right_child,height,count``.

    A non-numeric first row is treated as a header.
    """
    with open(Path(path), newline="", encoding="utf-8") as fh:
        rows = [[c.strip() for c in r] for r in csv.reader(fh) if r and any(r)]
    if rows and not all(is_number(c) for c in rows[0]):
        rows = rows[1:]
    left, right, height, counts = [], [], [], []
    for lineno, r in enumerate(rows, start=1):
        if len(r) != 4 or not all(is_number(c) for c in r):
            raise ParseError(f"{path}: row {lineno}: expected 4 numeric fields")
        left.append(int(float(r[0])))
        right.append(int(float(r[1])))
        height.append(float(r[2]))
        counts.append(int(float(r[3])))
    return Dendrogram.from_merges(n, left, right, height, counts)


def write_dendrogram(dendrogram: Dendrogram, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["left_child", "right_child", "height", "count"])
        n = dendrogram.n
        for k in range(n - 1):
            w.writerow([int(dendrogram.left[k]), int(dendrogram.right[k]),
                        repr(float(dendrogram.height[k])), int(dendrogram.count[n + k])])


# -- statistics -------------------------------------------------------------------

def _levels(d: Dendrogram) -> list[np.ndarray]:
    """Group internal nodes so that every node's children sit in earlier groups."""
    n = d.n
    level = np.zeros(2 * n - 1, dtype=np.int64)
    for k in range(n - 1):
        level[n + k] = 1 + max(level[d.left[k]], level[d.right[k]])
    internal = np.arange(n, 2 * n - 1)
    lv = level[n:]
    order = np.argsort(lv, kind="stable")
    bounds = np.flatnonzero(np.diff(lv[order])) + 1
    return np.split(internal[order], bounds)


def annotate_stats(dendrogram: Dendrogram, dataset: Dataset) -> Dendrogram:
    """Attach statistics to every node in one bottom-up pass.

    Leaves hold a single point (variance 0); internal nodes merge their
    children. Nodes of equal depth are merged together in one vectorised step.
    """
    n = dendrogram.n
    if dataset.n != n:
        raise SizeError(f"dendrogram has {n} leaves but dataset has {dataset.n} rows")
    count = dendrogram.count.copy()
    if dataset.kind is Kind.NUMERIC:
        m = dataset.m
        mean = np.empty((2 * n - 1, m))
        var = np.empty((2 * n - 1, m))
        mean[:n] = dataset.numeric_values
        var[:n] = 0.0
        for nodes in _levels(dendrogram):
            a = dendrogram.left[nodes - n]
            b = dendrogram.right[nodes - n]
            _, mean[nodes], var[nodes] = merge_moments(
                count[a, None].astype(float), mean[a], var[a],
                count[b, None].astype(float), mean[b], var[b])
        table = NodeStats(Kind.NUMERIC, count, mean=mean, var=var)
    else:
        offsets = category_offsets(dataset)
        counts = np.zeros((2 * n - 1, offsets[-1]), dtype=np.int64)
        cols = dataset.codes + np.asarray(offsets[:-1])
        rows = np.repeat(np.arange(n), dataset.m)
        counts[rows, cols.ravel()] = 1
        for nodes in _levels(dendrogram):
            counts[nodes] = counts[dendrogram.left[nodes - n]] + counts[dendrogram.right[nodes - n]]
        table = NodeStats(Kind.CATEGORICAL, count, counts=counts, offsets=offsets)
    return dataclasses.replace(dendrogram, stats=table)
