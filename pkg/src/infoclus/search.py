"""Greedy search for a partitioning with explanations over dendrogram cuts.

A candidate partitioning is defined by a list of selected dendrogram nodes:
every point belongs to the smallest selected node containing it, and points
under no selected node form the remainder cluster. Cluster ids follow the
selection order; the remainder comes last.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .dataset_io import Dataset, Kind
from .errors import ConfigError, EmptyClusterError, MinSizeError, NoCandidateError
from .hierarchy import Dendrogram
from .stats import (
    CategoricalStats,
    NumericStats,
    ScoreParams,
    Stats,
    categorical_kl_rows,
    gaussian_kl,
    merge_stats,
    param_counts,
    regularizer,
    split_moments,
    split_stats,
    summary,
)

#: Relative slack under which two ratios count as tied.
TIE_TOL = 1e-12

GENERATORS = ("hierarchical", "kmeans")


@dataclass(frozen=True)
class SearchConfig:
    score: ScoreParams
    minatt: int = 1
    maxatt: int = 5
    time_budget: Optional[float] = None
    max_iterations: Optional[int] = None
    min_cluster_size: int = 2
    generator: str = "hierarchical"
    k_range: Optional[tuple[int, int]] = None
    seed: int = 0

    def __post_init__(self):
        if self.minatt < 1 or self.maxatt < 1:
            raise ConfigError("minatt and maxatt must be positive")
        if self.minatt > self.maxatt:
            raise ConfigError(f"minatt ({self.minatt}) exceeds maxatt ({self.maxatt})")
        if self.time_budget is None and self.max_iterations is None:
            raise ConfigError("set a time budget, an iteration cap, or both")
        if self.time_budget is not None and self.time_budget < 0:
            raise ConfigError("time budget must be non-negative")
        if self.max_iterations is not None and self.max_iterations < 1:
            raise ConfigError("max_iterations must be at least 1")
        if self.min_cluster_size < 1:
            raise ConfigError("min_cluster_size must be positive")
        if self.generator not in GENERATORS:
            raise ConfigError(f"unknown generator {self.generator!r}")
        if self.generator == "kmeans":
            if self.k_range is None or self.k_range[0] > self.k_range[1]:
                raise ConfigError("kmeans needs a non-empty k_range")


@dataclass(eq=False)
class Cluster:
    id: int
    members: np.ndarray
    stats: Stats
    node: Optional[int] = None
    is_remainder: bool = False

    @property
    def size(self) -> int:
        return int(self.stats.count)


@dataclass(eq=False)
class Partitioning:
    selected_nodes: tuple[int, ...]
    assignment: np.ndarray
    clusters: list[Cluster]
    remainder_id: Optional[int] = None

    def member_sets(self) -> list[frozenset]:
        return [frozenset(int(i) for i in c.members) for c in self.clusters]


@dataclass(frozen=True)
class ExplanationItem:
    attribute: int
    information: float
    cluster_summary: dict
    global_summary: dict
    param_count: int


#: One list of explanation items per cluster, in the order the greedy added them.
Explanation = list


@dataclass(eq=False)
class PwX:
    partitioning: Partitioning
    explanation: Explanation
    ratio: float
    total_information: float
    total_param_count: int


@dataclass(frozen=True)
class IterationRecord:
    iteration: int
    candidate_count: int
    best_node: Optional[int]
    best_ratio: float
    seconds: float
    elapsed: float
    k: Optional[int] = None


# -- explanations ------------------------------------------------------------------

def _greater(a: float, b: float) -> bool:
    return a > b + TIE_TOL * max(1.0, abs(b))


def explain_matrix(info: np.ndarray, pc: np.ndarray, minatt: int, maxatt: int,
                   params: ScoreParams, with_choice: bool = True):
    """Greedy explanation selection on an (r clusters x m attributes) matrix.

    Every cluster first receives its ``minatt`` most informative attributes.
    Remaining pairs are then offered in decreasing order of information and
    kept while the ratio strictly increases. A cluster holds at most
    ``maxatt`` attributes, so only its top ``maxatt`` attributes can ever be
    offered. Returns (choice, ratio, total_information, total_params) where
    ``choice`` lists attribute indices per cluster (None unless requested).
    """
    r, m = info.shape
    if minatt > m:
        raise ConfigError(f"minatt ({minatt}) exceeds the number of attributes ({m})")
    top = min(maxatt, m)
    order = np.argsort(-info, axis=1, kind="stable")[:, :top]
    rows = np.arange(r)[:, None]
    base = order[:, :minatt]
    total_i = float(info[rows, base].sum())
    total_p = int(pc[base].sum())
    alpha, beta = params.alpha, params.beta
    denom = alpha + float(total_p) ** beta
    ratio = total_i / denom if denom > 0 else 0.0
    accepted = 0
    extra = order[:, minatt:]
    if extra.size:
        vals = info[rows, extra].ravel()
        seq = np.argsort(-vals, kind="stable")
        v = vals[seq]
        p = pc[extra.ravel()[seq]]
        cum_i = total_i + np.cumsum(v)
        cum_p = total_p + np.cumsum(p)
        dens = alpha + cum_p.astype(float) ** beta
        ratios = np.divide(cum_i, dens, out=np.zeros_like(cum_i), where=dens > 0)
        prev = np.concatenate([[ratio], ratios[:-1]])
        improves = ratios > prev + TIE_TOL * np.maximum(1.0, np.abs(prev))
        accepted = len(improves) if improves.all() else int(np.argmin(improves))
        if accepted:
            ratio = float(ratios[accepted - 1])
            total_i = float(cum_i[accepted - 1])
            total_p = int(cum_p[accepted - 1])
    choice = None
    if with_choice:
        choice = [list(map(int, row)) for row in base]
        if accepted:
            flat_clusters = np.repeat(np.arange(r), extra.shape[1])[seq[:accepted]]
            flat_attrs = extra.ravel()[seq[:accepted]]
            for i, j in zip(flat_clusters, flat_attrs):
                choice[int(i)].append(int(j))
    return choice, ratio, total_i, total_p


def _info_rows(stats_list: list[Stats], global_stats: Stats) -> np.ndarray:
    if isinstance(global_stats, NumericStats):
        counts = np.array([s.count for s in stats_list], dtype=float)
        mean = np.stack([s.mean for s in stats_list])
        var = np.stack([s.var for s in stats_list])
        return _numeric_info(counts, mean, var, global_stats)
    counts = np.stack([s.counts for s in stats_list])
    sizes = np.array([s.count for s in stats_list], dtype=float)
    return sizes[:, None] * categorical_kl_rows(counts, sizes, global_stats)


def _numeric_info(counts, mean, var, global_stats: NumericStats) -> np.ndarray:
    kl = gaussian_kl(mean, var, global_stats.mean, global_stats.var, regularizer(global_stats))
    return np.asarray(counts, dtype=float)[:, None] * kl


def best_explanations(partitioning: Partitioning, global_stats: Stats, config: SearchConfig,
                      dataset: Dataset | None = None):
    """Choose explaining attributes for every cluster; returns (explanation, ratio).

    ``dataset`` is only used to label categories in the distribution summaries.
    """
    stats_list = [c.stats for c in partitioning.clusters]
    info = _info_rows(stats_list, global_stats)
    pc = param_counts(global_stats)
    choice, ratio, _, _ = explain_matrix(info, pc, config.minatt, config.maxatt, config.score)
    cats = dataset.categories if dataset is not None and dataset.kind is Kind.CATEGORICAL else None
    explanation = []
    for i, attrs in enumerate(choice):
        explanation.append([
            ExplanationItem(
                attribute=j,
                information=float(info[i, j]),
                cluster_summary=summary(stats_list[i], j, cats[j] if cats else None),
                global_summary=summary(global_stats, j, cats[j] if cats else None),
                param_count=int(pc[j]),
            )
            for j in attrs
        ])
    return explanation, ratio


def make_pwx(partitioning: Partitioning, global_stats: Stats, config: SearchConfig,
             dataset: Dataset | None = None) -> PwX:
    explanation, ratio = best_explanations(partitioning, global_stats, config, dataset)
    items = [it for row in explanation for it in row]
    return PwX(
        partitioning=partitioning,
        explanation=explanation,
        ratio=ratio,
        total_information=float(sum(it.information for it in items)),
        total_param_count=int(sum(it.param_count for it in items)),
    )


# -- partitions from node selections ----------------------------------------------

def _selection_forest(d: Dendrogram, selected: list[int]) -> tuple[dict, list]:
    """Map each selected node to its nearest selected ancestor (None at top level)."""
    chosen = set(selected)
    up = {}
    for s in selected:
        p = int(d.parent[s])
        while p >= 0 and p not in chosen:
            p = int(d.parent[p])
        up[s] = p if p >= 0 else None
    return up, [s for s in selected if up[s] is None]


def _carved(whole: Stats, parts: list[Stats]) -> Stats:
    if not parts:
        return whole
    acc = parts[0]
    for p in parts[1:]:
        acc = merge_stats(acc, p)
    return split_stats(whole, acc)


def _cluster_stats(d: Dendrogram, selected: list[int]) -> list[Stats]:
    """Stats of each selected node's cluster plus the remainder, from node stats only."""
    up, top = _selection_forest(d, selected)
    below = {s: [] for s in selected}
    for s in selected:
        if up[s] is not None:
            below[up[s]].append(s)
    out = []
    for s in selected:
        if sum(int(d.count[c]) for c in below[s]) >= int(d.count[s]):
            raise EmptyClusterError(f"node {s} is fully covered by nested selections")
        out.append(_carved(d.stats[s], [d.stats[c] for c in below[s]]))
    if sum(int(d.count[c]) for c in top) >= d.n:
        raise EmptyClusterError("remainder cluster is empty")
    out.append(_carved(d.stats[d.root], [d.stats[c] for c in top]))
    return out


def _assignment(d: Dendrogram, selected: list[int]) -> np.ndarray:
    cid = {s: i for i, s in enumerate(selected)}
    owner = np.empty(d.n_nodes, dtype=np.int64)
    owner[d.root] = len(selected)
    parent = d.parent
    for v in range(d.root - 1, -1, -1):
        owner[v] = cid[v] if v in cid else owner[parent[v]]
    return owner[: d.n]


def derive_partition(dendrogram: Dendrogram, selected_nodes, dataset: Dataset | None = None,
                     min_cluster_size: int = 1) -> Partitioning:
    """Partition induced by a node selection, with stats from merge/split only."""
    d = dendrogram
    if d.stats is None:
        raise ValueError("dendrogram is not annotated")
    if dataset is not None and dataset.n != d.n:
        raise ValueError("dataset and dendrogram sizes differ")
    selected = [int(s) for s in selected_nodes]
    if len(set(selected)) != len(selected):
        raise ValueError("a node is selected twice")
    for s in selected:
        if not (0 <= s < d.root):
            raise ValueError(f"node {s} is not a selectable (non-root) node")
    stats = _cluster_stats(d, selected)
    assignment = _assignment(d, selected)
    order = np.argsort(assignment, kind="stable")
    bounds = np.searchsorted(assignment[order], np.arange(len(selected) + 2))
    clusters = []
    for i, st in enumerate(stats):
        members = order[bounds[i]:bounds[i + 1]]
        if st.count < min_cluster_size:
            raise MinSizeError(f"cluster {i} has {st.count} points, minimum is {min_cluster_size}")
        is_rem = i == len(selected)
        clusters.append(Cluster(i, members, st, None if is_rem else selected[i], is_rem))
    return Partitioning(tuple(selected), assignment, clusters, len(selected))


def trivial_partition(dendrogram: Dendrogram) -> Partitioning:
    return derive_partition(dendrogram, [])


# -- greedy search -------------------------------------------------------------------

class _Fingerprints:
    """Random 64-bit leaf tags summed (mod 2**64) over subtrees.

    Two point sets with equal tag sums are treated as the same set.
    """

    def __init__(self, d: Dendrogram, seed: int = 0x5EED):
        rng = np.random.default_rng(seed)
        fp = np.zeros(d.n_nodes, dtype=np.uint64)
        fp[: d.n] = rng.integers(0, 2**63, size=d.n, dtype=np.uint64) * np.uint64(2) + np.uint64(1)
        with np.errstate(over="ignore"):
            for k in range(d.n - 1):
                fp[d.n + k] = fp[d.left[k]] + fp[d.right[k]]
        self.node = fp


def _preorder(d: Dendrogram) -> np.ndarray:
    """Preorder position of every node; subtree of v spans pre[v] .. pre[v] + 2*count[v] - 2."""
    pre = np.empty(d.n_nodes, dtype=np.int64)
    stack = [d.root]
    i = 0
    while stack:
        v = stack.pop()
        pre[v] = i
        i += 1
        if v >= d.n:
            k = v - d.n
            stack.append(int(d.right[k]))
            stack.append(int(d.left[k]))
    return pre


class _Searcher:
    def __init__(self, d: Dendrogram, dataset: Dataset, config: SearchConfig):
        if d.stats is None:
            raise ValueError("dendrogram is not annotated")
        self.d = d
        self.dataset = dataset
        self.config = config
        self.global_stats = d.stats[d.root]
        self.pc = param_counts(self.global_stats)
        if config.minatt > len(self.pc):
            raise ConfigError(f"minatt ({config.minatt}) exceeds the number of attributes ({len(self.pc)})")
        self.numeric = isinstance(self.global_stats, NumericStats)
        self.fp = _Fingerprints(d).node
        pre = _preorder(d)
        self.pre = pre
        self.by_pre = np.argsort(pre)
        self.alive = np.zeros(d.n_nodes, dtype=bool)
        self.alive[: d.root] = d.count[: d.root] >= config.min_cluster_size

    # cluster state for a selection
    def _state(self, selected: list[int]):
        stats = _cluster_stats(self.d, selected)
        info = _info_rows(stats, self.global_stats)
        sizes = np.array([s.count for s in stats], dtype=np.int64)
        with np.errstate(over="ignore"):
            fps = self._cluster_fps(selected)
        return stats, info, sizes, fps

    def _cluster_fps(self, selected):
        fps = []
        up, top = _selection_forest(self.d, selected)
        for s in selected:
            f = self.fp[s]
            for c in selected:
                if up[c] == s:
                    f = f - self.fp[c]
            fps.append(f)
        rem = self.fp[self.d.root]
        for c in top:
            rem = rem - self.fp[c]
        fps.append(rem)
        return np.array(fps, dtype=np.uint64)

    def _owner(self, selected: list[int]) -> np.ndarray:
        d = self.d
        owner_pre = np.full(d.n_nodes, len(selected), dtype=np.int64)
        for i in sorted(range(len(selected)), key=lambda i: -d.count[selected[i]]):
            s = selected[i]
            start = self.pre[s]
            owner_pre[start:start + 2 * d.count[s] - 1] = i
        return owner_pre[self.pre]

    def iterate(self, selected: list[int], iteration: int, observer=None):
        """Evaluate every candidate split of the current selection.

        Returns (best_node, best_ratio, distinct_candidate_count).
        """
        d, cfg = self.d, self.config
        stats, info, sizes, fps = self._state(selected)
        r_old = len(stats)
        owner = self._owner(selected)
        chosen = set(selected)

        # selected nodes directly carved out of each unselected ancestor
        carve: dict[int, list[int]] = {}
        for s in selected:
            p = int(d.parent[s])
            while p >= 0 and p not in chosen:
                carve.setdefault(p, []).append(s)
                p = int(d.parent[p])
        carve_count = np.zeros(d.n_nodes, dtype=np.int64)
        carve_fp = np.zeros(d.n_nodes, dtype=np.uint64)
        for v, lst in carve.items():
            carve_count[v] = sum(int(d.count[s]) for s in lst)
            carve_fp[v] = self.fp[lst].sum(dtype=np.uint64)

        mask = self.alive.copy()
        if selected:
            mask[selected] = False
        cand = np.flatnonzero(mask)
        c_size = d.count[cand] - carve_count[cand]
        a_idx = owner[cand]
        a_size = sizes[a_idx] - c_size
        ok = (c_size >= cfg.min_cluster_size) & (a_size >= cfg.min_cluster_size)
        cand, c_size, a_idx = cand[ok], c_size[ok], a_idx[ok]
        if len(cand) == 0:
            return None, 0.0, 0

        # deduplicate partitions: same parent cluster and same unordered pair of halves
        with np.errstate(over="ignore"):
            fc = self.fp[cand] - carve_fp[cand]
            fa = fps[a_idx] - fc
        lo, hi = np.minimum(fc, fa), np.maximum(fc, fa)
        keys = np.stack([a_idx.astype(np.uint64), lo, hi], axis=1)
        _, first = np.unique(keys, axis=0, return_index=True)
        keep = np.sort(first)
        cand, c_size, a_idx = cand[keep], c_size[keep], a_idx[keep]

        info_c, info_a = self._candidate_info(cand, carve, stats, a_idx)

        base = np.vstack([info[:-1], np.zeros((1, info.shape[1])), info[-1:]])
        rem_row = r_old  # remainder row index after insertion
        minatt, maxatt, params = cfg.minatt, cfg.maxatt, cfg.score
        pc = self.pc
        best_node, best_ratio = None, -np.inf
        for i, c in enumerate(cand):
            M = base.copy()
            M[r_old - 1] = info_c[i]
            a = a_idx[i]
            M[rem_row if a == r_old - 1 else a] = info_a[i]
            _, ratio, _, _ = explain_matrix(M, pc, minatt, maxatt, params, with_choice=False)
            if observer is not None:
                observer(iteration, tuple(selected) + (int(c),), ratio)
            if best_node is None or _greater(ratio, best_ratio):
                best_node, best_ratio = int(c), ratio
        return best_node, best_ratio, len(cand)

    def _candidate_info(self, cand, carve, stats, a_idx):
        d = self.d
        table = d.stats
        if self.numeric:
            n_c = table.count[cand].astype(float)
            mean_c = table.mean[cand].copy()
            var_c = table.var[cand].copy()
            for i, c in enumerate(cand):
                lst = carve.get(int(c))
                if lst:
                    part = _carved(table[int(c)], [table[s] for s in lst])
                    n_c[i], mean_c[i], var_c[i] = part.count, part.mean, part.var
            a_n = np.array([s.count for s in stats], dtype=float)[a_idx]
            a_mean = np.stack([s.mean for s in stats])[a_idx]
            a_var = np.stack([s.var for s in stats])[a_idx]
            n_a, mean_a, var_a = split_moments(a_n[:, None], a_mean, a_var, n_c[:, None], mean_c, var_c)
            g = self.global_stats
            return (_numeric_info(n_c, mean_c, var_c, g),
                    _numeric_info(n_a[:, 0], mean_a, var_a, g))
        counts_c = table.counts[cand].copy()
        for i, c in enumerate(cand):
            lst = carve.get(int(c))
            if lst:
                counts_c[i] = _carved(table[int(c)], [table[s] for s in lst]).counts
        a_counts = np.stack([s.counts for s in stats])[a_idx] - counts_c
        g = self.global_stats
        size_c = counts_c[:, : g.offsets[1]].sum(axis=1).astype(float)
        size_a = a_counts[:, : g.offsets[1]].sum(axis=1).astype(float)
        return (size_c[:, None] * categorical_kl_rows(counts_c, size_c, g),
                size_a[:, None] * categorical_kl_rows(a_counts, size_a, g))

    def retire(self, node: int) -> None:
        self.alive[node] = False
        for a in self.d.ancestors(node):
            self.alive[a] = False


def greedy_search(dendrogram: Dendrogram, dataset: Dataset, config: SearchConfig,
                  observer: Callable | None = None, clock=time.perf_counter):
    """Grow a node selection one split per iteration, keeping the best PwX seen.

    Each iteration tries every remaining candidate node on top of the previous
    iteration's best selection and keeps the candidate with the highest ratio
    (ties to the lower node id). The chosen node and its ancestors then leave
    the candidate pool. Iterations stop when the time budget (checked before
    each iteration) or the iteration cap is reached, or when no candidate
    yields a valid partition. ``observer(iteration, selection, ratio)`` is
    called for every distinct candidate evaluated.

    Returns (best PwX, list of IterationRecord).
    """
    searcher = _Searcher(dendrogram, dataset, config)
    start = clock()
    selected: list[int] = []
    best_sel: list[int] = []
    best_ratio = 0.0
    log: list[IterationRecord] = []
    iteration = 0
    while True:
        if config.max_iterations is not None and iteration >= config.max_iterations:
            break
        if config.time_budget is not None and clock() - start >= config.time_budget:
            break
        iteration += 1
        t0 = clock()
        node, ratio, count = searcher.iterate(selected, iteration, observer)
        t1 = clock()
        if node is None:
            if iteration == 1:
                raise NoCandidateError("no dendrogram node yields a valid first split")
            break
        log.append(IterationRecord(iteration, count, node, ratio, t1 - t0, t1 - start))
        selected = selected + [node]
        searcher.retire(node)
        if _greater(ratio, best_ratio):
            best_ratio = ratio
            best_sel = list(selected)
    partitioning = derive_partition(dendrogram, best_sel, dataset)
    return make_pwx(partitioning, searcher.global_stats, config, dataset), log
