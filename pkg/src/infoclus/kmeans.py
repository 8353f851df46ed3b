"""k-means on the embedding as an alternative candidate generator."""
from __future__ import annotations

import time

import numpy as np

from .dataset_io import Dataset, Embedding
from .errors import ConfigError
from .search import (
    Cluster,
    IterationRecord,
    Partitioning,
    SearchConfig,
    _greater,
    make_pwx,
)
from .stats import stats_of

MAX_ROUNDS = 300


def kmeans_pp_init(x: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = len(x)
    centers = [x[rng.integers(n)]]
    d2 = ((x - centers[0]) ** 2).sum(axis=1)
    for _ in range(1, k):
        total = d2.sum()
        idx = rng.choice(n, p=d2 / total) if total > 0 else rng.integers(n)
        centers.append(x[idx])
        d2 = np.minimum(d2, ((x - x[idx]) ** 2).sum(axis=1))
    return np.array(centers)


def lloyd(x: np.ndarray, k: int, seed: int, max_rounds: int = MAX_ROUNDS) -> np.ndarray:
    """Cluster labels from Lloyd's algorithm with k-means++ seeding.

    Stops at an assignment fixed point or after ``max_rounds``. A centroid
    that loses all its points is moved onto the point farthest from its own
    centroid.
    """
    rng = np.random.default_rng(seed)
    centers = kmeans_pp_init(x, k, rng)
    labels = None
    for _ in range(max_rounds):
        d2 = ((x[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
        new = d2.argmin(axis=1)
        for j in range(k):
            if not np.any(new == j):
                far = int(np.argmax(d2[np.arange(len(x)), new]))
                new[far] = j
                d2[far, j] = 0.0
        if labels is not None and np.array_equal(new, labels):
            break
        labels = new
        for j in range(k):
            centers[j] = x[labels == j].mean(axis=0)
    return labels


def _partition_from_labels(labels: np.ndarray, dataset: Dataset) -> Partitioning:
    # relabel clusters by first appearance so ids do not depend on centroid order
    _, first = np.unique(labels, return_index=True)
    order = np.argsort(first)
    remap = np.empty(labels.max() + 1, dtype=np.int64)
    remap[np.unique(labels)[order]] = np.arange(len(order))
    assignment = remap[labels]
    clusters = []
    for i in range(len(order)):
        members = np.flatnonzero(assignment == i)
        clusters.append(Cluster(i, members, stats_of(dataset, members)))
    return Partitioning((), assignment, clusters, None)


def kmeans_generate(embedding: Embedding, dataset: Dataset, config: SearchConfig,
                    clock=time.perf_counter):
    """Score one k-means partitioning per k in ``config.k_range``; keep the best.

    Returns (best PwX, list of IterationRecord with one record per k). Ties go
    to the smaller k.
    """
    if config.k_range is None:
        raise ConfigError("kmeans needs k_range")
    k_lo, k_hi = config.k_range
    n = embedding.n
    if k_lo < 2 or k_hi > n:
        raise ConfigError(f"k_range must lie within [2, {n}], got [{k_lo}, {k_hi}]")
    x = np.asarray(embedding.coords, dtype=float)
    global_stats = stats_of(dataset)
    start = clock()
    best = None
    log = []
    for it, k in enumerate(range(k_lo, k_hi + 1), start=1):
        t0 = clock()
        labels = lloyd(x, k, config.seed)
        pwx = make_pwx(_partition_from_labels(labels, dataset), global_stats, config, dataset)
        t1 = clock()
        log.append(IterationRecord(it, 1, None, pwx.ratio, t1 - t0, t1 - start, k=k))
        if best is None or _greater(pwx.ratio, best.ratio):
            best = pwx
        if config.time_budget is not None and clock() - start >= config.time_budget:
            break
    return best, log
