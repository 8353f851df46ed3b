"""Timing decomposition on synthetic Gaussian mixtures.

Reports, per data size, the initialization time (dendrogram build plus node
statistics), the mean time per search iteration and the mean time per
evaluated candidate partitioning.
"""
from __future__ import annotations

import time

import numpy as np

from .dataset_io import Dataset, Embedding
from .hierarchy import annotate_stats, build_dendrogram
from .search import SearchConfig, greedy_search
from .stats import ScoreParams

N_COMPONENTS = 8
RADIUS = 10.0


def synthetic_mixture(n: int, m: int, seed: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """n points from 8 equally weighted unit-variance Gaussians.

    Component centres lie on a circle of radius 10 in the first two
    coordinates; every further coordinate is a phase-shifted projection of the
    same circle, so all attributes separate some components. Returns
    (data, component labels).
    """
    rng = np.random.default_rng(seed)
    theta = 2 * np.pi * np.arange(N_COMPONENTS) / N_COMPONENTS
    phase = np.array([0.0, np.pi / 2] + [np.pi * j / max(m, 1) for j in range(2, m)])[:m]
    centres = RADIUS * np.cos(theta[:, None] - phase[None, :])
    labels = rng.integers(0, N_COMPONENTS, size=n)
    x = centres[labels] + rng.standard_normal((n, m))
    return x, labels


def bench_one(n: int, m: int, seed: int = 0, iterations: int = 3, linkage: str = "ward",
              alpha: float | None = None, beta: float = 1.5, minatt: int = 2, maxatt: int = 5,
              clock=time.perf_counter) -> dict:
    x, _ = synthetic_mixture(n, m, seed)
    dataset = Dataset.from_numeric(x)
    embedding = Embedding(x[:, :2].copy())
    t0 = clock()
    dendrogram = annotate_stats(build_dendrogram(embedding, linkage), dataset)
    init = clock() - t0
    config = SearchConfig(ScoreParams(n / 10 if alpha is None else alpha, beta),
                          minatt=min(minatt, m), maxatt=maxatt, max_iterations=iterations)
    _, log = greedy_search(dendrogram, dataset, config, clock=clock)
    search_seconds = sum(r.seconds for r in log)
    candidates = sum(r.candidate_count for r in log)
    return {
        "n": n,
        "m": m,
        "initialization_seconds": init,
        "avg_iteration_seconds": search_seconds / len(log),
        "avg_partitioning_seconds": search_seconds / candidates,
        "iterations_run": len(log),
        "candidates_evaluated": candidates,
    }


def run_bench(sizes, m: int, seed: int = 0, iterations: int = 3, **kw) -> dict:
    records = [bench_one(n, m, seed=seed, iterations=iterations, **kw) for n in sizes]
    return {"features": m, "seed": seed, "iterations": iterations, "records": records}
