"""Sufficient statistics, their merge/split recurrences, and the scoring functions.

Numeric attributes are summarised by (count, mean, population variance) and
modelled as Gaussians; categorical attributes by per-category counts. All
logarithms are natural.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from .dataset_io import Dataset, Kind
from .errors import (
    ArityMismatchError,
    EmptyComplementError,
    KindMismatchError,
    NegativeMassError,
    SupportError,
)

#: Variance regulariser, relative to the reference (global) variance of an attribute.
EPS = 1e-9
#: Tolerance below zero accepted as rounding noise in split_stats.
CLAMP_TOL = 1e-9
#: Relative level below which a split variance is treated as cancellation noise.
NOISE_FLOOR = 64 * np.finfo(float).eps


@dataclass(frozen=True, eq=False)
class NumericStats:
    count: int
    mean: np.ndarray
    var: np.ndarray

    @property
    def m(self) -> int:
        return int(self.mean.shape[0])


@dataclass(frozen=True, eq=False)
class CategoricalStats:
    """Category counts for all attributes, stored flat.

    ``counts[offsets[j]:offsets[j + 1]]`` are the counts of attribute ``j``.
    """

    count: int
    counts: np.ndarray
    offsets: tuple[int, ...]

    @property
    def m(self) -> int:
        return len(self.offsets) - 1

    def attribute_counts(self, j: int) -> np.ndarray:
        return self.counts[self.offsets[j]:self.offsets[j + 1]]


Stats = Union[NumericStats, CategoricalStats]


@dataclass(frozen=True)
class ScoreParams:
    alpha: float
    beta: float

    def __post_init__(self):
        if not (self.alpha >= 0):
            raise ValueError(f"alpha must be >= 0, got {self.alpha}")
        if not (self.beta >= 1):
            raise ValueError(f"beta must be >= 1, got {self.beta}")


# -- array kernels (broadcast over leading axes) ------------------------------

def merge_moments(n1, mu1, v1, n2, mu2, v2):
    n = n1 + n2
    mu = (n1 * mu1 + n2 * mu2) / n
    v = (n1 * v1 + n2 * v2) / n + n1 * n2 * (mu1 - mu2) ** 2 / n**2
    return n, mu, v


def split_moments(n, mu, v, n1, mu1, v1):
    """Moments of the complement of a subset (n1, mu1, v1) within (n, mu, v)."""
    n2 = n - n1
    mu2 = (n * mu - n1 * mu1) / n2
    v2 = (n * v - n1 * v1 - n1 * n2 * (mu1 - mu2) ** 2 / n) / n2
    scale = np.maximum(1.0, np.maximum(np.abs(v), mu * mu))
    if np.any(v2 < -CLAMP_TOL * scale):
        raise NegativeMassError("split produced a negative variance; part is not a subset of whole")
    # anything under the cancellation noise floor is a zero variance; a single point has none
    noise = NOISE_FLOOR * (np.abs(v) + np.abs(mu) * np.sqrt(np.abs(v)))
    v2 = np.where((v2 <= noise) | (n2 == 1), 0.0, v2)
    return n2, mu2, v2


# -- Stats-level operations ---------------------------------------------------

def _check_compatible(a: Stats, b: Stats) -> None:
    if type(a) is not type(b):
        raise KindMismatchError(f"cannot combine {type(a).__name__} with {type(b).__name__}")
    if isinstance(a, NumericStats):
        if a.mean.shape != b.mean.shape:
            raise ArityMismatchError(f"{a.m} vs {b.m} attributes")
    elif a.offsets != b.offsets:
        raise ArityMismatchError("category layouts differ")


def merge_stats(a: Stats, b: Stats) -> Stats:
    """Statistics of the union of two disjoint point sets."""
    _check_compatible(a, b)
    if a.count + b.count < 1:
        raise ValueError("merging two empty sets")
    if isinstance(a, NumericStats):
        n, mu, v = merge_moments(a.count, a.mean, a.var, b.count, b.mean, b.var)
        return NumericStats(int(n), mu, v)
    return CategoricalStats(a.count + b.count, a.counts + b.counts, a.offsets)


def split_stats(whole: Stats, part: Stats) -> Stats:
    """Statistics of ``whole`` with the subset ``part`` removed."""
    _check_compatible(whole, part)
    if part.count == whole.count:
        raise EmptyComplementError("part covers the whole set")
    if part.count > whole.count:
        raise NegativeMassError(f"part has {part.count} points, whole only {whole.count}")
    if isinstance(whole, NumericStats):
        n, mu, v = split_moments(whole.count, whole.mean, whole.var, part.count, part.mean, part.var)
        return NumericStats(int(n), mu, v)
    counts = whole.counts - part.counts
    if np.any(counts < 0):
        raise NegativeMassError("split produced a negative category count")
    return CategoricalStats(whole.count - part.count, counts, whole.offsets)


def stats_of(dataset: Dataset, rows=None) -> Stats:
    """Direct statistics over ``rows`` (all rows when None)."""
    if dataset.kind is Kind.NUMERIC:
        x = dataset.numeric_values if rows is None else dataset.numeric_values[rows]
        if len(x) == 0:
            raise ValueError("no rows")
        return NumericStats(len(x), x.mean(axis=0), x.var(axis=0))
    codes = dataset.codes if rows is None else dataset.codes[rows]
    if len(codes) == 0:
        raise ValueError("no rows")
    offsets = category_offsets(dataset)
    flat = (codes + np.asarray(offsets[:-1])).ravel()
    counts = np.bincount(flat, minlength=offsets[-1]).astype(np.int64)
    return CategoricalStats(len(codes), counts, offsets)


def category_offsets(dataset: Dataset) -> tuple[int, ...]:
    sizes = [len(c) for c in dataset.categories]
    return tuple(int(v) for v in np.concatenate([[0], np.cumsum(sizes)]))


# -- divergences ----------------------------------------------------------------

def gaussian_kl(p_mean, p_var, q_mean, q_var, eps=EPS):
    """KL(N(p_mean, p_var + eps) || N(q_mean, q_var + eps)) in nats.

    Accepts scalars or arrays; negative rounding noise is clamped to 0.
    """
    vp = np.asarray(p_var, dtype=float) + eps
    vq = np.asarray(q_var, dtype=float) + eps
    d = np.asarray(p_mean, dtype=float) - q_mean
    kl = 0.5 * np.log(vq / vp) + (vp + d * d) / (2.0 * vq) - 0.5
    kl = np.maximum(kl, 0.0)
    return float(kl) if kl.ndim == 0 else kl


def categorical_kl(p_counts, q_counts) -> float:
    p = np.asarray(p_counts, dtype=float)
    q = np.asarray(q_counts, dtype=float)
    if p.shape != q.shape:
        raise ArityMismatchError("count vectors differ in length")
    if p.sum() < 1 or q.sum() < 1:
        raise ValueError("count vectors must have positive mass")
    mask = p > 0
    if np.any(q[mask] <= 0):
        raise SupportError("p has mass on a category where q has none")
    ph = p[mask] / p.sum()
    qh = q[mask] / q.sum()
    return max(float(np.sum(ph * np.log(ph / qh))), 0.0)


def regularizer(global_stats: NumericStats) -> np.ndarray:
    """Per-attribute variance regulariser: EPS scaled by the global variance.

    Scaling with the reference variance keeps information content invariant
    under affine rescaling of an attribute.
    """
    return np.where(global_stats.var > 0, EPS * global_stats.var, EPS)


def information_contents(cluster: Stats, global_stats: Stats) -> np.ndarray:
    """|c| * KL(cluster || global) for every attribute at once."""
    _check_compatible(cluster, global_stats)
    if cluster.count < 1:
        raise ValueError("empty cluster")
    if isinstance(cluster, NumericStats):
        kl = gaussian_kl(cluster.mean, cluster.var, global_stats.mean, global_stats.var,
                         regularizer(global_stats))
        return cluster.count * np.atleast_1d(kl)
    return cluster.count * categorical_kl_rows(
        cluster.counts[None, :], cluster.count, global_stats)[0]


def categorical_kl_rows(counts: np.ndarray, sizes, global_stats: CategoricalStats) -> np.ndarray:
    """KL per attribute for a batch of clusters given their flat count rows."""
    p = counts / np.asarray(sizes, dtype=float).reshape(-1, 1)
    q = global_stats.counts / global_stats.count
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(counts > 0, p * np.log(p / q), 0.0)
    if np.any((counts > 0) & (global_stats.counts == 0)):
        raise SupportError("cluster has mass on a category absent from the reference")
    kl = np.add.reduceat(terms, list(global_stats.offsets[:-1]), axis=1)
    return np.maximum(kl, 0.0)


def information_content(cluster: Stats, global_stats: Stats, attribute: int) -> float:
    return float(information_contents(cluster, global_stats)[attribute])


# -- complexity and ratio ------------------------------------------------------

def param_counts(stats_or_dataset) -> np.ndarray:
    """Number of distribution parameters per attribute.

    A Gaussian needs 2 (mean and variance); a categorical attribute with L
    categories has max(L - 1, 1) free parameters.
    """
    obj = stats_or_dataset
    if isinstance(obj, Dataset):
        if obj.kind is Kind.NUMERIC:
            return np.full(obj.m, 2, dtype=np.int64)
        return np.array([max(len(c) - 1, 1) for c in obj.categories], dtype=np.int64)
    if isinstance(obj, NumericStats):
        return np.full(obj.m, 2, dtype=np.int64)
    sizes = np.diff(obj.offsets)
    return np.maximum(sizes - 1, 1).astype(np.int64)


def complexity(total_param_count: int, params: ScoreParams) -> float:
    return params.alpha + float(total_param_count) ** params.beta


def explanation_ratio(information: Sequence[float], param_counts: Sequence[int],
                      params: ScoreParams) -> float:
    if len(information) != len(param_counts):
        raise ValueError("information and param_counts must be aligned")
    total = math.fsum(information)
    denom = complexity(int(sum(param_counts)), params)
    if denom == 0:
        return 0.0
    return total / denom


def summary(stats: Stats, j: int, categories: Sequence[str] | None = None) -> dict:
    """Human-readable distribution summary of attribute j."""
    if isinstance(stats, NumericStats):
        return {"mean": float(stats.mean[j]), "variance": float(stats.var[j])}
    c = stats.attribute_counts(j)
    labels = categories if categories is not None else [str(i) for i in range(len(c))]
    return {"frequencies": {str(k): float(v) / stats.count for k, v in zip(labels, c)}}
