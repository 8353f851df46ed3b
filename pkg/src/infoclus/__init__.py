"""Informative clustering of 2-D data embeddings.

Partitions an embedding into visually coherent clusters and explains each
cluster with the few attributes whose distribution inside the cluster differs
most from the full data, trading information against explanation size.
"""
from .dataset_io import Dataset, Embedding, Kind, load_dataset, load_embedding
from .errors import InfoClusError
from .hierarchy import Dendrogram, annotate_stats, build_dendrogram, load_dendrogram
from .kmeans import kmeans_generate
from .search import (
    PwX,
    SearchConfig,
    best_explanations,
    derive_partition,
    greedy_search,
)
from .stats import (
    ScoreParams,
    categorical_kl,
    complexity,
    explanation_ratio,
    gaussian_kl,
    information_content,
    merge_stats,
    split_stats,
)

__version__ = "0.1.0"
