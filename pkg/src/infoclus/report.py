"""Serialization of a finished run to ``result.json``.

Field names are fixed lower_snake_case; floats are written with 9
significant digits.
"""
from __future__ import annotations

import json
import math

from .dataset_io import Dataset
from .plots import PALETTE
from .search import IterationRecord, PwX
from .stats import ScoreParams, explanation_ratio

TIMING_KEYS = ("timings",)
ITERATION_TIMING_KEYS = ("seconds", "elapsed_seconds")


def _round(obj):
    if isinstance(obj, float):
        if not math.isfinite(obj):
            return None
        return float(f"{obj:.9g}")
    if isinstance(obj, dict):
        return {k: _round(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_round(v) for v in obj]
    return obj


def dumps(obj) -> str:
    return json.dumps(_round(obj), indent=2) + "\n"


def iteration_dict(rec: IterationRecord) -> dict:
    out = {
        "iteration": rec.iteration,
        "candidate_count": rec.candidate_count,
        "best_node": rec.best_node,
        "best_ratio": float(rec.best_ratio),
        "seconds": float(rec.seconds),
        "elapsed_seconds": float(rec.elapsed),
    }
    if rec.k is not None:
        out["k"] = rec.k
    return out


def pwx_dict(pwx: PwX, dataset: Dataset) -> dict:
    part = pwx.partitioning
    clusters = []
    for cluster, items in zip(part.clusters, pwx.explanation):
        clusters.append({
            "id": cluster.id,
            "size": cluster.size,
            "node": cluster.node,
            "is_remainder": cluster.is_remainder,
            "color_index": cluster.id % len(PALETTE),
            "members": [int(i) for i in cluster.members],
            "explanations": [
                {
                    "attribute": dataset.names[it.attribute],
                    "attribute_index": it.attribute,
                    "information": it.information,
                    "cluster_summary": it.cluster_summary,
                    "global_summary": it.global_summary,
                    "param_count": it.param_count,
                }
                for it in items
            ],
        })
    return {
        "selected_nodes": list(part.selected_nodes),
        "remainder_id": part.remainder_id,
        "clusters": clusters,
    }


def run_result(*, config: dict, dataset: Dataset, generator: str, log: list[IterationRecord],
               pwx: PwX, init_seconds: float, total_seconds: float) -> dict:
    return {
        "config": config,
        "dataset": {"n": dataset.n, "m": dataset.m, "kind": dataset.kind.value,
                    "attributes": list(dataset.names)},
        "generator": generator,
        "iterations": [iteration_dict(r) for r in log],
        "pwx": pwx_dict(pwx, dataset),
        "ratio": pwx.ratio,
        "total_information": pwx.total_information,
        "total_param_count": pwx.total_param_count,
        "timings": {
            "initialization_seconds": init_seconds,
            "iteration_seconds": [r.seconds for r in log],
            "total_seconds": total_seconds,
        },
    }


def rescore(result: dict) -> float:
    """Recompute the explanation ratio from a loaded result's own fields."""
    items = [e for c in result["pwx"]["clusters"] for e in c["explanations"]]
    params = ScoreParams(result["config"]["alpha"], result["config"]["beta"])
    return explanation_ratio([e["information"] for e in items],
                             [e["param_count"] for e in items], params)


def strip_timings(result: dict) -> dict:
    """Copy of a result without wall-clock fields, for reproducibility checks."""
    out = {k: v for k, v in result.items() if k not in TIMING_KEYS}
    out["iterations"] = [{k: v for k, v in it.items() if k not in ITERATION_TIMING_KEYS}
                         for it in result["iterations"]]
    return out
