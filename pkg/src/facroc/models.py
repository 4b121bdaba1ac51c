"""Uniform entry point for the five clustering models."""

import numpy as np

from .cluster_base import hierarchical, kmeans
from .cluster_fair import (
    DEFAULT_TARGET,
    fairlet_cluster,
    fairlet_decompose,
    greedy_capture,
    scalable_fairlet_decompose,
)
from .exceptions import DataError
from .fairness_metrics import cluster_medoids
from .metricspace import distance_matrix

MODEL_NAMES = ("kmeans", "hierarchical", "fairlet", "scalable", "proportional")
DISPLAY_NAMES = {
    "kmeans": "k-means",
    "hierarchical": "Hierarchical",
    "fairlet": "Fairlet",
    "scalable": "Scalable",
    "proportional": "Proportionally",
}
# models that need the full distance matrix refuse larger inputs; the
# fairlet model switches to distances computed from coordinates
DENSE_LIMIT = 12_000
_NEEDS_DENSE = {"hierarchical", "proportional"}


class Workspace:
    """Features, groups and a lazily built distance matrix shared across models."""

    def __init__(self, X, groups):
        self.X = np.asarray(X, dtype=np.float64)
        self.groups = np.asarray(groups)
        self._D = None

    @property
    def n(self):
        return self.X.shape[0]

    @property
    def dense(self):
        return self.n <= DENSE_LIMIT

    @property
    def D(self):
        if self._D is None:
            if not self.dense:
                raise DataError(f"n={self.n} exceeds the dense distance limit of {DENSE_LIMIT}")
            self._D = distance_matrix(self.X)
        return self._D

    def metric_input(self):
        """``(array, metric)`` for measures: the distance matrix when affordable."""
        return (self.D, "precomputed") if self.dense else (self.X, "euclidean")


def fit_model(name, ws, k, seed=42, *, t=DEFAULT_TARGET, fill=True):
    """Fit model ``name`` on workspace ``ws``; returns a Clustering."""
    if name not in MODEL_NAMES:
        raise ValueError(f"unknown model {name!r}; expected one of {MODEL_NAMES}")
    if name in _NEEDS_DENSE and not ws.dense:
        raise DataError(f"{name} needs a dense distance matrix; n={ws.n} exceeds {DENSE_LIMIT}")
    if name == "kmeans":
        return kmeans(ws.X, k, seed)
    if name == "hierarchical":
        return hierarchical(ws.D, k, metric="precomputed")
    if name == "fairlet":
        arr, metric = ws.metric_input()
        dec = fairlet_decompose(arr, ws.groups, t, metric=metric)
        res = fairlet_cluster(dec, arr, k, seed, metric=metric)
    elif name == "scalable":
        dec = scalable_fairlet_decompose(ws.X, ws.groups, t, seed)
        res = fairlet_cluster(dec, ws.X, k, seed)
    else:
        res = greedy_capture(ws.D, k, metric="precomputed", fill=fill)
        res.seed = seed
        return res
    res.model = name
    res.meta.update(decomposition=dec.meta, fairlet_cost=dec.cost, fairness_target=t)
    return res


def center_set(clustering, ws):
    """Center indices for the proportionality audit and how they were chosen."""
    if clustering.centers is not None:
        return np.asarray(clustering.centers), "opened centers"
    arr, metric = ws.metric_input()
    return cluster_medoids(arr, clustering.labels, metric), "cluster medoids"
