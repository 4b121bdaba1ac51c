"""Baseline clustering models: Lloyd k-means and agglomerative clustering."""

from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator, ClusterMixin
from sklearn.utils.validation import check_array

from .exceptions import DataError
from .metricspace import distance_matrix

LINKAGES = ("average", "complete", "single", "ward")


@dataclass
class Clustering:
    """A hard assignment of ``n`` points to ``k`` non-empty clusters.

    ``centers`` optionally lists point indices acting as the model's center
    set (used by the proportionality audit); ``meta`` carries model-specific
    provenance.
    """

    labels: np.ndarray
    k: int
    model: str
    seed: int = None
    centers: np.ndarray = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.labels = np.asarray(self.labels, dtype=np.int64)
        present = np.unique(self.labels)
        if not np.array_equal(present, np.arange(self.k)):
            raise DataError(f"{self.model}: cluster ids {present.tolist()} do not cover range({self.k})")

    @property
    def n(self):
        return len(self.labels)


def relabel_by_first_occurrence(labels):
    """Renumber cluster ids in order of their first point."""
    labels = np.asarray(labels)
    _, first, inverse = np.unique(labels, return_index=True, return_inverse=True)
    rank = np.empty(len(first), dtype=np.int64)
    rank[np.argsort(first)] = np.arange(len(first))
    return rank[inverse]


def _check_k(k, n):
    if not 1 <= k <= n:
        raise DataError(f"k must satisfy 1 <= k <= n (n={n}), got k={k}")


def _sq_dists(X, C):
    d = (X * X).sum(1)[:, None] - 2.0 * X @ C.T + (C * C).sum(1)[None, :]
    return np.maximum(d, 0.0)


def kmeans_plusplus(X, k, rng):
    """D-squared seeding; returns indices of the chosen points."""
    n = X.shape[0]
    chosen = [int(rng.integers(n))]
    closest = ((X - X[chosen[0]]) ** 2).sum(1)
    for _ in range(1, k):
        total = closest.sum()
        if total > 0:
            idx = int(rng.choice(n, p=closest / total))
        else:
            # every point coincides with a chosen one
            rest = np.setdiff1d(np.arange(n), chosen)
            idx = int(rng.choice(rest))
        chosen.append(idx)
        closest = np.minimum(closest, ((X - X[idx]) ** 2).sum(1))
    return np.asarray(chosen)


def _assign(X, centers):
    k = centers.shape[0]
    d2 = _sq_dists(X, centers)
    labels = d2.argmin(1)
    point_cost = d2[np.arange(len(X)), labels]
    counts = np.bincount(labels, minlength=k)
    while not counts.all():
        # reseed an empty cluster at the point worst served by its centroid,
        # never emptying another cluster in the process
        c = int(np.flatnonzero(counts == 0)[0])
        far = int(np.where(counts[labels] > 1, point_cost, -1.0).argmax())
        counts[labels[far]] -= 1
        labels[far] = c
        counts[c] += 1
        point_cost[far] = 0.0
    return labels, point_cost, counts


def _lloyd(X, centers, max_iter, tol):
    history = []
    for it in range(max_iter):
        labels, point_cost, counts = _assign(X, centers)
        history.append(float(point_cost.sum()))
        new = np.zeros_like(centers)
        np.add.at(new, labels, X)
        new /= counts[:, None]
        shift = float(((new - centers) ** 2).sum())
        centers = new
        if shift < tol:
            break
    labels, point_cost, _ = _assign(X, centers)
    inertia = float(point_cost.sum())
    history.append(inertia)
    return labels, centers, inertia, history, it + 1


def kmeans(X, k, seed=42, max_iter=300, tol=1e-6, n_init=10):
    """Lloyd iterations from k-means++ seeds; best of ``n_init`` restarts.

    Restart ``r`` draws from the ``r``-th child of ``SeedSequence(seed)``;
    the lowest inertia wins, ties going to the earliest restart.
    """
    X = check_array(X, dtype=np.float64)
    n = X.shape[0]
    _check_k(k, n)
    best = None
    for r, child in enumerate(np.random.SeedSequence(seed).spawn(n_init)):
        rng = np.random.default_rng(child)
        init = kmeans_plusplus(X, k, rng)
        labels, centers, inertia, history, n_iter = _lloyd(X, X[init].copy(), max_iter, tol)
        if best is None or inertia < best[2]:
            best = (labels, centers, inertia, history, n_iter, r)
    labels, centers, inertia, history, n_iter, r = best
    return Clustering(
        labels=labels,
        k=k,
        model="kmeans",
        seed=seed,
        meta={
            "centroids": centers,
            "inertia": inertia,
            "inertia_history": history,
            "n_iter": n_iter,
            "best_restart": r,
        },
    )


def _lance_williams(linkage, d_ik, d_jk, d_ij, n_i, n_j, n_k):
    if linkage == "single":
        return np.minimum(d_ik, d_jk)
    if linkage == "complete":
        return np.maximum(d_ik, d_jk)
    if linkage == "average":
        return (n_i * d_ik + n_j * d_jk) / (n_i + n_j)
    t = n_i + n_j + n_k
    sq = ((n_i + n_k) * d_ik**2 + (n_j + n_k) * d_jk**2 - n_k * d_ij**2) / t
    return np.sqrt(np.maximum(sq, 0.0))


def agglomerate(D, k=1, linkage="ward"):
    """Merge singletons until ``k`` clusters remain.

    Cluster ``a`` lives in slot ``a`` (its smallest original index after
    merges land in the lower slot). Each step merges the closest pair of
    active slots, ties going to the lexicographically smallest ``(a, b)``.
    Ward distances follow the usual convention
    ``sqrt(2 |A||B| / (|A|+|B|)) * ||mean(A) - mean(B)||`` so that two
    singletons merge at their Euclidean distance.

    Returns ``(slot_of_point, merges)`` with ``merges`` a list of
    ``(a, b, distance, merged_size)``.
    """
    if linkage not in LINKAGES:
        raise ValueError(f"unknown linkage {linkage!r}; expected one of {LINKAGES}")
    n = D.shape[0]
    _check_k(k, n)
    M = np.array(D, dtype=np.float64)
    np.fill_diagonal(M, np.inf)
    size = np.ones(n, dtype=np.int64)
    active = np.ones(n, dtype=bool)
    slot = np.arange(n)
    # row minima are cached over the strict upper triangle only
    upper = np.triu(np.ones((n, n), dtype=bool), 1)

    def row_min(rows):
        vals = np.where(upper[rows] & active[None, :], M[rows], np.inf)
        arg = vals.argmin(1)
        return vals[np.arange(len(rows)), arg], arg

    rmin, rarg = row_min(np.arange(n))
    merges = []
    for _ in range(n - k):
        vals = np.where(active, rmin, np.inf)
        a = int(vals.argmin())
        b = int(rarg[a])
        dist = float(vals[a])
        others = np.flatnonzero(active)
        others = others[(others != a) & (others != b)]
        new = _lance_williams(linkage, M[a, others], M[b, others], M[a, b], size[a], size[b], size[others])
        M[a, others] = new
        M[others, a] = new
        active[b] = False
        M[b, :] = np.inf
        M[:, b] = np.inf
        size[a] += size[b]
        slot[slot == b] = a
        merges.append((a, b, dist, int(size[a])))
        if not others.size:
            break
        # rows whose cached minimum may be stale: a itself, rows that pointed
        # at a or b, and rows before a whose entry in column a shrank
        col = M[others, a]
        before = others < a
        stale = (rarg[others] == a) | (rarg[others] == b)
        stale |= before & ((col < rmin[others]) | ((col == rmin[others]) & (a < rarg[others])))
        rows = np.concatenate([[a], others[stale]])
        rmin[rows], rarg[rows] = row_min(rows)
    return slot, merges


def hierarchical(X, k, linkage="ward", metric="euclidean"):
    """Agglomerative clustering cut at ``k`` clusters."""
    if metric == "precomputed":
        D = np.asarray(X, dtype=np.float64)
    else:
        D = distance_matrix(X)
    slot, merges = agglomerate(D, k, linkage)
    return Clustering(
        labels=relabel_by_first_occurrence(slot),
        k=k,
        model="hierarchical",
        meta={"linkage": linkage, "merges": merges},
    )


class KMeans(ClusterMixin, BaseEstimator):
    """k-means with k-means++ seeding and deterministic restarts."""

    def __init__(self, n_clusters=2, n_init=10, max_iter=300, tol=1e-6, random_state=42):
        self.n_clusters = n_clusters
        self.n_init = n_init
        self.max_iter = max_iter
        self.tol = tol
        self.random_state = random_state

    def fit(self, X, y=None):
        X = check_array(X, dtype=np.float64)
        res = kmeans(X, self.n_clusters, self.random_state, self.max_iter, self.tol, self.n_init)
        self.clustering_ = res
        self.labels_ = res.labels
        self.cluster_centers_ = res.meta["centroids"]
        self.inertia_ = res.meta["inertia"]
        self.n_iter_ = res.meta["n_iter"]
        return self

    def predict(self, X):
        X = check_array(X, dtype=np.float64)
        return _sq_dists(X, self.cluster_centers_).argmin(1)


class HierarchicalClustering(ClusterMixin, BaseEstimator):
    """Agglomerative clustering; ``metric="precomputed"`` takes a distance matrix."""

    def __init__(self, n_clusters=2, linkage="ward", metric="euclidean"):
        self.n_clusters = n_clusters
        self.linkage = linkage
        self.metric = metric

    def fit(self, X, y=None):
        X = check_array(X, dtype=np.float64)
        res = hierarchical(X, self.n_clusters, self.linkage, self.metric)
        self.clustering_ = res
        self.labels_ = res.labels
        self.merges_ = res.meta["merges"]
        return self
