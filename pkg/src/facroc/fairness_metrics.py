"""Balance, proportionality audit and silhouette coefficient."""

import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist

from .exceptions import DataError
from .metricspace import pairwise_block

_ROWS = 512


def _rows_chunks(n, size=_ROWS):
    for start in range(0, n, size):
        yield np.arange(start, min(start + size, n))


def cluster_balance(labels, groups):
    """Per-cluster balance ``min(#p / #pbar, #pbar / #p)``; 0 for one-group clusters."""
    labels = np.asarray(labels)
    groups = np.asarray(groups)
    ids = np.unique(labels)
    out = np.empty(len(ids))
    for m, c in enumerate(ids):
        in_c = labels == c
        n_p = int(np.count_nonzero(groups[in_c] == 1))
        n_q = int(np.count_nonzero(in_c)) - n_p
        out[m] = 0.0 if n_p == 0 or n_q == 0 else min(n_p / n_q, n_q / n_p)
    return out


def compute_balance(labels, groups):
    """Balance of a clustering: the minimum per-cluster balance, in ``[0, 1]``."""
    return float(cluster_balance(labels, groups).min())


def cluster_medoids(X, labels, metric="euclidean"):
    """Index of each cluster's medoid (smallest index on ties), ordered by cluster id."""
    X = np.asarray(X, dtype=np.float64)
    labels = np.asarray(labels)
    medoids = []
    for c in np.unique(labels):
        members = np.flatnonzero(labels == c)
        if metric == "precomputed":
            block = X[np.ix_(members, members)]
            cost = block.sum(1)
        else:
            cost = np.empty(len(members))
            for rows in _rows_chunks(len(members)):
                cost[rows] = pairwise_block(X[members], rows).sum(1)
        medoids.append(int(members[int(cost.argmin())]))
    return np.asarray(medoids, dtype=np.int64)


@dataclass
class ProportionalityAudit:
    """Smallest ``rho`` for which the clustering is rho-proportional.

    ``witness_center`` is the candidate center attaining the maximum and
    ``group_size`` the coalition size ``ceil(n / k)``.
    """

    rho: float
    witness_center: int
    group_size: int


def ratios_to_candidate(dist_to_centers, dist_to_y):
    """Improvement ratios ``D_i(C) / d(i, y)`` with the 0/0 -> 0, x/0 -> inf conventions."""
    with np.errstate(divide="ignore", invalid="ignore"):
        r = dist_to_centers / dist_to_y
    r = np.where(dist_to_y == 0, np.where(dist_to_centers > 0, np.inf, 0.0), r)
    return r


def audit_proportionality(X, centers, k=None, candidates=None, *, metric="euclidean"):
    """Minimal rho such that no coalition of ``ceil(n/k)`` points can all move to
    a candidate center ``y`` and improve their distance by more than a factor rho.

    ``centers`` are point indices forming the center set; each point's cost is
    its distance to the nearest center. For a fixed ``y`` the tightest
    coalition is the ``ceil(n/k)`` points with the largest improvement ratio,
    and it is blocked exactly when rho reaches the smallest of those ratios,
    so rho is the maximum over ``y`` of the ``ceil(n/k)``-th largest ratio.
    """
    X = np.asarray(X, dtype=np.float64)
    n = X.shape[0]
    centers = np.asarray(centers, dtype=np.int64)
    if centers.size == 0:
        raise DataError("center set is empty")
    k = len(centers) if k is None else int(k)
    if not 1 <= k <= n:
        raise DataError(f"k must satisfy 1 <= k <= n (n={n}), got k={k}")
    g = math.ceil(n / k)
    cand = np.arange(n) if candidates is None else np.asarray(candidates, dtype=np.int64)
    if cand.size == 0:
        raise DataError("candidate set is empty")

    if metric == "precomputed":
        dist_c = X[:, centers].min(1)
    else:
        dist_c = cdist(X, X[centers]).min(1)

    best_rho, best_y = -np.inf, -1
    for rows in _rows_chunks(len(cand)):
        ys = cand[rows]
        d_y = X[ys] if metric == "precomputed" else pairwise_block(X, ys)
        r = ratios_to_candidate(dist_c[None, :], d_y)
        kth = np.partition(r, n - g, axis=1)[:, n - g]
        m = int(kth.argmax())
        if kth[m] > best_rho:
            best_rho, best_y = float(kth[m]), int(ys[m])
    return ProportionalityAudit(rho=best_rho, witness_center=best_y, group_size=g)


def silhouette(X, labels, *, metric="euclidean"):
    """Mean silhouette coefficient; singleton clusters score 0.

    Computed in row blocks, so the full distance matrix is never required
    for feature input.
    """
    X = np.asarray(X, dtype=np.float64)
    labels = np.asarray(labels)
    n = X.shape[0]
    ids, lab = np.unique(labels, return_inverse=True)
    k = len(ids)
    if k < 2:
        raise DataError("silhouette needs at least two clusters")
    sizes = np.bincount(lab, minlength=k).astype(np.float64)
    onehot = np.zeros((n, k))
    onehot[np.arange(n), lab] = 1.0
    s = np.empty(n)
    for rows in _rows_chunks(n):
        block = X[rows] if metric == "precomputed" else pairwise_block(X, rows)
        sums = block @ onehot
        own = lab[rows]
        own_size = sizes[own]
        with np.errstate(divide="ignore", invalid="ignore"):
            a = sums[np.arange(len(rows)), own] / (own_size - 1)
        means = sums / sizes[None, :]
        means[np.arange(len(rows)), own] = np.inf
        b = means.min(1)
        top = np.maximum(a, b)
        with np.errstate(divide="ignore", invalid="ignore"):
            val = (b - a) / top
        s[rows] = np.where((own_size > 1) & (top > 0), val, 0.0)
    return float(s.mean())
