import math

import numpy as np
import pytest

from facroc.exceptions import DataError
from facroc.fairness_metrics import (
    audit_proportionality,
    cluster_balance,
    cluster_medoids,
    compute_balance,
    ratios_to_candidate,
    silhouette,
)
from facroc.metricspace import distance_matrix
from facroc.oracles import brute_force_rho, naive_silhouette


def test_balance_examples():
    labels = np.array([0] * 6 + [1] * 6)
    groups = np.array([1, 1, 0, 0, 0, 0] + [1, 1, 1, 0, 0, 0])
    assert compute_balance(labels, groups) == 0.5
    assert compute_balance([0, 0, 1, 1], [1, 0, 1, 0]) == 1.0
    assert compute_balance([0, 0, 1, 1], [1, 1, 1, 0]) == 0.0
    assert cluster_balance([0, 0, 1, 1], [1, 1, 1, 0]).tolist() == [0.0, 1.0]


def test_merging_one_group_cluster_keeps_balance():
    labels = np.array([0, 0, 0, 0, 1, 1, 2, 2])
    groups = np.array([1, 0, 1, 0, 1, 1, 1, 0])
    assert compute_balance(labels, groups) == 0.0
    merged = np.where(labels == 1, 0, labels)
    # cluster 0 becomes 4p/2pbar -> 0.5; cluster 2 stays 1.0
    assert compute_balance(merged, groups) == 0.5


def test_ratio_conventions():
    r = ratios_to_candidate(np.array([0.0, 2.0, 3.0]), np.array([0.0, 0.0, 1.5]))
    assert r.tolist() == [0.0, math.inf, 2.0]


def test_audit_k1_uses_everyone(rng):
    X = rng.normal(size=(9, 2))
    D = distance_matrix(X)
    medoid = cluster_medoids(D, np.zeros(9, dtype=int), "precomputed")
    res = audit_proportionality(D, medoid, 1, metric="precomputed")
    assert res.group_size == 9
    # with every point in the coalition the binding ratio is the smallest one
    assert res.rho == brute_force_rho(D.tolist(), medoid.tolist(), 1)


def test_audit_matches_exhaustive_subsets():
    for t in range(40):
        r = np.random.default_rng(t)
        n = int(r.integers(2, 11))
        k = 2 + t % 2
        if k > n:
            continue
        D = distance_matrix(r.normal(size=(n, 2)))
        centers = r.choice(n, size=k, replace=False)
        got = audit_proportionality(D, centers, k, metric="precomputed")
        assert got.rho == brute_force_rho(D.tolist(), centers.tolist(), k)
        # rho is attained at the witness
        at_witness = audit_proportionality(D, centers, k, candidates=[got.witness_center], metric="precomputed")
        assert at_witness.rho == got.rho


def test_audit_scale_invariant_and_feature_route(rng):
    X = rng.normal(size=(30, 3))
    centers = np.array([0, 5, 9])
    a = audit_proportionality(X, centers, 3)
    b = audit_proportionality(X * 4.0, centers, 3)
    c = audit_proportionality(distance_matrix(X), centers, 3, metric="precomputed")
    assert abs(a.rho - b.rho) <= 1e-12 * a.rho
    assert abs(a.rho - c.rho) <= 1e-12 * a.rho


def test_audit_errors(rng):
    D = distance_matrix(rng.normal(size=(4, 2)))
    with pytest.raises(DataError):
        audit_proportionality(D, [0], 5, metric="precomputed")
    with pytest.raises(DataError):
        audit_proportionality(D, [], 2, metric="precomputed")


def test_silhouette_matches_double_loop():
    for n in (10, 40, 100):
        r = np.random.default_rng(n)
        X = r.normal(size=(n, 3))
        labels = r.integers(0, 3, n)
        labels[:3] = [0, 1, 2]
        assert abs(silhouette(X, labels) - naive_silhouette(X.tolist(), labels)) <= 1e-9
        D = distance_matrix(X)
        assert abs(silhouette(D, labels, metric="precomputed") - silhouette(X, labels)) <= 1e-12


def test_silhouette_limits(rng):
    X = np.vstack([rng.normal(0, 1, (10, 2)), rng.normal(1000, 1, (10, 2))])
    assert silhouette(X, np.repeat([0, 1], 10)) >= 0.99
    assert silhouette(np.zeros((6, 2)), np.array([0, 0, 0, 1, 1, 1])) == 0.0
    # singletons score 0
    assert silhouette(np.array([[0.0], [1.0], [5.0]]), np.array([0, 0, 1])) == pytest.approx((0.8 + 0.75) / 3)
    with pytest.raises(DataError):
        silhouette(X, np.zeros(20, dtype=int))


def test_silhouette_agrees_with_sklearn(rng):
    from sklearn.metrics import silhouette_score

    X = rng.normal(size=(70, 4))
    labels = rng.integers(0, 4, 70)
    assert abs(silhouette(X, labels) - silhouette_score(X, labels)) <= 1e-9


def test_medoids(rng):
    X = np.array([[0.0], [1.0], [2.0], [10.0], [11.0]])
    assert cluster_medoids(X, np.array([0, 0, 0, 1, 1])).tolist() == [1, 3]
