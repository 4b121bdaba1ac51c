import math
from itertools import permutations

import numpy as np
import pytest
from sklearn.base import clone

from facroc.cluster_base import kmeans
from facroc.cluster_fair import (
    FairletClustering,
    ProportionalClustering,
    balance_target,
    composition_plan,
    fairlet_cluster,
    fairlet_decompose,
    greedy_capture,
    scalable_fairlet_decompose,
)
from facroc.exceptions import DataError, InfeasibleFairnessError
from facroc.fairness_metrics import audit_proportionality, cluster_medoids, compute_balance
from facroc.metricspace import distance_matrix
from facroc.oracles import brute_force_matching_cost, random_fair_instance, same_partition


def fairlet_balances(dec, groups):
    return [compute_balance(np.zeros(len(f)), groups[f]) for f in dec.fairlets]


def assert_partition(dec, n):
    allidx = np.sort(np.concatenate(dec.fairlets))
    assert np.array_equal(allidx, np.arange(n))


def test_balance_target():
    assert balance_target(0.4) == (2, 5)
    assert balance_target(1.0) == (1, 1)
    assert balance_target(0.5) == (1, 2)
    with pytest.raises(ValueError):
        balance_target(0.0)
    with pytest.raises(ValueError):
        balance_target(1 / math.pi)


def test_composition_plan_counts():
    plan = composition_plan(310, 690, 2, 5)
    assert sum(x for x, _ in plan) == 310 and sum(y for _, y in plan) == 690
    assert all(min(x / y, y / x) >= 0.4 for x, y in plan)
    # remainder goes to the last fairlet
    plan = composition_plan(7, 10, 2, 5)
    assert [x for x, _ in plan] == [2, 2, 3]
    with pytest.raises(InfeasibleFairnessError):
        composition_plan(3, 10, 2, 5)


def test_perfect_matching_is_optimal():
    r = np.random.default_rng(4)
    X = r.normal(size=(10, 2))
    groups = np.array([1, 0] * 5)
    D = distance_matrix(X)
    dec = fairlet_decompose(D, groups, 1.0)
    assert len(dec.fairlets) == 5 and all(len(f) == 2 for f in dec.fairlets)
    p, q = np.flatnonzero(groups == 1), np.flatnonzero(groups == 0)
    assert math.isclose(dec.cost, brute_force_matching_cost(D, p, q), rel_tol=1e-12)


def test_one_to_two_composition():
    groups = np.array([1, 1, 0, 0, 0, 0])
    X = np.arange(6, dtype=float)[:, None]
    dec = fairlet_decompose(distance_matrix(X), groups, 0.5)
    assert len(dec.fairlets) == 2
    assert sorted(len(f) for f in dec.fairlets) == [3, 3]
    assert all(groups[f].sum() == 1 for f in dec.fairlets)


def test_flexible_one_to_r_matches_brute_force():
    # 2 minority, 5 majority, t = 1/3: sizes may vary between 1 and 3 partners
    r = np.random.default_rng(11)
    for _ in range(5):
        X = r.normal(size=(7, 2))
        D = distance_matrix(X)
        groups = np.array([1, 1, 0, 0, 0, 0, 0])
        dec = fairlet_decompose(D, groups, 1 / 3)
        best = math.inf
        for owners in np.ndindex(*(2,) * 5):
            counts = np.bincount(owners, minlength=2)
            if counts.min() < 1 or counts.max() > 3:
                continue
            best = min(best, sum(D[2 + j, o] for j, o in enumerate(owners)))
        assert math.isclose(dec.cost, best, rel_tol=1e-12)
        assert min(fairlet_balances(dec, groups)) >= 1 / 3


def test_infeasible_target_raises():
    groups = np.array([1] + [0] * 9)
    D = distance_matrix(np.arange(10, dtype=float)[:, None])
    with pytest.raises(InfeasibleFairnessError, match="infeasible"):
        fairlet_decompose(D, groups, 0.4)
    with pytest.raises(InfeasibleFairnessError):
        scalable_fairlet_decompose(np.arange(10, dtype=float)[:, None], groups, 0.4)


def test_decompositions_meet_target_on_random_instances():
    r = np.random.default_rng(5)
    for trial in range(25):
        X, groups = random_fair_instance(r)
        D = distance_matrix(X)
        for dec in (fairlet_decompose(D, groups, 0.4), scalable_fairlet_decompose(X, groups, 0.4, trial)):
            assert_partition(dec, len(X))
            assert min(fairlet_balances(dec, groups)) >= 0.4
            res = fairlet_cluster(dec, D, 3, seed=trial, metric="precomputed")
            assert compute_balance(res.labels, groups) >= 0.4
            assert res.k == 3 and np.bincount(res.labels).min() >= 1


def test_fairlet_cluster_separable_and_boundary():
    # two far-apart groups of fairlets
    X = np.array([[0, 0], [0, 1], [1, 0], [1, 1], [50, 50], [50, 51], [51, 50], [51, 51]], dtype=float)
    groups = np.array([1, 0, 0, 1, 1, 0, 0, 1])
    D = distance_matrix(X)
    dec = fairlet_decompose(D, groups, 1.0)
    res = fairlet_cluster(dec, D, 2, seed=0, metric="precomputed")
    assert same_partition(res.labels, [0, 0, 0, 0, 1, 1, 1, 1])
    every = fairlet_cluster(dec, D, len(dec.fairlets), seed=0, metric="precomputed")
    assert same_partition(every.labels, dec.fairlet_of())
    with pytest.raises(DataError):
        fairlet_cluster(dec, D, len(dec.fairlets) + 1, metric="precomputed")


def test_scalable_degenerate_geometry():
    X = np.zeros((8, 2))
    groups = np.array([1, 0] * 4)
    dec = scalable_fairlet_decompose(X, groups, 1.0, seed=3)
    assert dec.cost == 0.0
    assert_partition(dec, 8)


def test_scalable_three_pairs():
    X = np.random.default_rng(0).normal(size=(6, 2))
    groups = np.array([1, 1, 1, 0, 0, 0])
    dec = scalable_fairlet_decompose(X, groups, 1.0, seed=1)
    assert len(dec.fairlets) == 3
    assert_partition(dec, 6)


def test_scalable_cost_at_least_exact():
    for trial in range(10):
        r = np.random.default_rng(100 + trial)
        X = r.normal(size=(200, 2))
        groups = np.zeros(200, dtype=np.int8)
        groups[r.choice(200, size=int(r.integers(67, 101)), replace=False)] = 1
        exact = fairlet_decompose(distance_matrix(X), groups, 0.5)
        approx = scalable_fairlet_decompose(X, groups, 0.5, seed=trial)
        assert approx.cost >= exact.cost - 1e-9


def test_fair_models_are_deterministic(rng):
    X, groups = random_fair_instance(rng)
    a = FairletClustering(n_clusters=3, scalable=True, random_state=4).fit(X, groups=groups)
    b = FairletClustering(n_clusters=3, scalable=True, random_state=4).fit(X, groups=groups)
    assert np.array_equal(a.labels_, b.labels_)
    c = FairletClustering(n_clusters=3).fit(X, groups=groups)
    assert compute_balance(c.labels_, groups) >= 0.4
    assert clone(c).get_params()["balance_threshold"] == 0.4
    with pytest.raises(ValueError):
        FairletClustering().fit(X)


def test_greedy_capture_two_triads():
    X = np.array([[0, 0], [0, 1], [1, 0], [30, 30], [30, 31], [31, 30]], dtype=float)
    res = greedy_capture(X, 2)
    assert same_partition(res.labels, [0, 0, 0, 1, 1, 1])
    assert res.meta["achieved_k"] == 2


def test_greedy_capture_k_equals_n(rng):
    X = rng.normal(size=(7, 2))
    res = greedy_capture(X, 7)
    assert res.k == 7 and res.meta["achieved_k"] == 7
    assert sorted(res.centers.tolist()) == list(range(7))


def test_greedy_capture_radii_non_decreasing_and_capture_size(rng):
    for trial in range(10):
        X = np.random.default_rng(trial).normal(size=(60, 2))
        n, k = 60, 5
        res = greedy_capture(X, k, fill=False)
        radii = res.meta["radii"]
        assert all(a <= b for a, b in zip(radii, radii[1:]))
        state = res.meta["state"]
        assert min(state.opened_with) >= math.ceil(n / k)
        assert res.k == res.meta["achieved_k"] <= k


def test_greedy_capture_may_open_fewer_centers():
    X = np.random.default_rng(1).normal(size=(40, 2))
    bare = greedy_capture(X, 2, fill=False)
    filled = greedy_capture(X, 2)
    assert bare.k == bare.meta["achieved_k"]
    assert filled.k == 2
    assert filled.meta["achieved_k"] == bare.meta["achieved_k"]
    assert filled.meta["filled_centers"] == 2 - bare.k


def test_greedy_capture_audit_beats_kmeans_usually():
    wins = 0
    for trial in range(20):
        X = np.random.default_rng(trial).normal(size=(12, 2))
        D = distance_matrix(X)
        g = greedy_capture(D, 3, metric="precomputed")
        km = kmeans(X, 3, seed=trial)
        a = audit_proportionality(D, g.centers, 3, metric="precomputed").rho
        b = audit_proportionality(D, cluster_medoids(D, km.labels, "precomputed"), 3, metric="precomputed").rho
        wins += a <= b
    assert wins >= 15


def test_proportional_estimator(rng):
    X = rng.normal(size=(30, 2))
    est = ProportionalClustering(n_clusters=3).fit(X)
    assert est.n_clusters_ == 3 and len(est.center_indices_) == 3
    assert np.array_equal(est.labels_, greedy_capture(X, 3).labels)


@pytest.mark.parametrize("t", [0.4, 1 / 3, 0.5])
def test_coordinate_route_matches_dense(t):
    rng = np.random.default_rng(21)
    for _ in range(8):
        X, groups = random_fair_instance(rng)
        if t == 0.5:
            # (1, 2) needs the minority to be at least half the majority
            groups = (np.arange(len(X)) % 5 < 2).astype(np.int8)
        dense = fairlet_decompose(distance_matrix(X), groups, t)
        coords = fairlet_decompose(X, groups, t, metric="euclidean")
        assert dense.meta == coords.meta
        assert all(np.array_equal(a, b) for a, b in zip(dense.fairlets, coords.fairlets))
        assert coords.cost == pytest.approx(dense.cost, rel=1e-12)
