import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from facroc.exceptions import DataError, DegenerateSliceError
from facroc.metricspace import (
    SamplerConfig,
    check_distance_matrix,
    distance_matrix,
    enumerate_pairs,
    scored_pairs,
    triangle_decode,
)
from facroc.oracles import naive_distance_matrix


def test_distance_matrix_matches_direct_loop(rng):
    X = rng.normal(size=(40, 5))
    D = distance_matrix(X)
    assert np.abs(D - naive_distance_matrix(X.tolist())).max() <= 1e-12
    assert np.all(np.diag(D) == 0)
    check_distance_matrix(D)


def test_check_distance_matrix_rejects_asymmetry():
    D = np.array([[0.0, 1.0], [2.0, 0.0]])
    with pytest.raises(DataError):
        check_distance_matrix(D)


@given(st.integers(2, 300))
@settings(max_examples=40, deadline=None)
def test_triangle_decode_roundtrip(m):
    a, b = np.triu_indices(m, 1)
    k = np.arange(len(a))
    da, db = triangle_decode(k, m)
    assert np.array_equal(da, a) and np.array_equal(db, b)


def test_triangle_decode_large_indices():
    m = 200_000
    k = np.array([0, m - 2, m - 1, m * (m - 1) // 2 - 1])
    a, b = triangle_decode(k, m)
    assert a.tolist() == [0, 0, 1, m - 2]
    assert b.tolist() == [1, m - 1, 2, m - 1]


def test_slices_use_both_endpoints():
    groups = np.array([1, 1, 0, 0, 1])
    i, j, pop, sampled = enumerate_pairs(5, groups, "p")
    assert pop == 3 and not sampled
    assert set(zip(i.tolist(), j.tolist())) == {(0, 1), (0, 4), (1, 4)}
    i, j, pop, _ = enumerate_pairs(5, groups, "pbar")
    assert list(zip(i.tolist(), j.tolist())) == [(2, 3)]
    i, j, pop, _ = enumerate_pairs(5, groups, "p", slicing="any")
    # 3 inner pairs plus 3 * 2 cross pairs
    assert pop == 9 and len(set(zip(i.tolist(), j.tolist()))) == 9


def test_sampling_is_uniform_distinct_and_deterministic():
    sampler = SamplerConfig(threshold=10, sample_size=300, seed=3)
    n = 60
    i, j, pop, sampled = enumerate_pairs(n, None, "all", sampler)
    assert sampled and pop == n * (n - 1) // 2 and len(i) == 300
    assert np.all(i < j)
    assert len(set(zip(i.tolist(), j.tolist()))) == 300
    i2, j2, _, _ = enumerate_pairs(n, None, "all", sampler)
    assert np.array_equal(i, i2) and np.array_equal(j, j2)
    i3, _, _, _ = enumerate_pairs(n, None, "all", SamplerConfig(10, 300, seed=4))
    assert not np.array_equal(i, i3)


def test_exhaustive_below_threshold():
    i, j, pop, sampled = enumerate_pairs(30, None, "all", SamplerConfig(threshold=2000))
    assert not sampled and len(i) == pop == 435


def test_scored_pairs_precomputed_matches_features(rng):
    X = rng.normal(size=(25, 3))
    labels = rng.integers(0, 3, 25)
    a = scored_pairs(X, labels)
    b = scored_pairs(distance_matrix(X), labels, metric="precomputed")
    assert np.allclose(a.score, b.score, atol=1e-12)
    assert np.array_equal(a.same_cluster, b.same_cluster)
    d = math.dist(X[a.i[5]], X[a.j[5]])
    assert abs(-a.score[5] - d) < 1e-12


def test_degenerate_slices_raise():
    X = np.arange(8, dtype=float).reshape(4, 2)
    with pytest.raises(DegenerateSliceError) as exc:
        scored_pairs(X, np.zeros(4, dtype=int))
    assert exc.value.group == "all"
    with pytest.raises(DegenerateSliceError) as exc:
        scored_pairs(X, np.array([0, 1, 0, 1]), np.array([1, 0, 0, 0]), "p")
    assert exc.value.group == "p"


def test_provenance_records_sampling():
    X = np.random.default_rng(0).normal(size=(80, 2))
    labels = np.arange(80) % 2
    pairs = scored_pairs(X, labels, sampler=SamplerConfig(threshold=10, sample_size=500, seed=9))
    prov = pairs.provenance()
    assert prov == {"slice": "all", "pairs": 500, "population": 3160, "sampled": True, "seed": 9}
