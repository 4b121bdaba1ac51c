import numpy as np
import pytest

from facroc.exceptions import DataError
from facroc.selection import parse_range, select_k


def four_blobs(seed, n_each=100, sep=10.0):
    r = np.random.default_rng(seed)
    centers = np.array([[0, 0], [1, 0], [0, 1], [1, 1]]) * sep
    return np.repeat(centers, n_each, axis=0) + r.normal(size=(4 * n_each, 2))


def test_recovers_four_blobs():
    k_star, curve = select_k(four_blobs(0), "kmeans", (2, 8), seed=0)
    assert k_star == 4
    assert [k for k, _ in curve] == list(range(2, 9))
    assert dict(curve)[4] == max(v for _, v in curve)


def test_singleton_range():
    sel = select_k(four_blobs(1, 20), "kmeans", (3, 3), seed=1)
    assert sel.k_star == 3 and len(sel.curve) == 1


def test_ties_go_to_smaller_k():
    # two coincident clouds: any k >= 2 splitting identical points gives 0.5
    X = np.zeros((6, 2))
    sel = select_k(X, "kmeans", (2, 4), seed=0)
    assert sel.k_star == min(k for k, v in sel.curve if v == max(v for _, v in sel.curve))


def test_failed_k_is_recorded_and_skipped():
    X = np.random.default_rng(0).normal(size=(10, 2))
    groups = np.array([1] * 5 + [0] * 5)
    # at t = 0.4 five minority points form two (2,5)-style fairlets
    sel = select_k(X, "fairlet", (2, 4), seed=0, groups=groups)
    assert dict(sel.curve)[3] is None and set(sel.failed) == {3, 4}
    assert sel.k_star == 2
    text = sel.to_csv()
    assert text.splitlines()[0] == "k,aucc,status"
    assert len(text.splitlines()) == 4


def test_all_failed_raises():
    X = np.random.default_rng(0).normal(size=(4, 2))
    groups = np.array([1, 1, 0, 0])
    with pytest.raises(DataError):
        select_k(X, "fairlet", (2, 3), groups=groups)


def test_bad_range():
    with pytest.raises(ValueError):
        select_k(np.zeros((5, 2)), "kmeans", (1, 3))
    assert parse_range("2..10") == (2, 10)
    with pytest.raises(ValueError):
        parse_range("2-10")


def test_deterministic():
    X = four_blobs(3, 30)
    assert select_k(X, "kmeans", (2, 6), seed=5).curve == select_k(X, "kmeans", (2, 6), seed=5).curve
