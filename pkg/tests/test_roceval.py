import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from facroc.exceptions import DegenerateSliceError
from facroc.metricspace import distance_matrix
from facroc.oracles import grid_quadrature, rank_sum_auc
from facroc.roceval import RocCurve, area_between, aucc, compute_facroc, roc_curve


def curve_from(points, n_pos, n_neg):
    fp = np.array([round(x * n_neg) for x, _ in points])
    tp = np.array([round(y * n_pos) for _, y in points])
    return RocCurve(fp=fp, tp=tp, n_pos=n_pos, n_neg=n_neg)


def test_perfect_ranking():
    c = roc_curve([5, 4, 3, 2, 1], [1, 1, 0, 0, 0])
    assert c.points.tolist()[:3] == [[0, 0], [0, 0.5], [0, 1]]
    assert c.auc() == 1.0


def test_all_ties_is_diagonal():
    c = roc_curve(np.zeros(10), np.arange(10) % 2)
    assert c.points.tolist() == [[0, 0], [1, 1]]
    assert c.auc() == 0.5


def test_endpoints_and_monotone(rng):
    c = roc_curve(rng.normal(size=100), rng.integers(0, 2, 100))
    assert c.points[0].tolist() == [0, 0] and c.points[-1].tolist() == [1, 1]
    assert np.all(np.diff(c.fpr) >= 0) and np.all(np.diff(c.tpr) >= 0)


def test_degenerate_labels():
    with pytest.raises(DegenerateSliceError, match="degenerate"):
        roc_curve([1, 2, 3], [1, 1, 1])


@given(
    st.lists(st.tuples(st.integers(0, 6), st.booleans()), min_size=2, max_size=80).filter(
        lambda v: any(b for _, b in v) and not all(b for _, b in v)
    )
)
@settings(max_examples=200, deadline=None)
def test_auc_equals_rank_sum(values):
    scores = [float(s) for s, _ in values]
    labels = [int(b) for _, b in values]
    assert abs(roc_curve(scores, labels).auc() - rank_sum_auc(scores, labels)) <= 1e-9


def test_monotone_rescaling_is_bit_identical(rng):
    s = rng.normal(size=300)
    y = rng.integers(0, 2, 300)
    a = roc_curve(s, y)
    b = roc_curve(np.exp(3 * s) + 7, y)
    assert np.array_equal(a.fp, b.fp) and np.array_equal(a.tp, b.tp)
    assert a.auc() == b.auc()


def test_right_continuous_value_at_jump():
    c = roc_curve([3, 2, 2, 1], [1, 0, 1, 0])
    # vertical jump at fpr 0 from tpr 0 to 0.5
    assert c(0.0) == 0.5
    assert c(1.0) == 1.0


def test_identical_curves_give_zero(rng):
    c = roc_curve(rng.normal(size=50), rng.integers(0, 2, 50))
    value, crossings = area_between(c, c)
    assert value == 0.0 and crossings == 0


def test_dominance_equals_auc_difference():
    upper = curve_from([(0, 0), (0, 0.5), (0.5, 1), (1, 1)], 4, 4)
    lower = curve_from([(0, 0), (0.5, 0.25), (1, 1)], 4, 4)
    value, crossings = area_between(upper, lower)
    assert crossings == 0
    assert value == upper.auc() - lower.auc()


def test_single_crossing_matches_quadrature():
    # a starts above b, b ends above a; one crossing each
    a = curve_from([(0, 0), (0.2, 0.6), (0.6, 0.7), (1, 1)], 10, 10)
    b = curve_from([(0, 0), (0.4, 0.3), (0.6, 0.9), (1, 1)], 10, 10)
    value, crossings = area_between(a, b)
    assert crossings == 1
    assert abs(value - grid_quadrature(a, b)) <= 1e-6
    # closed form: integrate |a - b| piece by piece
    assert value > abs(a.auc() - b.auc())


def test_symmetry_and_lower_bound(rng):
    for _ in range(20):
        a = roc_curve(rng.integers(0, 8, 60), np.r_[0, 1, rng.integers(0, 2, 58)])
        b = roc_curve(rng.integers(0, 8, 40), np.r_[0, 1, rng.integers(0, 2, 38)])
        v1, c1 = area_between(a, b)
        v2, c2 = area_between(b, a)
        assert abs(v1 - v2) <= 1e-12 and c1 == c2
        assert v1 >= abs(a.auc() - b.auc()) - 1e-12
        assert 0 <= v1 <= 1


def test_aucc_separated_blobs_is_one(rng):
    X = np.vstack([rng.normal(0, 0.1, (20, 2)), rng.normal(50, 0.1, (20, 2))])
    labels = np.repeat([0, 1], 20)
    assert aucc(X, labels) == 1.0
    assert aucc(distance_matrix(X), labels, metric="precomputed") == 1.0


def test_aucc_random_labels_near_half():
    values = []
    for t in range(50):
        r = np.random.default_rng(t)
        values.append(aucc(r.normal(size=(100, 2)), r.integers(0, 3, 100)))
    assert 0.45 <= np.mean(values) <= 0.55


def test_compute_facroc_reports_failing_group(rng):
    X = rng.normal(size=(10, 2))
    labels = np.array([0, 1] * 5)
    groups = np.array([1, 0, 0, 0, 0, 0, 0, 0, 0, 0])
    with pytest.raises(DegenerateSliceError) as exc:
        compute_facroc(X, labels, groups)
    assert exc.value.group == "p"


def test_compute_facroc_invariants(rng):
    X = rng.normal(size=(60, 3))
    labels = rng.integers(0, 3, 60)
    groups = rng.integers(0, 2, 60)
    res = compute_facroc(X, labels, groups)
    assert 0 <= res.value <= 1
    assert res.value >= abs(res.aucc_p - res.aucc_pbar) - 1e-12
    swapped = compute_facroc(X, labels, 1 - groups)
    assert abs(swapped.value - res.value) <= 1e-12
    assert res.provenance["p"]["slice"] == "p"
