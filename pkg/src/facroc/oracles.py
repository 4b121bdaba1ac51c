"""Brute-force reference implementations and the verification suites built on them.

Each oracle recomputes a quantity straight from its definition, with no
code shared with the production path, so agreement is evidence of
correctness rather than of consistency.
"""

import itertools
import math
from fractions import Fraction

import numpy as np

from .cluster_base import agglomerate
from .cluster_fair import fairlet_decompose, fairlet_cluster, scalable_fairlet_decompose
from .fairness_metrics import audit_proportionality, compute_balance, silhouette
from .metricspace import distance_matrix
from .roceval import area_between, roc_curve

GRID = 10**6
# negative counts dividing GRID put every FPR breakpoint on a cell boundary
GRID_FRIENDLY_NEG = (4, 5, 8, 10, 16, 20, 25, 32, 40, 50, 64, 80, 100, 125, 160, 200, 250)


def rank_sum_auc(scores, labels):
    """Probability that a random positive outscores a random negative, ties counting 1/2."""
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels).astype(bool)
    pos, neg = scores[labels], scores[~labels]
    wins = (pos[:, None] > neg[None, :]).sum() + 0.5 * (pos[:, None] == neg[None, :]).sum()
    return float(wins / (len(pos) * len(neg)))


def _curve_fn(curve):
    """Evaluator valid strictly between FPR breakpoints: linear from the exit
    value of one breakpoint to the entry value of the next."""
    x, y = curve.fpr, curve.tpr
    xs, first = np.unique(x, return_index=True)
    last = len(x) - 1 - np.unique(x[::-1], return_index=True)[1]
    y_in, y_out = y[first], y[last]

    def f(t):
        s = np.searchsorted(xs, t, side="right") - 1
        return y_out[s] + (y_in[s + 1] - y_out[s]) * (t - xs[s]) / (xs[s + 1] - xs[s])

    return f


def grid_quadrature(curve_a, curve_b, n=GRID, block=250_000):
    """Midpoint-rule ``integral |a - b|`` on ``n`` cells."""
    fa, fb = _curve_fn(curve_a), _curve_fn(curve_b)
    total = 0.0
    for start in range(0, n, block):
        t = (np.arange(start, min(start + block, n)) + 0.5) / n
        total += float(np.abs(fa(t) - fb(t)).sum())
    return total / n


def brute_force_rho(D, centers, k):
    """Minimal rho by enumerating every coalition of size ``ceil(n/k)`` and every candidate."""
    n = len(D)
    g = math.ceil(n / k)
    cost = [min(D[i][c] for c in centers) for i in range(n)]
    worst = -math.inf
    for y in range(n):
        need = []
        for i in range(n):
            d = D[i][y]
            if d == 0:
                need.append(0.0 if cost[i] == 0 else math.inf)
            else:
                need.append(cost[i] / d)
        for S in itertools.combinations(range(n), g):
            worst = max(worst, min(need[i] for i in S))
    return worst


def balance_by_counting(labels, groups):
    """Exact balance with rational arithmetic."""
    per = {}
    for c, g in zip(labels, groups):
        per.setdefault(c, [0, 0])[int(g)] += 1
    best = None
    for q, p in per.values():
        b = Fraction(0) if p == 0 or q == 0 else min(Fraction(p, q), Fraction(q, p))
        best = b if best is None else min(best, b)
    return best


def brute_force_matching_cost(D, left, right):
    """Minimum-cost perfect matching between equally sized index sets, by enumeration."""
    best = math.inf
    for perm in itertools.permutations(right):
        best = min(best, sum(D[a][b] for a, b in zip(left, perm)))
    return best


def naive_distance_matrix(X):
    n = len(X)
    return np.array([[math.dist(X[i], X[j]) for j in range(n)] for i in range(n)])


def naive_silhouette(X, labels):
    n = len(X)
    labels = list(labels)
    total = 0.0
    for i in range(n):
        own = [j for j in range(n) if labels[j] == labels[i] and j != i]
        if not own:
            continue
        a = sum(math.dist(X[i], X[j]) for j in own) / len(own)
        b = math.inf
        for c in set(labels) - {labels[i]}:
            members = [j for j in range(n) if labels[j] == c]
            b = min(b, sum(math.dist(X[i], X[j]) for j in members) / len(members))
        top = max(a, b)
        total += 0.0 if top == 0 else (b - a) / top
    return total / n


def naive_agglomerative(X, k, linkage):
    """Agglomeration recomputing every cluster distance from its definition.

    Clusters are keyed by their smallest member; ties merge the
    lexicographically smallest key pair.
    """
    X = np.asarray(X, dtype=np.float64)
    clusters = {i: [i] for i in range(len(X))}

    def dist(A, B):
        if linkage == "ward":
            ma, mb = X[A].mean(0), X[B].mean(0)
            return math.sqrt(2 * len(A) * len(B) / (len(A) + len(B))) * float(np.linalg.norm(ma - mb))
        d = [math.dist(X[a], X[b]) for a in A for b in B]
        if linkage == "single":
            return min(d)
        if linkage == "complete":
            return max(d)
        return sum(d) / len(d)

    while len(clusters) > k:
        keys = sorted(clusters)
        best = None
        for a, b in itertools.combinations(keys, 2):
            d = dist(clusters[a], clusters[b])
            if best is None or d < best[0]:
                best = (d, a, b)
        _, a, b = best
        clusters[a] = clusters[a] + clusters.pop(b)
    labels = np.empty(len(X), dtype=np.int64)
    for c, key in enumerate(sorted(clusters)):
        labels[clusters[key]] = c
    return labels


def same_partition(a, b):
    a, b = np.asarray(a), np.asarray(b)
    pairs = set(zip(a.tolist(), b.tolist()))
    return len(pairs) == len(set(a.tolist())) == len(set(b.tolist()))


# instance generators shared by the suites and the tests

def random_scored_pairs(rng, size, force_ties):
    size = max(size, 2)
    labels = rng.integers(0, 2, size)
    labels[0], labels[1] = 0, 1
    if force_ties:
        scores = rng.integers(0, max(2, size // 5), size).astype(np.float64)
    else:
        scores = rng.normal(size=size)
    return scores, labels


def random_slice_curve(rng, n_neg=None, n_pos=None, levels=None):
    """A ROC curve from random scores whose negative count divides the grid."""
    n_neg = n_neg or int(rng.choice(GRID_FRIENDLY_NEG))
    n_pos = n_pos or int(rng.integers(3, 200))
    levels = levels or int(rng.integers(3, 60))
    shift = rng.normal(0.0, 1.0)
    pos = np.round(rng.normal(shift, 1.0, n_pos) * levels / 4)
    neg = np.round(rng.normal(0.0, 1.0, n_neg) * levels / 4)
    scores = np.concatenate([pos, neg])
    labels = np.concatenate([np.ones(n_pos, dtype=int), np.zeros(n_neg, dtype=int)])
    return roc_curve(scores, labels)


def _check(name, ok, detail=""):
    return (name, bool(ok), detail)


def suite_roc(seed=0, trials=200):
    rng = np.random.default_rng(seed)
    worst = 0.0
    for t in range(trials):
        scores, labels = random_scored_pairs(rng, int(rng.integers(10, 501)), t % 2 == 0)
        worst = max(worst, abs(roc_curve(scores, labels).auc() - rank_sum_auc(scores, labels)))
    return [_check("auc equals rank-sum statistic", worst <= 1e-9, f"max |diff| = {worst:.3g}")]


def suite_facroc(seed=0, trials=100, n=GRID):
    rng = np.random.default_rng(seed)
    worst_grid = worst_sym = worst_nocross = 0.0
    for _ in range(trials):
        a, b = random_slice_curve(rng), random_slice_curve(rng)
        v, cross = area_between(a, b)
        worst_grid = max(worst_grid, abs(v - grid_quadrature(a, b, n)))
        worst_sym = max(worst_sym, abs(v - area_between(b, a)[0]))
        if cross == 0:
            worst_nocross = max(worst_nocross, abs(v - abs(a.auc() - b.auc())))
    same = random_slice_curve(rng)
    return [
        _check("facroc equals grid quadrature", worst_grid <= 1e-6, f"max |diff| = {worst_grid:.3g}"),
        _check("facroc symmetric under swap", worst_sym <= 1e-12, f"max |diff| = {worst_sym:.3g}"),
        _check("no crossing gives |auc_p - auc_pbar|", worst_nocross == 0.0, f"max |diff| = {worst_nocross:.3g}"),
        _check("identical curves give 0", area_between(same, same)[0] == 0.0),
    ]


def suite_proportionality(seed=0, trials=60):
    rng = np.random.default_rng(seed)
    bad = 0
    for t in range(trials):
        n = int(rng.integers(3, 11))
        k = 2 + t % 2
        X = rng.normal(size=(n, 2))
        if t % 5 == 0:
            X[1] = X[0]
        D = distance_matrix(X)
        centers = rng.choice(n, size=min(k, n), replace=False)
        got = audit_proportionality(D, centers, k, metric="precomputed").rho
        bad += got != brute_force_rho(D.tolist(), centers.tolist(), k)
    return [_check("audit equals exhaustive subsets", bad == 0, f"{bad}/{trials} mismatches")]


def suite_balance(seed=0, trials=50):
    rng = np.random.default_rng(seed)
    bad = 0
    for _ in range(trials):
        n = int(rng.integers(2, 40))
        labels = rng.integers(0, int(rng.integers(1, 6)), n)
        groups = rng.integers(0, 2, n)
        bad += compute_balance(labels, groups) != float(balance_by_counting(labels, groups))
    return [_check("balance equals direct counting", bad == 0, f"{bad}/{trials} mismatches")]


def random_fair_instance(rng, n_min=None):
    n = int(rng.integers(20, 120))
    X = rng.normal(size=(n, 3))
    # minority share in [0.4, 0.5] of the majority keeps t = 0.4 feasible
    n_p = int(rng.integers(math.ceil(0.4 * n / 1.4), n // 2 + 1)) if n_min is None else n_min
    groups = np.zeros(n, dtype=np.int8)
    groups[rng.choice(n, size=n_p, replace=False)] = 1
    return X, groups


def suite_fairlet(seed=0, trials=50, t=0.4):
    rng = np.random.default_rng(seed)
    worst = 1.0
    for trial in range(trials):
        X, groups = random_fair_instance(rng)
        D = distance_matrix(X)
        for dec in (fairlet_decompose(D, groups, t), scalable_fairlet_decompose(X, groups, t, trial)):
            for f in dec.fairlets:
                worst = min(worst, compute_balance(np.zeros(len(f)), groups[f]))
            k = int(rng.integers(1, min(6, len(dec.fairlets)) + 1))
            res = fairlet_cluster(dec, D, k, trial, metric="precomputed")
            worst = min(worst, compute_balance(res.labels, groups))
    checks = [_check("fairlets and clusters meet balance 0.4", worst >= t, f"min balance = {worst:.4f}")]
    bad = 0
    for trial in range(10):
        X = rng.normal(size=(10, 2))
        groups = np.array([1] * 5 + [0] * 5)
        D = distance_matrix(X)
        dec = fairlet_decompose(D, groups, 1.0)
        bad += not math.isclose(dec.cost, brute_force_matching_cost(D, range(5), range(5, 10)), rel_tol=1e-12)
    checks.append(_check("exact decomposition equals brute-force matching", bad == 0, f"{bad}/10 mismatches"))
    bad = 0
    for trial in range(10):
        X = rng.normal(size=(200, 2))
        groups = np.zeros(200, dtype=np.int8)
        groups[rng.choice(200, size=int(rng.integers(67, 101)), replace=False)] = 1
        exact = fairlet_decompose(distance_matrix(X), groups, 0.5).cost
        bad += scalable_fairlet_decompose(X, groups, 0.5, trial).cost < exact - 1e-9
    checks.append(_check("scalable cost never beats exact cost", bad == 0, f"{bad}/10 violations"))
    return checks


def suite_silhouette(seed=0, trials=20):
    rng = np.random.default_rng(seed)
    worst_s = worst_d = 0.0
    for _ in range(trials):
        n = int(rng.integers(5, 101))
        X = rng.normal(size=(n, 3))
        labels = rng.integers(0, 3, n)
        labels[:3] = [0, 1, 2]
        worst_s = max(worst_s, abs(silhouette(X, labels) - naive_silhouette(X.tolist(), labels)))
        worst_d = max(worst_d, float(np.abs(distance_matrix(X) - naive_distance_matrix(X.tolist())).max()))
    return [
        _check("silhouette equals double loop", worst_s <= 1e-9, f"max |diff| = {worst_s:.3g}"),
        _check("distance matrix equals direct loop", worst_d <= 1e-9, f"max |diff| = {worst_d:.3g}"),
    ]


def suite_hierarchical(seed=0, trials=12):
    rng = np.random.default_rng(seed)
    bad = 0
    for t in range(trials):
        X = rng.normal(size=(int(rng.integers(5, 30)), 2))
        linkage = ("average", "complete", "single", "ward")[t % 4]
        k = int(rng.integers(1, 5))
        slot, _ = agglomerate(distance_matrix(X), k, linkage)
        bad += not same_partition(slot, naive_agglomerative(X, k, linkage))
    return [_check("agglomeration equals cubic recomputation", bad == 0, f"{bad}/{trials} mismatches")]


SUITES = {
    "roc": suite_roc,
    "facroc": suite_facroc,
    "proportionality": suite_proportionality,
    "balance": suite_balance,
    "fairlet": suite_fairlet,
    "silhouette": suite_silhouette,
    "hierarchical": suite_hierarchical,
}


def run_suite(name, seed=0):
    """Results ``[(suite, check, passed, detail)]`` for one suite or ``"all"``."""
    names = list(SUITES) if name == "all" else [name]
    out = []
    for s in names:
        if s not in SUITES:
            raise ValueError(f"unknown suite {s!r}; expected one of {sorted(SUITES)} or 'all'")
        out += [(s, *row) for row in SUITES[s](seed)]
    return out
