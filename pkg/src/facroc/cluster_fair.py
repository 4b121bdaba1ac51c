"""Fair clustering models: fairlet decomposition (exact and quadtree-based)
followed by k-median over fairlets, and proportionally fair greedy capture.

Group labels are binary (1 = p, 0 = pbar). A fairness target ``t`` is a
ratio ``b / r`` with ``b <= r <= 10``; a fairlet meets it when
``min(#p / #pbar, #pbar / #p) >= t``.
"""

import math
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy.optimize import linear_sum_assignment
from scipy.spatial import cKDTree
from scipy.spatial.distance import cdist, pdist
from sklearn.base import BaseEstimator, ClusterMixin
from sklearn.utils.validation import check_array

from .cluster_base import Clustering, relabel_by_first_occurrence
from .exceptions import DataError, InfeasibleFairnessError
from .metricspace import distance_matrix

DEFAULT_TARGET = 0.4
# largest assignment matrix side solved exactly; beyond it (1, r) targets
# fall back to greedy batching
MAX_EXACT_SLOTS = 6000


def balance_target(t):
    """``(b, r)`` with ``b / r == t``, ``gcd(b, r) == 1`` and ``r <= 10``."""
    if not 0 < t <= 1:
        raise ValueError(f"fairness target must lie in (0, 1], got {t}")
    frac = Fraction(t).limit_denominator(10)
    if abs(float(frac) - t) > 1e-9:
        raise ValueError(f"fairness target {t} is not a ratio b/r with r <= 10")
    return frac.numerator, frac.denominator


def _roles(groups):
    groups = np.asarray(groups)
    n_p = int(np.count_nonzero(groups == 1))
    n_q = len(groups) - n_p
    if n_p == 0 or n_q == 0:
        raise DataError("both protected groups must be non-empty")
    minority = 1 if n_p <= n_q else 0
    return np.flatnonzero(groups == minority), np.flatnonzero(groups != minority), minority


def _check_feasible(n_min, n_maj, b, r):
    if n_min * r < n_maj * b:
        raise InfeasibleFairnessError(
            f"infeasible fairness target {b}/{r}: data balance is {n_min}/{n_maj} = {n_min / n_maj:.4f}"
        )


def composition_plan(n_min, n_maj, b, r):
    """Per-fairlet ``(minority, majority)`` counts covering all points.

    Fairlets take ``b`` minority points each (the last absorbs any
    remainder) and between ``ceil(x b / r)`` and ``floor(x r / b)``
    majority points, spread as evenly as the bounds allow.
    """
    _check_feasible(n_min, n_maj, b, r)
    n_fair = max(1, n_min // b)
    xs = [b] * n_fair
    xs[-1] += n_min - b * n_fair
    lo = [-(-x * b // r) for x in xs]
    hi = [x * r // b for x in xs]
    ys = list(lo)
    extra = n_maj - sum(lo)
    if extra < 0 or n_maj > sum(hi):
        raise InfeasibleFairnessError(f"no ({b},{r}) composition covers {n_min}/{n_maj} points")
    while extra:
        for f in range(n_fair):
            if extra and ys[f] < hi[f]:
                ys[f] += 1
                extra -= 1
    return list(zip(xs, ys))


@dataclass
class FairletDecomposition:
    """Partition of the points into fairlets.

    ``anchors`` holds one minority member per fairlet; ``cost`` is the sum
    over fairlets of the distances from every other member to its anchor.
    ``centers`` are fairlet medoids, used when clustering the fairlets.
    """

    fairlets: list
    composition: tuple
    anchors: np.ndarray
    centers: np.ndarray
    cost: float
    minority_group: int
    meta: dict = field(default_factory=dict)

    @property
    def n(self):
        return sum(len(f) for f in self.fairlets)

    def fairlet_of(self):
        out = np.empty(self.n, dtype=np.int64)
        for f, members in enumerate(self.fairlets):
            out[members] = f
        return out


def _medoid(members, dist):
    """Medoid of ``members`` given their pairwise distance block."""
    return int(members[int(dist.sum(1).argmin())])


def _finish(fairlets, anchors, composition, minority, D=None, X=None, meta=None):
    fairlets = [np.sort(np.asarray(f, dtype=np.int64)) for f in fairlets]
    centers, cost = [], 0.0
    for members, a in zip(fairlets, anchors):
        block = D[np.ix_(members, members)] if D is not None else cdist(X[members], X[members])
        centers.append(_medoid(members, block))
        col = int(np.searchsorted(members, a))
        cost += float(block[:, col].sum())
    return FairletDecomposition(
        fairlets=fairlets,
        composition=composition,
        anchors=np.asarray(anchors, dtype=np.int64),
        centers=np.asarray(centers, dtype=np.int64),
        cost=cost,
        minority_group=minority,
        meta=dict(meta or {}),
    )


class _GroupDistances:
    """Distances from minority points to either group, from a dense matrix
    or computed on demand from coordinates.

    Rows are positions within ``mins``; columns cover all of ``mins`` or
    ``majs`` in order.
    """

    def __init__(self, A, mins, majs, metric):
        self.dense = metric == "precomputed"
        if self.dense:
            self.D, self.mins, self.majs = A, mins, majs
        else:
            # gathered once so each query is a single matrix product
            self.Xmin, self.Xmaj = A[mins], A[majs]
            self.sq_min = np.einsum("ij,ij->i", self.Xmin, self.Xmin)
            self.sq_maj = np.einsum("ij,ij->i", self.Xmaj, self.Xmaj)

    def _euclid(self, rows, Y, sq_y):
        Xr = self.Xmin[rows]
        d2 = self.sq_min[rows][:, None] + sq_y[None, :] - 2.0 * (Xr @ Y.T)
        return np.sqrt(np.maximum(d2, 0.0))

    def to_maj(self, rows):
        if self.dense:
            return self.D[np.ix_(self.mins[rows], self.majs)]
        return self._euclid(rows, self.Xmaj, self.sq_maj)

    def to_min(self, rows):
        if self.dense:
            return self.D[np.ix_(self.mins[rows], self.mins)]
        return self._euclid(rows, self.Xmin, self.sq_min)


def _exact_one_to_many(dist, mins, majs, r):
    """Optimal ``(1, 1..r)`` decomposition as a square assignment problem.

    Every minority point owns one mandatory slot and ``r - 1`` optional
    slots; dummy rows may fill optional slots only, so an optimal perfect
    assignment gives each minority point between 1 and ``r`` majority
    partners at minimum total distance.
    """
    m, q = len(mins), len(majs)
    r_eff = min(r, q - m + 1)
    n_slots = m * r_eff
    base = dist.to_maj(np.arange(m)).T
    cost = np.zeros((n_slots, n_slots))
    cost[:q] = np.repeat(base, r_eff, axis=1)
    mandatory = np.arange(m) * r_eff
    cost[q:, mandatory] = np.inf
    rows, cols = linear_sum_assignment(cost)
    real = rows < q
    owner = cols[real] // r_eff
    fairlets = [[mins[a]] for a in range(m)]
    for p_idx, a in zip(majs[rows[real]], owner):
        fairlets[a].append(p_idx)
    return fairlets, list(mins)


_CHUNK = 2048


def _greedy_batches(dist, mins, majs, plan):
    """Greedy fairlets following ``plan``.

    Each step seeds a fairlet at the unassigned minority point farthest
    from its nearest unassigned majority point (the most isolated one, ties
    to the smaller index) and fills it with the seed's nearest unassigned
    partners of each group.
    """
    m = len(mins)
    free_min = np.ones(m, dtype=bool)
    free_maj = np.ones(len(majs), dtype=bool)
    # nearest free majority point of every minority point, kept current
    # by refreshing only the rows whose nearest partner was taken
    nn_d = np.empty(m)
    nn_j = np.empty(m, dtype=np.int64)
    for lo in range(0, m, _CHUNK):
        block = dist.to_maj(np.arange(lo, min(lo + _CHUNK, m)))
        nn_j[lo:lo + len(block)] = block.argmin(1)
        nn_d[lo:lo + len(block)] = block.min(1)
    fairlets, anchors = [], []
    for x, y in plan:
        s = int(np.where(free_min, nn_d, -np.inf).argmax())
        free_min[s] = False
        partners_min = np.flatnonzero(free_min)
        row = dist.to_min(np.array([s]))[0]
        partners_min = partners_min[np.argsort(row[partners_min], kind="stable")[: x - 1]]
        free_min[partners_min] = False
        partners_maj = np.flatnonzero(free_maj)
        row = dist.to_maj(np.array([s]))[0]
        partners_maj = partners_maj[np.argsort(row[partners_maj], kind="stable")[:y]]
        free_maj[partners_maj] = False
        fairlets.append(np.concatenate([[mins[s]], mins[partners_min], majs[partners_maj]]))
        anchors.append(mins[s])
        if free_maj.any():
            stale = np.flatnonzero(free_min & ~free_maj[nn_j])
            for lo in range(0, len(stale), _CHUNK):
                rows = stale[lo:lo + _CHUNK]
                block = np.where(free_maj[None, :], dist.to_maj(rows), np.inf)
                nn_j[rows] = block.argmin(1)
                nn_d[rows] = block.min(1)
        else:
            nn_d[:] = np.inf
    return fairlets, anchors


def fairlet_decompose(D, groups, t=DEFAULT_TARGET, *, metric="precomputed"):
    """Fairlet decomposition.

    ``D`` is a distance matrix, or a feature matrix with
    ``metric="euclidean"`` (distances are then computed on demand, which
    keeps memory linear in n). ``(1, r)`` targets are solved exactly by
    minimum-cost assignment; other targets use greedy batching along
    :func:`composition_plan`.
    """
    if metric not in ("precomputed", "euclidean"):
        raise ValueError(f"unsupported metric {metric!r}")
    A = np.asarray(D, dtype=np.float64)
    b, r = balance_target(t)
    mins, majs, minority = _roles(groups)
    plan = composition_plan(len(mins), len(majs), b, r)
    dist = _GroupDistances(A, mins, majs, metric)
    exact = b == 1 and len(mins) * min(r, len(majs) - len(mins) + 1) <= MAX_EXACT_SLOTS
    if exact:
        fairlets, anchors = _exact_one_to_many(dist, mins, majs, r)
    else:
        fairlets, anchors = _greedy_batches(dist, mins, majs, plan)
    method = "min-cost-assignment" if exact else "greedy-batching"
    dense = {"D": A} if metric == "precomputed" else {"X": A}
    return _finish(fairlets, anchors, (b, r), minority, meta={"method": method}, **dense)


def _kmedian_swap(Dc, w, k, rng, max_iter=100):
    m = len(w)
    med = np.sort(rng.choice(m, size=k, replace=False))
    cost = None
    for _ in range(max_iter):
        dm = Dc[:, med]
        if k > 1:
            order = np.argsort(dm, axis=1, kind="stable")
            nearest = order[:, 0]
            d1 = dm[np.arange(m), nearest]
            d2 = dm[np.arange(m), order[:, 1]]
        else:
            nearest = np.zeros(m, dtype=np.int64)
            d1 = dm[:, 0]
            d2 = np.full(m, np.inf)
        cost = float(w @ d1)
        best = (0.0, None, None)
        for j in range(k):
            rest = np.where(nearest == j, d2, d1)
            trial = w @ np.minimum(rest[:, None], Dc)
            trial[med] = np.inf
            c = int(trial.argmin())
            delta = float(trial[c]) - cost
            if delta < best[0] - 1e-12 * max(cost, 1.0):
                best = (delta, j, c)
        if best[1] is None:
            break
        med[best[1]] = best[2]
        med = np.sort(med)
    dm = Dc[:, med]
    return med, float(w @ dm.min(1))


def fairlet_cluster(dec, X, k, seed=42, *, metric="euclidean", n_init=5):
    """Weighted k-median over fairlet medoids; points inherit their fairlet's cluster.

    Fairlets are weighted by size. Swap local search runs from ``n_init``
    seeded starts; the cheapest result wins, ties to the earliest start.
    """
    n_fair = len(dec.fairlets)
    if not 1 <= k <= n_fair:
        raise DataError(f"k={k} exceeds the number of fairlets ({n_fair})")
    X = np.asarray(X, dtype=np.float64)
    c = dec.centers
    Dc = X[np.ix_(c, c)] if metric == "precomputed" else cdist(X[c], X[c])
    w = np.array([len(f) for f in dec.fairlets], dtype=np.float64)
    best = None
    for child in np.random.SeedSequence(seed).spawn(n_init):
        med, cost = _kmedian_swap(Dc, w, k, np.random.default_rng(child))
        if best is None or cost < best[1]:
            best = (med, cost)
    med, cost = best
    fair_label = Dc[:, med].argmin(1)
    fair_label[med] = np.arange(k)
    labels = relabel_by_first_occurrence(fair_label[dec.fairlet_of()])
    return Clustering(
        labels=labels,
        k=k,
        model="fairlet",
        seed=seed,
        meta={"phase2": "k-median", "kmedian_cost": cost, "n_fairlets": n_fair},
    )


def _min_nonzero_gap(X):
    U = np.unique(X, axis=0)
    if len(U) < 2:
        return 0.0
    if len(U) <= 4000:
        return float(pdist(U).min())
    dist, _ = cKDTree(U).query(U, k=2)
    return float(dist[:, 1].min())


def _quadtree_levels(X, rng, max_depth):
    """Cell ids of every point at each level of a randomly shifted grid hierarchy.

    Level 0 is a single root cell of side ``2 * span`` whose origin is shifted
    uniformly at random; each level halves the side. Depth stops once the
    side drops below half the smallest nonzero gap between points.
    """
    n, d = X.shape
    lo = X.min(0)
    span = float((X.max(0) - lo).max())
    if span == 0:
        return [np.zeros(n, dtype=np.int64)], 0.0, 0
    shift = rng.uniform(0.0, span, size=d)
    origin = lo - shift
    gap = _min_nonzero_gap(X)
    depth = 0
    while depth < max_depth and 2 * span / 2**depth >= gap / 2:
        depth += 1
    levels = [np.zeros(n, dtype=np.int64)]
    for level in range(1, depth + 1):
        side = 2 * span / 2**level
        cells = np.floor((X - origin) / side).astype(np.int64)
        _, ids = np.unique(cells, axis=0, return_inverse=True)
        levels.append(ids.ravel())
    return levels, gap, depth


def scalable_fairlet_decompose(X, groups, t=DEFAULT_TARGET, seed=42, max_depth=32):
    """Approximate fairlet decomposition over a randomly shifted quadtree.

    Walking from the finest level to the root, every cell forms as many
    planned fairlets as its still-unassigned points allow (seeded at the
    lowest-index minority point, filled with that seed's nearest partners);
    leftovers move up to the parent cell and the root absorbs the rest.
    Fairlet shapes come from :func:`composition_plan`, so the partition and
    balance guarantees match the exact decomposition.
    """
    X = check_array(X, dtype=np.float64)
    b, r = balance_target(t)
    groups = np.asarray(groups)
    mins, majs, minority = _roles(groups)
    plan = Counter(composition_plan(len(mins), len(majs), b, r))
    rng = np.random.default_rng(seed)
    levels, gap, depth = _quadtree_levels(X, rng, max_depth)
    is_min = groups == minority
    free = np.ones(len(X), dtype=bool)
    fairlets, anchors = [], []
    min_x = min(x for x, _ in plan)
    min_y = min(y for _, y in plan)

    for ids in reversed(levels):
        idx = np.flatnonzero(free)
        if not idx.size:
            break
        cell = ids[idx]
        n_cells = int(cell.max()) + 1
        c_min = np.bincount(cell[is_min[idx]], minlength=n_cells)
        c_maj = np.bincount(cell[~is_min[idx]], minlength=n_cells)
        ready = np.flatnonzero((c_min >= min_x) & (c_maj >= min_y))
        if not ready.size:
            continue
        order = np.argsort(cell, kind="stable")
        bounds = np.searchsorted(cell[order], np.arange(n_cells + 1))
        for c in ready:
            pts = idx[order[bounds[c]:bounds[c + 1]]]
            _fill_cell(X, pts, is_min, plan, fairlets, anchors)
        if fairlets:
            free[np.concatenate(fairlets)] = False
    if free.any() or sum(plan.values()):
        raise AssertionError("quadtree decomposition left points unassigned")
    return _finish(
        fairlets, anchors, (b, r), minority, X=X,
        meta={"method": "quadtree", "depth": depth, "min_gap": gap, "seed": seed},
    )


def _fill_cell(X, pts, is_min, plan, fairlets, anchors):
    p_min = pts[is_min[pts]]
    p_maj = pts[~is_min[pts]]
    while True:
        fits = [(cnt, s) for s, cnt in plan.items() if cnt and s[0] <= len(p_min) and s[1] <= len(p_maj)]
        if not fits:
            return
        # most frequent remaining shape first, then the smaller one
        x, y = min(fits, key=lambda f: (-f[0], f[1]))[1]
        plan[(x, y)] -= 1
        seed_pt = p_min[0]
        rest_min = p_min[1:]
        if x > 1:
            near = np.argsort(cdist(X[[seed_pt]], X[rest_min])[0], kind="stable")[: x - 1]
            take_min = rest_min[near]
            rest_min = np.delete(rest_min, near)
        else:
            take_min = rest_min[:0]
        near = np.argsort(cdist(X[[seed_pt]], X[p_maj])[0], kind="stable")[:y]
        take_maj = p_maj[near]
        p_maj = np.delete(p_maj, near)
        p_min = rest_min
        fairlets.append(np.concatenate([[seed_pt], take_min, take_maj]))
        anchors.append(seed_pt)


@dataclass
class ProportionalState:
    """Ball-growth outcome before any filling: centers in opening order, the
    radius at which each opened, how many points its ball captured at that
    moment, and the capturing center per point (``-1`` for points left
    uncaptured when growth stopped)."""

    open_centers: list
    capture_radius: list
    opened_with: list
    captured: np.ndarray


def greedy_capture(X, k, *, metric="euclidean", fill=True):
    """Proportionally fair clustering by greedy ball growth.

    A radius grows from zero. Opened centers capture every uncaptured point
    their ball reaches; a new center opens as soon as its ball holds
    ``ceil(n/k)`` uncaptured points, capturing them. Once fewer than
    ``ceil(n/k)`` points remain uncaptured no center can open and the rest
    join their nearest open center. At most ``k`` centers open.

    Ball growth alone often opens fewer than ``k`` centers (a single one is
    common at ``k = 2``). With ``fill=True`` the missing centers are added
    afterwards, each at the point that most reduces the total distance to
    the nearest center, and every point moves to its nearest center. Extra
    centers never raise any point's distance, so the proportionality
    guarantee survives. ``meta["achieved_k"]`` always counts the centers
    opened by ball growth.
    """
    D = np.asarray(X, dtype=np.float64) if metric == "precomputed" else distance_matrix(X)
    n = D.shape[0]
    if not 1 <= k <= n:
        raise DataError(f"k must satisfy 1 <= k <= n (n={n}), got k={k}")
    g = math.ceil(n / k)
    assign = np.full(n, -1, dtype=np.int64)
    is_open = np.zeros(n, dtype=bool)
    opened, radii, sizes = [], [], []
    while True:
        U = np.flatnonzero(assign < 0)
        if len(U) < g:
            break
        cand = np.flatnonzero(~is_open)
        kth = np.partition(D[np.ix_(cand, U)], g - 1, axis=1)[:, g - 1]
        m = int(kth.argmin())
        delta, y = float(kth[m]), int(cand[m])
        if opened:
            to_open = D[np.ix_(opened, U)]
            reach = to_open.min(0) <= delta
            if reach.any():
                assign[U[reach]] = to_open[:, reach].argmin(0)
                continue
        ball = U[D[y, U] <= delta]
        assign[ball] = len(opened)
        opened.append(y)
        radii.append(delta)
        sizes.append(len(ball))
        is_open[y] = True
    state = ProportionalState(list(opened), list(radii), list(sizes), assign.copy())
    rest = np.flatnonzero(assign < 0)
    if rest.size:
        assign[rest] = D[np.ix_(opened, rest)].argmin(0)
    achieved = len(opened)
    centers = list(opened)
    filled = 0
    if fill and achieved < k:
        near = D[:, centers].min(1)
        while len(centers) < k:
            gain = np.maximum(near[None, :] - D, 0.0).sum(1)
            gain[centers] = -1.0
            y = int(gain.argmax())
            centers.append(y)
            near = np.minimum(near, D[y])
            filled += 1
        assign = D[:, centers].argmin(1)
        assign[centers] = np.arange(len(centers))
    labels = relabel_by_first_occurrence(assign)
    # center of each relabelled cluster
    first = {}
    for old, new in zip(assign, labels):
        first.setdefault(int(new), int(old))
    centers_arr = np.asarray([centers[first[c]] for c in range(len(first))], dtype=np.int64)
    return Clustering(
        labels=labels,
        k=len(centers),
        model="proportional",
        centers=centers_arr,
        meta={
            "requested_k": k,
            "achieved_k": achieved,
            "filled_centers": filled,
            "group_size": g,
            "radii": radii,
            "state": state,
        },
    )


class FairletClustering(ClusterMixin, BaseEstimator):
    """Fairlet decomposition followed by k-median over fairlet medoids.

    ``scalable=True`` swaps the exact/greedy decomposition for the quadtree
    one. ``fit`` requires ``groups`` (1 = protected value).
    """

    def __init__(self, n_clusters=2, balance_threshold=DEFAULT_TARGET, scalable=False,
                 n_init=5, metric="euclidean", random_state=42):
        self.n_clusters = n_clusters
        self.balance_threshold = balance_threshold
        self.scalable = scalable
        self.n_init = n_init
        self.metric = metric
        self.random_state = random_state

    def fit(self, X, y=None, *, groups=None):
        if groups is None:
            raise ValueError("FairletClustering.fit requires groups")
        X = check_array(X, dtype=np.float64)
        if self.scalable:
            if self.metric == "precomputed":
                raise ValueError("the quadtree decomposition needs feature vectors, not distances")
            dec = scalable_fairlet_decompose(X, groups, self.balance_threshold, self.random_state)
        else:
            D = X if self.metric == "precomputed" else distance_matrix(X)
            dec = fairlet_decompose(D, groups, self.balance_threshold)
        res = fairlet_cluster(dec, X, self.n_clusters, self.random_state,
                              metric=self.metric, n_init=self.n_init)
        res.model = "scalable" if self.scalable else "fairlet"
        res.meta.update(decomposition=dec.meta, fairlet_cost=dec.cost)
        self.decomposition_ = dec
        self.clustering_ = res
        self.labels_ = res.labels
        return self

    def fit_predict(self, X, y=None, *, groups=None):
        return self.fit(X, groups=groups).labels_


class ProportionalClustering(ClusterMixin, BaseEstimator):
    """Greedy capture; ``center_indices_`` are the opened centers."""

    def __init__(self, n_clusters=2, fill=True, metric="euclidean"):
        self.n_clusters = n_clusters
        self.fill = fill
        self.metric = metric

    def fit(self, X, y=None):
        X = check_array(X, dtype=np.float64)
        res = greedy_capture(X, self.n_clusters, metric=self.metric, fill=self.fill)
        self.clustering_ = res
        self.labels_ = res.labels
        self.center_indices_ = res.centers
        self.n_clusters_ = res.k
        return self
