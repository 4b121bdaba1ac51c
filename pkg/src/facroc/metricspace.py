"""Pairwise distances and scored point pairs for ROC analysis of clusterings.

Every unordered pair of points becomes one "instance": its score is the
similarity of the two points and its label is 1 when both points share a
cluster. Group slices keep only pairs whose endpoints lie in one protected
group.
"""

from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist, pdist, squareform
from sklearn.utils.validation import check_array

from .exceptions import DataError, DegenerateSliceError

SLICES = ("all", "p", "pbar")
_SLICE_ALIASES = {"all": "all", "p": "p", "p_only": "p", "pbar": "pbar", "pbar_only": "pbar"}
_SLICE_CODE = {"all": 0, "p": 1, "pbar": 2}
SLICING_RULES = ("both", "any")

# Pairs per chunk when distances are computed on the fly from features.
_CHUNK = 250_000


@dataclass(frozen=True)
class SamplerConfig:
    """Pair subsampling policy.

    A slice is enumerated exhaustively while its pair population is at most
    ``threshold * (threshold - 1) / 2`` (all pairs of ``threshold`` points);
    larger populations are replaced by ``sample_size`` distinct pairs drawn
    uniformly without replacement.
    """

    threshold: int = 2000
    sample_size: int = 2_000_000
    seed: int = 42

    def __post_init__(self):
        if self.threshold < 2 or self.sample_size < 1:
            raise ValueError("threshold must be >= 2 and sample_size >= 1")

    @property
    def max_exhaustive(self):
        return self.threshold * (self.threshold - 1) // 2


@dataclass
class ScoredPairSet:
    i: np.ndarray
    j: np.ndarray
    score: np.ndarray
    same_cluster: np.ndarray
    group_tag: str = "all"
    sampled: bool = False
    seed: int = None
    population: int = 0

    def __len__(self):
        return len(self.score)

    @property
    def n_pos(self):
        return int(self.same_cluster.sum())

    @property
    def n_neg(self):
        return len(self) - self.n_pos

    def provenance(self):
        return {
            "slice": self.group_tag,
            "pairs": len(self),
            "population": int(self.population),
            "sampled": bool(self.sampled),
            "seed": self.seed if self.sampled else None,
        }


def distance_matrix(X):
    """Dense Euclidean distance matrix with an exact zero diagonal."""
    X = check_array(X, dtype=np.float64)
    if X.shape[0] < 2:
        raise DataError("need at least two points")
    return squareform(pdist(X, metric="euclidean"))


def check_distance_matrix(D):
    D = check_array(D, dtype=np.float64)
    n = D.shape[0]
    if D.shape != (n, n):
        raise DataError(f"distance matrix must be square, got {D.shape}")
    if np.any(D < 0) or np.any(np.diag(D) != 0):
        raise DataError("distance matrix must be non-negative with a zero diagonal")
    if not np.array_equal(D, D.T):
        raise DataError("distance matrix must be symmetric")
    return D


def to_similarity(D):
    """Similarity scores as negated distances.

    ROC analysis depends only on the order of scores, so any strictly
    decreasing transform of distance gives the same curves; negation keeps
    the scores exact.
    """
    return -np.asarray(D, dtype=np.float64)


def pair_distances(X, i, j):
    """Euclidean distances ``||X[i] - X[j]||`` computed in fixed-size chunks."""
    out = np.empty(len(i))
    for start in range(0, len(i), _CHUNK):
        stop = start + _CHUNK
        diff = X[i[start:stop]] - X[j[start:stop]]
        out[start:stop] = np.sqrt(np.einsum("ij,ij->i", diff, diff))
    return out


def pairwise_block(X, rows, metric="euclidean"):
    """Distances from ``X[rows]`` to every point, or rows of a precomputed matrix."""
    if metric == "precomputed":
        return X[rows]
    return cdist(X[rows], X)


def triangle_decode(k, m):
    """Map row-major linear indices of the strict upper triangle of an ``m x m``
    matrix back to ``(a, b)`` with ``a < b``."""
    k = np.asarray(k, dtype=np.int64)
    two_m = 2 * m - 1
    a = np.floor((two_m - np.sqrt(np.maximum(two_m * two_m - 8.0 * k, 0.0))) / 2).astype(np.int64)
    # float rounding can leave a off by one in either direction
    offset = a * m - a * (a + 1) // 2
    low = k < offset
    while np.any(low):
        a[low] -= 1
        offset = a * m - a * (a + 1) // 2
        low = k < offset
    nxt = (a + 1) * m - (a + 1) * (a + 2) // 2
    high = k >= nxt
    while np.any(high):
        a[high] += 1
        offset = a * m - a * (a + 1) // 2
        nxt = (a + 1) * m - (a + 1) * (a + 2) // 2
        high = k >= nxt
    b = k - offset + a + 1
    return a, b


def _slice_members(groups, tag, n):
    if tag == "all":
        return np.arange(n), np.empty(0, dtype=np.int64)
    if groups is None:
        raise DataError(f"slice {tag!r} requires group labels")
    inside = groups == (1 if tag == "p" else 0)
    return np.flatnonzero(inside), np.flatnonzero(~inside)


def enumerate_pairs(n, groups=None, slice="all", sampler=None, slicing="both"):
    """Index pairs ``(i, j)``, ``i < j``, of one slice.

    Returns ``(i, j, population, sampled)``. Pairs come in a fixed canonical
    order; sampled sets are a sorted subset of that order, so the result is
    a deterministic function of ``(sampler.seed, n, slice)``.
    """
    tag = _SLICE_ALIASES.get(slice)
    if tag is None:
        raise ValueError(f"unknown slice {slice!r}; expected one of {SLICES}")
    if slicing not in SLICING_RULES:
        raise ValueError(f"unknown slicing rule {slicing!r}; expected one of {SLICING_RULES}")
    sampler = sampler or SamplerConfig()
    members, others = _slice_members(groups, tag, n)
    m = len(members)
    inner = m * (m - 1) // 2
    cross = m * len(others) if (tag != "all" and slicing == "any") else 0
    population = inner + cross

    if population <= sampler.max_exhaustive or population <= sampler.sample_size:
        k = np.arange(population, dtype=np.int64)
        sampled = False
    else:
        rng = np.random.default_rng([sampler.seed, _SLICE_CODE[tag], n])
        k = np.sort(rng.choice(population, size=sampler.sample_size, replace=False))
        sampled = True

    is_inner = k < inner
    i = np.empty(len(k), dtype=np.int64)
    j = np.empty(len(k), dtype=np.int64)
    a, b = triangle_decode(k[is_inner], m)
    i[is_inner], j[is_inner] = members[a], members[b]
    if cross:
        q = k[~is_inner] - inner
        u, v = members[q // len(others)], others[q % len(others)]
        i[~is_inner], j[~is_inner] = np.minimum(u, v), np.maximum(u, v)
    return i, j, population, sampled


def scored_pairs(X, labels, groups=None, slice="all", *, metric="euclidean", sampler=None, slicing="both"):
    """Scored, labelled pairs for one slice.

    ``X`` is a feature matrix, or a distance matrix when
    ``metric="precomputed"``. Raises :class:`DegenerateSliceError` when the
    slice has no pairs or lacks positive or negative pairs.
    """
    if metric not in ("euclidean", "precomputed"):
        raise ValueError(f"unsupported metric {metric!r}")
    X = np.asarray(X, dtype=np.float64)
    labels = np.asarray(labels)
    n = X.shape[0]
    if labels.shape != (n,):
        raise DataError(f"labels has shape {labels.shape}, expected ({n},)")
    if groups is not None:
        groups = np.asarray(groups)
        if groups.shape != (n,):
            raise DataError(f"groups has shape {groups.shape}, expected ({n},)")
    sampler = sampler or SamplerConfig()
    tag = _SLICE_ALIASES.get(slice, slice)
    i, j, population, sampled = enumerate_pairs(n, groups, tag, sampler, slicing)
    if len(i) == 0:
        raise DegenerateSliceError(f"degenerate slice {tag!r}: no pairs", group=tag)
    same = (labels[i] == labels[j]).astype(np.int8)
    n_pos = int(same.sum())
    if n_pos == 0 or n_pos == len(same):
        kind = "negative" if n_pos else "positive"
        raise DegenerateSliceError(f"degenerate slice {tag!r}: no {kind} pairs", group=tag)
    dist = X[i, j] if metric == "precomputed" else pair_distances(X, i, j)
    return ScoredPairSet(
        i=i,
        j=j,
        score=to_similarity(dist),
        same_cluster=same,
        group_tag=tag,
        sampled=sampled,
        seed=sampler.seed,
        population=population,
    )
