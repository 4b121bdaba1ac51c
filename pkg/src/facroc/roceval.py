"""ROC curves over scored pairs, AUCC, and the area between group curves."""

from dataclasses import dataclass, field

import numpy as np

from .exceptions import DegenerateSliceError
from .metricspace import SamplerConfig, scored_pairs


@dataclass
class RocCurve:
    """Piecewise-linear ROC curve from (0, 0) to (1, 1).

    ``fp`` and ``tp`` hold the cumulative integer counts at each vertex;
    ``fpr``/``tpr`` are those counts normalised by ``n_neg``/``n_pos``.
    A run of tied scores is a single segment, so vertical and diagonal
    segments both occur.
    """

    fp: np.ndarray
    tp: np.ndarray
    n_pos: int
    n_neg: int

    @property
    def fpr(self):
        return self.fp / self.n_neg

    @property
    def tpr(self):
        return self.tp / self.n_pos

    @property
    def points(self):
        return np.column_stack([self.fpr, self.tpr])

    def auc(self):
        """Trapezoidal area, accumulated on integer counts before normalising."""
        dfp = np.diff(self.fp).astype(np.float64)
        height = (self.tp[1:] + self.tp[:-1]).astype(np.float64)
        return float(np.dot(dfp, height) / (2.0 * self.n_pos * self.n_neg))

    def __call__(self, t):
        """Right-continuous value at FPR ``t``: at a vertical jump the upper TPR."""
        t = np.asarray(t, dtype=np.float64)
        fpr, tpr = self.fpr, self.tpr
        k = np.searchsorted(fpr, t, side="right")
        k = np.clip(k, 1, len(fpr) - 1)
        x0, x1, y0, y1 = fpr[k - 1], fpr[k], tpr[k - 1], tpr[k]
        span = x1 - x0
        w = np.divide(t - x0, span, out=np.ones_like(t), where=span > 0)
        return np.where(t >= 1.0, 1.0, y0 * (1 - w) + y1 * w)


def roc_curve(scores, labels=None):
    """ROC curve of ``scores`` (higher = more similar) against binary ``labels``.

    Accepts a :class:`~facroc.metricspace.ScoredPairSet` in place of the two
    arrays. Equal scores form one segment, which gives each tied
    positive/negative pair half credit in the area.
    """
    if labels is None:
        scores, labels = scores.score, scores.same_cluster
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels).astype(bool)
    n_pos = int(labels.sum())
    n_neg = len(labels) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise DegenerateSliceError(
            f"degenerate slice: {n_pos} positive and {n_neg} negative instances"
        )
    order = np.argsort(-scores, kind="stable")
    s = scores[order]
    y = labels[order]
    tp = np.cumsum(y, dtype=np.int64)
    fp = np.cumsum(~y, dtype=np.int64)
    # last index of each run of equal scores
    ends = np.flatnonzero(np.append(s[1:] != s[:-1], True))
    tp = np.concatenate([[0], tp[ends]])
    fp = np.concatenate([[0], fp[ends]])
    return RocCurve(fp=fp, tp=tp, n_pos=n_pos, n_neg=n_neg)


def auc(curve):
    return curve.auc()


def _breakpoints(curve):
    """Distinct FPR values with the TPR on entry to and exit from each."""
    x = curve.fpr
    y = curve.tpr
    first = np.append(True, x[1:] != x[:-1])
    last = np.append(x[1:] != x[:-1], True)
    return x[first], y[first], y[last]


def _values_on(curve_bp, u, v):
    """Left and right limits of a curve on each open interval ``(u[m], v[m])``.

    The merged grid refines the curve's own breakpoints, so each interval
    lies inside one linear piece.
    """
    xs, y_in, y_out = curve_bp
    s = np.searchsorted(xs, u, side="right") - 1
    x0, x1 = xs[s], xs[s + 1]
    y0, y1 = y_out[s], y_in[s + 1]
    span = x1 - x0
    wl = (u - x0) / span
    wr = (v - x0) / span
    return y0 * (1 - wl) + y1 * wl, y0 * (1 - wr) + y1 * wr


def area_between(curve_a, curve_b):
    """Exact ``integral_0^1 |a(t) - b(t)| dt`` and the number of sign changes.

    Both curves are linear between the union of their FPR breakpoints, so
    the integrand on each sub-interval is ``|linear|``: a trapezoid, or two
    triangles when the difference changes sign inside the interval.
    """
    bp_a, bp_b = _breakpoints(curve_a), _breakpoints(curve_b)
    grid = np.union1d(bp_a[0], bp_b[0])
    u, v = grid[:-1], grid[1:]
    a_l, a_r = _values_on(bp_a, u, v)
    b_l, b_r = _values_on(bp_b, u, v)
    dl = a_l - b_l
    dr = a_r - b_r
    width = v - u
    same_side = dl * dr >= 0
    abs_l, abs_r = np.abs(dl), np.abs(dr)
    denom = np.where(same_side, 1.0, abs_l + abs_r)
    area = np.where(
        same_side,
        0.5 * (abs_l + abs_r) * width,
        0.5 * width * (dl * dl + dr * dr) / denom,
    )
    # sign changes along the ordered sequence of interval end values; a
    # change may happen inside an interval or across a vertical jump
    seq = np.column_stack([dl, dr]).ravel()
    signs = np.sign(seq[seq != 0])
    crossings = int(np.count_nonzero(signs[1:] != signs[:-1]))
    if crossings == 0:
        # constant sign: the integral of |a - b| is |area(a) - area(b)|,
        # taken from the exact integer-count areas
        return abs(curve_a.auc() - curve_b.auc()), 0
    return float(min(max(area.sum(), 0.0), 1.0)), crossings


@dataclass
class FacrocResult:
    value: float
    aucc_p: float
    aucc_pbar: float
    crossings: int
    curve_p: RocCurve
    curve_pbar: RocCurve
    provenance: dict = field(default_factory=dict)


def aucc(X, labels, groups=None, slice="all", *, metric="euclidean", sampler=None, slicing="both"):
    """Area under the ROC curve of the clustering's pair-membership ranking.

    ``X`` is a feature matrix, or a distance matrix with
    ``metric="precomputed"``.
    """
    pairs = scored_pairs(X, labels, groups, slice, metric=metric, sampler=sampler, slicing=slicing)
    return roc_curve(pairs).auc()


def facroc_from_curves(curve_p, curve_pbar, provenance=None):
    value, crossings = area_between(curve_p, curve_pbar)
    return FacrocResult(
        value=value,
        aucc_p=curve_p.auc(),
        aucc_pbar=curve_pbar.auc(),
        crossings=crossings,
        curve_p=curve_p,
        curve_pbar=curve_pbar,
        provenance=dict(provenance or {}),
    )


def compute_facroc(X, labels, groups, *, metric="euclidean", sampler=None, slicing="both"):
    """Area between the ROC curves of the protected and non-protected slices.

    Raises :class:`DegenerateSliceError` (with ``group`` set) when either
    slice has no usable pairs.
    """
    sampler = sampler or SamplerConfig()
    curves, prov = {}, {"slicing": slicing}
    for tag in ("p", "pbar"):
        pairs = scored_pairs(X, labels, groups, tag, metric=metric, sampler=sampler, slicing=slicing)
        curves[tag] = roc_curve(pairs)
        prov[tag] = pairs.provenance()
    return facroc_from_curves(curves["p"], curves["pbar"], prov)
