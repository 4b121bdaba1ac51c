"""Choosing the number of clusters by maximal AUCC."""

import csv
import io
from dataclasses import dataclass, field

from .exceptions import DataError, FacrocError
from .models import Workspace, fit_model
from .roceval import aucc

DEFAULT_RANGE = (2, 10)


@dataclass
class KSelection:
    k_star: int
    curve: list
    model: str
    seed: int
    failed: dict = field(default_factory=dict)

    def __iter__(self):
        # unpacks as (k_star, curve)
        return iter((self.k_star, self.curve))

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\r\n")
        w.writerow(["k", "aucc", "status"])
        for k, value in self.curve:
            if value is None:
                w.writerow([k, "", f"failed: {self.failed[k]}"])
            else:
                w.writerow([k, repr(value), "ok"])
        return buf.getvalue()


def parse_range(text):
    """``"a..b"`` -> ``(a, b)``."""
    try:
        a, b = text.split("..")
        return int(a), int(b)
    except ValueError:
        raise ValueError(f"range must look like 'a..b', got {text!r}") from None


def select_k(X, model="kmeans", k_range=DEFAULT_RANGE, seed=42, *, groups=None, sampler=None, workspace=None):
    """Sweep ``k`` over ``k_range`` (inclusive) and return the AUCC maximiser.

    A ``k`` at which the model or the AUCC fails is kept in the curve with
    value ``None`` and skipped by the argmax. Ties go to the smaller ``k``.
    """
    ws = workspace or Workspace(X, groups if groups is not None else [0] * len(X))
    k_min, k_max = k_range
    if not 2 <= k_min <= k_max <= ws.n:
        raise ValueError(f"need 2 <= k_min <= k_max <= n (n={ws.n}), got {k_range}")
    arr, metric = ws.metric_input()
    curve, failed = [], {}
    for k in range(k_min, k_max + 1):
        try:
            c = fit_model(model, ws, k, seed)
            value = aucc(arr, c.labels, metric=metric, sampler=sampler)
        except FacrocError as exc:
            failed[k] = str(exc)
            value = None
        curve.append((k, value))
    scored = [(v, k) for k, v in curve if v is not None]
    if not scored:
        raise DataError(f"{model} failed for every k in {k_min}..{k_max}")
    best = max(v for v, _ in scored)
    k_star = min(k for v, k in scored if v == best)
    return KSelection(k_star=k_star, curve=curve, model=model, seed=seed, failed=failed)
