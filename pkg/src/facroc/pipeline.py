"""End-to-end evaluation: dataset -> model -> measures -> report."""

import os
import tempfile
from pathlib import Path

from .cluster_fair import DEFAULT_TARGET
from .exceptions import FacrocError
from .fairness_metrics import audit_proportionality, compute_balance, silhouette
from .ingest import load_dataset
from .metricspace import SamplerConfig, scored_pairs
from .models import MODEL_NAMES, Workspace, center_set, fit_model
from .report import EvaluationReport
from .roceval import compute_facroc, roc_curve
from .selection import select_k

_META_KEYS = (
    "inertia", "n_iter", "best_restart", "linkage", "phase2", "kmedian_cost", "n_fairlets",
    "decomposition", "fairlet_cost", "fairness_target", "requested_k", "achieved_k",
    "filled_centers", "group_size",
)


def atomic_write(path, text):
    """Write ``text`` to ``path`` through a temporary file and a rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        umask = os.umask(0)
        os.umask(umask)
        os.chmod(tmp, 0o666 & ~umask)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def dataset_provenance(schema, table, features):
    return {
        "schema": schema.name,
        "n_raw": table.n_raw,
        "n_clean": table.n_clean,
        "n_features": features.X.shape[1],
        "group_counts": features.group_counts,
        "warnings": list(features.warnings),
    }


def evaluate_clustering(ws, clustering, *, dataset, k, seed, sampler=None, extra=None):
    """All five measures for one clustering, as an :class:`EvaluationReport`."""
    sampler = sampler or SamplerConfig()
    arr, metric = ws.metric_input()
    labels = clustering.labels
    sil = silhouette(arr, labels, metric=metric)
    pairs = scored_pairs(arr, labels, metric=metric, sampler=sampler)
    aucc = roc_curve(pairs).auc()
    bal = compute_balance(labels, ws.groups)
    centers, center_kind = center_set(clustering, ws)
    audit = audit_proportionality(arr, centers, k, metric=metric)
    fac = compute_facroc(arr, labels, ws.groups, metric=metric, sampler=sampler)
    prov = {
        "seed": seed,
        "model": {key: clustering.meta[key] for key in _META_KEYS if key in clustering.meta},
        "clusters": clustering.k,
        "distance": "euclidean",
        "aucc_pairs": pairs.provenance(),
        "facroc": {"crossings": fac.crossings, "aucc_p": fac.aucc_p, "aucc_pbar": fac.aucc_pbar, **fac.provenance},
        "proportionality": {
            "center_set": center_kind,
            "candidates": "all points",
            "group_size": audit.group_size,
            "witness_center": audit.witness_center,
        },
    }
    prov.update(extra or {})
    return EvaluationReport(
        dataset=dataset,
        model=clustering.model,
        k=k,
        seed=seed,
        silhouette=sil,
        aucc=aucc,
        balance=bal,
        proportionality=audit.rho,
        facroc=fac.value,
        curve_p=fac.curve_p,
        curve_pbar=fac.curve_pbar,
        provenance=prov,
    )


def evaluate_dataset(dataset, models=MODEL_NAMES, k=2, seed=42, *, root=None, sampler=None,
                     t=DEFAULT_TARGET, on_error=None):
    """Evaluate ``models`` on a dataset; ``k="auto"`` selects k by AUCC with k-means.

    Returns ``(reports, k, errors)``; a failing model is recorded in
    ``errors`` (model -> exception) and passed to ``on_error`` if given.
    """
    schema, table, features = load_dataset(dataset, root)
    ws = Workspace(features.X, features.groups)
    extra = {"dataset": dataset_provenance(schema, table, features), "fairness_target": t}
    if k == "auto":
        sel = select_k(None, "kmeans", seed=seed, sampler=sampler, workspace=ws)
        k = sel.k_star
        extra["k_selection"] = {"model": sel.model, "range": [sel.curve[0][0], sel.curve[-1][0]],
                                "curve": sel.curve, "k_star": k}
    reports, errors = [], {}
    for name in models:
        try:
            c = fit_model(name, ws, k, seed, t=t)
            reports.append(evaluate_clustering(ws, c, dataset=schema.name, k=k, seed=seed,
                                               sampler=sampler, extra=extra))
        except FacrocError as exc:
            errors[name] = exc
            if on_error is not None:
                on_error(name, exc)
    return reports, k, errors
