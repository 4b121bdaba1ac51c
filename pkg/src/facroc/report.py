"""Evaluation reports, measure tables and slice-plot SVGs.

Report JSON keys are written in a fixed order:
``dataset, model, k, seed, silhouette, aucc, balance, proportionality,
facroc, curves, provenance``; curves store exact integer counts. Infinite
values are written as the string ``"inf"``.
"""

import csv
import io
import json
import math
from dataclasses import dataclass, field
from decimal import ROUND_HALF_EVEN, Decimal
from xml.sax.saxutils import escape

import numpy as np

from .exceptions import DataError
from .models import DISPLAY_NAMES, MODEL_NAMES
from .roceval import RocCurve

MEASURES = (
    ("silhouette", "Silhouette coefficient"),
    ("aucc", "AUCC"),
    ("balance", "Balance"),
    ("proportionality", "Proportionality"),
    ("facroc", "FACROC"),
)


def fmt4(x):
    """Four decimals, half-even; ``inf`` for infinity, empty for missing."""
    if x is None:
        return ""
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return str(Decimal(repr(float(x))).quantize(Decimal("0.0001"), rounding=ROUND_HALF_EVEN))


def _enc(x):
    if x is None:
        return None
    if isinstance(x, float) and math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return x


def _dec(x):
    if isinstance(x, str):
        return float(x)
    return x


def _curve_dict(c):
    return {"n_pos": c.n_pos, "n_neg": c.n_neg, "fp": c.fp.tolist(), "tp": c.tp.tolist()}


def _curve_from(d):
    return RocCurve(
        fp=np.asarray(d["fp"], dtype=np.int64),
        tp=np.asarray(d["tp"], dtype=np.int64),
        n_pos=d["n_pos"],
        n_neg=d["n_neg"],
    )


def _plain(obj):
    """JSON-safe copy of provenance metadata."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return _enc(float(obj))
    return obj


@dataclass
class EvaluationReport:
    dataset: str
    model: str
    k: int
    seed: int
    silhouette: float
    aucc: float
    balance: float
    proportionality: float
    facroc: float
    curve_p: RocCurve = None
    curve_pbar: RocCurve = None
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        checks = {
            "silhouette": (-1.0, 1.0),
            "aucc": (0.0, 1.0),
            "balance": (0.0, 1.0),
            "facroc": (0.0, 1.0),
            "proportionality": (0.0, math.inf),
        }
        for name, (lo, hi) in checks.items():
            v = getattr(self, name)
            if v is not None and not lo <= v <= hi:
                raise DataError(f"{name}={v} outside [{lo}, {hi}]")

    def to_dict(self):
        return {
            "dataset": self.dataset,
            "model": self.model,
            "k": self.k,
            "seed": self.seed,
            "silhouette": _enc(self.silhouette),
            "aucc": _enc(self.aucc),
            "balance": _enc(self.balance),
            "proportionality": _enc(self.proportionality),
            "facroc": _enc(self.facroc),
            "curves": {
                "p": _curve_dict(self.curve_p) if self.curve_p is not None else None,
                "pbar": _curve_dict(self.curve_pbar) if self.curve_pbar is not None else None,
            },
            "provenance": _plain(self.provenance),
        }

    def to_json(self):
        # one top-level key per line, values compact
        items = [
            f"  {json.dumps(k)}: {json.dumps(v, separators=(',', ':'), allow_nan=False)}"
            for k, v in self.to_dict().items()
        ]
        return "{\n" + ",\n".join(items) + "\n}\n"

    @classmethod
    def from_dict(cls, d):
        curves = d.get("curves") or {}
        return cls(
            dataset=d["dataset"],
            model=d["model"],
            k=d["k"],
            seed=d["seed"],
            silhouette=_dec(d["silhouette"]),
            aucc=_dec(d["aucc"]),
            balance=_dec(d["balance"]),
            proportionality=_dec(d["proportionality"]),
            facroc=_dec(d["facroc"]),
            curve_p=_curve_from(curves["p"]) if curves.get("p") else None,
            curve_pbar=_curve_from(curves["pbar"]) if curves.get("pbar") else None,
            provenance=d.get("provenance", {}),
        )

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))


def _column_name(model):
    return DISPLAY_NAMES.get(model, model)


def _ordered(reports):
    if not reports:
        raise DataError("no reports to tabulate")
    datasets = {r.dataset for r in reports}
    if len(datasets) > 1:
        raise DataError(f"reports mix datasets: {sorted(datasets)}")
    rank = {m: i for i, m in enumerate(MODEL_NAMES)}
    return sorted(reports, key=lambda r: (rank.get(r.model, len(rank)), r.model))


def emit_table(reports, fmt="csv"):
    """Measures as rows and models as columns, values to four decimals."""
    reports = _ordered(reports)
    columns = [_column_name(r.model) for r in reports]
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\r\n")
        w.writerow(["Measures"] + columns)
        for key, label in MEASURES:
            w.writerow([label] + [fmt4(getattr(r, key)) for r in reports])
        return buf.getvalue()
    if fmt == "json":
        doc = {
            "dataset": reports[0].dataset,
            "k": {c: r.k for c, r in zip(columns, reports)},
            "columns": columns,
            "rows": [
                {"measure": label, "values": [fmt4(getattr(r, key)) for r in reports]}
                for key, label in MEASURES
            ],
        }
        return json.dumps(doc, indent=2) + "\n"
    raise ValueError(f"unknown table format {fmt!r}")


def parse_table(text, fmt="json"):
    """Inverse of :func:`emit_table`: ``{measure: {column: value}}`` as floats."""
    def num(s):
        return None if s == "" else float(s)

    if fmt == "json":
        doc = json.loads(text)
        return {
            row["measure"]: {c: num(v) for c, v in zip(doc["columns"], row["values"])}
            for row in doc["rows"]
        }
    if fmt == "csv":
        rows = list(csv.reader(io.StringIO(text)))
        columns = rows[0][1:]
        return {row[0]: {c: num(v) for c, v in zip(columns, row[1:])} for row in rows[1:]}
    raise ValueError(f"unknown table format {fmt!r}")


# plot geometry, in SVG user units
SIZE = 600
LEFT, RIGHT, TOP = 70, 30, 40
PLOT = SIZE - LEFT - RIGHT  # square plotting area


def _xy(fpr, tpr):
    x = LEFT + PLOT * np.asarray(fpr, dtype=np.float64)
    y = TOP + PLOT * (1.0 - np.asarray(tpr, dtype=np.float64))
    return x, y


def _path_points(curve):
    """Formatted vertices of the curve.

    Vertices that print identically to their predecessor are merged, and
    interior vertices of horizontal or vertical runs are dropped; neither
    changes the drawn polyline.
    """
    x, y = _xy(curve.fpr, curve.tpr)
    pts = []
    for a, b in zip(x, y):
        v = (f"{a:.2f}", f"{b:.2f}")
        if pts and pts[-1] == v:
            continue
        if len(pts) >= 2:
            u, w = pts[-2], pts[-1]
            if (u[0] == w[0] == v[0]) or (u[1] == w[1] == v[1]):
                pts[-1] = v
                continue
        pts.append(v)
    return [f"{a},{b}" for a, b in pts]


def render_slice_plot(report):
    """SVG slice plot: both group ROC curves, the diagonal, the shaded region
    between the curves and the FACROC annotation. Byte-deterministic."""
    if report.curve_p is None or report.curve_pbar is None:
        raise DataError("report has no curves to plot")
    p = _path_points(report.curve_p)
    q = _path_points(report.curve_pbar)
    band = p + q[::-1]
    title = f"{report.dataset} / {_column_name(report.model)} / k={report.k}"
    x0, y0 = LEFT, TOP + PLOT
    x1, y1 = LEFT + PLOT, TOP
    lines = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{SIZE}" height="{SIZE}" '
        f'viewBox="0 0 {SIZE} {SIZE}">',
        f'<rect x="0" y="0" width="{SIZE}" height="{SIZE}" fill="#ffffff"/>',
        f'<text x="{SIZE // 2}" y="28" font-family="sans-serif" font-size="15" '
        f'text-anchor="middle">{escape(title)}</text>',
        f'<polygon points="{" ".join(band)}" fill="#f4a582" fill-opacity="0.55" '
        'fill-rule="evenodd" stroke="none"/>',
        f'<rect x="{x0}" y="{y1}" width="{PLOT}" height="{PLOT}" fill="none" stroke="#000000"/>',
        f'<line x1="{x0}" y1="{y0}" x2="{x1}" y2="{y1}" stroke="#888888" stroke-dasharray="2,4"/>',
    ]
    for i in range(6):
        v = i / 5
        tx = LEFT + PLOT * v
        ty = TOP + PLOT * (1 - v)
        lines.append(f'<line x1="{tx:.2f}" y1="{y0}" x2="{tx:.2f}" y2="{y0 + 5}" stroke="#000000"/>')
        lines.append(
            f'<text x="{tx:.2f}" y="{y0 + 20}" font-family="sans-serif" font-size="12" '
            f'text-anchor="middle">{v:.1f}</text>'
        )
        lines.append(f'<line x1="{x0 - 5}" y1="{ty:.2f}" x2="{x0}" y2="{ty:.2f}" stroke="#000000"/>')
        lines.append(
            f'<text x="{x0 - 8}" y="{ty + 4:.2f}" font-family="sans-serif" font-size="12" '
            f'text-anchor="end">{v:.1f}</text>'
        )
    lines += [
        f'<text x="{LEFT + PLOT // 2}" y="{SIZE - 12}" font-family="sans-serif" font-size="13" '
        'text-anchor="middle">False positive rate</text>',
        f'<text x="18" y="{TOP + PLOT // 2}" font-family="sans-serif" font-size="13" '
        f'text-anchor="middle" transform="rotate(-90 18 {TOP + PLOT // 2})">True positive rate</text>',
        f'<polyline points="{" ".join(q)}" fill="none" stroke="#2166ac" stroke-width="2" '
        'stroke-dasharray="6,4"/>',
        f'<polyline points="{" ".join(p)}" fill="none" stroke="#b2182b" stroke-width="2"/>',
        f'<line x1="{x1 - 150}" y1="{y0 - 60}" x2="{x1 - 120}" y2="{y0 - 60}" stroke="#b2182b" stroke-width="2"/>',
        f'<text x="{x1 - 112}" y="{y0 - 56}" font-family="sans-serif" font-size="12">protected (p)</text>',
        f'<line x1="{x1 - 150}" y1="{y0 - 40}" x2="{x1 - 120}" y2="{y0 - 40}" stroke="#2166ac" '
        'stroke-width="2" stroke-dasharray="6,4"/>',
        f'<text x="{x1 - 112}" y="{y0 - 36}" font-family="sans-serif" font-size="12">non-protected</text>',
        f'<text x="{x1 - 150}" y="{y0 - 14}" font-family="sans-serif" font-size="14" '
        f'font-weight="bold">FACROC = {fmt4(report.facroc)}</text>',
        "</svg>",
    ]
    return "\n".join(lines) + "\n"
