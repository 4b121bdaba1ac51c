"""Dataset schemas, CSV loading and the tabular preprocessing transformer."""

import csv
import logging
import os
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np
import yaml
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .exceptions import DataError, SchemaError

logger = logging.getLogger(__name__)

DATA_ROOT_ENV = "FACROC_DATA_ROOT"
NA_POLICIES = ("drop_row", "error")
DEFAULT_NA_VALUES = ("", "?", "NA", "N/A", "NaN")


@dataclass(frozen=True)
class DatasetSchema:
    """Declarative description of one tabular dataset.

    Columns listed in neither ``drop_columns`` nor the feature lists are
    ignored. ``expected`` holds reference counts (``n_raw``, ``n_clean``,
    ``n_p``, ``n_pbar``) used only for verification.
    """

    name: str
    csv_path: str
    protected_column: str
    protected_positive_values: frozenset
    drop_columns: tuple = ()
    categorical_columns: tuple = ()
    numeric_columns: tuple = ()
    na_policy: str = "drop_row"
    na_values: tuple = DEFAULT_NA_VALUES
    delimiter: str = ","
    expected: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.na_policy not in NA_POLICIES:
            raise SchemaError(f"{self.name}: na_policy must be one of {NA_POLICIES}, got {self.na_policy!r}")
        if not self.protected_positive_values:
            raise SchemaError(f"{self.name}: protected_positive_values is empty")
        if self.protected_column in self.drop_columns:
            raise SchemaError(f"{self.name}: protected column {self.protected_column!r} is in drop_columns")
        if self.protected_column in self.feature_columns:
            raise SchemaError(f"{self.name}: protected column {self.protected_column!r} is declared as a feature")
        overlap = set(self.categorical_columns) & set(self.numeric_columns)
        if overlap:
            raise SchemaError(f"{self.name}: columns both categorical and numeric: {sorted(overlap)}")
        dropped_features = set(self.drop_columns) & set(self.feature_columns)
        if dropped_features:
            raise SchemaError(f"{self.name}: columns both dropped and used: {sorted(dropped_features)}")
        if not self.feature_columns:
            raise SchemaError(f"{self.name}: no feature columns declared")

    @property
    def feature_columns(self):
        return tuple(self.categorical_columns) + tuple(self.numeric_columns)

    @property
    def used_columns(self):
        return (self.protected_column,) + self.feature_columns

    @classmethod
    def from_dict(cls, d):
        known = {
            "name", "csv_path", "protected_column", "protected_positive_values",
            "drop_columns", "categorical_columns", "numeric_columns", "na_policy",
            "na_values", "delimiter", "expected",
        }
        unknown = set(d) - known
        if unknown:
            raise SchemaError(f"unknown schema keys: {sorted(unknown)}")
        missing = {"name", "csv_path", "protected_column", "protected_positive_values"} - set(d)
        if missing:
            raise SchemaError(f"missing schema keys: {sorted(missing)}")
        kw = dict(d)
        kw["protected_positive_values"] = frozenset(str(v) for v in d["protected_positive_values"])
        for key in ("drop_columns", "categorical_columns", "numeric_columns"):
            kw[key] = tuple(str(c) for c in d.get(key) or ())
        if "na_values" in d:
            kw["na_values"] = tuple(str(v) for v in d["na_values"])
        kw["expected"] = dict(d.get("expected") or {})
        return cls(**kw)

    def resolve_path(self, root=None):
        path = Path(self.csv_path)
        if path.is_absolute():
            return path
        root = root if root is not None else os.environ.get(DATA_ROOT_ENV, "data")
        return Path(root) / path


def packaged_schemas():
    """Names of the schema files shipped with the package."""
    files = resources.files("facroc") / "schemas"
    return sorted(p.name[: -len(".yaml")] for p in files.iterdir() if p.name.endswith(".yaml"))


def load_schema(name_or_path):
    """Load a schema from a YAML file path or by packaged name (``"german"``)."""
    path = Path(name_or_path)
    if path.suffix in (".yaml", ".yml") or path.exists():
        if not path.exists():
            raise SchemaError(f"schema file not found: {path}")
        text = path.read_text()
    else:
        res = resources.files("facroc") / "schemas" / f"{name_or_path}.yaml"
        if not res.is_file():
            raise SchemaError(
                f"unknown dataset {name_or_path!r}; packaged schemas: {', '.join(packaged_schemas())}"
            )
        text = res.read_text()
    try:
        d = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise SchemaError(f"cannot parse schema {name_or_path}: {exc}") from None
    if not isinstance(d, dict):
        raise SchemaError(f"schema {name_or_path} is not a mapping")
    return DatasetSchema.from_dict(d)


@dataclass
class DataTable:
    header: tuple
    rows: list
    n_raw: int
    n_clean: int
    # 0-based position of each kept row among the raw data rows
    row_ids: np.ndarray = None

    def __post_init__(self):
        if self.row_ids is None:
            self.row_ids = np.arange(len(self.rows))

    def column(self, name):
        try:
            j = self.header.index(name)
        except ValueError:
            raise SchemaError(f"column {name!r} not in table") from None
        return [row[j] for row in self.rows]


def _mangle_duplicates(header):
    seen = {}
    out = []
    for name in header:
        if name in seen:
            seen[name] += 1
            out.append(f"{name}.{seen[name]}")
        else:
            seen[name] = 0
            out.append(name)
    return tuple(out)


def load_csv(schema, root=None):
    """Parse the schema's CSV file and apply its missing-value policy."""
    path = schema.resolve_path(root)
    if not path.exists():
        raise DataError(f"{schema.name}: data file not found: {path}")
    with open(path, newline="", encoding="utf-8-sig") as fh:
        return parse_csv(fh, schema)


def parse_csv(lines, schema):
    """Parse an iterable of CSV lines (see :func:`load_csv`)."""
    reader = csv.reader(lines, delimiter=schema.delimiter)
    header = None
    for raw in reader:
        if raw:
            header = _mangle_duplicates(c.strip() for c in raw)
            break
    if header is None:
        raise DataError(f"{schema.name}: no header")

    missing = [c for c in schema.used_columns + tuple(schema.drop_columns) if c not in header]
    if missing:
        raise SchemaError(f"{schema.name}: declared columns missing from data: {missing}")

    used = [header.index(c) for c in schema.used_columns]
    na = set(schema.na_values)
    rows, row_ids = [], []
    n_raw = 0
    for raw in reader:
        if not raw:
            continue
        if len(raw) != len(header):
            raise DataError(
                f"{schema.name}: ragged row at data row {n_raw} (line {reader.line_num}): "
                f"expected {len(header)} cells, got {len(raw)}"
            )
        cells = tuple(c.strip() for c in raw)
        if any(cells[j] in na for j in used):
            if schema.na_policy == "error":
                bad = [header[j] for j in used if cells[j] in na]
                raise DataError(f"{schema.name}: missing value at data row {n_raw} in {bad}")
            n_raw += 1
            continue
        rows.append(cells)
        row_ids.append(n_raw)
        n_raw += 1
    return DataTable(header, rows, n_raw, len(rows), np.asarray(row_ids, dtype=np.int64))


@dataclass
class FeatureMatrix:
    """Numeric design matrix with the binary protected-group labels.

    ``groups[i] == 1`` marks membership of the protected value set (p),
    ``0`` the complement (p-bar).
    """

    X: np.ndarray
    groups: np.ndarray
    point_ids: np.ndarray = None
    feature_names: tuple = ()
    warnings: list = field(default_factory=list)

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=float)
        self.groups = np.asarray(self.groups).astype(np.int8)
        if self.X.ndim != 2:
            raise DataError(f"X must be 2-D, got shape {self.X.shape}")
        n, d = self.X.shape
        if n < 2 or d < 1:
            raise DataError(f"need n >= 2 and d >= 1, got shape {self.X.shape}")
        if not np.all(np.isfinite(self.X)):
            raise DataError("X contains non-finite entries")
        if self.groups.shape != (n,):
            raise DataError(f"groups has shape {self.groups.shape}, expected ({n},)")
        if not np.isin(self.groups, (0, 1)).all():
            raise DataError("groups must be binary (1 = p, 0 = pbar)")
        if self.point_ids is None:
            self.point_ids = np.arange(n)
        if not self.feature_names:
            self.feature_names = tuple(f"x{j}" for j in range(d))

    @property
    def n(self):
        return self.X.shape[0]

    @property
    def group_counts(self):
        n_p = int(self.groups.sum())
        return {"p": n_p, "pbar": self.n - n_p}


class SchemaEncoder(TransformerMixin, BaseEstimator):
    """One-hot encode categoricals and z-score numerics as declared by a schema.

    Standardization uses the population standard deviation. Numeric columns
    that are constant on the fitted table are dropped and listed in
    ``warnings_``.
    """

    def __init__(self, schema):
        self.schema = schema

    def fit(self, table, y=None):
        schema = self.schema
        self.categories_ = {}
        for col in schema.categorical_columns:
            self.categories_[col] = sorted(set(table.column(col)))
        self.means_, self.scales_ = {}, {}
        self.warnings_ = []
        for col in schema.numeric_columns:
            values = _to_float(table.column(col), col, schema.name)
            sd = values.std()
            if not sd > 0:
                msg = f"{schema.name}: numeric column {col!r} is constant; dropped"
                logger.warning(msg)
                self.warnings_.append(msg)
                continue
            self.means_[col] = values.mean()
            self.scales_[col] = sd
        names = [f"{c}={v}" for c, cats in self.categories_.items() for v in cats]
        names += list(self.means_)
        if not names:
            raise DataError(f"{schema.name}: no usable feature columns")
        self.feature_names_out_ = tuple(names)
        return self

    def transform(self, table):
        check_is_fitted(self, "feature_names_out_")
        blocks = []
        for col, cats in self.categories_.items():
            index = {v: j for j, v in enumerate(cats)}
            values = table.column(col)
            block = np.zeros((len(values), len(cats)))
            for i, v in enumerate(values):
                j = index.get(v)
                if j is None:
                    raise DataError(f"{self.schema.name}: unseen category {v!r} in column {col!r}")
                block[i, j] = 1.0
            blocks.append(block)
        for col, mean in self.means_.items():
            values = _to_float(table.column(col), col, self.schema.name)
            blocks.append(((values - mean) / self.scales_[col])[:, None])
        return np.hstack(blocks)

    def get_feature_names_out(self, input_features=None):
        check_is_fitted(self, "feature_names_out_")
        return np.asarray(self.feature_names_out_, dtype=object)


def _to_float(values, col, name):
    out = np.empty(len(values))
    for i, v in enumerate(values):
        try:
            out[i] = float(v)
        except ValueError:
            raise DataError(f"{name}: non-numeric value {v!r} in column {col!r} at row {i}") from None
    if not np.all(np.isfinite(out)):
        raise DataError(f"{name}: non-finite value in numeric column {col!r}")
    return out


def group_labels(table, schema):
    """Binary protected-group labels: 1 where the cell is a positive value."""
    positive = schema.protected_positive_values
    groups = np.fromiter((v in positive for v in table.column(schema.protected_column)), dtype=np.int8)
    n_p = int(groups.sum())
    if n_p == 0 or n_p == len(groups):
        side = "p" if n_p == 0 else "pbar"
        raise DataError(
            f"{schema.name}: protected column {schema.protected_column!r} leaves group {side} empty"
        )
    return groups


def preprocess(table, schema):
    """Encode ``table`` into a :class:`FeatureMatrix` according to ``schema``."""
    groups = group_labels(table, schema)
    enc = SchemaEncoder(schema).fit(table)
    X = enc.transform(table)
    return FeatureMatrix(
        X=X,
        groups=groups,
        point_ids=table.row_ids.copy(),
        feature_names=enc.feature_names_out_,
        warnings=list(enc.warnings_),
    )


def load_dataset(name_or_path, root=None):
    """Schema lookup, CSV load and preprocessing in one call."""
    schema = load_schema(name_or_path)
    table = load_csv(schema, root)
    return schema, table, preprocess(table, schema)
