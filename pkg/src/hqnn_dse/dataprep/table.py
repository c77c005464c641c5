"""CSV ingestion, schema files and missing-value imputation."""
from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

import numpy as np

from ..errors import ImputationError, IngestionError

DEFAULT_MISSING = ("", "?", "NA", "N/A", "nan", "NaN", "null")


@dataclass
class Schema:
    """How to read a CSV.

    Schema files are plain text, one ``key = value`` per line, ``#`` starts a
    comment.  Recognised keys::

        label = classification       # label column (required)
        positive = ckd               # token meaning class 1
        negative = notckd            # optional; other tokens then raise
        missing = ?, NA              # extra missing-value tokens
        drop = id                    # columns to ignore
        map.normal = 0               # categorical token -> number
        map.abnormal = 1

    Without ``positive`` the label column must already hold 0/1.
    """

    label: str
    positive: str | None = None
    negative: str | None = None
    missing: tuple[str, ...] = DEFAULT_MISSING
    drop: tuple[str, ...] = ()
    mapping: dict[str, float] = field(default_factory=dict)

    @classmethod
    def load(cls, path) -> "Schema":
        values: dict[str, str] = {}
        mapping: dict[str, float] = {}
        for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise IngestionError(f"schema line is not key = value: {raw!r}", row=lineno)
            key, value = (s.strip() for s in line.split("=", 1))
            if key.startswith("map."):
                try:
                    mapping[key[4:]] = float(value)
                except ValueError:
                    raise IngestionError(f"mapping for {key[4:]!r} is not a number: {value!r}", row=lineno) from None
            elif key in ("label", "positive", "negative", "missing", "drop"):
                values[key] = value
            else:
                raise IngestionError(f"unknown schema key {key!r}", row=lineno)
        if "label" not in values:
            raise IngestionError(f"schema {path} does not name a label column")
        split = lambda s: tuple(t.strip() for t in s.split(",") if t.strip())  # noqa: E731
        return cls(
            label=values["label"],
            positive=values.get("positive"),
            negative=values.get("negative"),
            missing=DEFAULT_MISSING + split(values.get("missing", "")),
            drop=split(values.get("drop", "")),
            mapping=mapping,
        )

    def to_dict(self) -> dict:
        return {
            "label": self.label,
            "positive": self.positive,
            "negative": self.negative,
            "missing": list(self.missing),
            "drop": list(self.drop),
            "mapping": dict(self.mapping),
        }


@dataclass
class RawTable:
    columns: list[str]
    values: np.ndarray  # rows x columns, NaN marks a missing cell
    labels: np.ndarray
    label_name: str = "label"
    name: str = ""

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape

    def missing_mask(self) -> np.ndarray:
        return np.isnan(self.values)

    def binary_columns(self) -> np.ndarray:
        """Columns whose observed values are all 0 or 1."""
        out = np.zeros(self.values.shape[1], dtype=bool)
        for j in range(self.values.shape[1]):
            col = self.values[:, j]
            seen = col[~np.isnan(col)]
            out[j] = seen.size > 0 and np.all((seen == 0) | (seen == 1))
        return out

    def subset(self, rows) -> "RawTable":
        return RawTable(self.columns, self.values[rows], self.labels[rows], self.label_name, self.name)


def _parse_cell(token: str, schema: Schema, lineno: int, column: str) -> float:
    if token in schema.missing:
        return np.nan
    try:
        return float(token)
    except ValueError:
        pass
    if token in schema.mapping:
        return schema.mapping[token]
    lowered = {k.lower(): v for k, v in schema.mapping.items()}
    if token.lower() in lowered:
        return lowered[token.lower()]
    raise IngestionError(f"unknown category {token!r} with no mapping", row=lineno, column=column)


def _parse_label(token: str, schema: Schema, lineno: int) -> int:
    if token in schema.missing:
        raise IngestionError("missing label", row=lineno, column=schema.label)
    if schema.positive is not None:
        if token == schema.positive:
            return 1
        if schema.negative is not None and token != schema.negative:
            raise IngestionError(f"label {token!r} is neither {schema.positive!r} nor {schema.negative!r}",
                                 row=lineno, column=schema.label)
        return 0
    try:
        value = float(token)
    except ValueError:
        value = None
    if value not in (0.0, 1.0):
        raise IngestionError(f"label {token!r} is not 0/1 and no positive token is configured",
                             row=lineno, column=schema.label)
    return int(value)


def ingest_csv(path, schema: Schema) -> RawTable:
    """Read a CSV with a header row into a numeric ``RawTable``.

    Line numbers in errors count the header as line 1.
    """
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise IngestionError(f"cannot read {path}: {exc}") from None
    rows = list(csv.reader(text.splitlines()))
    rows = [r for r in rows if any(c.strip() for c in r)]
    if not rows:
        raise IngestionError(f"{path} is empty")
    header = [h.strip() for h in rows[0]]
    if schema.label not in header:
        raise IngestionError(f"label column {schema.label!r} not found in header of {path}", row=1)
    label_at = header.index(schema.label)
    keep = [j for j, h in enumerate(header) if j != label_at and h not in schema.drop]
    if len(rows) < 2:
        raise IngestionError(f"{path} has a header but no data rows")

    values = np.empty((len(rows) - 1, len(keep)))
    labels = np.empty(len(rows) - 1, dtype=np.int64)
    for i, row in enumerate(rows[1:]):
        lineno = i + 2
        if len(row) != len(header):
            raise IngestionError(f"expected {len(header)} cells, found {len(row)}", row=lineno)
        cells = [c.strip() for c in row]
        labels[i] = _parse_label(cells[label_at], schema, lineno)
        for out_j, j in enumerate(keep):
            values[i, out_j] = _parse_cell(cells[j], schema, lineno, header[j])
    if np.unique(labels).size < 2:
        warnings.warn(f"{path}: only one class present in {schema.label!r}", stacklevel=2)
    return RawTable([header[j] for j in keep], values, labels, schema.label, path.stem)


class ImputePolicy(str, Enum):
    MEAN_MEDIAN = "MeanMedian"
    LEAVE_EMPTY = "LeaveEmpty"


def impute(table: RawTable, policy: ImputePolicy = ImputePolicy.MEAN_MEDIAN, fit_rows=None) -> RawTable:
    """Fill missing cells.

    ``MeanMedian`` uses the column mean for continuous columns and the
    column median for 0/1 columns.  ``LeaveEmpty`` returns the table with
    its missing cells untouched; the preprocessing pipeline decides how to
    realise them numerically.  Fill statistics come from ``fit_rows`` when
    given (training rows), otherwise from the whole table.
    """
    policy = ImputePolicy(policy)
    fit = table.values if fit_rows is None else table.values[fit_rows]
    empty = np.where(np.isnan(fit).all(axis=0))[0]
    if empty.size and fit.shape[0] > 0:
        raise ImputationError(f"column {table.columns[empty[0]]!r} has no observed values")
    mask = table.missing_mask()
    if policy is ImputePolicy.LEAVE_EMPTY or not mask.any():
        return RawTable(table.columns, table.values.copy(), table.labels.copy(), table.label_name, table.name)
    values = table.values.copy()
    binary = RawTable(table.columns, fit, table.labels, table.label_name).binary_columns()
    for j in np.where(mask.any(axis=0))[0]:
        col = fit[:, j]
        # lower median keeps binary fills in {0, 1} when the count is even
        fill = np.nanquantile(col, 0.5, method="lower") if binary[j] else np.nanmean(col)
        values[np.isnan(values[:, j]), j] = fill
    return RawTable(table.columns, values, table.labels.copy(), table.label_name, table.name)
