"""PCA reduction, min-max scaling and the end-to-end preprocessing recipe."""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from ..errors import DataError
from .split import split_70_30
from .table import ImputePolicy, RawTable, impute

N_COMPONENTS = 8
RANK_TOL = 1e-10


@dataclass
class PcaModel:
    mean: np.ndarray
    components: np.ndarray  # k x columns, rows are unit eigenvectors (or zero padding)
    eigenvalues: np.ndarray

    def transform(self, x) -> np.ndarray:
        return (np.asarray(x, dtype=float) - self.mean) @ self.components.T

    def inverse_transform(self, z) -> np.ndarray:
        return np.asarray(z, dtype=float) @ self.components + self.mean

    @property
    def explained_variance_ratio(self) -> np.ndarray:
        total = self.eigenvalues.sum()
        return self.eigenvalues / total if total > 0 else np.zeros_like(self.eigenvalues)


def pca_fit(x, k: int = N_COMPONENTS) -> PcaModel:
    """Principal axes of ``x`` from the symmetric eigendecomposition of its covariance.

    Components are sorted by decreasing eigenvalue and signed so the
    largest-magnitude entry of each is positive.  Directions beyond the
    numerical rank are replaced by zero vectors (with a warning), so the
    output always has ``k`` columns.
    """
    x = np.asarray(x, dtype=float)
    if x.ndim != 2 or x.shape[0] < 2:
        raise DataError(f"PCA needs at least two rows, got shape {x.shape}")
    mean = x.mean(axis=0)
    centered = x - mean
    cov = centered.T @ centered / (x.shape[0] - 1)
    evals, evecs = np.linalg.eigh(cov)
    order = np.argsort(evals)[::-1]
    evals = np.clip(evals[order], 0.0, None)
    evecs = evecs[:, order].T

    # first entry within rounding of the largest magnitude, so exact ties resolve stably
    mag = np.abs(evecs)
    pivot = np.argmax(mag >= mag.max(axis=1, keepdims=True) - 1e-12, axis=1)
    signs = np.sign(evecs[np.arange(evecs.shape[0]), pivot])
    evecs = evecs * signs[:, None]

    scale = max(evals[0], 1.0) if evals.size else 1.0
    rank = int(np.sum(evals > RANK_TOL * scale))
    comps = np.zeros((k, x.shape[1]))
    vals = np.zeros(k)
    keep = min(k, rank)
    comps[:keep] = evecs[:keep]
    vals[:keep] = evals[:keep]
    if keep < k:
        warnings.warn(f"data rank {rank} is below the {k} requested components; padding with zero components",
                      stacklevel=2)
    return PcaModel(mean, comps, vals)


def pca_reduce(x, k: int = N_COMPONENTS) -> tuple[np.ndarray, PcaModel]:
    model = pca_fit(x, k)
    return model.transform(x), model


@dataclass
class MinMaxScaler:
    minimum: np.ndarray
    maximum: np.ndarray

    @classmethod
    def fit(cls, x) -> "MinMaxScaler":
        x = np.asarray(x, dtype=float)
        return cls(x.min(axis=0), x.max(axis=0))

    def transform(self, x) -> np.ndarray:
        """Scale to ``[0, 1]``, clamping out-of-range values; constant columns map to 0."""
        x = np.asarray(x, dtype=float)
        span = self.maximum - self.minimum
        safe = np.where(span > 0, span, 1.0)
        out = np.where(span > 0, (x - self.minimum) / safe, 0.0)
        return np.clip(out, 0.0, 1.0)

    def inverse_transform(self, z) -> np.ndarray:
        return np.asarray(z, dtype=float) * (self.maximum - self.minimum) + self.minimum


def minmax_scale(x) -> tuple[np.ndarray, MinMaxScaler]:
    scaler = MinMaxScaler.fit(x)
    return scaler.transform(x), scaler


@dataclass
class DesignMatrix:
    features: np.ndarray
    labels: np.ndarray
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=float)
        self.labels = np.asarray(self.labels, dtype=np.int64).reshape(-1)
        if self.features.ndim != 2 or self.features.shape[0] != self.labels.shape[0]:
            raise DataError(f"features {self.features.shape} do not match {self.labels.shape[0]} labels")

    def __len__(self) -> int:
        return self.features.shape[0]

    def save_csv(self, path) -> None:
        cols = [f"pc{j + 1}" for j in range(self.features.shape[1])] + ["label"]
        with open(path, "w") as fh:
            fh.write(",".join(cols) + "\n")
            for row, y in zip(self.features, self.labels):
                fh.write(",".join(repr(float(v)) for v in row) + f",{int(y)}\n")

    @classmethod
    def load_csv(cls, path) -> "DesignMatrix":
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        if data.shape[1] < 2:
            raise DataError(f"{path} has no feature columns")
        return cls(data[:, :-1], data[:, -1].astype(np.int64))


def preprocess(
    table: RawTable,
    policy: ImputePolicy = ImputePolicy.MEAN_MEDIAN,
    k: int = N_COMPONENTS,
    test_size: float = 0.3,
    seed: int = 42,
) -> tuple[DesignMatrix, DesignMatrix]:
    """Split, impute, reduce and scale; every statistic is fitted on training rows only.

    Under ``LeaveEmpty`` a missing cell takes its column's training minimum,
    i.e. the value that a column-wise min-max scaling would send to 0.
    """
    train_idx, test_idx = split_70_30(table.labels, test_size=test_size, seed=seed)
    filled = impute(table, policy, fit_rows=train_idx)
    values = filled.values
    if ImputePolicy(policy) is ImputePolicy.LEAVE_EMPTY:
        values = values.copy()
        col_min = np.nanmin(values[train_idx], axis=0)
        col_min = np.where(np.isnan(col_min), 0.0, col_min)
        rows, cols = np.where(np.isnan(values))
        values[rows, cols] = col_min[cols]

    pca = pca_fit(values[train_idx], k)
    scaler = MinMaxScaler.fit(pca.transform(values[train_idx]))
    x_train = scaler.transform(pca.transform(values[train_idx]))
    x_test = scaler.transform(pca.transform(values[test_idx]))

    provenance = {
        "source": table.name,
        "rows": int(table.values.shape[0]),
        "raw_columns": list(table.columns),
        "impute_policy": ImputePolicy(policy).value,
        "leave_empty_fill": "training column minimum (scaled value 0)"
        if ImputePolicy(policy) is ImputePolicy.LEAVE_EMPTY else None,
        "split": {"test_size": test_size, "seed": seed, "stratified": True},
        "train_rows": train_idx.tolist(),
        "test_rows": test_idx.tolist(),
        "impute_fit_rows": train_idx.tolist(),
        "pca_fit_rows": train_idx.tolist(),
        "scaler_fit_rows": train_idx.tolist(),
        "pca_components": int(k),
        "pca_explained_variance_ratio": pca.explained_variance_ratio.tolist(),
        "scaler_min": scaler.minimum.tolist(),
        "scaler_max": scaler.maximum.tolist(),
        "order": ["split", "impute", "pca", "minmax"],
    }
    train = DesignMatrix(x_train, table.labels[train_idx], dict(provenance, part="train"))
    test = DesignMatrix(x_test, table.labels[test_idx], dict(provenance, part="test"))
    return train, test


def fit_touched_test_rows(provenance: dict) -> set[int]:
    """Test rows that any fitted statistic saw; empty for a leak-free recipe."""
    test = set(provenance["test_rows"])
    seen = set()
    for key in ("impute_fit_rows", "pca_fit_rows", "scaler_fit_rows"):
        seen |= set(provenance[key])
    return test & seen
