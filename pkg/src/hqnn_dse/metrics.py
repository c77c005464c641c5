"""Confusion-matrix metrics, AUC, GPS composites and threshold curves.

Ratios with a zero denominator evaluate to 0 and the metric name is added to
the report's ``degenerate`` list instead of raising, so a sweep with a
constant-output model still produces a complete record.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from enum import Enum

import numpy as np
from scipy.stats import rankdata

from .errors import MetricError, QueryError, ValidationError

DEFAULT_THRESHOLD = 0.5
CURVE_POINTS = 101


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    tn: int
    fp: int
    fn: int

    def __post_init__(self):
        if min(self.tp, self.tn, self.fp, self.fn) < 0:
            raise ValidationError("confusion counts must be non-negative")

    @property
    def total(self) -> int:
        return self.tp + self.tn + self.fp + self.fn


def _check_pair(labels, probabilities):
    y = np.asarray(labels).reshape(-1)
    p = np.asarray(probabilities, dtype=float).reshape(-1)
    if y.shape != p.shape:
        raise ValidationError(f"{y.size} labels but {p.size} scores")
    if y.size == 0:
        raise ValidationError("no samples to evaluate")
    return y.astype(np.int64), p


def confusion(labels, probabilities, threshold: float = DEFAULT_THRESHOLD) -> ConfusionCounts:
    """Counts with the rule: predict 1 iff ``p >= threshold``."""
    y, p = _check_pair(labels, probabilities)
    pred = p >= threshold
    pos = y == 1
    return ConfusionCounts(
        tp=int(np.sum(pred & pos)),
        tn=int(np.sum(~pred & ~pos)),
        fp=int(np.sum(pred & ~pos)),
        fn=int(np.sum(~pred & pos)),
    )


def _ratio(num, den, name, degenerate):
    if den == 0:
        degenerate.append(name)
        return 0.0
    return num / den


@dataclass
class PointMetrics:
    accuracy: float
    precision: float
    recall: float
    specificity: float
    f1: float
    balanced_accuracy: float
    degenerate: list[str] = field(default_factory=list)


def point_metrics(c: ConfusionCounts) -> PointMetrics:
    if c.total == 0:
        raise ValidationError("confusion matrix is empty")
    deg: list[str] = []
    accuracy = (c.tp + c.tn) / c.total
    precision = _ratio(c.tp, c.tp + c.fp, "precision", deg)
    recall = _ratio(c.tp, c.tp + c.fn, "recall", deg)
    specificity = _ratio(c.tn, c.tn + c.fp, "specificity", deg)
    f1 = _ratio(2 * precision * recall, precision + recall, "f1", deg)
    return PointMetrics(accuracy, precision, recall, specificity, f1, 0.5 * (recall + specificity), deg)


def mcc(c: ConfusionCounts) -> float:
    """Matthews correlation; 0 when any marginal is empty."""
    if c.total == 0:
        raise ValidationError("confusion matrix is empty")
    den = (c.tp + c.fp) * (c.tp + c.fn) * (c.tn + c.fp) * (c.tn + c.fn)
    if den == 0:
        return 0.0
    return (c.tp * c.tn - c.fp * c.fn) / math.sqrt(den)


def auc(labels, probabilities) -> float:
    """ROC AUC via the rank-sum statistic; tied scores count one half."""
    y, p = _check_pair(labels, probabilities)
    n_pos = int(np.sum(y == 1))
    n_neg = y.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise MetricError("AUC needs both classes present")
    ranks = rankdata(p)
    u = ranks[y == 1].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


def harmonic_mean(values) -> float:
    """Harmonic mean; 0 if any component is <= 0."""
    v = np.asarray(values, dtype=float)
    if np.any(v <= 0) or not np.all(np.isfinite(v)):
        return 0.0
    return float(v.size / np.sum(1.0 / v))


def gps(balanced_accuracy, auc_value, f1, accuracy, precision, recall, test_accuracy_mean, cv_accuracy_mean):
    """The four General Performance Scores as a tuple ``(gps1, gps2, gps3, gps4)``."""
    return (
        harmonic_mean([balanced_accuracy, auc_value, f1]),
        harmonic_mean([accuracy, precision, recall, f1]),
        harmonic_mean([balanced_accuracy, auc_value, test_accuracy_mean]),
        harmonic_mean([balanced_accuracy, auc_value, f1, cv_accuracy_mean]),
    )


class CurveKind(str, Enum):
    MCC_F1 = "MccF1"
    SENS_SPEC = "SensSpec"
    ROC = "Roc"


# x / y axis meaning of each curve kind
CURVE_AXES = {
    CurveKind.MCC_F1: ("f1", "mcc"),
    CurveKind.SENS_SPEC: ("specificity", "sensitivity"),
    CurveKind.ROC: ("false_positive_rate", "true_positive_rate"),
}


@dataclass
class ThresholdCurve:
    kind: CurveKind
    thresholds: np.ndarray
    x_values: np.ndarray
    y_values: np.ndarray

    def to_dict(self) -> dict:
        return {
            "kind": CurveKind(self.kind).value,
            "thresholds": self.thresholds.tolist(),
            "x": self.x_values.tolist(),
            "y": self.y_values.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ThresholdCurve":
        return cls(CurveKind(d["kind"]), np.asarray(d["thresholds"]), np.asarray(d["x"]), np.asarray(d["y"]))


def threshold_curve(labels, probabilities, kind: CurveKind, n_thresholds: int = CURVE_POINTS) -> ThresholdCurve:
    kind = CurveKind(kind)
    if n_thresholds < 2:
        raise ValidationError("a curve needs at least two thresholds")
    thresholds = np.linspace(0.0, 1.0, n_thresholds)
    xs = np.empty(n_thresholds)
    ys = np.empty(n_thresholds)
    for i, t in enumerate(thresholds):
        c = confusion(labels, probabilities, t)
        pm = point_metrics(c)
        if kind is CurveKind.MCC_F1:
            xs[i], ys[i] = pm.f1, mcc(c)
        elif kind is CurveKind.SENS_SPEC:
            xs[i], ys[i] = pm.specificity, pm.recall
        else:
            xs[i], ys[i] = 1.0 - pm.specificity, pm.recall
    return ThresholdCurve(kind, thresholds, xs, ys)


@dataclass
class MetricsReport:
    accuracy: float
    precision: float
    recall: float
    specificity: float
    balanced_accuracy: float
    f1: float
    mcc: float
    auc: float
    gps1: float
    gps2: float
    gps3: float
    gps4: float
    cv_accuracy_mean: float
    test_accuracy_mean: float
    mcc_f1: float
    sens_spec: float
    threshold: float = DEFAULT_THRESHOLD
    degenerate: list[str] = field(default_factory=list)

    @property
    def sensitivity(self) -> float:
        return self.recall

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "MetricsReport":
        return cls(**d)


# names accepted wherever a metric is looked up by name
METRIC_NAMES = (
    "accuracy", "precision", "recall", "specificity", "balanced_accuracy", "f1", "mcc", "auc",
    "gps1", "gps2", "gps3", "gps4", "cv_accuracy_mean", "test_accuracy_mean", "mcc_f1", "sens_spec",
)
METRIC_ALIASES = {"sensitivity": "recall", "acc": "accuracy", "mcc-f1": "mcc_f1", "sens-spec": "sens_spec"}


def canonical_metric(name: str) -> str:
    key = name.strip().lower()
    key = METRIC_ALIASES.get(key, key)
    if key not in METRIC_NAMES:
        raise QueryError(f"unknown metric {name!r}; known metrics: {', '.join(METRIC_NAMES)}")
    return key


def mcc_f1_score(mcc_value: float, f1: float) -> float:
    """Single-number MCC-F1 summary: harmonic mean of MCC and F1 (0 if either is <= 0)."""
    return harmonic_mean([mcc_value, f1])


def evaluate(labels, probabilities, cv_accuracy_mean: float, test_accuracy_mean: float | None = None,
             threshold: float = DEFAULT_THRESHOLD) -> MetricsReport:
    """Full report for one model's held-out predictions.

    ``test_accuracy_mean`` defaults to the thresholded accuracy of these
    predictions.
    """
    c = confusion(labels, probabilities, threshold)
    pm = point_metrics(c)
    deg = list(pm.degenerate)
    try:
        auc_value = auc(labels, probabilities)
    except MetricError:
        auc_value = 0.0
        deg.append("auc")
    m = mcc(c)
    if (c.tp + c.fp) * (c.tp + c.fn) * (c.tn + c.fp) * (c.tn + c.fn) == 0:
        deg.append("mcc")
    tam = pm.accuracy if test_accuracy_mean is None else float(test_accuracy_mean)
    g = gps(pm.balanced_accuracy, auc_value, pm.f1, pm.accuracy, pm.precision, pm.recall, tam, cv_accuracy_mean)
    for name, value in zip(("gps1", "gps2", "gps3", "gps4"), g):
        if value == 0.0:
            deg.append(name)
    return MetricsReport(
        accuracy=pm.accuracy,
        precision=pm.precision,
        recall=pm.recall,
        specificity=pm.specificity,
        balanced_accuracy=pm.balanced_accuracy,
        f1=pm.f1,
        mcc=m,
        auc=auc_value,
        gps1=g[0],
        gps2=g[1],
        gps3=g[2],
        gps4=g[3],
        cv_accuracy_mean=float(cv_accuracy_mean),
        test_accuracy_mean=tam,
        mcc_f1=mcc_f1_score(m, pm.f1),
        sens_spec=pm.balanced_accuracy,
        threshold=threshold,
        degenerate=deg,
    )
