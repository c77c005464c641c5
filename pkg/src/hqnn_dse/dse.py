"""Design-space sweep: grid enumeration, execution, persistence and aggregation."""
from __future__ import annotations

import configparser
import csv
import json
import logging
import time
import traceback
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

import numpy as np
from threadpoolctl import threadpool_limits

from . import __version__
from .ansatz import ArchitectureKind
from .encode import EncodingKind
from .errors import IntegrityError, QueryError, SpecError
from .metrics import CURVE_AXES, CurveKind, MetricsReport, ThresholdCurve, canonical_metric, evaluate, threshold_curve
from .model import HqnnConfig, MeasurementKind, predict_proba
from .optim import TrainConfig, cross_validate, refit_epochs, train_fixed
from .seeding import derive_seed

log = logging.getLogger(__name__)

SCHEMA_VERSION = 1
DEFAULT_SHOTS = (50, 100, 150, 200, 400)
DEFAULT_BASE_SEED = 42
OVERLAP_METRICS = ("accuracy", "mcc_f1", "sens_spec", "gps1", "gps2", "gps3", "gps4")

# recorded in every RunRecord so results can be interpreted without the code
DECISIONS = {
    "gate_convention": "R_P(t) = exp(-i t P / 2); Rot(a,b,c) = RZ(c) RY(b) RZ(a)",
    "angle_scale": "pi",
    "basis_threshold": 0.5,
    "iqp_entangler": "ring ZZ phase, one repetition",
    "qsample": "RY(2 asin(sqrt(x)))",
    "rotation_axis": "RY per qubit; Rot per qubit for Strong",
    "strong_stride": "1 + layer mod (n - 1)",
    "param_init": "uniform [0, pi); head zeros",
    "readout": "per-qubit expectations into a linear head + sigmoid",
    "loss": "binary cross-entropy, p clamped to [1e-7, 1 - 1e-7]",
    "shot_split": "XYZ: ceil(shots/3) per basis; Hadamard: ceil(shots/2) for X and Z",
    "early_stopping": "val loss must drop by >= 1e-6; best-epoch parameters kept",
    "test_model": "refit on full training split for ceil(median best epoch) epochs",
    "test_accuracy_mean": "mean test accuracy of the per-fold models",
    "mcc_f1_scalar": "harmonic mean of MCC and F1 at threshold 0.5",
    "sens_spec_scalar": "balanced accuracy at threshold 0.5",
    "threshold": 0.5,
}


class Factor(str, Enum):
    ENCODING = "Encoding"
    ARCHITECTURE = "Architecture"
    MEASUREMENT = "Measurement"
    SHOTS = "Shots"


def _parse_shots(token) -> int | None:
    if token is None:
        return None
    text = str(token).strip().lower()
    if text in ("analytic", "none", "exact"):
        return None
    try:
        value = int(text)
    except ValueError:
        raise SpecError(f"shot level {token!r} is neither a positive integer nor 'analytic'") from None
    if value < 1:
        raise SpecError(f"shot level must be positive, got {value}")
    return value


@dataclass
class GridSpec:
    encodings: list[EncodingKind] = field(default_factory=lambda: list(EncodingKind))
    architectures: list[ArchitectureKind] = field(default_factory=lambda: list(ArchitectureKind))
    measurements: list[MeasurementKind] = field(default_factory=lambda: list(MeasurementKind))
    shot_levels: list[int | None] = field(default_factory=lambda: list(DEFAULT_SHOTS))
    train_cfg: TrainConfig = field(default_factory=TrainConfig)
    base_seed: int = DEFAULT_BASE_SEED
    n_layers: int = 5

    def __post_init__(self):
        try:
            self.encodings = [EncodingKind(e) for e in self.encodings]
            self.architectures = [ArchitectureKind(a) for a in self.architectures]
            self.measurements = [MeasurementKind(m) for m in self.measurements]
        except ValueError as exc:
            raise SpecError(str(exc)) from None
        self.shot_levels = [_parse_shots(s) for s in self.shot_levels]
        for name in ("encodings", "architectures", "measurements", "shot_levels"):
            values = getattr(self, name)
            if not values:
                raise SpecError(f"grid axis {name} is empty")
            if len(set(values)) != len(values):
                raise SpecError(f"grid axis {name} repeats a level")

    @property
    def size(self) -> int:
        return len(self.encodings) * len(self.architectures) * len(self.measurements) * len(self.shot_levels)

    def to_dict(self) -> dict:
        return {
            "encodings": [e.value for e in self.encodings],
            "architectures": [a.value for a in self.architectures],
            "measurements": [m.value for m in self.measurements],
            "shot_levels": ["analytic" if s is None else s for s in self.shot_levels],
            "train": self.train_cfg.to_dict(),
            "base_seed": self.base_seed,
            "n_layers": self.n_layers,
        }

    @classmethod
    def load(cls, path) -> "GridSpec":
        """Read an INI-style grid file.

        ``[grid]`` takes comma-separated ``encodings``, ``architectures``,
        ``measurements``, ``shot_levels`` plus ``base_seed`` and ``n_layers``;
        ``[train]`` takes any ``TrainConfig`` field.  Omitted keys keep their
        defaults.
        """
        parser = configparser.ConfigParser()
        try:
            with open(path) as fh:
                parser.read_file(fh)
        except (OSError, configparser.Error) as exc:
            raise SpecError(f"cannot read grid spec {path}: {exc}") from None
        kw: dict = {}
        if parser.has_section("grid"):
            g = parser["grid"]
            for key in ("encodings", "architectures", "measurements", "shot_levels"):
                if key in g:
                    kw[key] = [t.strip() for t in g[key].split(",") if t.strip()]
            if "base_seed" in g:
                kw["base_seed"] = int(g["base_seed"])
            if "n_layers" in g:
                kw["n_layers"] = int(g["n_layers"])
            unknown = set(g) - {"encodings", "architectures", "measurements", "shot_levels", "base_seed", "n_layers"}
            if unknown:
                raise SpecError(f"unknown [grid] keys: {sorted(unknown)}")
        if parser.has_section("train"):
            defaults = TrainConfig().to_dict()
            overrides = {}
            for key, raw in parser["train"].items():
                if key not in defaults:
                    raise SpecError(f"unknown [train] key {key!r}")
                overrides[key] = type(defaults[key])(raw)
            kw["train_cfg"] = TrainConfig(**{**defaults, **overrides})
        return cls(**kw)


@dataclass(frozen=True)
class GridPoint:
    index: int
    run_id: str
    config: HqnnConfig
    seed: int


def run_seed(base_seed: int, config: HqnnConfig) -> int:
    return derive_seed(base_seed, "run", config.label())


def enumerate_grid(spec: GridSpec) -> list[GridPoint]:
    """Cartesian product with encoding outermost and shots innermost."""
    points = []
    for enc in spec.encodings:
        for arch in spec.architectures:
            for meas in spec.measurements:
                for shots in spec.shot_levels:
                    cfg = HqnnConfig(enc, arch, meas, shots, spec.n_layers)
                    i = len(points)
                    points.append(GridPoint(i, f"{i:04d}-{cfg.label().replace('/', '-')}", cfg,
                                            run_seed(spec.base_seed, cfg)))
    return points


# ---------------------------------------------------------------------------
# run records


@dataclass
class RunRecord:
    run_id: str
    config: HqnnConfig
    status: str  # "ok" or "failed"
    param_count: int
    fold_results: list[dict] = field(default_factory=list)
    metrics: MetricsReport | None = None
    curves: dict[str, ThresholdCurve] = field(default_factory=dict)
    wall_time: float = 0.0
    seeds: dict = field(default_factory=dict)
    decisions: dict = field(default_factory=dict)
    error: str | None = None
    index: int = -1

    @property
    def ok(self) -> bool:
        return self.status == "ok"

    def to_json(self) -> str:
        d = {
            "schema_version": SCHEMA_VERSION,
            "run_id": self.run_id,
            "index": self.index,
            "config": self.config.to_dict(),
            "status": self.status,
            "param_count": self.param_count,
            "fold_results": self.fold_results,
            "metrics": None if self.metrics is None else self.metrics.to_dict(),
            "curves": {k: c.to_dict() for k, c in self.curves.items()},
            "wall_time": self.wall_time,
            "seeds": self.seeds,
            "decisions": self.decisions,
            "error": self.error,
        }
        return json.dumps(d, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "RunRecord":
        d = json.loads(text)
        if d.get("schema_version") != SCHEMA_VERSION:
            raise ValueError(f"unsupported schema_version {d.get('schema_version')!r}")
        return cls(
            run_id=d["run_id"],
            config=HqnnConfig.from_dict(d["config"]),
            status=d["status"],
            param_count=d["param_count"],
            fold_results=d["fold_results"],
            metrics=None if d["metrics"] is None else MetricsReport.from_dict(d["metrics"]),
            curves={k: ThresholdCurve.from_dict(c) for k, c in d["curves"].items()},
            wall_time=d["wall_time"],
            seeds=d["seeds"],
            decisions=d["decisions"],
            error=d.get("error"),
            index=d.get("index", -1),
        )


def run_single(point: GridPoint, train_cfg: TrainConfig, train, test) -> RunRecord:
    """Cross-validate, refit, and evaluate one configuration on the held-out split."""
    cfg = point.config
    start = time.perf_counter()
    seed = point.seed
    with threadpool_limits(1):
        cv = cross_validate(cfg, train_cfg, train, seed)
        epochs = refit_epochs(cv.folds)
        refit_seed = derive_seed(seed, "refit")
        final = train_fixed(cfg, train_cfg, train, refit_seed, epochs)
        test_seed = derive_seed(seed, "test")
        p_test = predict_proba(cfg, final, test.features, seed=test_seed)
        fold_test_acc = []
        for f in cv.folds:
            p_fold = predict_proba(cfg, f.final_params, test.features, seed=derive_seed(seed, "fold-test", f.fold_index))
            fold_test_acc.append(float(np.mean((p_fold >= 0.5) == (test.labels == 1))))
        report = evaluate(test.labels, p_test, cv.cv_accuracy_mean, float(np.mean(fold_test_acc)))
        curves = {k.value: threshold_curve(test.labels, p_test, k) for k in CurveKind}
    folds = []
    for f, acc in zip(cv.folds, fold_test_acc):
        s = f.summary()
        s["test_accuracy"] = acc
        folds.append(s)
    return RunRecord(
        run_id=point.run_id,
        config=cfg,
        status="ok",
        param_count=cfg.n_params,
        fold_results=folds,
        metrics=report,
        curves=curves,
        wall_time=time.perf_counter() - start,
        seeds={
            "run": seed,
            "derivation": "blake2b(base_seed, 'run', config label); children blake2b(parent, labels...)",
            "folds": [derive_seed(seed, "fold", k) for k in range(train_cfg.folds)],
            "refit": refit_seed,
            "test": test_seed,
            "split_seed": train_cfg.split_seed,
        },
        decisions=dict(DECISIONS, refit_epochs=epochs, code_version=__version__, train=train_cfg.to_dict()),
        index=point.index,
    )


def _execute(point: GridPoint, train_cfg: TrainConfig, train, test) -> RunRecord:
    try:
        return run_single(point, train_cfg, train, test)
    except Exception as exc:  # recorded, the sweep carries on
        log.warning("run %s failed: %s", point.run_id, exc)
        return RunRecord(
            run_id=point.run_id,
            config=point.config,
            status="failed",
            param_count=point.config.n_params,
            seeds={"run": point.seed},
            decisions=dict(DECISIONS),
            error="".join(traceback.format_exception_only(type(exc), exc)).strip(),
            index=point.index,
        )


def load_records(path) -> list[RunRecord]:
    """Parse a results file; any unreadable line raises ``IntegrityError``."""
    records = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                records.append(RunRecord.from_json(line))
            except (ValueError, KeyError, TypeError) as exc:
                raise IntegrityError(f"corrupt results record in {path}: {exc}", line=lineno) from None
    return records


def run_sweep(
    spec: GridSpec,
    train,
    test,
    workers: int = 1,
    results_path=None,
    resume: bool = False,
    progress=None,
) -> list[RunRecord]:
    """Run every grid point not already present in ``results_path``.

    Records are appended to ``results_path`` (JSON Lines) by this process
    only, as runs finish.  Seeds depend on the configuration, never on the
    schedule, so results do not depend on ``workers``.
    """
    points = enumerate_grid(spec)
    done: dict[str, RunRecord] = {}
    if results_path is not None and Path(results_path).exists():
        if resume:
            wanted = {p.run_id for p in points}
            for rec in load_records(results_path):
                if rec.run_id in wanted:
                    done[rec.run_id] = rec
        else:
            Path(results_path).unlink()
    todo = [p for p in points if p.run_id not in done]
    log.info("%d of %d runs to execute", len(todo), len(points))

    sink = open(results_path, "a") if results_path is not None else None
    try:
        def finish(rec: RunRecord):
            done[rec.run_id] = rec
            if sink is not None:
                sink.write(rec.to_json() + "\n")
                sink.flush()
            if progress is not None:
                progress(rec)

        if workers <= 1 or len(todo) <= 1:
            for p in todo:
                finish(_execute(p, spec.train_cfg, train, test))
        else:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                futures = [pool.submit(_execute, p, spec.train_cfg, train, test) for p in todo]
                for fut in as_completed(futures):
                    finish(fut.result())
    finally:
        if sink is not None:
            sink.close()
    return [done[p.run_id] for p in points]


# ---------------------------------------------------------------------------
# aggregation


def metric_value(record: RunRecord, metric: str) -> float:
    return float(getattr(record.metrics, canonical_metric(metric)))


def factor_level(record: RunRecord, factor: Factor):
    factor = Factor(factor)
    cfg = record.config
    if factor is Factor.ENCODING:
        return cfg.encoding
    if factor is Factor.ARCHITECTURE:
        return cfg.architecture
    if factor is Factor.MEASUREMENT:
        return cfg.measurement
    return cfg.shots


def level_label(level) -> str:
    if level is None:
        return "analytic"
    return level.value if isinstance(level, Enum) else str(level)


def _level_order(factor: Factor):
    factor = Factor(factor)
    if factor is Factor.ENCODING:
        return list(EncodingKind)
    if factor is Factor.ARCHITECTURE:
        return list(ArchitectureKind)
    if factor is Factor.MEASUREMENT:
        return list(MeasurementKind)
    return None


def _grouped(records, factor, metric):
    metric = canonical_metric(metric)
    groups: dict = {}
    for rec in records:
        if rec.ok:
            groups.setdefault(factor_level(rec, factor), []).append(metric_value(rec, metric))
    order = _level_order(factor)
    if order is None:
        keys = sorted(groups, key=lambda s: (s is None, s or 0))
    else:
        keys = [lvl for lvl in order if lvl in groups]
    return [(k, np.asarray(groups[k])) for k in keys]


@dataclass
class FactorMean:
    level: str
    mean: float
    std: float
    n: int


def factor_means(records, factor: Factor, metric: str) -> list[FactorMean]:
    """Mean and population standard deviation of ``metric`` per level of ``factor``."""
    return [FactorMean(level_label(k), float(v.mean()), float(v.std()), int(v.size))
            for k, v in _grouped(records, factor, metric)]


@dataclass
class BoxStats:
    level: str
    n: int
    q1: float
    median: float
    q3: float
    whisker_low: float
    whisker_high: float
    outliers: list[float]


def box_stats(values, level: str = "") -> BoxStats:
    """Quartiles (linear interpolation), 1.5 IQR whiskers and outliers."""
    v = np.sort(np.asarray(values, dtype=float))
    q1, med, q3 = np.percentile(v, [25, 50, 75])
    iqr = q3 - q1
    lo_fence, hi_fence = q1 - 1.5 * iqr, q3 + 1.5 * iqr
    inside = v[(v >= lo_fence) & (v <= hi_fence)]
    return BoxStats(
        level,
        int(v.size),
        float(q1),
        float(med),
        float(q3),
        float(inside.min()),
        float(inside.max()),
        [float(x) for x in v[(v < lo_fence) | (v > hi_fence)]],
    )


def factor_distribution(records, factor: Factor, metric: str) -> list[BoxStats]:
    return [box_stats(v, level_label(k)) for k, v in _grouped(records, factor, metric)]


@dataclass
class OverlapRow:
    run_id: str
    config: HqnnConfig
    count: int
    cells: dict[str, tuple[int, float] | None]

    @property
    def best_rank(self) -> int:
        return min(c[0] for c in self.cells.values() if c is not None)


def top5_overlap(records, metric_list=OVERLAP_METRICS, top: int = 5, min_count: int = 3) -> list[OverlapRow]:
    """Configurations appearing in the Top-``top`` of at least ``min_count`` metrics.

    Ranking is by value descending with ties broken by ascending ``run_id``;
    rows are ordered by count (descending), best rank, then ``run_id``.
    """
    metrics = [canonical_metric(m) for m in metric_list]
    if not metrics:
        raise QueryError("metric list is empty")
    ok = [r for r in records if r.ok]
    cells: dict[str, dict] = {}
    by_id = {r.run_id: r for r in ok}
    for m in metrics:
        ranked = sorted(ok, key=lambda r: (-metric_value(r, m), r.run_id))
        for rank, rec in enumerate(ranked[:top], start=1):
            cells.setdefault(rec.run_id, {})[m] = (rank, metric_value(rec, m))
    rows = []
    for run_id, hit in cells.items():
        if len(hit) >= min_count:
            rows.append(OverlapRow(run_id, by_id[run_id].config, len(hit), {m: hit.get(m) for m in metrics}))
    rows.sort(key=lambda r: (-r.count, r.best_rank, r.run_id))
    return rows


def failure_report(records) -> list[tuple[str, str]]:
    return [(r.run_id, r.error or "") for r in records if not r.ok]


# ---------------------------------------------------------------------------
# CSV exports (one file per figure panel)

MEASUREMENT_DISPLAY = {
    MeasurementKind.PAULI_X: "Pauli-X",
    MeasurementKind.PAULI_Y: "Pauli-Y",
    MeasurementKind.PAULI_Z: "Pauli-Z",
    MeasurementKind.PAULI_XYZ: "Pauli-XYZ",
    MeasurementKind.HADAMARD: "Hadamard",
}


def display_config(cfg: HqnnConfig) -> str:
    shots = "analytic" if cfg.shots is None else str(cfg.shots)
    return f"{cfg.encoding.value} / {cfg.architecture.value} / {MEASUREMENT_DISPLAY[cfg.measurement]} / {shots}"


def format_cell(cell) -> str:
    return "--" if cell is None else f"{cell[0]}({cell[1]:.4f})"


def _write_csv(path: Path, header, rows) -> Path:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)
    return path


FACTOR_PANELS = {
    "factor-means": {Factor.ENCODING: "panel_a_gps_by_encoding", Factor.ARCHITECTURE: "panel_b_gps_by_architecture",
                     Factor.MEASUREMENT: "extra_gps_by_measurement", Factor.SHOTS: "extra_gps_by_shots"},
    "factor-dist": {Factor.ENCODING: "panel_c_accuracy_by_encoding",
                    Factor.ARCHITECTURE: "panel_d_accuracy_by_architecture",
                    Factor.SHOTS: "panel_e_accuracy_by_shots",
                    Factor.MEASUREMENT: "panel_f_accuracy_by_measurement"},
}
VIEWS = ("factor-means", "factor-dist", "overlap", "curves")


def export_view(records, view: str, outdir, metric_list=OVERLAP_METRICS) -> list[Path]:
    """Write the CSV tables of one aggregation view; returns the written paths."""
    if view not in VIEWS:
        raise QueryError(f"unknown view {view!r}; choose from {', '.join(VIEWS)}")
    out = Path(outdir)
    out.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []
    if view == "factor-means":
        gps = ("gps1", "gps2", "gps3", "gps4")
        for factor, stem in FACTOR_PANELS[view].items():
            tables = {m: factor_means(records, factor, m) for m in gps}
            rows = []
            for i, fm in enumerate(tables["gps1"]):
                row = [fm.level, fm.n]
                for m in gps:
                    row += [tables[m][i].mean, tables[m][i].std]
                rows.append(row)
            header = ["level", "n"] + [f"{m}_{s}" for m in gps for s in ("mean", "std")]
            written.append(_write_csv(out / f"{stem}.csv", header, rows))
    elif view == "factor-dist":
        for factor, stem in FACTOR_PANELS[view].items():
            rows = [[b.level, b.n, b.whisker_low, b.q1, b.median, b.q3, b.whisker_high,
                     ";".join(repr(x) for x in b.outliers)]
                    for b in factor_distribution(records, factor, "accuracy")]
            header = ["level", "n", "whisker_low", "q1", "median", "q3", "whisker_high", "outliers"]
            written.append(_write_csv(out / f"{stem}.csv", header, rows))
    elif view == "overlap":
        metrics = [canonical_metric(m) for m in metric_list]
        rows = [[display_config(r.config), r.run_id, r.count] + [format_cell(r.cells[m]) for m in metrics]
                for r in top5_overlap(records, metrics)]
        written.append(_write_csv(out / "overlap_top5.csv", ["config", "run_id", "count"] + metrics, rows))
    else:
        ok = [r for r in records if r.ok]
        written.append(_write_csv(
            out / "panel_g_specificity_vs_sensitivity.csv",
            ["run_id", "config", "specificity", "sensitivity"],
            [[r.run_id, display_config(r.config), r.metrics.specificity, r.metrics.recall] for r in ok],
        ))
        written.append(_write_csv(
            out / "panel_h_mcc_vs_f1.csv",
            ["run_id", "config", "f1", "mcc"],
            [[r.run_id, display_config(r.config), r.metrics.f1, r.metrics.mcc] for r in ok],
        ))
        curve_dir = out / "curves"
        curve_dir.mkdir(exist_ok=True)
        for r in ok:
            for kind, curve in r.curves.items():
                xname, yname = CURVE_AXES[CurveKind(kind)]
                rows = zip(curve.thresholds.tolist(), curve.x_values.tolist(), curve.y_values.tolist())
                written.append(_write_csv(curve_dir / f"{r.run_id}_{kind}.csv", ["threshold", xname, yname], rows))
    failed = failure_report(records)
    if failed:
        written.append(_write_csv(out / "failures.csv", ["run_id", "error"], failed))
    return written

