"""Command-line interface: ``hqnn-dse {prep,tsne,run,grid,aggregate}``.

Exit codes: 0 success, 1 usage or configuration error, 2 data error,
3 integrity error (corrupt results file).  Every command writes
``manifest.txt`` next to its outputs with the effective settings, seeds and
code version.
"""
from __future__ import annotations

import argparse
import configparser
import csv
import json
import logging
import os
import platform
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .ansatz import ArchitectureKind
from .dataprep import DesignMatrix, ImputePolicy, Schema, TsneConfig, ingest_csv, preprocess, tsne_compare
from .dse import (
    DEFAULT_SHOTS,
    OVERLAP_METRICS,
    VIEWS,
    GridPoint,
    GridSpec,
    export_view,
    load_records,
    run_seed,
    run_single,
    run_sweep,
)
from .encode import EncodingKind
from .errors import DataError, EncodingError, HqnnError, IntegrityError, ValidationError
from .model import HqnnConfig, MeasurementKind
from .optim import TrainConfig

log = logging.getLogger("hqnn_dse")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_INTEGRITY = 0, 1, 2, 3
SEED_ENV = "HQNN_DSE_SEED"


class UsageError(HqnnError):
    pass


class _Parser(argparse.ArgumentParser):
    """argparse with usage errors mapped to exit code 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _norm(text: str) -> str:
    return "".join(ch for ch in text.lower() if ch.isalnum())


def _enum_type(enum_cls, aliases=None):
    table = {_norm(m.value): m for m in enum_cls}
    table.update(aliases or {})

    def parse(text: str):
        try:
            return table[_norm(text)]
        except KeyError:
            valid = ", ".join(m.value for m in enum_cls)
            raise argparse.ArgumentTypeError(f"invalid value {text!r}; valid values: {valid}") from None

    parse.__name__ = enum_cls.__name__
    return parse


encoding_type = _enum_type(EncodingKind)
architecture_type = _enum_type(ArchitectureKind)
measurement_type = _enum_type(MeasurementKind, {"xyz": MeasurementKind.PAULI_XYZ, "h": MeasurementKind.HADAMARD})


def shots_type(text: str) -> int | None:
    if _norm(text) in ("analytic", "exact", "none"):
        return None
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"shots must be 'analytic' or a positive integer, got {text!r}") from None
    if value < 1:
        raise argparse.ArgumentTypeError(f"shots must be positive, got {value}")
    return value


def policy_type(text: str) -> ImputePolicy:
    return _enum_type(ImputePolicy)(text)


# ---------------------------------------------------------------------------
# helpers


def write_manifest(outdir: Path, command: str, settings: dict) -> Path:
    """Plain-text manifest: one ``key = value`` line, values JSON-encoded."""
    outdir.mkdir(parents=True, exist_ok=True)
    lines = [
        f"command = {json.dumps(command)}",
        f"code_version = {json.dumps(__version__)}",
        f"python = {json.dumps(platform.python_version())}",
        f"numpy = {json.dumps(np.__version__)}",
    ]
    for key in sorted(settings):
        lines.append(f"{key} = {json.dumps(settings[key], sort_keys=True, default=str)}")
    path = outdir / "manifest.txt"
    path.write_text("\n".join(lines) + "\n")
    return path


def _read_train_overrides(path) -> dict:
    parser = configparser.ConfigParser()
    try:
        with open(path) as fh:
            parser.read_file(fh)
    except (OSError, configparser.Error) as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from None
    if not parser.has_section("train"):
        return {}
    defaults = TrainConfig().to_dict()
    out = {}
    for key, raw in parser["train"].items():
        if key not in defaults:
            raise UsageError(f"unknown [train] key {key!r} in {path}")
        out[key] = type(defaults[key])(raw)
    return out


def _train_flag_overrides(args) -> dict:
    names = {"epochs": "epochs", "folds": "folds", "batch_size": "batch_size", "lr": "learning_rate",
             "patience": "patience"}
    return {field: getattr(args, flag) for flag, field in names.items() if getattr(args, flag, None) is not None}


def _base_seed(args, fallback: int) -> tuple[int, str]:
    if args.seed is not None:
        return args.seed, "flag"
    env = os.environ.get(SEED_ENV)
    if env not in (None, ""):
        try:
            return int(env), f"env {SEED_ENV}"
        except ValueError:
            raise UsageError(f"{SEED_ENV} must be an integer, got {env!r}") from None
    return fallback, "spec/default"


def _load_matrix(path) -> DesignMatrix:
    try:
        return DesignMatrix.load_csv(path)
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from None
    except ValueError as exc:
        raise DataError(f"{path}: {exc}") from None


def _add_train_flags(p):
    p.add_argument("--config", help="INI file with a [train] section (TrainConfig fields)")
    p.add_argument("--epochs", type=int)
    p.add_argument("--folds", type=int)
    p.add_argument("--batch-size", dest="batch_size", type=int)
    p.add_argument("--lr", type=float)
    p.add_argument("--patience", type=int)
    p.add_argument("--seed", type=int, help=f"base seed (overrides ${SEED_ENV})")


# ---------------------------------------------------------------------------
# commands


def cmd_prep(args) -> int:
    schema = Schema.load(args.schema)
    table = ingest_csv(args.input, schema)
    train, test = preprocess(table, args.policy, k=args.components, test_size=args.test_size, seed=args.split_seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    train.save_csv(out / "train.csv")
    test.save_csv(out / "test.csv")
    prov = dict(train.provenance)
    prov.pop("part", None)
    (out / "provenance.json").write_text(json.dumps(prov, indent=1, sort_keys=True) + "\n")
    write_manifest(out, "prep", {
        "input": str(args.input),
        "schema": schema.to_dict(),
        "policy": args.policy.value,
        "components": args.components,
        "test_size": args.test_size,
        "split_seed": args.split_seed,
        "train_rows": len(train),
        "test_rows": len(test),
    })
    print(f"wrote {len(train)} training and {len(test)} test rows with {train.features.shape[1]} columns to {out}")
    return EXIT_OK


def _header(path) -> list[str]:
    try:
        with open(path, newline="") as fh:
            return next(csv.reader(fh))
    except (OSError, StopIteration) as exc:
        raise DataError(f"cannot read a header from {path}: {exc}") from None


def cmd_tsne(args) -> int:
    if len(args.inputs) < 2:
        raise UsageError("tsne needs at least two input files")
    tables = []
    for path in args.inputs:
        schema = Schema.load(args.schema) if args.schema else Schema(label=_header(path)[-1])
        tables.append(ingest_csv(path, schema))
    names = [Path(p).stem for p in args.inputs]
    if len(set(names)) != len(names):
        names = [f"{i + 1}:{n}" for i, n in enumerate(names)]
    cfg = TsneConfig(seed=args.tsne_seed, perplexity=args.perplexity, iterations=args.iterations)
    result = tsne_compare(tables, cfg, names)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "embedding.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["dataset", "x", "y"])
        for owner, (x, y) in zip(result.dataset, result.embedding[:, :2]):
            w.writerow([result.names[owner], repr(float(x)), repr(float(y))])
    with open(out / "distances.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["dataset"] + result.names)
        for name, row in zip(result.names, result.distances):
            w.writerow([name] + [repr(float(v)) for v in row])
    write_manifest(out, "tsne", {
        "inputs": [str(p) for p in args.inputs],
        "schema": args.schema,
        "tsne": cfg.__dict__,
        "effective_perplexity": result.perplexity,
        "spread": result.spread,
        "kl_divergence": result.kl_divergence,
    })
    for name, row in zip(result.names, result.relative_distances()):
        print(name, " ".join(f"{v:.4f}" for v in row))
    return EXIT_OK


def _train_cfg(args, base: TrainConfig | None = None) -> TrainConfig:
    cfg = base or TrainConfig()
    if getattr(args, "config", None):
        cfg = cfg.with_overrides(**_read_train_overrides(args.config))
    return cfg.with_overrides(**_train_flag_overrides(args))


def cmd_run(args) -> int:
    if args.shots is not None and args.shots not in DEFAULT_SHOTS:
        print(f"note: {args.shots} shots is off the standard grid {list(DEFAULT_SHOTS)}", file=sys.stderr)
    config = HqnnConfig(args.encoding, args.arch, args.measure, args.shots)
    train_cfg = _train_cfg(args)
    base_seed, seed_source = _base_seed(args, 42)
    train, test = _load_matrix(args.train), _load_matrix(args.test)
    point = GridPoint(0, config.label().replace("/", "-"), config, run_seed(base_seed, config))
    record = run_single(point, train_cfg, train, test)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "record.jsonl").write_text(record.to_json() + "\n")
    write_manifest(out, "run", {
        "config": config.to_dict(),
        "train": train_cfg.to_dict(),
        "base_seed": base_seed,
        "base_seed_source": seed_source,
        "seeds": record.seeds,
        "train_file": str(args.train),
        "test_file": str(args.test),
    })
    m = record.metrics
    print(f"{config.label()}  params={record.param_count}  refit_epochs={record.decisions['refit_epochs']}")
    for name in ("accuracy", "precision", "recall", "specificity", "f1", "mcc", "auc",
                 "gps1", "gps2", "gps3", "gps4", "cv_accuracy_mean", "test_accuracy_mean"):
        print(f"  {name:<18} {getattr(m, name):.4f}")
    if m.degenerate:
        print(f"  degenerate: {', '.join(m.degenerate)}")
    return EXIT_OK


def cmd_grid(args) -> int:
    spec = GridSpec.load(args.spec) if args.spec else GridSpec()
    spec.train_cfg = _train_cfg(args, spec.train_cfg)
    spec.base_seed, seed_source = _base_seed(args, spec.base_seed)
    train, test = _load_matrix(args.train), _load_matrix(args.test)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    results = out / "results.jsonl"
    if results.exists() and not args.resume:
        raise UsageError(f"{results} exists; pass --resume to continue it or choose another --out")

    def progress(rec):
        log.info("%s %s %.1fs", rec.run_id, rec.status, rec.wall_time)

    records = run_sweep(spec, train, test, workers=args.workers, results_path=results, resume=args.resume,
                        progress=progress)
    failed = sum(not r.ok for r in records)
    write_manifest(out, "grid", {
        "spec": spec.to_dict(),
        "base_seed_source": seed_source,
        "workers": args.workers,
        "resume": args.resume,
        "train_file": str(args.train),
        "test_file": str(args.test),
        "runs": len(records),
        "failed": failed,
    })
    print(f"{len(records)} runs recorded in {results} ({failed} failed)")
    return EXIT_OK


def cmd_aggregate(args) -> int:
    records = load_records(args.results)
    metrics = [m.strip() for m in args.metrics.split(",")] if args.metrics else list(OVERLAP_METRICS)
    paths = export_view(records, args.view, args.out, metrics)
    write_manifest(Path(args.out), f"aggregate {args.view}", {
        "results": str(args.results),
        "view": args.view,
        "metrics": metrics,
        "records": len(records),
        "outputs": [str(p) for p in paths],
    })
    print(f"wrote {len(paths)} file(s) to {args.out}")
    return EXIT_OK


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="hqnn-dse", description="Hybrid quantum neural network design-space exploration.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("prep", help="split, impute, reduce and scale a raw CSV")
    p.add_argument("--input", required=True)
    p.add_argument("--schema", required=True, help="key = value schema file")
    p.add_argument("--policy", type=policy_type, default=ImputePolicy.MEAN_MEDIAN,
                   help="MeanMedian (default) or LeaveEmpty")
    p.add_argument("--components", type=int, default=8)
    p.add_argument("--test-size", dest="test_size", type=float, default=0.3)
    p.add_argument("--split-seed", dest="split_seed", type=int, default=42)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_prep)

    p = sub.add_parser("tsne", help="joint t-SNE embedding and centroid distances")
    p.add_argument("inputs", nargs="+")
    p.add_argument("--schema", help="schema shared by all inputs (default: last column is a 0/1 label)")
    p.add_argument("--perplexity", type=float)
    p.add_argument("--iterations", type=int, default=500)
    p.add_argument("--tsne-seed", dest="tsne_seed", type=int, default=42)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_tsne)

    p = sub.add_parser("run", help="train and evaluate one configuration")
    p.add_argument("--encoding", type=encoding_type, required=True)
    p.add_argument("--arch", type=architecture_type, required=True)
    p.add_argument("--measure", type=measurement_type, required=True)
    p.add_argument("--shots", type=shots_type, default=None, help="'analytic' or a positive integer")
    p.add_argument("--train", required=True)
    p.add_argument("--test", required=True)
    p.add_argument("--out", required=True)
    _add_train_flags(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("grid", help="run the full (or a custom) configuration grid")
    p.add_argument("--spec", help="INI grid spec with [grid] and [train] sections")
    p.add_argument("--train", required=True)
    p.add_argument("--test", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--resume", action="store_true")
    _add_train_flags(p)
    p.set_defaults(func=cmd_grid)

    p = sub.add_parser("aggregate", help="export plot-ready CSVs from a results file")
    p.add_argument("--results", required=True)
    p.add_argument("--view", required=True, choices=VIEWS)
    p.add_argument("--metrics", help="comma-separated metric list for the overlap view")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_aggregate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except IntegrityError as exc:
        print(f"integrity error: {exc}", file=sys.stderr)
        return EXIT_INTEGRITY
    except (DataError, ValidationError, EncodingError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except HqnnError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except FileNotFoundError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
