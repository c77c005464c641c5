"""Data ingestion, preprocessing, splitting and dataset comparability."""
from .split import split_70_30, stratified_kfold
from .synth import SynthSpec, separable_spec, synth_dataset, write_csv
from .table import ImputePolicy, RawTable, Schema, impute, ingest_csv
from .transform import (
    DesignMatrix,
    MinMaxScaler,
    PcaModel,
    fit_touched_test_rows,
    minmax_scale,
    pca_fit,
    pca_reduce,
    preprocess,
)
from .tsne import TsneComparison, TsneConfig, effective_perplexity, tsne_compare, tsne_embed

__all__ = [
    "DesignMatrix",
    "ImputePolicy",
    "MinMaxScaler",
    "PcaModel",
    "RawTable",
    "Schema",
    "SynthSpec",
    "TsneComparison",
    "TsneConfig",
    "effective_perplexity",
    "fit_touched_test_rows",
    "impute",
    "ingest_csv",
    "minmax_scale",
    "pca_fit",
    "pca_reduce",
    "preprocess",
    "separable_spec",
    "split_70_30",
    "stratified_kfold",
    "synth_dataset",
    "tsne_compare",
    "tsne_embed",
    "write_csv",
]
