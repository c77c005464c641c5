"""Stratified hold-out split and stratified k-fold assignment.

Both delegate the shuffling to scikit-learn (``train_test_split`` and
``StratifiedKFold`` with ``shuffle=True``) so that a given ``random_state``
produces the same partitions as the reference pipeline.
"""
from __future__ import annotations

import numpy as np
from sklearn.model_selection import StratifiedKFold, train_test_split

from ..errors import SplitError, StratificationError


def split_70_30(labels, test_size: float = 0.3, seed: int = 42) -> tuple[np.ndarray, np.ndarray]:
    """Sorted ``(train_rows, test_rows)`` indices of a stratified split."""
    y = np.asarray(labels).reshape(-1)
    classes, counts = np.unique(y, return_counts=True)
    if classes.size < 2:
        raise SplitError("stratified split needs both classes present")
    if counts.min() < 2:
        raise SplitError(f"class {classes[np.argmin(counts)]!r} has fewer than 2 rows")
    idx = np.arange(y.size)
    train, test = train_test_split(idx, test_size=test_size, random_state=seed, stratify=y)
    return np.sort(train), np.sort(test)


def stratified_kfold(labels, folds: int = 10, seed: int = 42) -> np.ndarray:
    """Fold number (``0 .. folds-1``) of every row."""
    y = np.asarray(labels).reshape(-1)
    classes, counts = np.unique(y, return_counts=True)
    if classes.size < 2 or counts.min() < folds:
        raise StratificationError(
            f"{folds}-fold stratification needs every class to have >= {folds} rows; "
            f"counts are {dict(zip(classes.tolist(), counts.tolist()))}"
        )
    assignment = np.empty(y.size, dtype=np.int64)
    splitter = StratifiedKFold(n_splits=folds, shuffle=True, random_state=seed)
    for k, (_, val) in enumerate(splitter.split(np.zeros(y.size), y)):
        assignment[val] = k
    return assignment
