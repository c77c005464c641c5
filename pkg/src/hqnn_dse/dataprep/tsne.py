"""Exact t-SNE and centroid-distance comparison of datasets.

The embedding follows the all-pairs formulation: Gaussian input affinities
calibrated per point to a target perplexity by bisection on the precision,
symmetrised joint probabilities, a Student-t output kernel, and momentum
gradient descent (with per-coordinate adaptive gains) on the KL divergence.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import ComparabilityError
from ..seeding import make_rng
from .table import ImputePolicy, RawTable, impute
from .transform import MinMaxScaler, pca_fit

MIN_SAMPLES = 4


@dataclass(frozen=True)
class TsneConfig:
    components: int = 2
    seed: int = 42
    perplexity: float | None = None  # None -> min(30, samples / 4)
    iterations: int = 500
    learning_rate: float = 200.0
    momentum_initial: float = 0.5
    momentum_final: float = 0.8
    momentum_switch: int = 250
    early_exaggeration: float = 4.0
    exaggeration_iterations: int = 100
    search_tolerance: float = 1e-5
    search_steps: int = 50


def effective_perplexity(n_samples: int, cfg: TsneConfig = TsneConfig()) -> float:
    if cfg.perplexity is not None:
        return float(cfg.perplexity)
    return min(30.0, n_samples / 4.0)


def squared_distances(x: np.ndarray) -> np.ndarray:
    sq = np.sum(x * x, axis=1)
    d = sq[:, None] + sq[None, :] - 2.0 * x @ x.T
    np.fill_diagonal(d, 0.0)
    return np.maximum(d, 0.0)


def _row_affinities(dist_row: np.ndarray, beta: float) -> tuple[np.ndarray, float]:
    """Conditional probabilities and their entropy (nats) for one point."""
    shifted = dist_row - dist_row.min()
    w = np.exp(-shifted * beta)
    total = w.sum()
    p = w / total
    entropy = math.log(total) + beta * float(np.sum(shifted * p))
    return p, entropy


def conditional_affinities(x, perplexity: float, tol: float = 1e-5, steps: int = 50) -> tuple[np.ndarray, np.ndarray]:
    """Row-stochastic ``p_{j|i}`` with each row's entropy matched to ``log(perplexity)``.

    Returns ``(P, entropies)``.
    """
    x = np.asarray(x, dtype=float)
    n = x.shape[0]
    d = squared_distances(x)
    target = math.log(perplexity)
    P = np.zeros((n, n))
    entropies = np.zeros(n)
    for i in range(n):
        row = np.delete(d[i], i)
        beta, lo, hi = 1.0, 0.0, math.inf
        positive = row[row > 0]
        if positive.size:
            beta = 1.0 / float(np.mean(positive))
        p, h = _row_affinities(row, beta)
        for _ in range(steps):
            diff = h - target
            if abs(diff) < tol:
                break
            if diff > 0:  # too flat: sharpen
                lo = beta
                beta = beta * 2.0 if hi == math.inf else 0.5 * (beta + hi)
            else:
                hi = beta
                beta = 0.5 * (beta + lo)
            p, h = _row_affinities(row, beta)
        P[i, np.arange(n) != i] = p
        entropies[i] = h
    return P, entropies


def joint_probabilities(x, perplexity: float, tol: float = 1e-5, steps: int = 50) -> np.ndarray:
    P, _ = conditional_affinities(x, perplexity, tol, steps)
    P = (P + P.T) / (2.0 * P.shape[0])
    return np.maximum(P, 1e-12)


def tsne_embed(x, cfg: TsneConfig = TsneConfig()) -> tuple[np.ndarray, float]:
    """2-D (by default) embedding of the rows of ``x`` and the final KL divergence."""
    x = np.asarray(x, dtype=float)
    n = x.shape[0]
    if n < MIN_SAMPLES:
        raise ComparabilityError(f"t-SNE needs at least {MIN_SAMPLES} samples, got {n}")
    perplexity = effective_perplexity(n, cfg)
    if perplexity >= n:
        raise ComparabilityError(f"perplexity {perplexity} must be below the sample count {n}")
    P = joint_probabilities(x, perplexity, cfg.search_tolerance, cfg.search_steps)

    rng = make_rng(cfg.seed, "tsne-init")
    Y = 1e-4 * rng.standard_normal((n, cfg.components))
    update = np.zeros_like(Y)
    gains = np.ones_like(Y)
    for it in range(cfg.iterations):
        exaggeration = cfg.early_exaggeration if it < cfg.exaggeration_iterations else 1.0
        momentum = cfg.momentum_initial if it < cfg.momentum_switch else cfg.momentum_final
        num = 1.0 / (1.0 + squared_distances(Y))
        np.fill_diagonal(num, 0.0)
        Q = np.maximum(num / num.sum(), 1e-12)
        W = (exaggeration * P - Q) * num
        grad = 4.0 * (np.diag(W.sum(axis=1)) - W) @ Y
        same = np.sign(grad) == np.sign(update)
        gains = np.where(same, gains * 0.8, gains + 0.2)
        np.maximum(gains, 0.01, out=gains)
        update = momentum * update - cfg.learning_rate * gains * grad
        Y = Y + update
        Y -= Y.mean(axis=0)
    num = 1.0 / (1.0 + squared_distances(Y))
    np.fill_diagonal(num, 0.0)
    Q = np.maximum(num / num.sum(), 1e-12)
    kl = float(np.sum(P * np.log(P / Q)))
    return Y, kl


@dataclass
class TsneComparison:
    embedding: np.ndarray  # one row per input sample, in input order
    dataset: np.ndarray  # dataset index of each embedded row
    names: list[str]
    centroids: np.ndarray
    distances: np.ndarray
    spread: float
    perplexity: float
    kl_divergence: float

    def relative_distances(self) -> np.ndarray:
        return self.distances / self.spread if self.spread > 0 else self.distances


def shared_projection(tables: list[RawTable], k: int = 8) -> list[np.ndarray]:
    """Put several tables into one feature space.

    Tables sharing at least two column names are compared on those columns
    (mean/median imputed, min-max scaled on the pooled rows).  Otherwise each
    table is reduced on its own to ``k`` principal components and scaled to
    ``[0, 1]``, the same recipe used before training.
    """
    common = [c for c in tables[0].columns if all(c in t.columns for t in tables[1:])]
    if len(common) >= 2:
        blocks = []
        for t in tables:
            filled = impute(t, ImputePolicy.MEAN_MEDIAN)
            blocks.append(filled.values[:, [filled.columns.index(c) for c in common]])
        scaler = MinMaxScaler.fit(np.vstack(blocks))
        return [scaler.transform(b) for b in blocks]
    out = []
    for t in tables:
        values = impute(t, ImputePolicy.MEAN_MEDIAN).values
        pca = pca_fit(values, k)
        z = pca.transform(values)
        out.append(MinMaxScaler.fit(z).transform(z))
    return out


def tsne_compare(datasets, cfg: TsneConfig = TsneConfig(), names=None) -> TsneComparison:
    """Embed several datasets jointly and measure distances between their centroids.

    ``datasets`` holds ``RawTable`` objects or equal-width numeric matrices.
    Identical rows are embedded once and share their coordinates, so
    byte-identical datasets land on exactly the same centroid.
    """
    if len(datasets) < 2:
        raise ComparabilityError("comparison needs at least two datasets")
    if names is None:
        names = [getattr(d, "name", "") or f"dataset{i + 1}" for i, d in enumerate(datasets)]
    if all(isinstance(d, RawTable) for d in datasets):
        for name, d in zip(names, datasets):
            if d.values.shape[0] < MIN_SAMPLES:
                raise ComparabilityError(f"{name} has {d.values.shape[0]} rows; at least {MIN_SAMPLES} needed")
        matrices = shared_projection(list(datasets))
    else:
        matrices = [np.asarray(d, dtype=float) for d in datasets]
    widths = {m.shape[1] for m in matrices}
    if len(widths) != 1:
        raise ComparabilityError(f"datasets have different widths {sorted(widths)}")
    for name, m in zip(names, matrices):
        if m.shape[0] < MIN_SAMPLES:
            raise ComparabilityError(f"{name} has {m.shape[0]} rows; at least {MIN_SAMPLES} needed")

    stacked = np.vstack(matrices)
    owner = np.concatenate([np.full(m.shape[0], i) for i, m in enumerate(matrices)])
    unique, inverse = np.unique(stacked, axis=0, return_inverse=True)
    inverse = inverse.reshape(-1)
    Y, kl = tsne_embed(unique, cfg)
    embedding = Y[inverse]

    centroids = np.stack([embedding[owner == i].mean(axis=0) for i in range(len(matrices))])
    diff = centroids[:, None, :] - centroids[None, :, :]
    distances = np.sqrt(np.sum(diff * diff, axis=-1))
    spread = float(np.sqrt(np.mean(np.sum((embedding - embedding.mean(axis=0)) ** 2, axis=1))))
    return TsneComparison(embedding, owner, list(names), centroids, distances, spread,
                          effective_perplexity(unique.shape[0], cfg), kl)
