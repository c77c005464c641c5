"""Adam, the epoch loop with early stopping, and k-fold cross-validation."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from .errors import DataError, ParameterError, StratificationError
from .model import HqnnConfig, ModelParams, gradient, init_model, loss, predict_proba
from .seeding import derive_seed, make_rng


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 50
    batch_size: int = 16
    learning_rate: float = 0.001
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_epsilon: float = 1e-8
    patience: int = 5
    min_delta: float = 1e-6
    folds: int = 10
    split_seed: int = 42

    def __post_init__(self):
        for name in ("epochs", "batch_size", "patience", "folds"):
            if getattr(self, name) < 1:
                raise ParameterError(f"{name} must be >= 1")
        if self.folds < 2:
            raise ParameterError("folds must be >= 2")
        if self.learning_rate < 0:
            raise ParameterError("learning_rate must be >= 0")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "TrainConfig":
        return cls(**d)

    def with_overrides(self, **kw) -> "TrainConfig":
        return replace(self, **{k: v for k, v in kw.items() if v is not None})


# ---------------------------------------------------------------------------
# Adam


@dataclass
class AdamState:
    m: np.ndarray
    v: np.ndarray

    @classmethod
    def zeros(cls, size: int) -> "AdamState":
        return cls(np.zeros(size), np.zeros(size))


def adam_step(
    params,
    grads,
    state: AdamState,
    t: int,
    lr: float = 0.001,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps: float = 1e-8,
) -> tuple[np.ndarray, AdamState]:
    """One bias-corrected Adam update; ``t`` counts steps from 1."""
    theta = np.asarray(params, dtype=float)
    g = np.asarray(grads, dtype=float)
    if theta.shape != g.shape or state.m.shape != theta.shape:
        raise ParameterError(f"shape mismatch: params {theta.shape}, grads {g.shape}, moments {state.m.shape}")
    if t < 1:
        raise ParameterError(f"Adam step counter starts at 1, got {t}")
    m = beta1 * state.m + (1.0 - beta1) * g
    v = beta2 * state.v + (1.0 - beta2) * g * g
    m_hat = m / (1.0 - beta1**t)
    v_hat = v / (1.0 - beta2**t)
    return theta - lr * m_hat / (np.sqrt(v_hat) + eps), AdamState(m, v)


# ---------------------------------------------------------------------------
# early stopping


class EarlyStopping:
    """Patience counter on validation loss.

    An epoch improves only if its loss is below the best so far by at least
    ``min_delta``.
    """

    def __init__(self, patience: int = 5, min_delta: float = 1e-6):
        self.patience = patience
        self.min_delta = min_delta
        self.best_loss = math.inf
        self.best_epoch = 0
        self.stale = 0

    def update(self, epoch: int, val_loss: float) -> bool:
        """Record an epoch; True when training should stop."""
        if val_loss < self.best_loss - self.min_delta:
            self.best_loss = val_loss
            self.best_epoch = epoch
            self.stale = 0
        else:
            self.stale += 1
        return self.stale >= self.patience

    @property
    def improved_last(self) -> bool:
        return self.stale == 0


def trace_early_stopping(losses, patience: int = 5, min_delta: float = 1e-6) -> tuple[int, int]:
    """Replay a validation-loss sequence; returns ``(epochs_ran, best_epoch)``."""
    stopper = EarlyStopping(patience, min_delta)
    epoch = 0
    for epoch, value in enumerate(losses, start=1):
        if stopper.update(epoch, value):
            break
    return epoch, stopper.best_epoch


# ---------------------------------------------------------------------------
# training


@dataclass
class FoldResult:
    fold_index: int
    val_accuracy: float
    val_loss: float
    epochs_ran: int
    best_epoch: int
    final_params: ModelParams
    val_loss_history: list[float] = field(default_factory=list)

    def summary(self) -> dict:
        return {
            "fold_index": self.fold_index,
            "val_accuracy": self.val_accuracy,
            "val_loss": self.val_loss,
            "epochs_ran": self.epochs_ran,
            "best_epoch": self.best_epoch,
            "val_loss_history": list(self.val_loss_history),
        }


def _xy(data) -> tuple[np.ndarray, np.ndarray]:
    if hasattr(data, "features"):
        x, y = data.features, data.labels
    else:
        x, y = data
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float).reshape(-1)
    if x.ndim != 2 or x.shape[0] == 0:
        raise DataError("empty or malformed data set")
    if x.shape[0] != y.shape[0]:
        raise DataError(f"{x.shape[0]} rows but {y.shape[0]} labels")
    return x, y


def _fit(config, train_cfg, x, y, seed, epochs, val=None, on_epoch=None):
    params = init_model(config, derive_seed(seed, "init"))
    adam = AdamState.zeros(params.flat().size)
    stopper = EarlyStopping(train_cfg.patience, train_cfg.min_delta)
    best = (math.inf, math.nan, params.copy())
    history: list[float] = []
    # one noise realisation for validation keeps epochs comparable
    val_seed = derive_seed(seed, "val")
    t = 0
    epoch = 0
    for epoch in range(1, epochs + 1):
        order = make_rng(seed, "shuffle", epoch).permutation(x.shape[0])
        for b, start in enumerate(range(0, x.shape[0], train_cfg.batch_size)):
            idx = order[start : start + train_cfg.batch_size]
            _, g = gradient(config, params, x[idx], y[idx], seed=derive_seed(seed, "grad", epoch, b))
            t += 1
            flat, adam = adam_step(
                params.flat(),
                g.flat(),
                adam,
                t,
                train_cfg.learning_rate,
                train_cfg.adam_beta1,
                train_cfg.adam_beta2,
                train_cfg.adam_epsilon,
            )
            params = params.unflatten(flat)
        if val is None:
            continue
        xv, yv = val
        p = predict_proba(config, params, xv, seed=val_seed)
        val_loss = float(np.mean(loss(p, yv)))
        history.append(val_loss)
        stop = stopper.update(epoch, val_loss)
        if stopper.improved_last:
            best = (val_loss, float(np.mean((p >= 0.5) == (yv == 1))), params.copy())
        if on_epoch is not None:
            on_epoch(epoch, val_loss)
        if stop:
            break
    if val is None:
        return params, epoch, epoch, history, math.nan, math.nan
    return best[2], epoch, stopper.best_epoch, history, best[0], best[1]


def train_one(config: HqnnConfig, train_cfg: TrainConfig, train_set, val_set, seed: int, fold_index: int = 0) -> FoldResult:
    """Mini-batch Adam with early stopping; returns the best-validation-loss parameters."""
    x, y = _xy(train_set)
    xv, yv = _xy(val_set)
    params, ran, best_epoch, history, vloss, vacc = _fit(config, train_cfg, x, y, seed, train_cfg.epochs, (xv, yv))
    return FoldResult(fold_index, vacc, vloss, ran, best_epoch, params, history)


def train_fixed(config: HqnnConfig, train_cfg: TrainConfig, train_set, seed: int, epochs: int) -> ModelParams:
    """Train for exactly ``epochs`` epochs with no validation set."""
    x, y = _xy(train_set)
    params, *_ = _fit(config, train_cfg, x, y, seed, max(1, int(epochs)))
    return params


def refit_epochs(folds: list[FoldResult]) -> int:
    """Epoch budget for the final model: median best epoch across folds, rounded up."""
    return max(1, int(math.ceil(float(np.median([f.best_epoch for f in folds])))))


@dataclass
class CvResult:
    folds: list[FoldResult]
    assignments: np.ndarray

    @property
    def cv_accuracy_mean(self) -> float:
        return float(np.mean([f.val_accuracy for f in self.folds]))


def cross_validate(config: HqnnConfig, train_cfg: TrainConfig, training_split, seed: int) -> CvResult:
    """Stratified k-fold CV over the training split only."""
    from .dataprep.split import stratified_kfold

    x, y = _xy(training_split)
    classes, counts = np.unique(y, return_counts=True)
    if classes.size < 2 or counts.min() < train_cfg.folds:
        raise StratificationError(
            f"each class needs at least {train_cfg.folds} rows for {train_cfg.folds}-fold CV, "
            f"class counts are {dict(zip(classes.astype(int).tolist(), counts.tolist()))}"
        )
    assignment = stratified_kfold(y, train_cfg.folds, train_cfg.split_seed)
    folds = []
    for k in range(train_cfg.folds):
        val = assignment == k
        folds.append(
            train_one(config, train_cfg, (x[~val], y[~val]), (x[val], y[val]), derive_seed(seed, "fold", k), k)
        )
    return CvResult(folds, assignment)
