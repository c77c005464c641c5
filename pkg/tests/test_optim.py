import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from hqnn_dse.dataprep import preprocess, separable_spec, stratified_kfold, synth_dataset
from hqnn_dse.errors import ParameterError, StratificationError
from hqnn_dse.model import HqnnConfig
from hqnn_dse.optim import (
    AdamState,
    EarlyStopping,
    FoldResult,
    TrainConfig,
    adam_step,
    cross_validate,
    refit_epochs,
    trace_early_stopping,
    train_one,
)

# best at epoch 2, then five epochs without a 1e-6 improvement
PATIENCE_FIXTURE = [1.0, 0.8, 0.85, 0.9, 0.8 - 1e-7, 0.95, 0.81, 0.3]


def test_adam_first_step_by_hand():
    g = np.array([0.5, -2.0, 0.0])
    new, state = adam_step(np.zeros(3), g, AdamState.zeros(3), t=1, lr=0.1)
    # m_hat = g, v_hat = g^2 -> step = lr * g / (|g| + eps)
    np.testing.assert_allclose(new, -0.1 * g / (np.abs(g) + 1e-8))
    np.testing.assert_allclose(state.m, 0.1 * g)
    np.testing.assert_allclose(state.v, 0.001 * g * g)


def test_adam_second_step_by_hand():
    g1, g2 = np.array([1.0]), np.array([3.0])
    p1, s1 = adam_step(np.zeros(1), g1, AdamState.zeros(1), 1, lr=0.01)
    p2, _ = adam_step(p1, g2, s1, 2, lr=0.01)
    m = 0.9 * 0.1 * 1 + 0.1 * 3
    v = 0.999 * 0.001 * 1 + 0.001 * 9
    step = 0.01 * (m / (1 - 0.81)) / (math.sqrt(v / (1 - 0.999**2)) + 1e-8)
    np.testing.assert_allclose(p2, p1 - step)


def test_adam_minimises_quadratic():
    target = np.array([1.0, -2.0, 0.5])
    x, state = np.zeros(3), AdamState.zeros(3)
    for t in range(1, 3001):
        x, state = adam_step(x, 2 * (x - target), state, t, lr=0.05)
    np.testing.assert_allclose(x, target, atol=1e-3)


def test_adam_rejects_bad_input():
    with pytest.raises(ParameterError):
        adam_step(np.zeros(2), np.zeros(3), AdamState.zeros(2), 1)
    with pytest.raises(ParameterError):
        adam_step(np.zeros(2), np.zeros(2), AdamState.zeros(2), 0)


def test_patience_fixture_halts_at_epoch_7():
    assert trace_early_stopping(PATIENCE_FIXTURE) == (7, 2)


def test_min_delta_is_strict():
    s = EarlyStopping(patience=2, min_delta=1e-6)
    s.update(1, 1.0)
    s.update(2, 1.0 - 5e-7)
    assert s.best_epoch == 1 and not s.improved_last


@given(st.lists(st.floats(0, 10, allow_nan=False), min_size=1, max_size=60))
def test_early_stopping_properties(losses):
    ran, best = trace_early_stopping(losses)
    assert 1 <= best <= ran <= len(losses)
    assert ran == len(losses) or ran - best == 5


def test_stratified_folds_preserve_class_counts():
    y = np.array([1] * 175 + [0] * 105)
    a = stratified_kfold(y, 10, 42)
    for k in range(10):
        pos = int(np.sum(y[a == k]))
        assert abs(pos - 17.5) <= 1 and abs(int(np.sum(a == k)) - pos - 10.5) <= 1
    np.testing.assert_array_equal(a, stratified_kfold(y, 10, 42))


def test_too_few_rows_for_folds():
    with pytest.raises(StratificationError):
        stratified_kfold(np.array([1] * 20 + [0] * 5), 10)


def _fold(best):
    return FoldResult(0, 0.5, 0.5, best + 5, best, None)


def test_refit_epochs_median():
    assert refit_epochs([_fold(b) for b in (3, 4, 10)]) == 4
    assert refit_epochs([_fold(b) for b in (3, 4)]) == 4
    assert refit_epochs([_fold(1)]) == 1


def test_train_config_overrides():
    c = TrainConfig().with_overrides(epochs=3, folds=None)
    assert c.epochs == 3 and c.folds == 10
    assert TrainConfig.from_dict(c.to_dict()) == c
    with pytest.raises(ParameterError):
        TrainConfig(folds=1)


@pytest.fixture(scope="module")
def small_data():
    return preprocess(synth_dataset(separable_spec(24), 120, seed=3))


def test_zero_learning_rate_stops_after_patience(small_data):
    train, _ = small_data
    cfg = HqnnConfig("Amplitude", "Ring", "PauliZ")
    r = train_one(cfg, TrainConfig(learning_rate=0.0, epochs=50), train, train, seed=1)
    assert r.epochs_ran == 6 and r.best_epoch == 1
    assert len(set(r.val_loss_history)) == 1


def test_training_reduces_validation_loss(small_data):
    train, test = small_data
    cfg = HqnnConfig("Amplitude", "Ring", "PauliZ")
    r = train_one(cfg, TrainConfig(learning_rate=0.05, epochs=15), train, test, seed=2)
    assert min(r.val_loss_history) < r.val_loss_history[0] - 0.05
    assert r.val_loss == min(r.val_loss_history)


def test_cross_validate_is_reproducible(small_data):
    train, _ = small_data
    cfg = HqnnConfig("Amplitude", "Star", "PauliZ", shots=100)
    tc = TrainConfig(epochs=2, folds=3)
    a = cross_validate(cfg, tc, train, seed=9)
    b = cross_validate(cfg, tc, train, seed=9)
    assert [f.val_accuracy for f in a.folds] == [f.val_accuracy for f in b.folds]
    assert np.bincount(a.assignments).tolist() == [28, 28, 28]
    assert a.cv_accuracy_mean == pytest.approx(np.mean([f.val_accuracy for f in a.folds]))


def test_cross_validate_rejects_tiny_class(small_data):
    train, _ = small_data
    x, y = train.features[:40], np.r_[np.ones(37), np.zeros(3)]
    with pytest.raises(StratificationError):
        cross_validate(HqnnConfig("Amplitude", "Ring", "PauliZ"), TrainConfig(folds=10), (x, y), 0)
