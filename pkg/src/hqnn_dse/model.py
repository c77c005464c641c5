"""Hybrid model: encode -> ansatz -> measure -> linear head + sigmoid.

Circuit gradients use the two-term parameter-shift rule.  Every rotation in
the ansatz is ``exp(-i t P / 2)`` for a Pauli ``P``, so for each parameter

    d<O>/dt = (<O>(t + pi/2) - <O>(t - pi/2)) / 2

holds exactly.  The executor builds all shifted circuits in one pass: when it
reaches the gate that owns parameter ``k`` it forks two copies of the
unshifted state, applies the gate at ``t_k +/- pi/2`` to those copies and at
``t_k`` to everything already in flight.  Shifted branches therefore reuse the
simulated prefix instead of restarting from the encoded state.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy.special import expit

from .ansatz import N_LAYERS, ArchitectureKind, Op, apply_op, check_params, fused_circuit, init_params, param_count
from .encode import EncodingKind, encode_batch, qubit_count
from .errors import ConfigurationError, DataError, ParameterError
from .seeding import make_rng
from .simcore import (
    ANALYTIC,
    SQRT1_2,
    QuantumState,
    ShotPlan,
    pauli_expectations,
    sample_pauli_expectations,
)

SHIFT = math.pi / 2
P_CLAMP = 1e-7


class MeasurementKind(str, Enum):
    PAULI_X = "PauliX"
    PAULI_Y = "PauliY"
    PAULI_Z = "PauliZ"
    PAULI_XYZ = "PauliXYZ"
    HADAMARD = "Hadamard"


@dataclass(frozen=True)
class HqnnConfig:
    """One point of the design grid.

    ``shots=None`` is analytic evaluation.  The sampling seed is not part of
    the configuration; it is derived per run and per evaluation.
    """

    encoding: EncodingKind
    architecture: ArchitectureKind
    measurement: MeasurementKind
    shots: int | None = None
    n_layers: int = N_LAYERS

    def __post_init__(self):
        object.__setattr__(self, "encoding", EncodingKind(self.encoding))
        object.__setattr__(self, "architecture", ArchitectureKind(self.architecture))
        object.__setattr__(self, "measurement", MeasurementKind(self.measurement))
        ShotPlan(self.shots)  # validates
        if self.n_layers < 1:
            raise ConfigurationError(f"n_layers must be >= 1, got {self.n_layers}")

    @property
    def n_qubits(self) -> int:
        return qubit_count(self.encoding)

    @property
    def n_params(self) -> int:
        return param_count(self.architecture, self.n_qubits, self.n_layers)

    @property
    def n_features(self) -> int:
        return feature_count(self.measurement, self.n_qubits)

    def shot_plan(self, seed: int) -> ShotPlan:
        return ShotPlan(self.shots, seed)

    def label(self) -> str:
        shots = "analytic" if self.shots is None else str(self.shots)
        return f"{self.encoding.value}/{self.architecture.value}/{self.measurement.value}/{shots}"

    def to_dict(self) -> dict:
        return {
            "encoding": self.encoding.value,
            "architecture": self.architecture.value,
            "measurement": self.measurement.value,
            "shots": self.shots,
            "n_layers": self.n_layers,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "HqnnConfig":
        return cls(d["encoding"], d["architecture"], d["measurement"], d.get("shots"), d.get("n_layers", N_LAYERS))


def feature_count(measurement: MeasurementKind, n_qubits: int) -> int:
    return 3 * n_qubits if MeasurementKind(measurement) is MeasurementKind.PAULI_XYZ else n_qubits


@dataclass
class ModelParams:
    circuit: np.ndarray
    head_weights: np.ndarray
    head_bias: float = 0.0

    def copy(self) -> "ModelParams":
        return ModelParams(self.circuit.copy(), self.head_weights.copy(), float(self.head_bias))

    def flat(self) -> np.ndarray:
        return np.concatenate([self.circuit, self.head_weights, [self.head_bias]])

    def unflatten(self, vector) -> "ModelParams":
        v = np.asarray(vector, dtype=float)
        nc, nw = self.circuit.size, self.head_weights.size
        if v.shape != (nc + nw + 1,):
            raise ParameterError(f"expected {nc + nw + 1} values, got shape {v.shape}")
        return ModelParams(v[:nc].copy(), v[nc : nc + nw].copy(), float(v[-1]))

    def to_dict(self) -> dict:
        return {
            "circuit": self.circuit.tolist(),
            "head_weights": self.head_weights.tolist(),
            "head_bias": self.head_bias,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ModelParams":
        return cls(np.asarray(d["circuit"], float), np.asarray(d["head_weights"], float), float(d["head_bias"]))


def init_model(config: HqnnConfig, seed: int) -> ModelParams:
    """Circuit angles uniform on [0, pi); head starts at zero (p = 0.5)."""
    circuit = init_params(config.architecture, config.n_qubits, seed, config.n_layers)
    return ModelParams(circuit, np.zeros(config.n_features), 0.0)


def check_model(config: HqnnConfig, params: ModelParams) -> None:
    check_params(params.circuit, config.architecture, config.n_qubits, config.n_layers)
    if np.shape(params.head_weights) != (config.n_features,):
        raise ParameterError(
            f"{config.measurement.value} on {config.n_qubits} qubits needs {config.n_features} head weights, "
            f"got shape {np.shape(params.head_weights)}"
        )


# ---------------------------------------------------------------------------
# measurement


def measure_batch(states: np.ndarray, n: int, measurement: MeasurementKind, shots: int | None = None, rng=None) -> np.ndarray:
    """Per-qubit expectation features for every row of ``states``.

    With a finite shot count the budget is split evenly over the bases a
    measurement needs (rounding up): ``PauliXYZ`` spends ``ceil(shots/3)`` per
    basis and ``Hadamard`` spends ``ceil(shots/2)`` on each of X and Z.
    """
    measurement = MeasurementKind(measurement)
    bases = {
        MeasurementKind.PAULI_X: "X",
        MeasurementKind.PAULI_Y: "Y",
        MeasurementKind.PAULI_Z: "Z",
        MeasurementKind.PAULI_XYZ: "XYZ",
        MeasurementKind.HADAMARD: "XZ",
    }[measurement]
    if shots is None:
        parts = [pauli_expectations(states, n, b) for b in bases]
    else:
        per_basis = -(-shots // len(bases))
        parts = [sample_pauli_expectations(states, n, b, per_basis, rng) for b in bases]
    if measurement is MeasurementKind.HADAMARD:
        return (parts[0] + parts[1]) * SQRT1_2
    return parts[0] if len(parts) == 1 else np.concatenate(parts, axis=1)


def measure_features(state: QuantumState, measurement: MeasurementKind, plan: ShotPlan = ANALYTIC) -> np.ndarray:
    rng = None if plan.analytic else make_rng(plan.seed)
    return measure_batch(state.amplitudes.reshape(1, -1), state.n_qubits, measurement, plan.shots, rng)[0]


# ---------------------------------------------------------------------------
# circuit execution


def circuit_features(config: HqnnConfig, circuit, features, plan: ShotPlan = ANALYTIC) -> np.ndarray:
    """Measured feature vectors, shape ``(rows, n_features)``."""
    n = config.n_qubits
    ops = fused_circuit(config.architecture, n, config.n_layers)
    states = _as_real_if_possible(encode_batch(config.encoding, features), ops)
    theta = np.asarray(circuit, dtype=float)
    for op in ops:
        apply_op(states, n, op, None if op.param is None else theta[op.param])
    rng = None if plan.analytic else make_rng(plan.seed, "base")
    return measure_batch(states, n, config.measurement, plan.shots, rng)


def _as_real_if_possible(states: np.ndarray, ops) -> np.ndarray:
    """RY and CNOT keep real amplitudes real; use float64 storage when they allow it."""
    if all(op.name in ("RY", "CNOT", "CHAIN") for op in ops) and not np.any(states.imag):
        return np.ascontiguousarray(states.real)
    return states


def shifted_states(states: np.ndarray, n: int, ops, theta) -> tuple[np.ndarray, list[int]]:
    """Run ``ops`` on ``states`` together with every parameter-shifted variant.

    Returns ``(blocks, order)``.  ``blocks[0]`` holds the unshifted outputs;
    for the ``j``-th parameterised op (parameter ``order[j]``) the
    ``+pi/2`` outputs are in ``blocks[1 + 2j]`` and the ``-pi/2`` outputs in
    ``blocks[2 + 2j]``.
    """
    rows, dim = states.shape
    n_shift = sum(op.param is not None for op in ops)
    blocks = np.empty((1 + 2 * n_shift, rows, dim), dtype=states.dtype)
    blocks[0] = states
    active = 1
    order: list[int] = []
    for op in ops:
        if op.param is None:
            apply_op(blocks[:active].reshape(-1, dim), n, op)
            continue
        t = theta[op.param]
        blocks[active] = blocks[0]
        blocks[active + 1] = blocks[0]
        apply_op(blocks[active], n, op, t + SHIFT)
        apply_op(blocks[active + 1], n, op, t - SHIFT)
        apply_op(blocks[:active].reshape(-1, dim), n, op, t)
        order.append(op.param)
        active += 2
    return blocks, order


def parameter_shift_jacobian(
    states: np.ndarray,
    n: int,
    ops,
    theta,
    measurement: MeasurementKind,
    plan: ShotPlan = ANALYTIC,
) -> tuple[np.ndarray, np.ndarray]:
    """Measured features and their parameter-shift Jacobian.

    Returns ``(features, jac)`` with shapes ``(rows, m)`` and
    ``(n_params, rows, m)``.  Under a finite shot plan each circuit family
    (unshifted, and the shifted pair of each parameter) draws from its own
    stream derived from ``plan.seed`` and the parameter index.
    """
    theta = np.asarray(theta, dtype=float)
    blocks, order = shifted_states(_as_real_if_possible(np.asarray(states, dtype=complex), ops), n, ops, theta)
    rows, dim = states.shape
    if plan.analytic:
        feats = measure_batch(blocks.reshape(-1, dim), n, measurement)
        feats = feats.reshape(blocks.shape[0], rows, -1)
    else:
        parts = [measure_batch(blocks[0], n, measurement, plan.shots, make_rng(plan.seed, "base"))[None]]
        for j, k in enumerate(order):
            pair = blocks[1 + 2 * j : 3 + 2 * j].reshape(-1, dim)
            f = measure_batch(pair, n, measurement, plan.shots, make_rng(plan.seed, "shift", k))
            parts.append(f.reshape(2, rows, -1))
        feats = np.concatenate(parts, axis=0)
    jac = np.zeros((theta.size, rows, feats.shape[-1]))
    for j, k in enumerate(order):
        jac[k] += 0.5 * (feats[1 + 2 * j] - feats[2 + 2 * j])
    return feats[0], jac


# ---------------------------------------------------------------------------
# forward, loss, gradient


def _check_rows(features) -> np.ndarray:
    x = np.asarray(features, dtype=float)
    if x.ndim == 1:
        x = x[None, :]
    if x.shape[0] == 0:
        raise DataError("empty batch")
    return x


def predict_proba(config: HqnnConfig, params: ModelParams, features, seed: int = 0) -> np.ndarray:
    """Class-1 probability for each row; ``seed`` drives shot sampling."""
    check_model(config, params)
    x = _check_rows(features)
    f = circuit_features(config, params.circuit, x, config.shot_plan(seed))
    return expit(f @ params.head_weights + params.head_bias)


def forward(config: HqnnConfig, params: ModelParams, features, seed: int = 0) -> float:
    x = np.asarray(features, dtype=float)
    if x.ndim != 1:
        raise DataError(f"forward takes one feature row, got shape {x.shape}")
    return float(predict_proba(config, params, x, seed)[0])


def loss(p, label) -> np.ndarray | float:
    """Binary cross-entropy with ``p`` clamped to ``[1e-7, 1 - 1e-7]``."""
    pc = np.clip(p, P_CLAMP, 1.0 - P_CLAMP)
    y = np.asarray(label, dtype=float)
    out = -(y * np.log(pc) + (1.0 - y) * np.log1p(-pc))
    return float(out) if np.ndim(out) == 0 else out


def gradient(config: HqnnConfig, params: ModelParams, features, labels, seed: int = 0) -> tuple[float, ModelParams]:
    """Mean batch loss and its gradient with respect to every model parameter.

    Head gradients are analytic.  Circuit gradients come from the
    parameter-shift Jacobian chained through the head; rows whose probability
    sits on the loss clamp contribute nothing, matching the clamped loss.
    """
    check_model(config, params)
    x = _check_rows(features)
    y = np.asarray(labels, dtype=float).reshape(-1)
    if y.shape[0] != x.shape[0]:
        raise DataError(f"{x.shape[0]} feature rows but {y.shape[0]} labels")
    n = config.n_qubits
    states = encode_batch(config.encoding, x)
    ops = fused_circuit(config.architecture, n, config.n_layers)
    feats, jac = parameter_shift_jacobian(states, n, ops, params.circuit, config.measurement, config.shot_plan(seed))

    p = expit(feats @ params.head_weights + params.head_bias)
    batch_loss = float(np.mean(loss(p, y)))
    inside = (p >= P_CLAMP) & (p <= 1.0 - P_CLAMP)
    dz = np.where(inside, p - y, 0.0) / x.shape[0]

    grad_w = feats.T @ dz
    grad_b = float(dz.sum())
    grad_c = np.einsum("krm,m,r->k", jac, params.head_weights, dz)
    return batch_loss, ModelParams(grad_c, grad_w, grad_b)
