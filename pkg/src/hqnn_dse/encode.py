"""Classical-to-quantum feature maps.

All encoders take features already scaled into ``[0, 1]``.  Eight features
map to three qubits under amplitude encoding and to eight qubits (one per
feature) under every other scheme.
"""
from __future__ import annotations

import math
from enum import Enum

import numpy as np

from .errors import EncodingError, ValidationError
from .simcore import QuantumState, apply_ry, bit_table, z_signs

N_FEATURES = 8


class EncodingKind(str, Enum):
    AMPLITUDE = "Amplitude"
    ANGLE = "Angle"
    BASIS = "Basis"
    IQP = "IQP"
    QSAMPLE = "QSample"


ANGLE_SCALE = math.pi
BASIS_THRESHOLD = 0.5


def qubit_count(kind: EncodingKind, n_features: int = N_FEATURES) -> int:
    kind = EncodingKind(kind)
    if kind is EncodingKind.AMPLITUDE:
        n = int(round(math.log2(n_features)))
        if 2**n != n_features:
            raise EncodingError(f"amplitude encoding needs a power-of-two feature count, got {n_features}")
        return n
    return n_features


def _validate(features) -> np.ndarray:
    x = np.asarray(features, dtype=float)
    if x.ndim == 1:
        x = x[None, :]
    if x.ndim != 2 or x.shape[1] < 1:
        raise ValidationError(f"features must be a vector or a (rows, features) matrix, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise ValidationError("features contain non-finite values")
    if np.any(x < 0.0) or np.any(x > 1.0):
        bad = np.argwhere((x < 0.0) | (x > 1.0))[0]
        raise ValidationError(f"feature {bad[1]} of row {bad[0]} is {x[tuple(bad)]!r}, outside [0, 1]")
    return x


def _ring_pairs(n: int) -> list[tuple[int, int]]:
    if n < 2:
        return []
    if n == 2:
        return [(0, 1)]
    return [(i, (i + 1) % n) for i in range(n)]


def encode_batch(kind: EncodingKind, features) -> np.ndarray:
    """Prepared states for every row of ``features``; shape ``(rows, 2**n_qubits)``."""
    kind = EncodingKind(kind)
    x = _validate(features)
    rows, m = x.shape
    n = qubit_count(kind, m)
    dim = 2**n

    if kind is EncodingKind.AMPLITUDE:
        norms = np.linalg.norm(x, axis=1)
        if np.any(norms == 0.0):
            raise EncodingError(f"amplitude encoding of an all-zero feature vector (row {int(np.argmin(norms))})")
        return (x / norms[:, None]).astype(complex)

    if kind is EncodingKind.BASIS:
        bits = (x >= BASIS_THRESHOLD).astype(np.int64)
        index = bits @ (1 << np.arange(n - 1, -1, -1))
        states = np.zeros((rows, dim), dtype=complex)
        states[np.arange(rows), index] = 1.0
        return states

    if kind is EncodingKind.IQP:
        # H on every qubit, then one diagonal layer: RZ(pi x_i) on each qubit
        # and exp(-i pi x_i x_j Z_i Z_j / 2) on ring neighbours.
        signs = z_signs(n)
        phase = x @ signs.T
        pairs = _ring_pairs(n)
        if pairs:
            a, b = np.array(pairs).T
            phase = phase + (x[:, a] * x[:, b]) @ (signs[:, a] * signs[:, b]).T
        return np.exp(-0.5j * math.pi * phase) / math.sqrt(dim)

    if kind is EncodingKind.ANGLE:
        angles = ANGLE_SCALE * x
    else:  # QSample: P(qubit i reads 1) = x_i
        angles = 2.0 * np.arcsin(np.sqrt(x))
    states = np.zeros((rows, dim), dtype=complex)
    states[:, 0] = 1.0
    for q in range(n):
        apply_ry(states, n, angles[:, q], q)
    return states


def encode(kind: EncodingKind, features) -> QuantumState:
    """Encode one feature vector.

    >>> encode("Amplitude", [1, 0, 0, 0, 0, 0, 0, 0]).amplitudes[0]
    np.complex128(1+0j)
    """
    x = np.asarray(features, dtype=float)
    if x.ndim != 1:
        raise ValidationError(f"encode takes one feature vector, got shape {x.shape}")
    kind = EncodingKind(kind)
    states = encode_batch(kind, x)
    return QuantumState(qubit_count(kind, x.shape[0]), states[0])


def marginal_one_probabilities(state: QuantumState) -> np.ndarray:
    """``P(qubit q reads 1)`` for every qubit."""
    return state.probabilities() @ bit_table(state.n_qubits)
