"""Layered variational circuits with five entangling topologies.

Each layer is a rotation sub-layer (one RY per qubit, or a three-angle
``Rot = RZ RY RZ`` per qubit for ``Strong``) followed by a fixed pattern of
CNOTs.  Circuits are lists of ``Op`` records; trainable angles are referred
to by index into a flat parameter vector laid out layer by layer, qubit by
qubit.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache

import numpy as np

from .errors import ParameterError
from .seeding import make_rng
from .simcore import QuantumState, apply_cnot, apply_permutation, apply_ry, apply_rz, cnot_chain_permutation

N_LAYERS = 5


class ArchitectureKind(str, Enum):
    BASIC = "Basic"
    RING = "Ring"
    STAR = "Star"
    STRONG = "Strong"
    ALTERNATING = "Alternating"


@dataclass(frozen=True)
class Op:
    """One gate. ``param`` indexes the trainable vector for rotations."""

    name: str  # "RY", "RZ", "CNOT", or "CHAIN" (fused CNOT run; wires hold (c, t) pairs)
    wires: tuple[int, ...]
    param: int | None = None


def rotations_per_qubit(kind: ArchitectureKind) -> int:
    return 3 if ArchitectureKind(kind) is ArchitectureKind.STRONG else 1


def param_count(kind: ArchitectureKind, n_qubits: int, n_layers: int = N_LAYERS) -> int:
    return n_layers * n_qubits * rotations_per_qubit(kind)


def strong_stride(layer: int, n_qubits: int) -> int:
    if n_qubits < 2:
        return 0
    return 1 + layer % (n_qubits - 1)


def entangler_pairs(kind: ArchitectureKind, n: int, layer: int) -> list[tuple[int, int]]:
    """(control, target) CNOT pairs for one layer."""
    kind = ArchitectureKind(kind)
    if n < 2:
        return []
    if kind is ArchitectureKind.BASIC:
        return [(i, i + 1) for i in range(n - 1)]
    if kind is ArchitectureKind.RING:
        return [(i, i + 1) for i in range(n - 1)] + [(n - 1, 0)]
    if kind is ArchitectureKind.STAR:
        return [(0, j) for j in range(1, n)]
    if kind is ArchitectureKind.STRONG:
        r = strong_stride(layer, n)
        return [(i, (i + r) % n) for i in range(n)]
    start = layer % 2
    return [(i, i + 1) for i in range(start, n - 1, 2)]


@lru_cache(maxsize=None)
def build_circuit(kind: ArchitectureKind, n_qubits: int, n_layers: int = N_LAYERS) -> tuple[Op, ...]:
    kind = ArchitectureKind(kind)
    ops: list[Op] = []
    k = 0
    for layer in range(n_layers):
        for q in range(n_qubits):
            if kind is ArchitectureKind.STRONG:
                ops.append(Op("RZ", (q,), k))
                ops.append(Op("RY", (q,), k + 1))
                ops.append(Op("RZ", (q,), k + 2))
                k += 3
            else:
                ops.append(Op("RY", (q,), k))
                k += 1
        for c, t in entangler_pairs(kind, n_qubits, layer):
            ops.append(Op("CNOT", (c, t)))
    return tuple(ops)


def check_params(params, kind: ArchitectureKind, n_qubits: int, n_layers: int = N_LAYERS) -> np.ndarray:
    theta = np.asarray(params, dtype=float)
    expected = param_count(kind, n_qubits, n_layers)
    if theta.shape != (expected,):
        raise ParameterError(
            f"{ArchitectureKind(kind).value} on {n_qubits} qubits x {n_layers} layers needs "
            f"{expected} parameters, got shape {theta.shape}"
        )
    if not np.all(np.isfinite(theta)):
        raise ParameterError("circuit parameters contain non-finite values")
    return theta


@lru_cache(maxsize=None)
def fused_circuit(kind: ArchitectureKind, n_qubits: int, n_layers: int = N_LAYERS) -> tuple[Op, ...]:
    """``build_circuit`` with each run of consecutive CNOTs merged into one basis permutation."""
    fused: list[Op] = []
    run: list[tuple[int, int]] = []
    for op in build_circuit(kind, n_qubits, n_layers) + (None,):
        if op is not None and op.name == "CNOT":
            run.append(op.wires)
            continue
        if run:
            fused.append(Op("CHAIN", tuple(run)))
            run = []
        if op is not None:
            fused.append(op)
    return tuple(fused)


def apply_op(states: np.ndarray, n: int, op: Op, angle: float | None = None) -> np.ndarray:
    if op.name == "CNOT":
        return apply_cnot(states, n, *op.wires)
    if op.name == "CHAIN":
        return apply_permutation(states, cnot_chain_permutation(n, op.wires))
    if op.name == "RY":
        return apply_ry(states, n, angle, op.wires[0])
    if op.name == "RZ":
        return apply_rz(states, n, angle, op.wires[0])
    raise ValueError(f"unsupported op {op.name}")


def run_ops(states: np.ndarray, n: int, ops, theta) -> np.ndarray:
    """Apply a circuit to every row of ``states`` in place."""
    for op in ops:
        apply_op(states, n, op, None if op.param is None else theta[op.param])
    return states


def apply_ansatz(state: QuantumState, kind: ArchitectureKind, params, n_layers: int = N_LAYERS) -> QuantumState:
    theta = check_params(params, kind, state.n_qubits, n_layers)
    out = state.copy()
    run_ops(out.amplitudes.reshape(1, -1), out.n_qubits, build_circuit(ArchitectureKind(kind), state.n_qubits, n_layers), theta)
    return out


def init_params(kind: ArchitectureKind, n_qubits: int, seed: int, n_layers: int = N_LAYERS) -> np.ndarray:
    """Uniform on ``[0, pi)``."""
    rng = make_rng(seed, "circuit-init")
    return rng.uniform(0.0, math.pi, size=param_count(kind, n_qubits, n_layers))
