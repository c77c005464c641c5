"""Dense state-vector simulator.

Two layers live here.  The batched kernels (``apply_1q``, ``apply_cnot``,
``z_expectations`` ...) act on arrays of shape ``(rows, 2**n)`` and are what
the model uses for training.  ``QuantumState`` and the functions around it
are the single-state public surface, built on the same kernels.

Qubit 0 is the most significant bit of the basis-state index, so
``|q0 q1 ... q_{n-1}>`` has index ``q0 * 2**(n-1) + ... + q_{n-1}``.

Gate conventions: ``RY(t) = exp(-i t Y / 2)`` and likewise for RX/RZ;
``Rot(a, b, c) = RZ(c) RY(b) RZ(a)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache

import numpy as np

from .errors import ConfigurationError, ContractError, NumericError, QubitIndexError
from .seeding import make_rng

MAX_QUBITS = 12
SQRT1_2 = 1.0 / math.sqrt(2.0)

H_MATRIX = np.array([[1, 1], [1, -1]], dtype=complex) * SQRT1_2
X_MATRIX = np.array([[0, 1], [1, 0]], dtype=complex)
Y_MATRIX = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z_MATRIX = np.array([[1, 0], [0, -1]], dtype=complex)
SDG_MATRIX = np.array([[1, 0], [0, -1j]], dtype=complex)
# maps Y eigenstates onto Z eigenstates: apply S-dagger, then H
Y_TO_Z = H_MATRIX @ SDG_MATRIX


def rx_matrix(theta):
    c, s = math.cos(theta / 2), math.sin(theta / 2)
    return np.array([[c, -1j * s], [-1j * s, c]], dtype=complex)


def ry_matrix(theta):
    c, s = math.cos(theta / 2), math.sin(theta / 2)
    return np.array([[c, -s], [s, c]], dtype=complex)


def rz_matrix(theta):
    return np.array([[np.exp(-0.5j * theta), 0], [0, np.exp(0.5j * theta)]], dtype=complex)


def rot_matrix(alpha, beta, gamma):
    return rz_matrix(gamma) @ ry_matrix(beta) @ rz_matrix(alpha)


# ---------------------------------------------------------------------------
# batched kernels


@lru_cache(maxsize=None)
def bit_table(n: int) -> np.ndarray:
    """``(2**n, n)`` array; entry ``[k, q]`` is the value of qubit ``q`` in basis state ``k``."""
    idx = np.arange(2**n)
    shifts = np.arange(n - 1, -1, -1)
    table = (idx[:, None] >> shifts[None, :]) & 1
    table.setflags(write=False)
    return table


@lru_cache(maxsize=None)
def z_signs(n: int) -> np.ndarray:
    """``(2**n, n)`` eigenvalues of ``Z_q`` on each basis state."""
    signs = 1.0 - 2.0 * bit_table(n)
    signs.setflags(write=False)
    return signs


@lru_cache(maxsize=None)
def cnot_permutation(n: int, control: int, target: int) -> np.ndarray:
    idx = np.arange(2**n)
    cbit = 1 << (n - 1 - control)
    tbit = 1 << (n - 1 - target)
    perm = np.where(idx & cbit, idx ^ tbit, idx)
    perm.setflags(write=False)
    return perm


@lru_cache(maxsize=None)
def cz_diagonal(n: int, a: int, b: int) -> np.ndarray:
    bits = bit_table(n)
    diag = np.where(bits[:, a] & bits[:, b], -1.0, 1.0)
    diag.setflags(write=False)
    return diag


def compose_permutations(first: np.ndarray, second: np.ndarray) -> np.ndarray:
    """Index permutation equivalent to gathering by ``first`` and then by ``second``."""
    return first[second]


@lru_cache(maxsize=None)
def cnot_chain_permutation(n: int, pairs: tuple[tuple[int, int], ...]) -> np.ndarray:
    """Single permutation equal to applying the CNOTs in ``pairs`` in order."""
    perm = np.arange(2**n)
    for c, t in pairs:
        perm = compose_permutations(perm, cnot_permutation(n, c, t))
    perm.setflags(write=False)
    return perm


def apply_permutation(states: np.ndarray, perm: np.ndarray) -> np.ndarray:
    states[:] = states[:, perm]
    return states


def _split(states: np.ndarray, n: int, q: int) -> np.ndarray:
    return states.reshape(states.shape[0], 2**q, 2, 2 ** (n - q - 1))


def apply_1q(states: np.ndarray, n: int, matrix: np.ndarray, q: int) -> np.ndarray:
    """Apply a 2x2 unitary to qubit ``q`` of every row, in place.

    ``matrix`` is either one ``(2, 2)`` matrix shared by all rows or a
    ``(rows, 2, 2)`` stack with one matrix per row.
    """
    view = _split(states, n, q)
    a = view[:, :, 0, :].copy()
    b = view[:, :, 1, :]
    m = np.asarray(matrix)
    if not np.iscomplexobj(states):
        if np.any(np.imag(m)):
            raise TypeError("complex gate applied to a real state array")
        m = m.real
    if m.ndim == 2:
        view[:, :, 0, :] = m[0, 0] * a + m[0, 1] * b
        view[:, :, 1, :] = m[1, 0] * a + m[1, 1] * b
    else:
        m = m[:, :, :, None, None]
        view[:, :, 0, :] = m[:, 0, 0] * a + m[:, 0, 1] * b
        view[:, :, 1, :] = m[:, 1, 0] * a + m[:, 1, 1] * b
    return states


def apply_ry(states: np.ndarray, n: int, theta, q: int) -> np.ndarray:
    """RY on qubit ``q``; ``theta`` is a scalar or one angle per row."""
    view = _split(states, n, q)
    theta = np.asarray(theta, dtype=float)
    c = np.cos(theta / 2)
    s = np.sin(theta / 2)
    if theta.ndim:
        c = c[:, None, None]
        s = s[:, None, None]
    a = view[:, :, 0, :].copy()
    b = view[:, :, 1, :]
    view[:, :, 0, :] = c * a - s * b
    view[:, :, 1, :] = s * a + c * b
    return states


def apply_rx(states: np.ndarray, n: int, theta, q: int) -> np.ndarray:
    view = _split(states, n, q)
    theta = np.asarray(theta, dtype=float)
    c = np.cos(theta / 2)
    s = -1j * np.sin(theta / 2)
    if theta.ndim:
        c = c[:, None, None]
        s = s[:, None, None]
    a = view[:, :, 0, :].copy()
    b = view[:, :, 1, :]
    view[:, :, 0, :] = c * a + s * b
    view[:, :, 1, :] = s * a + c * b
    return states


def apply_rz(states: np.ndarray, n: int, theta, q: int) -> np.ndarray:
    view = _split(states, n, q)
    theta = np.asarray(theta, dtype=float)
    p0 = np.exp(-0.5j * theta)
    p1 = np.exp(0.5j * theta)
    if theta.ndim:
        p0 = p0[:, None, None]
        p1 = p1[:, None, None]
    view[:, :, 0, :] *= p0
    view[:, :, 1, :] *= p1
    return states


def apply_diagonal(states: np.ndarray, diag: np.ndarray) -> np.ndarray:
    """Multiply by a diagonal operator: ``(2**n,)`` shared or ``(rows, 2**n)``."""
    states *= diag
    return states


def apply_cnot(states: np.ndarray, n: int, control: int, target: int) -> np.ndarray:
    return apply_permutation(states, cnot_permutation(n, control, target))


def apply_cz(states: np.ndarray, n: int, a: int, b: int) -> np.ndarray:
    states *= cz_diagonal(n, a, b)
    return states


def rotate_to_basis(states: np.ndarray, n: int, basis: str) -> np.ndarray:
    """Copy of ``states`` rotated so that Z-sampling measures ``basis`` on every qubit."""
    if basis == "Z":
        return states.copy()
    out = states.astype(complex) if basis == "Y" else states.copy()
    m = {"X": H_MATRIX, "Y": Y_TO_Z}[basis]
    for q in range(n):
        apply_1q(out, n, m, q)
    return out


def probabilities(states: np.ndarray) -> np.ndarray:
    if np.iscomplexobj(states):
        return states.real**2 + states.imag**2
    return states**2


def z_expectations(states: np.ndarray, n: int) -> np.ndarray:
    """Exact ``<Z_q>`` for every row and qubit, shape ``(rows, n)``."""
    return probabilities(states) @ z_signs(n)


def pauli_expectations(states: np.ndarray, n: int, basis: str) -> np.ndarray:
    """Exact per-qubit ``<X_q>``, ``<Y_q>`` or ``<Z_q>``; shape ``(rows, n)``."""
    return z_expectations(rotate_to_basis(states, n, basis), n)


def sample_z_expectations(states: np.ndarray, n: int, shots: int, rng: np.random.Generator) -> np.ndarray:
    """Shot estimate of per-qubit ``<Z_q>``.

    Each row draws ``shots`` full bitstrings from its Born distribution;
    the estimate is the mean ``+/-1`` eigenvalue of each qubit.
    """
    probs = probabilities(states)
    probs /= probs.sum(axis=1, keepdims=True)
    counts = rng.multinomial(shots, probs)
    return (counts @ z_signs(n)) / shots


def sample_pauli_expectations(states, n, basis, shots, rng):
    return sample_z_expectations(rotate_to_basis(states, n, basis), n, shots, rng)


# ---------------------------------------------------------------------------
# single-state surface


class ObservableKind(str, Enum):
    PAULI_X = "PauliX"
    PAULI_Y = "PauliY"
    PAULI_Z = "PauliZ"
    HADAMARD = "Hadamard"


@dataclass(frozen=True)
class Observable:
    kind: ObservableKind
    qubit: int

    def __post_init__(self):
        object.__setattr__(self, "kind", ObservableKind(self.kind))


@dataclass(frozen=True)
class ShotPlan:
    """``shots=None`` means analytic (exact) expectation values."""

    shots: int | None = None
    seed: int = 0

    def __post_init__(self):
        if self.shots is not None:
            if isinstance(self.shots, bool) or int(self.shots) != self.shots or self.shots < 1:
                raise ConfigurationError(f"shot count must be a positive integer, got {self.shots!r}")
            object.__setattr__(self, "shots", int(self.shots))

    @property
    def analytic(self) -> bool:
        return self.shots is None

    def label(self) -> str:
        return "analytic" if self.shots is None else str(self.shots)


ANALYTIC = ShotPlan(None)


@dataclass(eq=False)
class QuantumState:
    n_qubits: int
    amplitudes: np.ndarray = field(repr=False)

    def __post_init__(self):
        _check_qubit_count(self.n_qubits)
        amps = np.asarray(self.amplitudes, dtype=complex)
        if amps.shape != (2**self.n_qubits,):
            raise ConfigurationError(
                f"expected {2**self.n_qubits} amplitudes for {self.n_qubits} qubits, got shape {amps.shape}"
            )
        self.amplitudes = amps

    def copy(self) -> "QuantumState":
        return QuantumState(self.n_qubits, self.amplitudes.copy())

    def norm(self) -> float:
        return float(np.sum(np.abs(self.amplitudes) ** 2))

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def _rows(self) -> np.ndarray:
        return self.amplitudes.reshape(1, -1)


def _check_qubit_count(n):
    if isinstance(n, bool) or not isinstance(n, (int, np.integer)) or not 1 <= n <= MAX_QUBITS:
        raise ConfigurationError(f"n_qubits must be an integer in [1, {MAX_QUBITS}], got {n!r}")


def _check_qubit(state: QuantumState, q, what="target"):
    if isinstance(q, bool) or not isinstance(q, (int, np.integer)) or not 0 <= q < state.n_qubits:
        raise QubitIndexError(f"{what} qubit {q!r} out of range for {state.n_qubits} qubits")


def init_zero(n_qubits: int) -> QuantumState:
    _check_qubit_count(n_qubits)
    amps = np.zeros(2**n_qubits, dtype=complex)
    amps[0] = 1.0
    return QuantumState(n_qubits, amps)


def gate_matrix(gate: str, *angles: float) -> np.ndarray:
    """2x2 matrix for a named single-qubit gate."""
    for a in angles:
        if not math.isfinite(a):
            raise NumericError(f"non-finite angle {a!r} for gate {gate}")
    g = gate.upper()
    fixed = {"H": H_MATRIX, "X": X_MATRIX, "Y": Y_MATRIX, "Z": Z_MATRIX}
    if g in fixed:
        if angles:
            raise ConfigurationError(f"gate {gate} takes no angles")
        return fixed[g]
    rotations = {"RX": (rx_matrix, 1), "RY": (ry_matrix, 1), "RZ": (rz_matrix, 1), "ROT": (rot_matrix, 3)}
    if g not in rotations:
        raise ConfigurationError(f"unknown single-qubit gate {gate!r}")
    fn, arity = rotations[g]
    if len(angles) != arity:
        raise ConfigurationError(f"gate {gate} takes {arity} angle(s), got {len(angles)}")
    return fn(*angles)


def apply_gate(state: QuantumState, gate: str, target: int, *angles: float) -> QuantumState:
    """Return a new state with ``gate`` applied to ``target``.

    >>> apply_gate(init_zero(1), "RY", 0, math.pi).probabilities().round(12)
    array([0., 1.])
    """
    _check_qubit(state, target)
    m = gate_matrix(gate, *angles)
    out = state.copy()
    apply_1q(out._rows(), out.n_qubits, m, target)
    return out


def apply_two_qubit(state: QuantumState, gate: str, control: int, target: int) -> QuantumState:
    _check_qubit(state, control, "control")
    _check_qubit(state, target)
    if control == target:
        raise QubitIndexError(f"control and target are both qubit {control}")
    out = state.copy()
    g = gate.upper()
    if g in ("CNOT", "CX"):
        apply_cnot(out._rows(), out.n_qubits, control, target)
    elif g == "CZ":
        apply_cz(out._rows(), out.n_qubits, control, target)
    else:
        raise ConfigurationError(f"unknown two-qubit gate {gate!r}")
    return out


_BASIS = {ObservableKind.PAULI_X: "X", ObservableKind.PAULI_Y: "Y", ObservableKind.PAULI_Z: "Z"}


def expectation(state: QuantumState, obs: Observable) -> float:
    """Exact expectation value; the Hadamard observable is ``(X + Z) / sqrt(2)``."""
    _check_qubit(state, obs.qubit, "observable")
    rows = state._rows()
    if obs.kind is ObservableKind.HADAMARD:
        x = pauli_expectations(rows, state.n_qubits, "X")[0, obs.qubit]
        z = z_expectations(rows, state.n_qubits)[0, obs.qubit]
        return float((x + z) * SQRT1_2)
    return float(pauli_expectations(rows, state.n_qubits, _BASIS[obs.kind])[0, obs.qubit])


def sampled_expectation(state: QuantumState, obs: Observable, plan: ShotPlan) -> float:
    """Shot estimate of ``expectation(state, obs)``; deterministic in ``plan.seed``.

    The Hadamard observable spends ``ceil(shots / 2)`` shots in the X basis
    and the same number in the Z basis.
    """
    if plan.analytic:
        raise ContractError("sampled_expectation needs a finite shot plan; use expectation() for analytic values")
    _check_qubit(state, obs.qubit, "observable")
    rows = state._rows()
    n = state.n_qubits
    rng = make_rng(plan.seed)
    if obs.kind is ObservableKind.HADAMARD:
        half = -(-plan.shots // 2)
        x = sample_pauli_expectations(rows, n, "X", half, rng)[0, obs.qubit]
        z = sample_pauli_expectations(rows, n, "Z", half, rng)[0, obs.qubit]
        return float((x + z) * SQRT1_2)
    return float(sample_pauli_expectations(rows, n, _BASIS[obs.kind], plan.shots, rng)[0, obs.qubit])
