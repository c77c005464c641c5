"""Independent reference implementations used only by the tests.

Dense-matrix simulation builds every gate as a full 2^n x 2^n operator from
Kronecker products and matrix exponentials, sharing no code with the
package's strided kernels.
"""
from __future__ import annotations

import itertools
from functools import reduce

import numpy as np
from scipy.linalg import expm

I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)
H = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
P0 = np.array([[1, 0], [0, 0]], dtype=complex)
P1 = np.array([[0, 0], [0, 1]], dtype=complex)
PAULI = {"X": X, "Y": Y, "Z": Z}


def rotation(axis: str, theta: float) -> np.ndarray:
    return expm(-0.5j * theta * PAULI[axis])


def embed(n: int, ops: dict[int, np.ndarray]) -> np.ndarray:
    """Kronecker product with ``ops[q]`` on qubit q (qubit 0 most significant)."""
    return reduce(np.kron, [ops.get(q, I2) for q in range(n)])


def single(n: int, m: np.ndarray, q: int) -> np.ndarray:
    return embed(n, {q: m})


def cnot(n: int, c: int, t: int) -> np.ndarray:
    return embed(n, {c: P0}) + embed(n, {c: P1, t: X})


def cz(n: int, a: int, b: int) -> np.ndarray:
    return embed(n, {a: P0}) + embed(n, {a: P1, b: Z})


def zero(n: int) -> np.ndarray:
    v = np.zeros(2**n, dtype=complex)
    v[0] = 1
    return v


def expect(state: np.ndarray, op: np.ndarray) -> float:
    return float(np.real(np.conj(state) @ op @ state))


def pauli_expect(state, n, axis, q) -> float:
    return expect(state, single(n, PAULI[axis], q))


class DenseCircuit:
    """Records gates and returns the full unitary."""

    def __init__(self, n: int):
        self.n = n
        self.u = np.eye(2**n, dtype=complex)

    def gate(self, m):
        self.u = m @ self.u
        return self

    def rot(self, axis, theta, q):
        return self.gate(single(self.n, rotation(axis, theta), q))

    def cnot(self, c, t):
        return self.gate(cnot(self.n, c, t))

    def run(self, state=None):
        return self.u @ (zero(self.n) if state is None else state)


def ansatz_unitary(kind: str, n: int, theta, layers: int = 5) -> np.ndarray:
    """Layered ansatz written out from the topology definitions."""
    c = DenseCircuit(n)
    k = 0
    for layer in range(layers):
        for q in range(n):
            if kind == "Strong":
                c.rot("Z", theta[k], q).rot("Y", theta[k + 1], q).rot("Z", theta[k + 2], q)
                k += 3
            else:
                c.rot("Y", theta[k], q)
                k += 1
        if n < 2:
            continue
        if kind == "Basic":
            pairs = [(i, i + 1) for i in range(n - 1)]
        elif kind == "Ring":
            pairs = [(i, i + 1) for i in range(n - 1)] + [(n - 1, 0)]
        elif kind == "Star":
            pairs = [(0, j) for j in range(1, n)]
        elif kind == "Strong":
            r = 1 + layer % (n - 1)
            pairs = [(i, (i + r) % n) for i in range(n)]
        else:
            pairs = [(i, i + 1) for i in range(layer % 2, n - 1, 2)]
        for a, b in pairs:
            c.cnot(a, b)
    return c.u


def encode_dense(kind: str, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if kind == "Amplitude":
        return x.astype(complex) / np.linalg.norm(x)
    n = x.size
    if kind == "Basis":
        idx = int("".join("1" if v >= 0.5 else "0" for v in x), 2)
        v = np.zeros(2**n, dtype=complex)
        v[idx] = 1
        return v
    c = DenseCircuit(n)
    if kind == "Angle":
        for q in range(n):
            c.rot("Y", np.pi * x[q], q)
        return c.run()
    if kind == "QSample":
        for q in range(n):
            c.rot("Y", 2 * np.arcsin(np.sqrt(x[q])), q)
        return c.run()
    # IQP: H layer, RZ(pi x_i), ZZ(pi x_i x_j) on ring neighbours
    for q in range(n):
        c.gate(single(n, H, q))
    for q in range(n):
        c.rot("Z", np.pi * x[q], q)
    pairs = [(0, 1)] if n == 2 else [(i, (i + 1) % n) for i in range(n)]
    for a, b in pairs:
        c.gate(expm(-0.5j * np.pi * x[a] * x[b] * embed(n, {a: Z, b: Z})))
    return c.run()


def measure_dense(state, n, kind: str) -> np.ndarray:
    if kind == "PauliXYZ":
        return np.concatenate([[pauli_expect(state, n, a, q) for q in range(n)] for a in "XYZ"])
    if kind == "Hadamard":
        return np.array([(pauli_expect(state, n, "X", q) + pauli_expect(state, n, "Z", q)) / np.sqrt(2)
                         for q in range(n)])
    return np.array([pauli_expect(state, n, kind[-1], q) for q in range(n)])


def model_proba_dense(config, params, x) -> float:
    n = config.n_qubits
    psi = encode_dense(config.encoding.value, x)
    psi = ansatz_unitary(config.architecture.value, n, params.circuit, config.n_layers) @ psi
    feats = measure_dense(psi, n, config.measurement.value)
    z = feats @ params.head_weights + params.head_bias
    return 1.0 / (1.0 + np.exp(-z))


def brute_force_auc(labels, scores) -> float:
    """Probability that a random positive outranks a random negative (ties 1/2)."""
    pos = [s for s, y in zip(scores, labels) if y == 1]
    neg = [s for s, y in zip(scores, labels) if y == 0]
    total = 0.0
    for p, q in itertools.product(pos, neg):
        total += 1.0 if p > q else 0.5 if p == q else 0.0
    return total / (len(pos) * len(neg))
