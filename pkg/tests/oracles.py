"""Independent reference implementations used by the tests.

These build dense operators with explicit Kronecker products and sum
over outcome pairs directly, sharing no code with the package kernels.
"""

from __future__ import annotations

import itertools
from functools import reduce

import numpy as np
from scipy.linalg import expm

I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.diag([1.0, -1.0]).astype(complex)
H = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
SX = 0.5 * np.array([[1 + 1j, 1 - 1j], [1 - 1j, 1 + 1j]])


def rz(theta: float) -> np.ndarray:
    return np.diag([np.exp(-0.5j * theta), np.exp(0.5j * theta)])


def op_on(n: int, ops: dict[int, np.ndarray]) -> np.ndarray:
    """Dense operator with ``ops[q]`` on qubit q; qubit 0 is the least significant."""
    return reduce(np.kron, [ops.get(q, I2) for q in reversed(range(n))])


def cx(n: int, control: int, target: int) -> np.ndarray:
    p0 = np.diag([1.0, 0.0]).astype(complex)
    p1 = np.diag([0.0, 1.0]).astype(complex)
    return op_on(n, {control: p0}) + op_on(n, {control: p1, target: X})


def bond_exponential(tx: float, ty: float, tz: float) -> np.ndarray:
    """exp(-i/2 (tx XX + ty YY + tz ZZ)) on two qubits."""
    gen = tx * np.kron(X, X) + ty * np.kron(Y, Y) + tz * np.kron(Z, Z)
    return expm(-0.5j * gen)


def xxz_dense(n: int, j1: float, delta: float, periodic: bool) -> np.ndarray:
    bonds = [(j, j + 1) for j in range(n - 1)] + ([(n - 1, 0)] if periodic else [])
    h = np.zeros((2**n, 2**n), dtype=complex)
    for a, b in bonds:
        for p, w in ((X, 1.0), (Y, 1.0), (Z, delta)):
            h += 0.25 * j1 * w * op_on(n, {a: p, b: p})
    return h


def staggered_dense(n: int) -> np.ndarray:
    return sum((-1) ** (j + 1) * 0.5 * op_on(n, {j: Z}) for j in range(n)) / n


def purity_double_sum(probs: np.ndarray, L: int) -> float:
    """2^L sum_{s,s'} (-2)^(-D[s,s']) P(s) P(s') by explicit double loop."""
    total = 0.0
    for s, sp in itertools.product(range(2**L), repeat=2):
        d = bin(s ^ sp).count("1")
        total += (-2.0) ** (-d) * probs[s] * probs[sp]
    return 2**L * total


def global_phase_distance(a: np.ndarray, b: np.ndarray) -> float:
    ov = np.vdot(b, a)
    phase = ov / abs(ov) if abs(ov) > 0 else 1.0
    return float(np.linalg.norm(a - phase * b))
