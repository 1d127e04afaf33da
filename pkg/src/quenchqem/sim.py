"""Dense statevector simulation, sampling and reduced density matrices.

Qubit 0 is the least significant bit of a basis-state index.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np

from .circuit import Circuit, CircuitError
from .counts import Counts
from .gates import Gate, GateError
from .rng import make_rng

NORM_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class StateVector:
    amplitudes: np.ndarray

    def __post_init__(self) -> None:
        amps = np.ascontiguousarray(self.amplitudes, dtype=complex)
        n = int(round(np.log2(amps.size))) if amps.size else -1
        if amps.ndim != 1 or n < 1 or 2**n != amps.size:
            raise ValueError("amplitudes must be a vector of length 2**n, n >= 1")
        object.__setattr__(self, "amplitudes", amps)

    @property
    def n_qubits(self) -> int:
        return int(np.log2(self.amplitudes.size))

    @classmethod
    def zero(cls, n_qubits: int) -> "StateVector":
        return cls.basis(n_qubits, 0)

    @classmethod
    def basis(cls, n_qubits: int, index: int) -> "StateVector":
        amps = np.zeros(2**n_qubits, dtype=complex)
        amps[index] = 1.0
        return cls(amps)

    @classmethod
    def random(cls, n_qubits: int, rng: np.random.Generator) -> "StateVector":
        v = rng.normal(size=2**n_qubits) + 1j * rng.normal(size=2**n_qubits)
        return cls(v / np.linalg.norm(v))

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def inner(self, other: "StateVector") -> complex:
        return complex(np.vdot(self.amplitudes, other.amplitudes))

    def tensor(self, high: "StateVector") -> "StateVector":
        """State with ``self`` on the low qubits and ``high`` above them."""
        return StateVector(np.kron(high.amplitudes, self.amplitudes))


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    entries: np.ndarray

    def __post_init__(self) -> None:
        rho = np.asarray(self.entries, dtype=complex)
        if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
            raise ValueError("density matrix must be square")
        if not np.allclose(rho, rho.conj().T, atol=1e-10):
            raise ValueError("density matrix must be Hermitian")
        if abs(np.trace(rho).real - 1) > 1e-10:
            raise ValueError("density matrix must have unit trace")
        object.__setattr__(self, "entries", rho)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.entries)


# kernels ---------------------------------------------------------------


@lru_cache(maxsize=256)
def _cx_perm(n: int, control: int, target: int) -> np.ndarray:
    idx = np.arange(2**n)
    return idx ^ (((idx >> control) & 1) << target)


@lru_cache(maxsize=256)
def _parity(n: int, a: int, b: int) -> np.ndarray:
    idx = np.arange(2**n)
    return 1.0 - 2.0 * (((idx >> a) ^ (idx >> b)) & 1)


@lru_cache(maxsize=256)
def _both_set(n: int, a: int, b: int) -> np.ndarray:
    idx = np.arange(2**n)
    return 1.0 - 2.0 * (((idx >> a) & (idx >> b)) & 1)


def _batch(psi: np.ndarray) -> tuple[int, ...]:
    return psi.shape[1:]


def apply_1q(psi: np.ndarray, n: int, q: int, m: np.ndarray) -> np.ndarray:
    """Apply a 2x2 matrix on qubit q; extra trailing axes are batch axes."""
    v = psi.reshape((2 ** (n - 1 - q), 2, 2**q) + _batch(psi))
    out = np.empty_like(v)
    v0, v1 = v[:, 0], v[:, 1]
    out[:, 0] = m[0, 0] * v0 + m[0, 1] * v1
    out[:, 1] = m[1, 0] * v0 + m[1, 1] * v1
    return out.reshape(psi.shape)


def apply_diag_1q(psi: np.ndarray, n: int, q: int, d0: complex, d1: complex) -> np.ndarray:
    v = psi.reshape((2 ** (n - 1 - q), 2, 2**q) + _batch(psi)).copy()
    v[:, 0] *= d0
    v[:, 1] *= d1
    return v.reshape(psi.shape)


def _scale(psi: np.ndarray, d: np.ndarray) -> np.ndarray:
    return psi * d.reshape(d.shape + (1,) * (psi.ndim - 1))


def apply_matrix(psi: np.ndarray, n: int, qubits: Sequence[int], m: np.ndarray) -> np.ndarray:
    """Apply a 2^k x 2^k matrix on ``qubits`` (qubits[0] least significant)."""
    k = len(qubits)
    t = psi.reshape((2,) * n + _batch(psi))
    axes = [n - 1 - q for q in reversed(qubits)]
    t = np.moveaxis(t, axes, list(range(k)))
    shape = t.shape
    t = (m @ t.reshape(2**k, -1)).reshape(shape)
    return np.moveaxis(t, list(range(k)), axes).reshape(psi.shape)


def apply_gate_array(psi: np.ndarray, n: int, gate: Gate) -> np.ndarray:
    k = gate.kind
    if k in ("id", "delay"):
        return psi
    if k == "seq":
        for op in gate.ops:
            psi = apply_gate_array(psi, n, op)
        return psi
    if k == "rz":
        h = 0.5 * gate.param
        return apply_diag_1q(psi, n, gate.qubits[0], np.exp(-1j * h), np.exp(1j * h))
    if k == "z":
        return apply_diag_1q(psi, n, gate.qubits[0], 1.0, -1.0)
    if k == "cx":
        c, t = gate.qubits
        return psi[_cx_perm(n, c, t)]
    if k == "cz":
        return _scale(psi, _both_set(n, *gate.qubits))
    if k == "rzz":
        return _scale(psi, np.exp(-0.5j * gate.param * _parity(n, *gate.qubits)))
    return apply_1q(psi, n, gate.qubits[0], gate.matrix_local())


def _check_gate(state: StateVector, gate: Gate) -> None:
    if any(q >= state.n_qubits for q in gate.qubits):
        raise GateError(f"gate {gate.label()} exceeds {state.n_qubits} qubits")


def apply_gate(state: StateVector, gate: Gate) -> StateVector:
    _check_gate(state, gate)
    return StateVector(apply_gate_array(state.amplitudes, state.n_qubits, gate))


def apply_circuit(state: StateVector, circuit: Circuit) -> StateVector:
    if circuit.n_qubits != state.n_qubits:
        raise CircuitError(
            f"circuit has {circuit.n_qubits} qubits, state has {state.n_qubits}"
        )
    n = state.n_qubits
    psi = state.amplitudes
    for layer in circuit.layers:
        for gate in layer:
            psi = apply_gate_array(psi, n, gate)
    return StateVector(psi)


def circuit_unitary(circuit: Circuit) -> np.ndarray:
    """Dense unitary by applying the circuit to every basis state."""
    n = circuit.n_qubits
    if n > 10:
        raise CircuitError("dense unitary only for small circuits")
    u = np.eye(2**n, dtype=complex)
    for layer in circuit.layers:
        for gate in layer:
            u = apply_gate_array(u, n, gate)
    return u


def phase_distance(a: StateVector | np.ndarray, b: StateVector | np.ndarray) -> float:
    """min over phi of ||a - exp(i phi) b||, i.e. sqrt(2 - 2|<a|b>|) for unit vectors.

    Evaluated as the norm of the phase-aligned difference, which keeps full
    precision for nearly equal states where the closed form loses half
    the digits.
    """
    va = a.amplitudes if isinstance(a, StateVector) else np.asarray(a)
    vb = b.amplitudes if isinstance(b, StateVector) else np.asarray(b)
    overlap = np.vdot(vb, va)
    phase = overlap / abs(overlap) if abs(overlap) > 0 else 1.0
    return float(np.linalg.norm(va - phase * vb))


def unitary_phase_distance(u: np.ndarray, v: np.ndarray) -> float:
    """Operator-norm-free distance up to global phase: min_phi ||u - e^{i phi} v||_F / sqrt(d)."""
    d = u.shape[0]
    tr = np.trace(v.conj().T @ u)
    phase = tr / abs(tr) if abs(tr) > 0 else 1.0
    return float(np.linalg.norm(u - phase * v) / np.sqrt(d))


def fidelity(a: StateVector, b: StateVector) -> float:
    return abs(a.inner(b)) ** 2


# sampling --------------------------------------------------------------


def _group_keys(n: int, qubits: Sequence[int]) -> np.ndarray:
    idx = np.arange(2**n)
    key = np.zeros(2**n, dtype=np.int64)
    for j, q in enumerate(qubits):
        key |= ((idx >> q) & 1) << j
    return key


def _inverse_cdf(weights: np.ndarray, u: np.ndarray) -> np.ndarray:
    cdf = np.cumsum(weights)
    cdf /= cdf[-1]
    return np.minimum(np.searchsorted(cdf, u, side="right"), weights.size - 1)


def sample_counts_grouped(
    state: StateVector,
    shots: int,
    groups: Sequence[Sequence[int]],
    seeds: Sequence[int],
) -> Counts:
    """Sample measured qubit groups in order, each from its own stream.

    Group ``g`` is drawn from its distribution conditioned on the outcomes
    already drawn for groups ``< g`` (inverse-CDF, one uniform per shot).
    For a product state the draws of each group therefore do not depend on
    the other groups, which makes packed and unpacked runs bit-identical.
    The outcome places group 0 in the lowest bits.
    """
    if shots < 1:
        raise ValueError("shots must be >= 1")
    if len(groups) != len(seeds) or not groups:
        raise ValueError("one seed per non-empty group list required")
    n = state.n_qubits
    flat = [q for g in groups for q in g]
    if not all(groups) or len(set(flat)) != len(flat):
        raise ValueError("measured qubit groups must be non-empty and disjoint")
    if any(not 0 <= q < n for q in flat):
        raise GateError(f"measured qubit out of range: {flat}")
    probs = state.probabilities()
    widths = [len(g) for g in groups]
    total_width = sum(widths)
    joint_key = _group_keys(n, flat)
    joint = np.bincount(joint_key, weights=probs, minlength=2**total_width)

    outcome = np.zeros(shots, dtype=np.int64)
    offset = 0
    for g, (w, seed) in enumerate(zip(widths, seeds)):
        u = make_rng(seed).random(shots)
        # table[prefix, value] = P(prefix bits, this group's bits)
        table = joint.reshape(2 ** (total_width - offset - w), 2**w, 2**offset)
        table = table.sum(axis=0).T  # (2**offset, 2**w)
        prefix = outcome & ((1 << offset) - 1)
        draw = np.empty(shots, dtype=np.int64)
        for p in np.unique(prefix):
            sel = prefix == p
            draw[sel] = _inverse_cdf(table[p], u[sel])
        outcome |= draw << offset
        offset += w
    return Counts.from_samples(outcome, total_width)


def sample_counts(
    state: StateVector, shots: int, seed: int, measured_qubits: Sequence[int] | None = None
) -> Counts:
    """Sample ``shots`` measurement outcomes of ``measured_qubits``.

    Bit j of each outcome is qubit ``measured_qubits[j]``.
    """
    if measured_qubits is None:
        measured_qubits = range(state.n_qubits)
    measured_qubits = list(measured_qubits)
    if not measured_qubits:
        raise ValueError("measured_qubits must not be empty")
    return sample_counts_grouped(state, shots, [measured_qubits], [seed])


def exact_counts(state: StateVector, measured_qubits: Sequence[int] | None = None) -> Counts:
    """Infinite-shot histogram: Born probabilities as float weights."""
    if measured_qubits is None:
        measured_qubits = range(state.n_qubits)
    measured_qubits = list(measured_qubits)
    key = _group_keys(state.n_qubits, measured_qubits)
    p = np.bincount(key, weights=state.probabilities(), minlength=2 ** len(measured_qubits))
    return Counts.from_probabilities(p, len(measured_qubits))


# reductions ------------------------------------------------------------


def reduced_density_matrix(state: StateVector, subsystem: Sequence[int]) -> DensityMatrix:
    """Partial trace onto ``subsystem``; subsystem[j] is bit j of the result."""
    n = state.n_qubits
    sub = [int(q) for q in subsystem]
    if not sub:
        raise ValueError("subsystem must not be empty")
    if len(set(sub)) != len(sub) or any(not 0 <= q < n for q in sub):
        raise ValueError(f"invalid subsystem {sub} for {n} qubits")
    rest = [q for q in range(n - 1, -1, -1) if q not in sub]
    t = state.amplitudes.reshape((2,) * n)
    order = [n - 1 - q for q in reversed(sub)] + [n - 1 - q for q in rest]
    a = np.transpose(t, order).reshape(2 ** len(sub), -1)
    rho = a @ a.conj().T
    return DensityMatrix(rho / np.trace(rho).real)


def exact_purity(rho: DensityMatrix) -> float:
    return float(np.sum(np.abs(rho.entries) ** 2))
