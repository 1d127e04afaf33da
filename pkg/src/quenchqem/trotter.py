"""XXZ chain Trotter circuits, the Néel state and the exact evolution oracle.

H = J1/4 * sum_j (X_j X_{j+1} + Y_j Y_{j+1} + Delta Z_j Z_{j+1})

Each bond term is realised by a two-qubit block
U(tx, ty, tz) = exp(-i/2 (tx XX + ty YY + tz ZZ)) with
tx = ty = J1*dt/2 and tz = J1*Delta*dt/2.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterator, Sequence

import numpy as np
from scipy import sparse
from scipy.sparse.linalg import expm_multiply

from .circuit import Circuit
from .gates import Gate
from .sim import StateVector, apply_matrix, circuit_unitary

DENSE_ORACLE_MAX_QUBITS = 14

Block = tuple[int, int, float, float, float]


class Boundary(str, enum.Enum):
    OBC = "OBC"
    PBC = "PBC"


class TrotterOrder(str, enum.Enum):
    FIRST = "first"
    SECOND = "second"


@dataclass(frozen=True)
class XXZParams:
    n_qubits: int
    j1: float = 1.0
    delta: float = 1.0
    dt: float = 0.5
    n_steps: int = 10
    boundary: Boundary = Boundary.OBC

    def __post_init__(self) -> None:
        object.__setattr__(self, "boundary", Boundary(str(self.boundary).upper().split(".")[-1]))
        if self.n_qubits < 2:
            raise ValueError("n_qubits must be >= 2")
        if self.j1 <= 0:
            raise ValueError("j1 must be positive")
        if self.dt == 0:
            raise ValueError("dt must be non-zero")
        if self.n_steps < 1:
            raise ValueError("n_steps must be >= 1")
        if self.boundary is Boundary.PBC and (self.n_qubits < 3 or self.n_qubits % 2):
            raise ValueError("PBC needs an even chain with at least 4 sites")

    @property
    def theta(self) -> tuple[float, float, float]:
        t = 0.5 * self.j1 * self.dt
        return (t, t, t * self.delta)

    def with_(self, **changes) -> "XXZParams":
        fields = dict(self.__dict__)
        fields.update(changes)
        return XXZParams(**fields)


# blocks ----------------------------------------------------------------


def unit_block(tx: float, ty: float, tz: float, a: int = 0, b: int = 1) -> list[list[Gate]]:
    """Seven gate layers with three CX implementing U(tx, ty, tz) on (a, b)."""
    return [
        [Gate("cx", (b, a))],
        [Gate("rz", (a,), tz), Gate("h", (b,))],
        [Gate("rz", (b,), tx + np.pi / 2)],
        [Gate("cx", (b, a))],
        [Gate("rz", (a,), -ty), Gate("h", (b,))],
        [Gate("cx", (b, a))],
        [Gate("sx", (a,)), Gate("sxdg", (b,))],
    ]


@lru_cache(maxsize=8192)
def _unit_block_cached(tx: float, ty: float, tz: float, a: int, b: int) -> tuple[tuple[Gate, ...], ...]:
    # gates are immutable, so repeated steps can share them
    return tuple(tuple(layer) for layer in unit_block(tx, ty, tz, a, b))


def unit_block_circuit(tx: float, ty: float, tz: float) -> Circuit:
    return Circuit(2, unit_block(tx, ty, tz))


def xxz_bond_unitary(tx: float, ty: float, tz: float) -> np.ndarray:
    """exp(-i/2 (tx XX + ty YY + tz ZZ)) in closed form (4x4, q0 least significant)."""
    # XX, YY, ZZ commute; in the Bell-like basis the exponent is diagonal.
    out = np.zeros((4, 4), dtype=complex)
    ez = np.exp(-0.5j * tz)
    ezc = np.exp(0.5j * tz)
    # |00>,|11> subspace: XX-YY acts as flip with weight (tx - ty)
    cm, sm = np.cos(0.5 * (tx - ty)), np.sin(0.5 * (tx - ty))
    out[0, 0] = out[3, 3] = ez * cm
    out[0, 3] = out[3, 0] = -1j * ez * sm
    # |01>,|10> subspace: XX+YY acts as flip with weight (tx + ty)
    cp, sp = np.cos(0.5 * (tx + ty)), np.sin(0.5 * (tx + ty))
    out[1, 1] = out[2, 2] = ezc * cp
    out[1, 2] = out[2, 1] = -1j * ezc * sp
    return out


@lru_cache(maxsize=1024)
def _fused_block(tx: float, ty: float, tz: float) -> np.ndarray:
    return circuit_unitary(unit_block_circuit(tx, ty, tz))


def bond_pairs(n: int, boundary: Boundary, parity: int) -> list[tuple[int, int]]:
    """Pairs (j, j+1) with j % 2 == parity; PBC adds (n-1, 0) to parity 1."""
    pairs = [(j, j + 1) for j in range(parity, n - 1, 2)]
    if parity == 1 and Boundary(boundary) is Boundary.PBC:
        pairs.append((n - 1, 0))
    return pairs


def block_schedule(params: XXZParams, order: TrotterOrder, signs: Sequence[float]) -> list[list[Block]]:
    """Block layers for a sequence of signed Trotter steps.

    ``signs[k]`` scales the step angle of step k+1. Second order merges the
    half layers of neighbouring steps, so the odd layer between steps k and
    k+1 carries (s_k + s_{k+1})/2 and the outermost ones carry s/2.
    """
    n = params.n_qubits
    tx, ty, tz = params.theta
    odd = bond_pairs(n, params.boundary, 0)
    even = bond_pairs(n, params.boundary, 1)

    def layer(pairs, f):
        return [(a, b, f * tx, f * ty, f * tz) for a, b in pairs]

    signs = [float(s) for s in signs]
    out: list[list[Block]] = []
    if TrotterOrder(order) is TrotterOrder.FIRST:
        for s in signs:
            out.append(layer(odd, s))
            out.append(layer(even, s))
        return out
    padded = [0.0] + signs + [0.0]
    for k in range(len(signs) + 1):
        out.append(layer(odd, 0.5 * (padded[k] + padded[k + 1])))
        if k < len(signs):
            out.append(layer(even, padded[k + 1]))
    return out


def circuit_from_blocks(n: int, blocks: list[list[Block]], **meta) -> Circuit:
    layers: list[list[Gate]] = []
    for block_layer in blocks:
        moments: list[list[Gate]] = [[] for _ in range(7)]
        for a, b, tx, ty, tz in block_layer:
            for k, gates in enumerate(_unit_block_cached(tx, ty, tz, a, b)):
                moments[k].extend(gates)
        layers.extend(moments)
    return Circuit(n, layers, meta={"blocks": tuple(tuple(l) for l in blocks), **meta})


def build_trotter_circuit(
    params: XXZParams, order: TrotterOrder = TrotterOrder.SECOND, n_steps: int | None = None
) -> Circuit:
    """Brick-wall circuit for ``n_steps`` (default ``params.n_steps``) steps."""
    m = params.n_steps if n_steps is None else n_steps
    if m < 1:
        raise ValueError("n_steps must be >= 1")
    order = TrotterOrder(order)
    blocks = block_schedule(params, order, [1.0] * m)
    return circuit_from_blocks(
        params.n_qubits,
        blocks,
        kind="trotter",
        order=order.value,
        boundary=params.boundary.value,
        n_steps=m,
        dt=params.dt,
    )


def sm_signs(m: int) -> list[float]:
    half = -(-m // 2)
    return [1.0] * half + [-1.0] * (m - half)


def build_sm_test_circuit(params: XXZParams, n_steps: int | None = None) -> Circuit:
    """Forward-then-backward test circuit with the target's gate layout.

    For even step counts the central odd layer has zero angles and the
    whole circuit is the identity; its blocks are kept as real gates. Odd
    step counts are allowed but flagged via ``meta["exact_identity"]``.
    """
    m = params.n_steps if n_steps is None else n_steps
    if m < 1:
        raise ValueError("n_steps must be >= 1")
    blocks = block_schedule(params, TrotterOrder.SECOND, sm_signs(m))
    return circuit_from_blocks(
        params.n_qubits,
        blocks,
        kind="sm_test",
        order=TrotterOrder.SECOND.value,
        boundary=params.boundary.value,
        n_steps=m,
        dt=params.dt,
        exact_identity=(m % 2 == 0),
    )


def expected_cx_count(params: XXZParams, n_steps: int | None = None) -> int:
    m = params.n_steps if n_steps is None else n_steps
    n_odd = len(bond_pairs(params.n_qubits, params.boundary, 0))
    n_even = len(bond_pairs(params.n_qubits, params.boundary, 1))
    return 3 * ((m + 1) * n_odd + m * n_even)


# states and oracles ------------------------------------------------------


def neel_index(n: int) -> int:
    return sum(1 << j for j in range(1, n, 2))


def neel_state(n: int) -> StateVector:
    """|up down up down ...>: odd qubits carry bit 1 (spin down)."""
    if n < 1:
        raise ValueError("n must be >= 1")
    return StateVector.basis(n, neel_index(n))


def apply_blocks(state: StateVector, blocks: list[list[Block]]) -> StateVector:
    """Apply block layers using fused 4x4 block unitaries."""
    n = state.n_qubits
    psi = state.amplitudes
    for layer in blocks:
        for a, b, tx, ty, tz in layer:
            psi = apply_matrix(psi, n, (a, b), _fused_block(tx, ty, tz))
    return StateVector(psi)


def trotter_states(params: XXZParams, order: TrotterOrder = TrotterOrder.SECOND,
                   initial: StateVector | None = None) -> Iterator[StateVector]:
    """Yield the Trotter-evolved state after each step 1..M.

    Uses the step structure to reuse the common prefix, so the total cost is
    about one M-step circuit rather than M(M+1)/2 steps.
    """
    n = params.n_qubits
    state = neel_state(n) if initial is None else initial
    tx, ty, tz = params.theta
    odd = bond_pairs(n, params.boundary, 0)
    even = bond_pairs(n, params.boundary, 1)

    def layer(pairs, f):
        return [[(a, b, f * tx, f * ty, f * tz) for a, b in pairs]]

    if TrotterOrder(order) is TrotterOrder.FIRST:
        for _ in range(params.n_steps):
            state = apply_blocks(state, layer(odd, 1.0) + layer(even, 1.0))
            yield state
        return
    phi = apply_blocks(state, layer(odd, 0.5) + layer(even, 1.0))
    for m in range(1, params.n_steps + 1):
        yield apply_blocks(phi, layer(odd, 0.5))
        if m < params.n_steps:
            phi = apply_blocks(phi, layer(odd, 1.0) + layer(even, 1.0))


def hamiltonian(params: XXZParams) -> sparse.csr_matrix:
    """Sparse XXZ Hamiltonian in the computational basis."""
    n = params.n_qubits
    dim = 2**n
    idx = np.arange(dim)
    bonds = bond_pairs(n, params.boundary, 0) + bond_pairs(n, params.boundary, 1)
    diag = np.zeros(dim)
    rows, cols = [], []
    for a, b in bonds:
        differ = ((idx >> a) ^ (idx >> b)) & 1
        diag += 0.25 * params.j1 * params.delta * (1 - 2 * differ)
        # XX + YY = 2 (|01><10| + |10><01|)
        src = idx[differ == 1]
        rows.append(src ^ ((1 << a) | (1 << b)))
        cols.append(src)
    rows_a = np.concatenate(rows) if rows else np.zeros(0, dtype=int)
    cols_a = np.concatenate(cols) if cols else np.zeros(0, dtype=int)
    off = sparse.coo_matrix(
        (np.full(rows_a.size, 0.5 * params.j1), (rows_a, cols_a)), shape=(dim, dim)
    )
    return (off + sparse.diags(diag)).tocsr()


def exact_evolve(
    params: XXZParams,
    initial: StateVector,
    t: float,
    max_qubits: int = DENSE_ORACLE_MAX_QUBITS,
) -> StateVector:
    """exp(-iHt)|initial> by Krylov-type action of the sparse exponential."""
    if params.n_qubits > max_qubits:
        raise ValueError(f"exact oracle limited to {max_qubits} qubits, got {params.n_qubits}")
    if initial.n_qubits != params.n_qubits:
        raise ValueError("initial state width does not match params")
    if t == 0:
        return initial
    h = hamiltonian(params)
    psi = expm_multiply(-1j * t * h, initial.amplitudes)
    return StateVector(psi / np.linalg.norm(psi))
