"""Gate definitions and their local unitaries.

Phase conventions follow the usual hardware basis set:
``Rz(theta) = diag(exp(-i theta/2), exp(i theta/2))`` and
``SX = 1/2 [[1+i, 1-i], [1-i, 1+i]]``. Two-qubit gates list their qubits
as ``(control, target)`` for CX; the local 4x4 matrix is written in the
basis ``|q1 q0>`` where ``q0 = qubits[0]`` is the least significant bit.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

SINGLE_QUBIT_KINDS = frozenset({"id", "h", "x", "y", "z", "sx", "sxdg", "rz", "u", "delay"})
TWO_QUBIT_KINDS = frozenset({"cx", "cz", "rzz"})
KINDS = SINGLE_QUBIT_KINDS | TWO_QUBIT_KINDS | {"seq"}

I2 = np.eye(2, dtype=complex)
PAULI = {
    "I": I2,
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}
H = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
SX = 0.5 * np.array([[1 + 1j, 1 - 1j], [1 - 1j, 1 + 1j]], dtype=complex)

_FIXED = {
    "id": I2,
    "h": H,
    "x": PAULI["X"],
    "y": PAULI["Y"],
    "z": PAULI["Z"],
    "sx": SX,
    "sxdg": SX.conj().T,
    "delay": I2,
}


class GateError(ValueError):
    """Raised for malformed gates or invalid qubit indices."""


def rz_matrix(theta: float) -> np.ndarray:
    return np.diag([np.exp(-0.5j * theta), np.exp(0.5j * theta)])


def rzz_diagonal(theta: float) -> np.ndarray:
    """Diagonal of exp(-i theta/2 Z⊗Z) in the |q1 q0> basis."""
    parity = np.array([1.0, -1.0, -1.0, 1.0])
    return np.exp(-0.5j * theta * parity)


# |q1 q0> ordering with control = q0 (qubits[0]) and target = q1 (qubits[1]).
CX_LOCAL = np.array(
    [[1, 0, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0], [0, 1, 0, 0]], dtype=complex
)
CZ_LOCAL = np.diag([1, 1, 1, -1]).astype(complex)


def is_unitary(m: np.ndarray, atol: float = 1e-12) -> bool:
    m = np.asarray(m)
    return m.ndim == 2 and m.shape[0] == m.shape[1] and np.allclose(
        m.conj().T @ m, np.eye(m.shape[0]), atol=atol
    )


@dataclass(frozen=True, eq=False)
class Gate:
    """One gate application.

    ``kind`` is one of :data:`KINDS`. ``param`` holds the rotation angle for
    ``rz``/``rzz`` and the idle duration for ``delay``. ``matrix`` is the
    2x2 unitary of a custom ``u`` gate. A ``seq`` gate bundles several
    operations on the same qubits that execute back to back inside one
    layer slot (used for twirled, folded and decoupled gates).
    """

    kind: str
    qubits: tuple[int, ...]
    param: float | None = None
    matrix: np.ndarray | None = field(default=None, repr=False)
    ops: tuple["Gate", ...] = ()

    def __post_init__(self) -> None:
        kind = self.kind.lower()
        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "qubits", tuple(int(q) for q in self.qubits))
        if kind not in KINDS:
            raise GateError(f"unknown gate kind {self.kind!r}")
        if len(set(self.qubits)) != len(self.qubits):
            raise GateError(f"repeated qubit in {self.qubits}")
        if any(q < 0 for q in self.qubits):
            raise GateError(f"negative qubit index in {self.qubits}")
        if kind in SINGLE_QUBIT_KINDS and len(self.qubits) != 1:
            raise GateError(f"{kind} acts on one qubit, got {self.qubits}")
        if kind in TWO_QUBIT_KINDS and len(self.qubits) != 2:
            raise GateError(f"{kind} acts on two qubits, got {self.qubits}")
        if kind in ("rz", "rzz", "delay") and self.param is None:
            raise GateError(f"{kind} requires a parameter")
        if kind == "u":
            if self.matrix is None:
                raise GateError("u gate requires a matrix")
            m = np.asarray(self.matrix, dtype=complex)
            if m.shape != (2, 2) or not is_unitary(m, atol=1e-10):
                raise GateError("u gate matrix must be a 2x2 unitary")
            object.__setattr__(self, "matrix", m)
        if kind == "seq":
            if not self.ops:
                raise GateError("seq gate needs at least one operation")
            for op in self.ops:
                if not set(op.qubits) <= set(self.qubits):
                    raise GateError(f"seq op {op} leaves qubits {self.qubits}")

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Gate):
            return NotImplemented
        if (self.kind, self.qubits, self.param, self.ops) != (
            other.kind,
            other.qubits,
            other.param,
            other.ops,
        ):
            return False
        if self.matrix is None or other.matrix is None:
            return self.matrix is other.matrix
        return np.array_equal(self.matrix, other.matrix)

    __hash__ = None  # type: ignore[assignment]

    @classmethod
    def sequence(cls, ops: list["Gate"] | tuple["Gate", ...]) -> "Gate":
        qubits: list[int] = []
        for op in ops:
            for q in op.qubits:
                if q not in qubits:
                    qubits.append(q)
        return cls("seq", tuple(qubits), ops=tuple(ops))

    @property
    def is_two_qubit_clifford(self) -> bool:
        return self.kind in ("cx", "cz")

    def matrix_local(self) -> np.ndarray:
        """Unitary on ``self.qubits`` (qubits[0] least significant)."""
        k = self.kind
        if k in _FIXED:
            return _FIXED[k].copy()
        if k == "rz":
            return rz_matrix(self.param)
        if k == "u":
            return self.matrix.copy()
        if k == "cx":
            return CX_LOCAL.copy()
        if k == "cz":
            return CZ_LOCAL.copy()
        if k == "rzz":
            return np.diag(rzz_diagonal(self.param))
        # seq: compose sub-operations on the local register
        n = len(self.qubits)
        u = np.eye(2**n, dtype=complex)
        pos = {q: i for i, q in enumerate(self.qubits)}
        for op in self.ops:
            u = embed(op.matrix_local(), [pos[q] for q in op.qubits], n) @ u
        return u

    def inverse(self) -> "Gate":
        k = self.kind
        if k in ("id", "h", "x", "y", "z", "cx", "cz", "delay"):
            return self
        if k == "sx":
            return Gate("sxdg", self.qubits)
        if k == "sxdg":
            return Gate("sx", self.qubits)
        if k in ("rz", "rzz"):
            return Gate(k, self.qubits, -self.param)
        if k == "u":
            return Gate("u", self.qubits, matrix=self.matrix.conj().T)
        return Gate("seq", self.qubits, ops=tuple(op.inverse() for op in reversed(self.ops)))

    def count(self, kinds: str | tuple[str, ...]) -> int:
        """Number of primitive operations of the given kind(s), seq-aware."""
        if isinstance(kinds, str):
            kinds = (kinds,)
        if self.kind == "seq":
            return sum(op.count(kinds) for op in self.ops)
        return int(self.kind in kinds)

    def label(self) -> str:
        if self.kind == "seq":
            return "[" + " ".join(op.label() for op in self.ops) + "]"
        qs = ",".join(str(q) for q in self.qubits)
        if self.param is not None:
            return f"{self.kind}({self.param:.12g})@{qs}"
        return f"{self.kind}@{qs}"


def embed(local: np.ndarray, positions: list[int], n: int) -> np.ndarray:
    """Embed a local unitary acting on ``positions`` into an n-qubit matrix.

    Used for small dense checks only.
    """
    dim = 2**n
    k = len(positions)
    out = np.zeros((dim, dim), dtype=complex)
    idx = np.arange(dim)
    sub = np.zeros(dim, dtype=int)
    for j, p in enumerate(positions):
        sub |= ((idx >> p) & 1) << j
    rest = idx.copy()
    for p in positions:
        rest &= ~(1 << p)
    for col in range(dim):
        # columns sharing the untouched bits with col
        for s_out in range(2**k):
            row = rest[col]
            for j, p in enumerate(positions):
                row |= ((s_out >> j) & 1) << p
            out[row, col] = local[s_out, sub[col]]
    return out


def pauli_gate(label: str, qubit: int) -> Gate | None:
    """Gate for a single-qubit Pauli label, or None for identity."""
    label = label.upper()
    if label == "I":
        return None
    if label not in ("X", "Y", "Z"):
        raise GateError(f"not a Pauli label: {label!r}")
    return Gate(label.lower(), (qubit,))
