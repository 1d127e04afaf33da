"""Pauli twirling of CX and CZ gates."""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from ..circuit import Circuit
from ..gates import CX_LOCAL, CZ_LOCAL, PAULI, Gate, pauli_gate
from ..rng import make_rng

_GATES = {"cx": CX_LOCAL, "cz": CZ_LOCAL}


def _pauli2(label: str) -> np.ndarray:
    # label[0] acts on gate.qubits[0], the least significant local bit
    return np.kron(PAULI[label[1]], PAULI[label[0]])


def _match_pauli(m: np.ndarray) -> tuple[str, complex]:
    for a, b in itertools.product("IXYZ", repeat=2):
        p = _pauli2(a + b)
        c = np.trace(p.conj().T @ m) / 4
        if abs(abs(c) - 1) < 1e-12:
            return a + b, c
    raise ValueError("matrix is not a scaled Pauli")


@dataclass(frozen=True)
class TwirlTable:
    """For each gate kind, 16 pairs (pre, post) with post = G pre G^dagger.

    Labels are two characters; the first acts on ``qubits[0]``.
    """

    entries: dict[str, tuple[tuple[str, str], ...]]

    @classmethod
    def build(cls) -> "TwirlTable":
        entries = {}
        for kind, g in _GATES.items():
            rows = []
            for a, b in itertools.product("IXYZ", repeat=2):
                pre = a + b
                post, _ = _match_pauli(g @ _pauli2(pre) @ g.conj().T)
                rows.append((pre, post))
            entries[kind] = tuple(rows)
        table = cls(entries)
        table.verify()
        return table

    def verify(self) -> None:
        for kind, rows in self.entries.items():
            g = _GATES[kind]
            if len(rows) != 16 or len({r[0] for r in rows}) != 16:
                raise ValueError(f"{kind}: twirl table must list all 16 Pauli pairs")
            for pre, post in rows:
                m = _pauli2(post) @ g @ _pauli2(pre)
                c = np.trace(g.conj().T @ m) / 4
                if abs(abs(c) - 1) > 1e-12 or not np.allclose(m, c * g, atol=1e-12):
                    raise ValueError(f"{kind}: entry {pre}->{post} breaks the conjugation identity")


TWIRL_TABLE = TwirlTable.build()


def _paulis(label: str, qubits: tuple[int, ...]) -> list[Gate]:
    return [g for g in (pauli_gate(p, q) for p, q in zip(label, qubits)) if g is not None]


def twirl_gate(g: Gate, rng: np.random.Generator, table: TwirlTable = TWIRL_TABLE) -> Gate:
    """Wrap every CX/CZ inside ``g`` with a random table entry."""
    if g.kind == "seq":
        ops: list[Gate] = []
        for op in g.ops:
            t = twirl_gate(op, rng, table)
            ops.extend(t.ops if t.kind == "seq" else (t,))
        return Gate("seq", g.qubits, ops=tuple(ops))
    if g.kind not in table.entries:
        return g
    pre, post = table.entries[g.kind][int(rng.integers(16))]
    if pre == "II":
        return g
    return Gate.sequence(_paulis(pre, g.qubits) + [g] + _paulis(post, g.qubits))


def pauli_twirl(circuit: Circuit, n_copies: int, seed: int) -> list[Circuit]:
    if n_copies < 1:
        raise ValueError("n_copies must be >= 1")
    out = []
    for c in range(n_copies):
        rng = make_rng(seed, c)
        layers = [[twirl_gate(g, rng) for g in layer] for layer in circuit.layers]
        out.append(circuit.with_layers(layers, circuit.durations, twirl_copy=c))
    return out
