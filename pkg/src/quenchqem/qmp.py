"""Two-way circuit packing with one idle spacer qubit."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass

from .circuit import Circuit
from .counts import Counts, CountsError
from .gates import Gate
from .sim import StateVector


@dataclass(frozen=True)
class PackLayout:
    """Where each sub-circuit lives in the packed register.

    ``a_bits[j]`` / ``b_bits[j]`` is the merged measured-bit position holding
    measured bit j of circuit A / B.
    """

    width_a: int
    width_b: int
    spacers: tuple[int, ...]
    a_bits: tuple[int, ...]
    b_bits: tuple[int, ...]

    def __post_init__(self) -> None:
        a, b = set(self.a_bits), set(self.b_bits)
        if a & b or len(a) != len(self.a_bits) or len(b) != len(self.b_bits):
            raise ValueError("bit maps must be disjoint and duplicate-free")
        if a | b != set(range(self.n_measured)):
            raise ValueError("bit maps must cover every measured bit")

    @property
    def n_measured(self) -> int:
        return len(self.a_bits) + len(self.b_bits)

    @property
    def offset_b(self) -> int:
        return self.width_a + len(self.spacers)

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "PackLayout":
        d = json.loads(text)
        return cls(**{k: tuple(v) if isinstance(v, list) else v for k, v in d.items()})


def _shift(g: Gate, offset: int) -> Gate:
    if g.kind == "seq":
        return Gate("seq", tuple(q + offset for q in g.qubits), ops=tuple(_shift(o, offset) for o in g.ops))
    return Gate(g.kind, tuple(q + offset for q in g.qubits), g.param, g.matrix)


def pack(a: Circuit, b: Circuit) -> tuple[Circuit, PackLayout]:
    """A on qubits [0, Na), an idle spacer at Na, B on (Na, Na + Nb]."""
    na, nb = a.n_qubits, b.n_qubits
    off = na + 1
    depth = max(len(a.layers), len(b.layers))
    layers, durations = [], []
    for k in range(depth):
        la = list(a.layers[k]) if k < len(a.layers) else []
        lb = [_shift(g, off) for g in b.layers[k]] if k < len(b.layers) else []
        da = a.durations[k] if k < len(a.layers) else 0.0
        db = b.durations[k] if k < len(b.layers) else 0.0
        layers.append(la + lb)
        durations.append(max(da, db))
    measured = tuple(a.measured_qubits) + tuple(q + off for q in b.measured_qubits)
    ma, mb = len(a.measured_qubits), len(b.measured_qubits)
    layout = PackLayout(na, nb, (na,), tuple(range(ma)), tuple(range(ma, ma + mb)))
    packed = Circuit(na + 1 + nb, layers, durations, measured, {"qmp_layout": layout.to_json()})
    return packed, layout


def pack_states(a: StateVector, b: StateVector) -> StateVector:
    """Initial state of a packed register with the spacer in |0>."""
    return a.tensor(StateVector.zero(1)).tensor(b)


def split_counts(counts: Counts, layout: PackLayout) -> tuple[Counts, Counts]:
    """Marginalize merged outcomes onto each sub-circuit's measured bits."""
    if counts.width != layout.n_measured:
        raise CountsError(f"width {counts.width} does not match layout ({layout.n_measured})")
    ints, weights = counts.outcomes()

    def project(bits):
        out = 0
        for j, pos in enumerate(bits):
            out = out | (((ints >> pos) & 1) << j)
        return out

    ca = Counts.from_outcomes(project(layout.a_bits), weights, len(layout.a_bits))
    cb = Counts.from_outcomes(project(layout.b_bits), weights, len(layout.b_bits))
    return ca, cb
