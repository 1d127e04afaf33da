"""Layered circuits with an abstract duration schedule."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Any, Iterable, Iterator

from .gates import Gate, GateError


class CircuitError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class Circuit:
    """Ordered layers of gates acting on disjoint qubits.

    ``durations[k]`` is the abstract length of layer ``k``; a qubit without
    a gate in a layer idles for that long. ``measured`` lists the qubits
    read out at the end (``None`` means all, in index order). ``meta``
    carries provenance such as the Trotter block layout.
    """

    n_qubits: int
    layers: tuple[tuple[Gate, ...], ...] = ()
    durations: tuple[float, ...] | None = None
    measured: tuple[int, ...] | None = None
    meta: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        layers = tuple(tuple(layer) for layer in self.layers)
        object.__setattr__(self, "layers", layers)
        if self.durations is None:
            object.__setattr__(self, "durations", tuple(1.0 for _ in layers))
        else:
            object.__setattr__(self, "durations", tuple(float(d) for d in self.durations))
        if len(self.durations) != len(layers):
            raise CircuitError("one duration per layer required")
        if any(d < 0 for d in self.durations):
            raise CircuitError("durations must be non-negative")
        if self.n_qubits < 1:
            raise CircuitError("circuit needs at least one qubit")
        for k, layer in enumerate(layers):
            seen: set[int] = set()
            for g in layer:
                for q in g.qubits:
                    if q >= self.n_qubits:
                        raise GateError(f"qubit {q} out of range in layer {k}")
                    if q in seen:
                        raise CircuitError(f"qubit {q} appears twice in layer {k}")
                    seen.add(q)
        if self.measured is not None:
            m = tuple(int(q) for q in self.measured)
            if not m or len(set(m)) != len(m) or any(not 0 <= q < self.n_qubits for q in m):
                raise CircuitError(f"invalid measured qubits {m}")
            object.__setattr__(self, "measured", m)

    @property
    def measured_qubits(self) -> tuple[int, ...]:
        return self.measured if self.measured is not None else tuple(range(self.n_qubits))

    def __len__(self) -> int:
        return len(self.layers)

    def gates(self) -> Iterator[Gate]:
        for layer in self.layers:
            yield from layer

    def count(self, kinds: str | tuple[str, ...]) -> int:
        return sum(g.count(kinds) for g in self.gates())

    def cx_count(self) -> int:
        return self.count("cx")

    def depth(self) -> int:
        return sum(1 for layer in self.layers if layer)

    def busy(self, k: int) -> set[int]:
        return {q for g in self.layers[k] for q in g.qubits}

    def idle_windows(self) -> list[tuple[int, int, int]]:
        """Maximal idle stretches as ``(qubit, first_layer, stop_layer)``.

        Only layers with non-zero duration contribute; a window covers layers
        ``first_layer <= k < stop_layer``.
        """
        windows = []
        busy = [self.busy(k) for k in range(len(self.layers))]
        for q in range(self.n_qubits):
            start = None
            for k in range(len(self.layers)):
                idle = q not in busy[k]
                if idle and start is None:
                    start = k
                elif not idle and start is not None:
                    windows.append((q, start, k))
                    start = None
            if start is not None:
                windows.append((q, start, len(self.layers)))
        return [
            w for w in windows if sum(self.durations[w[1] : w[2]]) > 0
        ]

    def with_layers(
        self,
        layers: Iterable[Iterable[Gate]],
        durations: Iterable[float] | None = None,
        **meta: Any,
    ) -> "Circuit":
        new_meta = dict(self.meta)
        new_meta.update(meta)
        return replace(
            self,
            layers=tuple(tuple(l) for l in layers),
            durations=None if durations is None else tuple(durations),
            meta=new_meta,
        )

    def append(self, other: "Circuit") -> "Circuit":
        if other.n_qubits != self.n_qubits:
            raise CircuitError("qubit-count mismatch")
        return replace(
            self,
            layers=self.layers + other.layers,
            durations=self.durations + other.durations,
            measured=other.measured if other.measured is not None else self.measured,
            meta={**self.meta, "blocks": _joined_blocks(self, other)},
        )

    def inverse(self) -> "Circuit":
        layers = tuple(tuple(g.inverse() for g in layer) for layer in reversed(self.layers))
        return Circuit(self.n_qubits, layers, tuple(reversed(self.durations)), self.measured)

    def with_measured(self, measured: Iterable[int] | None) -> "Circuit":
        return replace(self, measured=None if measured is None else tuple(measured))


def _joined_blocks(a: Circuit, b: Circuit):
    ba, bb = a.meta.get("blocks"), b.meta.get("blocks")
    if ba is None or bb is None:
        return None
    return tuple(ba) + tuple(bb)


def format_layers(circuit: Circuit) -> str:
    """Plain-text listing, one line per layer.

    Circuits built from two-qubit Trotter blocks list blocks as
    ``U(a,b;tx,ty,tz)``; other circuits list their gates.
    """
    lines = []
    blocks = circuit.meta.get("blocks")
    if blocks:
        for k, layer in enumerate(blocks, start=1):
            body = " ".join(
                f"U({a},{b};{tx:.12g},{ty:.12g},{tz:.12g})" for a, b, tx, ty, tz in layer
            )
            lines.append(f"L{k}: {body}".rstrip())
    else:
        for k, layer in enumerate(circuit.layers, start=1):
            body = " ".join(g.label() for g in layer)
            lines.append(f"L{k}: {body}".rstrip())
    return "\n".join(lines) + "\n"


def parse_block_layers(text: str) -> list[list[tuple[int, int, float, float, float]]]:
    """Inverse of :func:`format_layers` for block listings."""
    out = []
    for line in text.splitlines():
        line = line.strip()
        if not line:
            continue
        head, _, body = line.partition(":")
        if not head.startswith("L"):
            raise CircuitError(f"bad layer line {line!r}")
        layer = []
        for tok in body.split():
            if not (tok.startswith("U(") and tok.endswith(")")):
                raise CircuitError(f"bad block token {tok!r}")
            qs, _, angles = tok[2:-1].partition(";")
            a, b = (int(x) for x in qs.split(","))
            tx, ty, tz = (float(x) for x in angles.split(","))
            layer.append((a, b, tx, ty, tz))
        out.append(layer)
    return out
