"""Dynamical decoupling: (t/4, X, t/2, X, t/4) in every idle window."""

from __future__ import annotations

from typing import Sequence

from ..circuit import Circuit
from ..gates import Gate

EPS = 1e-12


def _slot_ops(q: int, start: float, stop: float, pulses: Sequence[float]) -> list[Gate]:
    ops: list[Gate] = []
    t = start
    for p in pulses:
        if start - EPS <= p < stop - EPS:
            if p - t > EPS:
                ops.append(Gate("delay", (q,), p - t))
            ops.append(Gate("x", (q,)))
            t = p
    if stop - t > EPS:
        ops.append(Gate("delay", (q,), stop - t))
    return ops


def dd_insert(
    circuit: Circuit,
    spacing: Sequence[float] = (0.25, 0.5, 0.25),
    min_duration: float = 1.0,
) -> Circuit:
    """Fill each maximal idle window with the echo sequence.

    A window of total duration T receives delays and X pulses at T*s0 and
    T*(s0+s1), split across the layer slots it spans. Windows shorter than
    ``min_duration`` are left alone and listed in ``meta["dd_skipped"]``.
    """
    layers = [list(l) for l in circuit.layers]
    skipped = []
    inserted = 0
    for q, first, stop in circuit.idle_windows():
        durs = circuit.durations[first:stop]
        total = sum(durs)
        if total < min_duration - EPS:
            skipped.append((q, first, stop))
            continue
        pulses = (total * spacing[0], total * (spacing[0] + spacing[1]))
        t = 0.0
        for k, d in zip(range(first, stop), durs):
            if d <= 0:
                continue
            ops = _slot_ops(q, t, t + d, pulses)
            t += d
            layers[k].append(ops[0] if len(ops) == 1 else Gate.sequence(ops))
        inserted += 1
    return circuit.with_layers(
        layers,
        circuit.durations,
        dd_windows=inserted,
        dd_skipped=tuple(skipped),
    )
