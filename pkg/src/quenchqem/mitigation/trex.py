"""Twirled readout: random X before measurement, classical unflip after."""

from __future__ import annotations

from typing import Sequence

import numpy as np

from ..circuit import Circuit
from ..counts import Counts, CountsError
from ..gates import Gate
from ..rng import make_rng


def trex_masks(width: int, n_samples: int, seed: int) -> list[int]:
    """Flip masks over measured bits.

    Masks come in complementary pairs (a random mask, then its bitwise
    complement), so every bit is flipped in exactly half of the paired
    samples. An odd final sample is an unpaired random mask.
    """
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    rng = make_rng(seed)
    full = (1 << width) - 1
    masks = []
    for i in range(n_samples):
        if i % 2:
            masks.append(masks[-1] ^ full)
        else:
            bits = rng.integers(0, 2, size=width)
            masks.append(int(sum(int(b) << j for j, b in enumerate(bits))))
    return masks


def apply_mask(circuit: Circuit, mask: int) -> Circuit:
    """Append X on measured qubits selected by ``mask`` (bit j = measured[j])."""
    if mask == 0:
        return circuit
    measured = circuit.measured_qubits
    layer = [Gate("x", (q,)) for j, q in enumerate(measured) if (mask >> j) & 1]
    return circuit.with_layers(
        circuit.layers + (tuple(layer),), circuit.durations + (0.0,)
    )


def trex_expand(circuit: Circuit, n_samples: int, seed: int) -> list[tuple[Circuit, int]]:
    masks = trex_masks(len(circuit.measured_qubits), n_samples, seed)
    return [(apply_mask(circuit, m), m) for m in masks]


def unflip(counts: Counts, mask: int) -> Counts:
    ints, weights = counts.outcomes()
    return Counts.from_outcomes(ints ^ mask, weights, counts.width)


def trex_collapse(results: Sequence[tuple[Counts, int]]) -> Counts:
    """XOR each histogram with its mask and sum."""
    if not results:
        raise CountsError("nothing to collapse")
    width = results[0][0].width
    total: dict[str, float] = {}
    for counts, mask in results:
        if counts.width != width:
            raise CountsError(f"width mismatch: {counts.width} != {width}")
        for k, v in unflip(counts, mask).items():
            total[k] = total.get(k, 0) + v
    return Counts(total, width=width)


def permute_probabilities(p: np.ndarray, mask: int) -> np.ndarray:
    """Distribution after X flips on the masked bits."""
    return p[np.arange(p.size) ^ mask]
