"""Measurement histograms and their text serialization.

Bitstrings are fixed width with measured bit 0 as the rightmost character.
"""

from __future__ import annotations

from pathlib import Path
from typing import Iterable, Mapping

import numpy as np


class CountsError(ValueError):
    pass


class Counts(dict):
    """Map from bitstring to shot count (or probability weight).

    Integer counts come from sampling; float weights are allowed for
    exact-probability histograms.
    """

    def __init__(self, data: Mapping[str, float] | Iterable = (), width: int | None = None):
        super().__init__(data)
        if width is None:
            if not self:
                raise CountsError("width required for an empty histogram")
            width = len(next(iter(self)))
        self.width = int(width)
        for key in self:
            if len(key) != self.width or set(key) - {"0", "1"}:
                raise CountsError(f"bad bitstring {key!r} for width {self.width}")

    @property
    def shots(self):
        return sum(self.values())

    def copy(self) -> "Counts":
        return Counts(dict(self), width=self.width)

    def __repr__(self) -> str:
        return f"Counts({dict.__repr__(self)}, width={self.width})"

    # array views -------------------------------------------------------
    def outcomes(self) -> tuple[np.ndarray, np.ndarray]:
        """Integer outcomes (bit 0 = least significant) and their weights."""
        if not self:
            return np.zeros(0, dtype=np.int64), np.zeros(0)
        keys = list(self)
        ints = np.array([int(k, 2) for k in keys], dtype=np.int64)
        weights = np.array([self[k] for k in keys])
        return ints, weights

    def bit_matrix(self) -> tuple[np.ndarray, np.ndarray]:
        """Bits as a (K, width) 0/1 array with column j = measured bit j."""
        ints, weights = self.outcomes()
        bits = (ints[:, None] >> np.arange(self.width)) & 1
        return bits, weights

    def probability_vector(self) -> np.ndarray:
        ints, weights = self.outcomes()
        p = np.zeros(2**self.width)
        np.add.at(p, ints, weights)
        total = p.sum()
        if total <= 0:
            raise CountsError("empty histogram")
        return p / total

    @classmethod
    def from_outcomes(cls, ints: np.ndarray, weights: np.ndarray, width: int) -> "Counts":
        out = cls(width=width)
        for i, w in zip(np.asarray(ints).tolist(), np.asarray(weights).tolist()):
            if w:
                key = format(i, f"0{width}b")
                out[key] = out.get(key, 0) + w
        return out

    @classmethod
    def from_samples(cls, samples: np.ndarray, width: int) -> "Counts":
        vals, cnt = np.unique(np.asarray(samples, dtype=np.int64), return_counts=True)
        return cls.from_outcomes(vals, cnt.astype(int), width)

    @classmethod
    def from_probabilities(cls, probs: np.ndarray, width: int | None = None) -> "Counts":
        probs = np.asarray(probs, dtype=float)
        if width is None:
            width = int(np.log2(probs.size))
        nz = np.flatnonzero(probs > 0)
        return cls.from_outcomes(nz, probs[nz], width)

    # serialization -----------------------------------------------------
    def to_text(self) -> str:
        lines = [f"{k} {self[k]}" for k in sorted(self)]
        lines.append(f"# total {self.shots}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "Counts":
        data: dict[str, int] = {}
        total = None
        width = None
        for n, raw in enumerate(text.splitlines(), start=1):
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                parts = line[1:].split()
                if len(parts) == 2 and parts[0] == "total":
                    total = int(parts[1])
                continue
            try:
                key, value = line.split()
                data[key] = int(value)
            except ValueError as exc:
                raise CountsError(f"line {n}: expected '<bitstring> <count>'") from exc
            width = len(key) if width is None else width
        if width is None:
            raise CountsError("no records")
        counts = cls(data, width=width)
        if total is not None and total != counts.shots:
            raise CountsError(f"trailer total {total} != sum of counts {counts.shots}")
        return counts

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_text())

    @classmethod
    def load(cls, path: str | Path) -> "Counts":
        return cls.from_text(Path(path).read_text())


def merge(histograms: Iterable[Counts]) -> Counts:
    """Sum histograms of equal width."""
    histograms = list(histograms)
    if not histograms:
        raise CountsError("nothing to merge")
    width = histograms[0].width
    out = Counts(width=width)
    for h in histograms:
        if h.width != width:
            raise CountsError(f"width mismatch: {h.width} != {width}")
        for k, v in h.items():
            out[k] = out.get(k, 0) + v
    return out
