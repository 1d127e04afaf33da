"""Staggered magnetization, Z-string expectations and error metrics.

Bit 0 is spin up (+1/2). Site i = j + 1 for qubit j, so the staggered sign
of qubit j is (-1)**(j + 1).
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np

from .counts import Counts, CountsError
from .sim import StateVector

RESULT_COLUMNS = ("step", "time", "raw", "mitigated", "std_error", "reference", "abs_error")


@dataclass(frozen=True)
class ObservableSpec:
    kind: str = "staggered_magnetization"
    n_sites: int = 0

    def __post_init__(self) -> None:
        if self.kind != "staggered_magnetization":
            raise ValueError(f"unsupported observable {self.kind!r}")
        if self.n_sites < 1:
            raise ValueError("n_sites must be >= 1")


def staggered_signs(n: int) -> np.ndarray:
    return (-1.0) ** (np.arange(n) + 1)


@lru_cache(maxsize=32)
def _basis_values(n: int) -> np.ndarray:
    """Staggered magnetization of every computational basis state."""
    idx = np.arange(2**n)
    out = np.zeros(2**n)
    for j, s in enumerate(staggered_signs(n)):
        out += s * (0.5 - ((idx >> j) & 1))
    out /= n
    out.setflags(write=False)
    return out


def _is_integral(weights: np.ndarray) -> bool:
    return bool(np.all(np.asarray(weights) == np.round(weights)))


def _sample_mean_and_error(values: np.ndarray, weights: np.ndarray) -> tuple[float, float]:
    total = float(weights.sum())
    if total <= 0:
        raise CountsError("empty counts")
    mean = float(values @ weights / total)
    if not _is_integral(weights) or total < 2:
        return mean, 0.0
    var = float(((values - mean) ** 2) @ weights / (total - 1))
    return mean, float(np.sqrt(var / total))


def staggered_magnetization_counts(counts: Counts, n: int) -> tuple[float, float]:
    """Estimate and standard error from a histogram over all n sites.

    Float-weight (exact probability) histograms return a zero error.
    """
    if counts.width != n:
        raise CountsError(f"histogram width {counts.width} != {n} sites")
    if not counts or counts.shots <= 0:
        raise CountsError("empty counts")
    bits, weights = counts.bit_matrix()
    values = ((0.5 - bits) * staggered_signs(n)).sum(axis=1) / n
    return _sample_mean_and_error(values, np.asarray(weights, dtype=float))


def staggered_magnetization_exact(state: StateVector) -> float:
    n = state.n_qubits
    return float(_basis_values(n) @ state.probabilities())


def z_string_counts(counts: Counts, bits_idx: Sequence[int]) -> tuple[float, float]:
    """<prod Z> over the given measured bits, with standard error."""
    bits, weights = counts.bit_matrix()
    parity = bits[:, list(bits_idx)].sum(axis=1) % 2 if len(bits_idx) else np.zeros(len(bits))
    return _sample_mean_and_error(1.0 - 2.0 * parity, np.asarray(weights, dtype=float))


def z_string_exact(state: StateVector, qubits: Sequence[int]) -> float:
    idx = np.arange(2**state.n_qubits)
    parity = np.zeros_like(idx)
    for q in qubits:
        parity ^= (idx >> q) & 1
    return float((1.0 - 2.0 * parity) @ state.probabilities())


def mean_absolute_error(estimates: Sequence[float], references: Sequence[float]) -> float:
    est = np.asarray(estimates, dtype=float)
    ref = np.asarray(references, dtype=float)
    if est.shape != ref.shape or est.ndim != 1:
        raise ValueError(f"length mismatch: {est.shape} vs {ref.shape}")
    if est.size == 0:
        raise ValueError("need at least one value")
    return float(np.mean(np.abs(est - ref)))


@dataclass(frozen=True)
class ResultRow:
    step: int
    time: float
    raw: float
    mitigated: float
    std_error: float
    reference: float | None = None

    @property
    def abs_error(self) -> float | None:
        if self.reference is None:
            return None
        return abs(self.mitigated - self.reference)


def _fmt(x: float | None) -> str:
    return "" if x is None else repr(float(x))


def results_csv(rows: Iterable[ResultRow], header: str | None = None) -> str:
    """Results table as CSV text; ``header`` becomes a leading ``#`` line."""
    buf = io.StringIO()
    if header:
        buf.write(f"# {header}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(RESULT_COLUMNS)
    for r in rows:
        w.writerow([r.step, _fmt(r.time), _fmt(r.raw), _fmt(r.mitigated),
                    _fmt(r.std_error), _fmt(r.reference), _fmt(r.abs_error)])
    return buf.getvalue()


def read_results_csv(text: str) -> list[ResultRow]:
    lines = [l for l in text.splitlines() if l and not l.startswith("#")]
    rows = []
    for rec in csv.DictReader(lines):
        ref = rec.get("reference") or None
        rows.append(ResultRow(
            step=int(rec["step"]),
            time=float(rec["time"]),
            raw=float(rec["raw"]),
            mitigated=float(rec["mitigated"]),
            std_error=float(rec["std_error"]),
            reference=None if ref is None else float(ref),
        ))
    return rows
