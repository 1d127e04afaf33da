"""Monte Carlo trajectory noise: stochastic two-qubit Paulis, coherent ZZ
over-rotation, coherent idle Z drift and per-qubit readout confusion.

A dense density-matrix path is kept as an oracle for small circuits.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator, Mapping, Sequence

import numpy as np

from .circuit import Circuit, CircuitError
from .counts import Counts, CountsError
from .gates import PAULI, Gate, embed, rz_matrix, rzz_diagonal
from .rng import make_rng
from .sim import StateVector, _group_keys, apply_gate_array

# the 15 non-identity two-qubit Paulis; label[0] acts on gate.qubits[0]
TWO_QUBIT_PAULIS = tuple(
    a + b for a, b in itertools.product("IXYZ", repeat=2) if a + b != "II"
)


# amplitudes held at once when trajectories are simulated as a batch
BATCH_AMPLITUDES = 1 << 22


class NoiseError(ValueError):
    pass


def _check_confusion(m: np.ndarray, where: str) -> np.ndarray:
    m = np.asarray(m, dtype=float)
    if m.shape != (2, 2):
        raise NoiseError(f"{where}: confusion matrix must be 2x2")
    if np.any(m < 0) or np.any(m > 1):
        raise NoiseError(f"{where}: probabilities must lie in [0, 1]")
    if not np.allclose(m.sum(axis=0), 1.0, atol=1e-12):
        raise NoiseError(f"{where}: confusion columns must sum to 1")
    return m


def confusion(p1_given_0: float, p0_given_1: float) -> np.ndarray:
    """Confusion matrix M[read, true] from the two flip probabilities."""
    m = np.array([[1 - p1_given_0, p0_given_1], [p1_given_0, 1 - p0_given_1]])
    return _check_confusion(m, "confusion")


@dataclass(frozen=True)
class NoiseModel:
    """Noise parameters.

    ``readout`` maps qubit index to ``M[b', b] = P(read b' | true b)``; the key
    ``-1`` is the default for qubits without their own entry.
    """

    p2: float = 0.0
    eps2: float = 0.0
    idle_z: float = 0.0
    readout: Mapping[int, np.ndarray] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not 0.0 <= self.p2 <= 1.0:
            raise NoiseError(f"p2 must lie in [0, 1], got {self.p2}")
        ro = {int(q): _check_confusion(m, f"readout q{q}") for q, m in dict(self.readout).items()}
        object.__setattr__(self, "readout", ro)

    @classmethod
    def default(cls) -> "NoiseModel":
        return cls(p2=0.005, eps2=0.02, idle_z=0.01, readout={-1: confusion(0.02, 0.04)})

    def readout_for(self, q: int) -> np.ndarray | None:
        m = self.readout.get(q, self.readout.get(-1))
        if m is None or np.array_equal(m, np.eye(2)):
            return None
        return m

    @property
    def has_readout(self) -> bool:
        return any(not np.array_equal(m, np.eye(2)) for m in self.readout.values())

    @property
    def is_stochastic(self) -> bool:
        return self.p2 > 0

    def with_(self, **changes) -> "NoiseModel":
        fields = dict(p2=self.p2, eps2=self.eps2, idle_z=self.idle_z, readout=self.readout)
        fields.update(changes)
        return NoiseModel(**fields)

    # text form -----------------------------------------------------------
    def to_text(self) -> str:
        lines = [f"p2={self.p2!r}", f"eps2={self.eps2!r}", f"idle_z={self.idle_z!r}"]
        for q in sorted(self.readout):
            m = self.readout[q]
            key = "readout.all" if q == -1 else f"readout.q{q}"
            lines.append(f"{key}=" + ",".join(repr(float(x)) for x in m.T.ravel()))
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "NoiseModel":
        kw: dict = {}
        readout: dict[int, np.ndarray] = {}
        for n, raw in enumerate(text.splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, value = (s.strip() for s in line.partition("="))
            if not sep:
                raise NoiseError(f"line {n}: expected key=value")
            try:
                if key in ("p2", "eps2", "idle_z"):
                    kw[key] = float(value)
                elif key.startswith("readout."):
                    q = key[len("readout."):]
                    idx = -1 if q == "all" else int(q.lstrip("q"))
                    vals = [float(v) for v in value.split(",")]
                    if len(vals) != 4:
                        raise NoiseError(f"line {n}: readout needs 4 entries")
                    readout[idx] = np.array(vals).reshape(2, 2).T
                else:
                    raise NoiseError(f"line {n}: unknown key {key!r}")
            except ValueError as exc:
                if isinstance(exc, NoiseError):
                    raise
                raise NoiseError(f"line {n}: bad value {value!r}") from exc
        return cls(readout=readout, **kw)

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_text())

    @classmethod
    def load(cls, path: str | Path) -> "NoiseModel":
        return cls.from_text(Path(path).read_text())


@dataclass
class Trajectory:
    """Replay record: ``(layer, qubits, pauli_label, op_index)`` per inserted error.

    ``op_index`` counts two-qubit operations in execution order, which
    disambiguates folded gates that share a layer slot.
    """

    seed: int
    index: int
    inserted_errors: list[tuple[int, tuple[int, ...], str, int]] = field(default_factory=list)


# event stream --------------------------------------------------------------


def _gate_events(g: Gate, layer: int) -> Iterator[tuple]:
    if g.kind == "seq":
        for op in g.ops:
            yield from _gate_events(op, layer)
    elif g.kind == "delay":
        yield ("idle", g.qubits[0], g.param)
    elif g.kind in ("cx", "cz"):
        yield ("gate", g)
        yield ("2q", g, layer)
    else:
        yield ("gate", g)


def circuit_events(circuit: Circuit) -> Iterator[tuple]:
    """Flatten a circuit into gate, two-qubit-noise and idle events."""
    for k, layer in enumerate(circuit.layers):
        for g in layer:
            yield from _gate_events(g, k)
        d = circuit.durations[k]
        if d > 0:
            busy = circuit.busy(k)
            for q in range(circuit.n_qubits):
                if q not in busy:
                    yield ("idle", q, d)


def _pauli_ops(label: str, qubits: tuple[int, ...]) -> list[Gate]:
    return [Gate(p.lower(), (q,)) for p, q in zip(label, qubits) if p != "I"]


def draw_errors(n_ops: int, p2: float, seed: int, index: int) -> dict[int, str]:
    """Pauli errors of one trajectory keyed by two-qubit operation index."""
    if p2 <= 0 or n_ops == 0:
        return {}
    rng = make_rng(seed, index, 0)
    hit = np.flatnonzero(rng.random(n_ops) < p2)
    labels = rng.integers(15, size=hit.size)
    return {int(i): TWO_QUBIT_PAULIS[int(l)] for i, l in zip(hit, labels)}


def _n_two_qubit_ops(circuit: Circuit) -> int:
    return circuit.count(("cx", "cz"))


def run_trajectory(
    circuit: Circuit,
    initial: StateVector,
    noise: NoiseModel,
    seed: int,
    index: int = 0,
    replay: Trajectory | None = None,
) -> tuple[StateVector, Trajectory]:
    """One noisy pure-state trajectory.

    With ``replay`` the recorded errors are re-inserted instead of drawing
    new ones.
    """
    if circuit.n_qubits != initial.n_qubits:
        raise CircuitError("qubit-count mismatch")
    n = circuit.n_qubits
    if replay is None:
        errors = draw_errors(_n_two_qubit_ops(circuit), noise.p2, seed, index)
    else:
        errors = {e[3]: e[2] for e in replay.inserted_errors}
    traj = Trajectory(seed, index)
    psi = initial.amplitudes
    op_index = 0
    for ev in circuit_events(circuit):
        kind = ev[0]
        if kind == "gate":
            psi = apply_gate_array(psi, n, ev[1])
        elif kind == "idle":
            if noise.idle_z:
                psi = apply_gate_array(psi, n, Gate("rz", (ev[1],), noise.idle_z * ev[2]))
        else:
            g, layer = ev[1], ev[2]
            label = errors.get(op_index)
            if label is not None:
                for op in _pauli_ops(label, g.qubits):
                    psi = apply_gate_array(psi, n, op)
                traj.inserted_errors.append((layer, g.qubits, label, op_index))
            if noise.eps2:
                psi = apply_gate_array(psi, n, Gate("rzz", g.qubits, noise.eps2))
            op_index += 1
    return StateVector(psi), traj


def _batched_trajectories(
    circuit: Circuit, initial: StateVector, noise: NoiseModel, indices: Sequence[int], seed: int
) -> np.ndarray:
    """Final states of several trajectories as columns of one array.

    Every gate acts on all columns at once; drawn Pauli errors touch only
    their own columns. Matches :func:`run_trajectory` column by column.
    """
    n = circuit.n_qubits
    n_ops = _n_two_qubit_ops(circuit)
    hits: dict[int, dict[str, list[int]]] = {}
    for col, k in enumerate(indices):
        for op, label in draw_errors(n_ops, noise.p2, seed, k).items():
            hits.setdefault(op, {}).setdefault(label, []).append(col)
    psi = np.repeat(initial.amplitudes[:, None], len(indices), axis=1)
    op_index = 0
    for ev in circuit_events(circuit):
        kind = ev[0]
        if kind == "gate":
            psi = apply_gate_array(psi, n, ev[1])
        elif kind == "idle":
            if noise.idle_z:
                psi = apply_gate_array(psi, n, Gate("rz", (ev[1],), noise.idle_z * ev[2]))
        else:
            g = ev[1]
            for label, cols in hits.get(op_index, {}).items():
                sub = psi[:, cols]
                for op in _pauli_ops(label, g.qubits):
                    sub = apply_gate_array(sub, n, op)
                psi[:, cols] = sub
            if noise.eps2:
                psi = apply_gate_array(psi, n, Gate("rzz", g.qubits, noise.eps2))
            op_index += 1
    return psi


# readout ---------------------------------------------------------------------


def readout_matrices(noise: NoiseModel, measured: Sequence[int]) -> list[np.ndarray | None]:
    return [noise.readout_for(q) for q in measured]


def apply_confusion_to_probabilities(p: np.ndarray, mats: Sequence[np.ndarray | None]) -> np.ndarray:
    """Push a distribution over measured bits through independent confusions."""
    width = len(mats)
    out = np.asarray(p, dtype=float)
    for j, m in enumerate(mats):
        if m is None:
            continue
        v = out.reshape(2 ** (width - 1 - j), 2, 2**j)
        out = np.einsum("ab,ibk->iak", m, v).reshape(-1)
    return out


def apply_readout_confusion(
    counts: Counts, readout: Sequence[np.ndarray | None] | NoiseModel, seed: int
) -> Counts:
    """Flip every shot's bits independently according to the confusion model.

    ``readout`` is either one matrix (or None) per measured bit, or a noise
    model whose per-qubit entries are taken for bits ``0..width-1``.
    """
    if isinstance(readout, NoiseModel):
        mats = readout_matrices(readout, range(counts.width))
    else:
        mats = list(readout)
        if len(mats) != counts.width:
            raise CountsError(f"confusion model width {len(mats)} != histogram width {counts.width}")
    ints, weights = counts.outcomes()
    if not _all_integral(weights):
        raise CountsError("per-shot readout flips need integer counts")
    shots = np.repeat(ints, weights.astype(np.int64))
    rng = make_rng(seed)
    u = rng.random((shots.size, counts.width))
    for j, m in enumerate(mats):
        if m is None:
            continue
        m = _check_confusion(m, f"bit {j}")
        bit = (shots >> j) & 1
        flip_prob = np.where(bit == 0, m[1, 0], m[0, 1])
        shots = shots ^ ((u[:, j] < flip_prob).astype(np.int64) << j)
    return Counts.from_samples(shots, counts.width)


def _all_integral(w: np.ndarray) -> bool:
    return bool(np.all(w == np.round(w)))


# execution ---------------------------------------------------------------------


def marginal_probabilities(state: StateVector, measured: Sequence[int]) -> np.ndarray:
    key = _group_keys(state.n_qubits, list(measured))
    return np.bincount(key, weights=state.probabilities(), minlength=2 ** len(measured))


def trajectory_probabilities(
    circuit: Circuit,
    initial: StateVector,
    noise: NoiseModel,
    n_trajectories: int,
    seed: int,
) -> list[np.ndarray]:
    """Measured-bit distributions (before readout error) per trajectory.

    Without stochastic errors all trajectories coincide, so the state is
    simulated once and shared.
    """
    if n_trajectories < 1:
        raise NoiseError("n_trajectories must be >= 1")
    measured = circuit.measured_qubits
    if not noise.is_stochastic:
        state, _ = run_trajectory(circuit, initial, noise, seed, 0)
        p = marginal_probabilities(state, measured)
        return [p] * n_trajectories
    key = _group_keys(circuit.n_qubits, list(measured))
    width = 2 ** len(measured)
    chunk = max(1, BATCH_AMPLITUDES >> circuit.n_qubits)
    out = []
    for start in range(0, n_trajectories, chunk):
        idx = range(start, min(start + chunk, n_trajectories))
        probs = np.abs(_batched_trajectories(circuit, initial, noise, idx, seed)) ** 2
        for col in range(probs.shape[1]):
            out.append(np.bincount(key, weights=probs[:, col], minlength=width))
    return out


def split_evenly(total: int, parts: int) -> list[int]:
    """``parts`` non-negative integers summing to ``total``, differing by at most one."""
    base, extra = divmod(int(total), int(parts))
    return [base + (i < extra) for i in range(parts)]


def sample_trajectories(
    probs: Sequence[np.ndarray],
    shots: int,
    seed: int,
    mats: Sequence[np.ndarray | None] = (),
    width: int | None = None,
) -> Counts:
    """Draw readout-corrupted shots, split as evenly as possible over trajectories."""
    if shots < 1:
        raise NoiseError("shots must be >= 1")
    width = int(np.log2(probs[0].size)) if width is None else width
    total = np.zeros(2**width, dtype=np.int64)
    for k, (p, per) in enumerate(zip(probs, split_evenly(shots, len(probs)))):
        if per == 0:
            continue
        if mats:
            p = apply_confusion_to_probabilities(p, mats)
        p = np.clip(p, 0.0, None)
        total += make_rng(seed, k, 1).multinomial(per, p / p.sum())
    nz = np.flatnonzero(total)
    return Counts.from_outcomes(nz, total[nz], width)


def noisy_execute(
    circuit: Circuit,
    initial: StateVector,
    noise: NoiseModel,
    shots: int,
    n_trajectories: int,
    seed: int,
) -> Counts:
    """Sample a noisy circuit by averaging over Pauli trajectories."""
    if n_trajectories < 1 or shots % n_trajectories:
        raise NoiseError(f"shots ({shots}) must be divisible by n_trajectories ({n_trajectories})")
    probs = trajectory_probabilities(circuit, initial, noise, n_trajectories, seed)
    mats = readout_matrices(noise, circuit.measured_qubits)
    return sample_trajectories(probs, shots, seed, mats, len(circuit.measured_qubits))


def global_depolarizing_reference(p: float, ideal_expectation: float) -> float:
    """Expectation of a traceless observable after global depolarizing noise."""
    if not 0.0 <= p < 1.0:
        raise NoiseError(f"p must lie in [0, 1), got {p}")
    return (1.0 - p) * ideal_expectation


# density-matrix oracle ------------------------------------------------------------

_PAULI2 = {lbl: np.kron(PAULI[lbl[1]], PAULI[lbl[0]]) for lbl in TWO_QUBIT_PAULIS}


def _conj(rho: np.ndarray, u: np.ndarray) -> np.ndarray:
    return u @ rho @ u.conj().T


def density_matrix_execute(circuit: Circuit, initial: StateVector | np.ndarray, noise: NoiseModel) -> np.ndarray:
    """Exact channel evolution of a density matrix (small circuits only)."""
    n = circuit.n_qubits
    if n > 8:
        raise CircuitError("density-matrix oracle limited to 8 qubits")
    if isinstance(initial, StateVector):
        rho = np.outer(initial.amplitudes, initial.amplitudes.conj())
    else:
        rho = np.array(initial, dtype=complex)
    for ev in circuit_events(circuit):
        kind = ev[0]
        if kind == "gate":
            g = ev[1]
            rho = _conj(rho, embed(g.matrix_local(), list(g.qubits), n))
        elif kind == "idle":
            if noise.idle_z:
                rho = _conj(rho, embed(rz_matrix(noise.idle_z * ev[2]), [ev[1]], n))
        else:
            g = ev[1]
            pos = list(g.qubits)
            if noise.p2 > 0:
                mixed = sum(_conj(rho, embed(_PAULI2[l], pos, n)) for l in TWO_QUBIT_PAULIS)
                rho = (1 - noise.p2) * rho + noise.p2 / 15.0 * mixed
            if noise.eps2:
                rho = _conj(rho, embed(np.diag(rzz_diagonal(noise.eps2)), pos, n))
    return rho


def exact_noisy_probabilities(circuit: Circuit, initial: StateVector, noise: NoiseModel) -> np.ndarray:
    """Measured-bit distribution including readout error, from the oracle."""
    rho = density_matrix_execute(circuit, initial, noise)
    measured = list(circuit.measured_qubits)
    key = _group_keys(circuit.n_qubits, measured)
    p = np.bincount(key, weights=np.real(np.diag(rho)), minlength=2 ** len(measured))
    return apply_confusion_to_probabilities(p, readout_matrices(noise, measured))
