"""Rényi-2 entropy from randomized single-qubit measurements.

For each random instance a, local Haar unitaries are applied to the
subsystem before a Z measurement, and

    X_a = 2^L sum_{j,j'} (-2)^(-D[j,j']) P(j) P(j')

with D the Hamming distance. The mean of X_a over instances estimates
the purity Tr(rho_A^2) and S2 = -log of that mean.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .circuit import Circuit
from .counts import Counts, CountsError, merge
from .gates import Gate
from .noise import NoiseModel, apply_confusion_to_probabilities
from .qmp import PackLayout, pack, pack_states, split_counts
from .rng import derive_seed, make_rng
from .sim import (
    StateVector,
    apply_1q,
    apply_circuit,
    exact_counts,
    exact_purity,
    reduced_density_matrix,
    sample_counts_grouped,
)

# K = (x)_i [[1, -1/2], [-1/2, 1]] gives (-2)^(-D[j,j']) entrywise
HAMMING_KERNEL = np.array([[1.0, -0.5], [-0.5, 1.0]])


def sample_cue_unitary(rng: np.random.Generator) -> np.ndarray:
    """Haar-random 2x2 unitary via QR of a complex Gaussian matrix."""
    z = (rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))) / math.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))


@dataclass(frozen=True, eq=False)
class RandomUnitaryBatch:
    """``unitaries[a, j]`` is the 2x2 unitary for subsystem qubit j in instance a."""

    unitaries: np.ndarray
    seed: int

    @classmethod
    def generate(cls, n_instances: int, n_qubits: int, seed: int) -> "RandomUnitaryBatch":
        if n_instances < 1 or n_qubits < 1:
            raise ValueError("need at least one instance and one qubit")
        u = np.empty((n_instances, n_qubits, 2, 2), dtype=complex)
        for a in range(n_instances):
            rng = make_rng(seed, a)
            for j in range(n_qubits):
                u[a, j] = sample_cue_unitary(rng)
        return cls(u, seed)

    @property
    def n_instances(self) -> int:
        return self.unitaries.shape[0]

    @property
    def n_qubits(self) -> int:
        return self.unitaries.shape[1]


def _check_subsystem(subsystem: Sequence[int], n: int) -> list[int]:
    sub = [int(q) for q in subsystem]
    if not sub or len(set(sub)) != len(sub) or any(not 0 <= q < n for q in sub):
        raise ValueError(f"invalid subsystem {sub} for {n} qubits")
    return sub


def rm_layer(subsystem: Sequence[int], unitaries: np.ndarray) -> list[Gate]:
    return [Gate("u", (q,), matrix=u) for q, u in zip(subsystem, unitaries)]


def build_rm_circuits(base: Circuit, subsystem: Sequence[int], batch: RandomUnitaryBatch) -> list[Circuit]:
    """Base circuit plus one layer of random unitaries, measuring the subsystem."""
    sub = _check_subsystem(subsystem, base.n_qubits)
    if batch.n_qubits != len(sub):
        raise ValueError("batch width does not match the subsystem")
    out = []
    for a in range(batch.n_instances):
        c = base.with_layers(
            base.layers + (tuple(rm_layer(sub, batch.unitaries[a])),),
            base.durations + (1.0,),
            rm_instance=a,
        )
        out.append(c.with_measured(sub))
    return out


def estimate_X_a(counts: Counts, L: int, unbiased: bool = False) -> float:
    """Purity estimator of one instance.

    The default keeps the j = j' terms with P(j)^2 as written in the
    estimator; ``unbiased`` replaces them by c(c-1)/(S(S-1)).
    """
    if counts.width != L:
        raise CountsError(f"histogram width {counts.width} != L = {L}")
    total = counts.shots
    if not counts or total <= 0:
        raise CountsError("empty counts")
    ints, weights = counts.outcomes()
    c = np.zeros(2**L)
    np.add.at(c, ints, weights)
    kc = apply_confusion_to_probabilities(c, [HAMMING_KERNEL] * L)
    if unbiased:
        if total < 2:
            raise CountsError("unbiased estimator needs at least two shots")
        return float(2**L * (c @ kc - total) / (total * (total - 1)))
    return float(2**L * (c @ kc) / total**2)


@dataclass
class PurityEstimate:
    X_values: np.ndarray
    mean: float
    renyi2: float
    std_error: float
    purity_std_error: float
    flags: list[str] = field(default_factory=list)
    metadata: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return self.mean > 0


def _summarize(x: np.ndarray, L: int, flags: list[str], metadata: dict,
               mean: float | None = None, mean_err: float | None = None) -> PurityEstimate:
    xbar = float(np.mean(x)) if mean is None else mean
    perr = float(np.std(x, ddof=1) / math.sqrt(len(x))) if mean_err is None else mean_err
    flags = list(flags)
    if xbar > 0:
        s2, s2_err = -math.log(xbar), perr / xbar
    else:
        s2, s2_err = math.nan, math.inf
        flags.append(f"estimate failed: mean X = {xbar:.6g} <= 0")
    if not 2.0**-L - 3 * perr <= xbar <= 1 + 3 * perr:
        flags.append("purity estimate outside [2^-L, 1] beyond 3 sigma")
    return PurityEstimate(np.asarray(x, dtype=float), xbar, s2, s2_err, perr, flags, metadata)


def _rotate(psi: np.ndarray, n: int, subsystem: Sequence[int], unitaries: np.ndarray) -> np.ndarray:
    for q, u in zip(subsystem, unitaries):
        psi = apply_1q(psi, n, q, u)
    return psi


def rm_histograms(
    state: StateVector,
    subsystem: Sequence[int],
    batch: RandomUnitaryBatch,
    shots: int | None,
    seed: int,
    packed: bool = False,
) -> list[Counts]:
    """Noiseless subsystem histograms, one per instance.

    ``shots=None`` gives exact probabilities. With ``packed`` consecutive
    instances are run pairwise on a packed register (state, spacer, state)
    and split afterwards; per-instance seeds are the same in both modes.
    """
    n = state.n_qubits
    sub = _check_subsystem(subsystem, n)
    seeds = [derive_seed(seed, a) for a in range(batch.n_instances)]

    def single(a: int) -> Counts:
        rotated = StateVector(_rotate(state.amplitudes, n, sub, batch.unitaries[a]))
        if shots is None:
            return exact_counts(rotated, sub)
        return sample_counts_grouped(rotated, shots, [sub], [seeds[a]])

    if not packed:
        return [single(a) for a in range(batch.n_instances)]
    out: list[Counts] = []
    joined = pack_states(state, state)
    off = n + 1
    width = 2 * n + 1
    sub_b = [q + off for q in sub]
    layout = PackLayout(n, n, (n,), tuple(range(len(sub))), tuple(range(len(sub), 2 * len(sub))))
    for a in range(0, batch.n_instances, 2):
        if a + 1 == batch.n_instances:
            out.append(single(a))  # odd tail runs alone
            break
        psi = _rotate(joined.amplitudes, width, sub, batch.unitaries[a])
        psi = _rotate(psi, width, sub_b, batch.unitaries[a + 1])
        rotated = StateVector(psi)
        if shots is None:
            merged = exact_counts(rotated, sub + sub_b)
        else:
            merged = sample_counts_grouped(rotated, shots, [sub, sub_b], [seeds[a], seeds[a + 1]])
        out.extend(split_counts(merged, layout))
    return out


def rm_histograms_from_circuits(
    circuits: Sequence[Circuit],
    initial: StateVector,
    shots: int,
    seed: int,
    packed: bool = False,
) -> list[Counts]:
    """Sample RM instance circuits, optionally packed two per register.

    Packed pairs are simulated as one wide circuit and split; instance a
    always draws from the stream ``derive_seed(seed, a)``, so the packed
    and unpacked histograms agree shot for shot.
    """
    seeds = [derive_seed(seed, a) for a in range(len(circuits))]

    def single(a: int) -> Counts:
        c = circuits[a]
        state = apply_circuit(initial, c)
        return sample_counts_grouped(state, shots, [list(c.measured_qubits)], [seeds[a]])

    if not packed:
        return [single(a) for a in range(len(circuits))]
    joined = pack_states(initial, initial)
    out: list[Counts] = []
    for a in range(0, len(circuits), 2):
        if a + 1 == len(circuits):
            out.append(single(a))
            break
        wide, layout = pack(circuits[a], circuits[a + 1])
        state = apply_circuit(joined, wide)
        measured = wide.measured_qubits
        groups = [[measured[i] for i in layout.a_bits], [measured[i] for i in layout.b_bits]]
        merged = sample_counts_grouped(state, shots, groups, [seeds[a], seeds[a + 1]])
        out.extend(split_counts(merged, layout))
    return out


def estimate_renyi2(
    base: Circuit | StateVector,
    subsystem: Sequence[int],
    n_instances: int = 60,
    shots: int | None = 100_000,
    seed: int = 0,
    noise: NoiseModel | None = None,
    mitigation=None,
    initial: StateVector | None = None,
    n_trajectories: int = 20,
    unbiased: bool = False,
    packed: bool = False,
) -> PurityEstimate:
    """Randomized-measurement purity and Rényi-2 entropy of ``subsystem``.

    ``shots=None`` uses exact outcome probabilities (noiseless only). With a
    noise model the instances are executed as circuits with the optional
    mitigation; under ZNE the instance mean is extrapolated over fold
    factors.
    """
    if n_instances < 2:
        raise ValueError("need at least two random instances")
    n = base.n_qubits
    sub = _check_subsystem(subsystem, n)
    if len(sub) == n:
        raise ValueError("subsystem must be a proper subset")
    L = len(sub)
    batch = RandomUnitaryBatch.generate(n_instances, L, derive_seed(seed, 0))
    meta = {"n_instances": n_instances, "shots": shots, "unbiased": unbiased}

    if noise is None:
        if isinstance(base, StateVector):
            state = base
        else:
            start = StateVector.zero(n) if initial is None else initial
            state = apply_circuit(start, base)
        hists = rm_histograms(state, sub, batch, shots, derive_seed(seed, 1), packed=packed)
        x = np.array([estimate_X_a(h, L, unbiased and shots is not None) for h in hists])
        return _summarize(x, L, [], meta)

    # noisy path: instances run as circuits through the mitigation pipeline
    from .mitigation import MitigationConfig, execute_counts, zne_extrapolate

    if shots is None:
        raise ValueError("noisy estimation needs a finite shot count")
    if isinstance(base, StateVector):
        raise ValueError("noisy estimation needs a base circuit")
    config = mitigation if mitigation is not None else MitigationConfig()
    flags = []
    if config.sm.enabled:
        flags.append("SM does not apply to purity estimates; ignored")
    start = StateVector.zero(n) if initial is None else initial
    circuits = build_rm_circuits(base, sub, batch)
    factors = tuple(config.zne.fold_factors) if config.zne.enabled else (1,)
    per_factor = []
    for fi, f in enumerate(factors):
        xs = []
        for a, c in enumerate(circuits):
            hists = execute_counts(c, f, start, noise, config, shots, n_trajectories,
                                   derive_seed(seed, 2, fi, a))[0]
            xs.append(estimate_X_a(merge(hists), L, unbiased))
        per_factor.append(np.array(xs))
    if len(factors) == 1:
        return _summarize(per_factor[0], L, flags, meta)
    pts = [(f, float(np.mean(x)), float(np.std(x, ddof=1) / math.sqrt(len(x))))
           for f, x in zip(factors, per_factor)]
    est = zne_extrapolate(pts, config.zne.fit)
    meta.update(zne_points=pts, zne_target="mean X")
    return _summarize(per_factor[0], L, flags + est.flags, meta, est.mitigated, est.std_error)


def exact_renyi2(state: StateVector, subsystem: Sequence[int]) -> float:
    return -math.log(exact_purity(reduced_density_matrix(state, subsystem)))
