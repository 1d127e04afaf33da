"""Per-step orchestration of noisy execution and mitigation."""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..circuit import Circuit
from ..noise import (
    NoiseModel,
    apply_confusion_to_probabilities,
    readout_matrices,
    sample_trajectories,
    split_evenly,
    trajectory_probabilities,
)
from ..observables import (
    ObservableSpec,
    staggered_magnetization_counts,
    staggered_magnetization_exact,
    staggered_signs,
)
from ..rng import derive_seed
from ..sim import StateVector, apply_circuit
from ..trotter import (
    TrotterOrder,
    XXZParams,
    build_sm_test_circuit,
    build_trotter_circuit,
    neel_state,
    trotter_states,
)
from .config import MitigatedEstimate, MitigationConfig
from .dd import dd_insert
from .sm import sm_mitigate
from .trex import permute_probabilities, trex_collapse, trex_masks
from .twirl import pauli_twirl
from .zne import zne_extrapolate, zne_fold

TARGET, TEST = 0, 1


@dataclass(frozen=True)
class LevelResult:
    value: float
    std_error: float
    executions: int


def execute_counts(
    circuit: Circuit,
    factor: int,
    initial: StateVector,
    noise: NoiseModel,
    config: MitigationConfig,
    shots: int,
    n_trajectories: int,
    seed: int,
) -> tuple[list, int, list[np.ndarray]]:
    """Fold, decouple, twirl, run and read out one circuit at one noise level.

    Returns one TREX-collapsed histogram per twirled copy, the number of
    circuits executed and, per copy, the (trajectories x outcomes) matrix of
    expected unflipped outcome distributions. The shot budget is split
    evenly over copies and then over TREX masks. A mask is a noiseless X
    layer right before readout, so the trajectories of a copy are shared by
    all of its masks and each mask just permutes their outcome distributions.
    """
    c = zne_fold(circuit, factor)
    if config.dd.enabled:
        c = dd_insert(c, config.dd.spacing, config.dd.min_duration)
    copies = pauli_twirl(c, config.pt.n_copies, derive_seed(seed, 0)) if config.pt.enabled else [c]
    width = len(c.measured_qubits)
    masks = (
        trex_masks(width, config.trex.n_samples, derive_seed(seed, 1)) if config.trex.enabled else [0]
    )
    mats = readout_matrices(noise, c.measured_qubits)
    histograms, expected = [], []
    for ci, (cc, copy_shots) in enumerate(zip(copies, split_evenly(shots, len(copies)))):
        probs = trajectory_probabilities(cc, initial, noise, n_trajectories, derive_seed(seed, 2, ci))
        results = []
        dist = np.zeros((len(probs), 2**width))
        for mi, (mask, mask_shots) in enumerate(zip(masks, split_evenly(copy_shots, len(masks)))):
            if mask_shots == 0:
                continue
            flipped = [permute_probabilities(p, mask) for p in probs] if mask else probs
            counts = sample_trajectories(flipped, mask_shots, derive_seed(seed, 3, ci, mi), mats, width)
            results.append((counts, mask))
            for t, p in enumerate(flipped):
                read = apply_confusion_to_probabilities(p, mats) if mats else p
                dist[t] += mask_shots / copy_shots * permute_probabilities(read, mask)
        histograms.append(trex_collapse(results))
        expected.append(dist)
    return histograms, len(copies) * len(masks), expected


def execute_level(
    circuit: Circuit,
    factor: int,
    initial: StateVector,
    noise: NoiseModel,
    config: MitigationConfig,
    shots: int,
    n_trajectories: int,
    seed: int,
) -> LevelResult:
    """Staggered magnetization averaged over twirled copies at one noise level.

    The error of each copy combines shot noise with the spread of the
    per-trajectory expectations, since the trajectories are themselves a
    finite sample of the noise channel.
    """
    histograms, executed, expected = execute_counts(
        circuit, factor, initial, noise, config, shots, n_trajectories, seed
    )
    n = circuit.n_qubits
    values = _outcome_values(n)
    stats = []
    for h, dist in zip(histograms, expected):
        value, shot_err = staggered_magnetization_counts(h, n)
        mu = dist @ values
        traj_var = float(np.var(mu, ddof=1)) / len(mu) if len(mu) > 1 else 0.0
        stats.append((value, math.sqrt(shot_err**2 + traj_var)))
    k = len(stats)
    return LevelResult(
        float(np.mean([v for v, _ in stats])),
        float(math.sqrt(sum(e * e for _, e in stats)) / k),
        executed,
    )


def _outcome_values(n: int) -> np.ndarray:
    """Staggered magnetization of every basis outcome (bit j = qubit j)."""
    bits = (np.arange(2**n)[:, None] >> np.arange(n)) & 1
    return ((0.5 - bits) * staggered_signs(n)).sum(axis=1) / n


def _run_circuit(circuit, initial, noise, config, factors, shots, n_traj, seed):
    levels = [
        execute_level(circuit, f, initial, noise, config, shots, n_traj, derive_seed(seed, fi))
        for fi, f in enumerate(factors)
    ]
    return levels


def run_mitigated_experiment(
    params: XXZParams,
    noise: NoiseModel,
    config: MitigationConfig,
    observable: ObservableSpec | None = None,
    shots: int = 100_000,
    seed: int = 0,
    n_trajectories: int = 100,
    order: TrotterOrder = TrotterOrder.SECOND,
    steps: Sequence[int] | None = None,
) -> list[MitigatedEstimate]:
    """Mitigated staggered magnetization for each Trotter step.

    Shots are per executed circuit family: each noise level of the target
    (and of the SM test circuit) receives ``shots`` in total.
    """
    n = params.n_qubits
    if observable is not None and observable.n_sites != n:
        raise ValueError(f"observable has {observable.n_sites} sites, circuit has {n}")
    steps = list(range(1, params.n_steps + 1)) if steps is None else list(steps)
    if any(not 1 <= m <= params.n_steps for m in steps):
        raise ValueError("steps must lie in 1..n_steps")
    initial = neel_state(n)
    reference = [staggered_magnetization_exact(s) for s in trotter_states(params, order, initial)]
    use_zne = config.zne.enabled and not config.sm.enabled
    factors = tuple(config.zne.fold_factors) if use_zne else (1,)
    out = []
    for m in steps:
        flags: list[str] = []
        if config.zne.enabled and config.sm.enabled:
            flags.append("SM and ZNE both requested: SM at fold factor 1, ZNE skipped")
        target = build_trotter_circuit(params, order, m)
        tgt = _run_circuit(target, initial, noise, config, factors, shots, n_trajectories,
                           derive_seed(seed, m, TARGET))
        executed = sum(l.executions for l in tgt)
        breakdown: dict = {"reference": reference[m - 1], "fold_factors": list(factors)}
        if config.pt.enabled:
            breakdown["pt_shots"] = "split"
        raw, raw_se = tgt[0].value, tgt[0].std_error
        if use_zne:
            est = zne_extrapolate(
                [(f, l.value, l.std_error) for f, l in zip(factors, tgt)], config.zne.fit
            )
            breakdown.update(est.method_breakdown)
            flags.extend(est.flags)
            value, err = est.mitigated, est.std_error
        else:
            value, err = raw, raw_se
        if config.sm.enabled:
            test = build_sm_test_circuit(params, m)
            test_ideal = staggered_magnetization_exact(apply_circuit(initial, test))
            tst = _run_circuit(test, initial, noise, config, (1,), shots, n_trajectories,
                               derive_seed(seed, m, TEST))[0]
            executed += tst.executions
            est = sm_mitigate(raw, tst.value, test_ideal, raw_se, tst.std_error,
                              config.sm.dead_zone, config.sm.p_max)
            breakdown.update(est.method_breakdown)
            breakdown["sm_exact_identity"] = bool(test.meta.get("exact_identity"))
            flags.extend(est.flags)
            value, err = est.mitigated, est.std_error
        out.append(MitigatedEstimate(
            raw=raw, mitigated=value, std_error=err, method_breakdown=breakdown, flags=flags,
            step=m, time=m * params.dt, circuits_executed=executed,
        ))
    return out


def _repetition(args):
    params, noise, config, shots, seed, n_traj, order = args
    return run_mitigated_experiment(params, noise, config, None, shots, seed, n_traj, order)


def run_repetitions(
    params: XXZParams,
    noise: NoiseModel,
    config: MitigationConfig,
    shots: int,
    seed: int,
    repetitions: int = 10,
    n_trajectories: int = 100,
    order: TrotterOrder = TrotterOrder.SECOND,
    workers: int = 1,
) -> list[list[MitigatedEstimate]]:
    """Independent reruns with seeds derived from ``(seed, repetition)``.

    Results are ordered by repetition regardless of worker scheduling.
    """
    if repetitions < 1:
        raise ValueError("repetitions must be >= 1")
    jobs = [
        (params, noise, config, shots, derive_seed(seed, r), n_trajectories, order)
        for r in range(repetitions)
    ]
    if workers <= 1 or repetitions == 1:
        return [_repetition(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_repetition, jobs))
