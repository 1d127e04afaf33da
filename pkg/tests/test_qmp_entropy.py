import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import purity_double_sum
from quenchqem.circuit import Circuit
from quenchqem.counts import Counts, CountsError
from quenchqem.entropy import (
    _summarize,
    RandomUnitaryBatch,
    build_rm_circuits,
    estimate_renyi2,
    estimate_X_a,
    exact_renyi2,
    rm_histograms,
    rm_histograms_from_circuits,
    sample_cue_unitary,
)
from quenchqem.gates import Gate
from quenchqem.mitigation import MitigationConfig
from quenchqem.noise import NoiseModel
from quenchqem.qmp import PackLayout, pack, pack_states, split_counts
from quenchqem.rng import make_rng
from quenchqem.sim import StateVector, apply_circuit, exact_counts, phase_distance
from quenchqem.trotter import XXZParams, build_trotter_circuit, neel_state, trotter_states


def bell_circuit():
    return Circuit(2, [[Gate("h", (0,))], [Gate("cx", (0, 1))]])


# QMP ----------------------------------------------------------------------------


def test_pack_places_b_after_spacer():
    a = Circuit(2, [[Gate("x", (0,))]])
    b = Circuit(3, [[Gate("h", (1,))], [Gate("cx", (0, 2))]], durations=(2.0, 1.0))
    packed, layout = pack(a, b)
    assert packed.n_qubits == 6
    assert layout.spacers == (2,) and layout.offset_b == 3
    assert packed.layers[1][0].qubits == (3, 5)
    assert packed.durations == (2.0, 1.0)
    assert packed.measured_qubits == (0, 1, 3, 4, 5)
    assert PackLayout.from_json(packed.meta["qmp_layout"]) == layout


def test_packed_state_factorizes():
    a, b = bell_circuit(), build_trotter_circuit(XXZParams(4, n_steps=1))
    packed, _ = pack(a, b)
    out = apply_circuit(pack_states(StateVector.zero(2), neel_state(4)), packed)
    ref = apply_circuit(StateVector.zero(2), a).tensor(StateVector.zero(1)).tensor(
        apply_circuit(neel_state(4), b)
    )
    assert phase_distance(out, ref) < 1e-12


def test_split_counts_marginals():
    layout = PackLayout(1, 2, (1,), (0,), (1, 2))
    a, b = split_counts(Counts({"101": 2, "011": 3}), layout)
    assert a == {"1": 5}
    assert b == {"10": 2, "01": 3}
    with pytest.raises(CountsError):
        split_counts(Counts({"01": 1}), layout)


def test_layout_validation():
    with pytest.raises(ValueError):
        PackLayout(1, 1, (1,), (0,), (0,))
    with pytest.raises(ValueError):
        PackLayout(1, 1, (1,), (0,), (2,))


@pytest.mark.parametrize("n_instances", [4, 5])
def test_packed_histograms_bit_identical(n_instances):
    state = list(trotter_states(XXZParams(6, n_steps=3)))[-1]
    batch = RandomUnitaryBatch.generate(n_instances, 3, seed=8)
    plain = rm_histograms(state, [0, 1, 2], batch, 2000, seed=4)
    packed = rm_histograms(state, [0, 1, 2], batch, 2000, seed=4, packed=True)
    assert plain == packed


def test_packed_circuit_histograms_bit_identical():
    base = build_trotter_circuit(XXZParams(4, n_steps=2))
    batch = RandomUnitaryBatch.generate(4, 2, seed=1)
    circuits = build_rm_circuits(base, [1, 2], batch)
    plain = rm_histograms_from_circuits(circuits, neel_state(4), 3000, seed=2)
    packed = rm_histograms_from_circuits(circuits, neel_state(4), 3000, seed=2, packed=True)
    assert plain == packed
    direct = rm_histograms(apply_circuit(neel_state(4), base), [1, 2], batch, 3000, seed=2)
    assert direct == plain


# RM entropy --------------------------------------------------------------------------


def test_cue_unitaries_are_unitary_and_haar_like():
    rng = make_rng(3)
    us = [sample_cue_unitary(rng) for _ in range(4000)]
    assert all(np.allclose(u @ u.conj().T, np.eye(2), atol=1e-12) for u in us)
    # E|U_00|^2 = 1/2 and E|U_00|^4 = 1/3 for Haar 2x2
    m2 = np.mean([abs(u[0, 0]) ** 2 for u in us])
    m4 = np.mean([abs(u[0, 0]) ** 4 for u in us])
    assert abs(m2 - 0.5) < 0.02 and abs(m4 - 1 / 3) < 0.02


@given(seed=st.integers(0, 10_000), L=st.integers(1, 4))
@settings(max_examples=25, deadline=None)
def test_X_a_matches_double_sum(seed, L):
    rng = np.random.default_rng(seed)
    counts = rng.integers(0, 50, size=2**L)
    counts[0] += 1
    hist = Counts.from_outcomes(np.arange(2**L), counts, L)
    ref = purity_double_sum(counts / counts.sum(), L)
    assert estimate_X_a(hist, L) == pytest.approx(ref, rel=1e-12, abs=1e-12)


def test_unbiased_X_a_removes_diagonal():
    hist = Counts({"0": 3, "1": 1})
    total, c = 4, np.array([3.0, 1.0])
    k = np.array([[1, -0.5], [-0.5, 1]])
    expect = 2 * (c @ k @ c - total) / (total * (total - 1))
    assert estimate_X_a(hist, 1, unbiased=True) == pytest.approx(expect)
    with pytest.raises(CountsError):
        estimate_X_a(hist, 2)


def test_exact_probabilities_give_exact_average_purity():
    # averaging X_a over many unitaries converges to the purity
    state = list(trotter_states(XXZParams(6, n_steps=2)))[-1]
    est = estimate_renyi2(state, [0, 1, 2], n_instances=400, shots=None, seed=1)
    assert abs(est.renyi2 - exact_renyi2(state, [0, 1, 2])) < 3 * est.std_error


def test_product_state_has_zero_entropy():
    est = estimate_renyi2(neel_state(4), [0, 1], n_instances=40, shots=None, seed=2)
    assert est.mean == pytest.approx(1.0, abs=0.2)
    assert exact_renyi2(neel_state(4), [0, 1]) == pytest.approx(0.0, abs=1e-12)


def test_bell_pair_entropy_is_log2():
    bell = apply_circuit(StateVector.zero(2), bell_circuit())
    assert exact_renyi2(bell, [0]) == pytest.approx(math.log(2))
    est = estimate_renyi2(bell, [0], n_instances=60, shots=100_000, seed=3)
    assert abs(est.renyi2 - math.log(2)) < 0.1


def test_estimate_validation():
    with pytest.raises(ValueError):
        estimate_renyi2(neel_state(4), [0, 1, 2, 3], n_instances=10)
    with pytest.raises(ValueError):
        estimate_renyi2(neel_state(4), [0, 0], n_instances=10)
    with pytest.raises(ValueError):
        estimate_renyi2(neel_state(4), [0], n_instances=1)


def test_failed_estimate_is_flagged():
    est = _summarize(np.array([-0.3, 0.1]), 2, [], {})
    assert not est.ok and math.isnan(est.renyi2)
    assert any("failed" in f for f in est.flags)
    assert _summarize(np.array([0.5, 0.52]), 2, [], {}).flags == []


def test_noisy_path_runs_with_mitigation():
    base = build_trotter_circuit(XXZParams(4, n_steps=1))
    cfg = MitigationConfig.from_label("TREX+ZNE")
    est = estimate_renyi2(base, [0, 1], n_instances=6, shots=2000, seed=1,
                          noise=NoiseModel.default(), mitigation=cfg, initial=neel_state(4), n_trajectories=4)
    assert len(est.metadata["zne_points"]) == 3
    assert np.isfinite(est.mean)
