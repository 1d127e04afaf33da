import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from quenchqem.circuit import Circuit
from quenchqem.counts import Counts, CountsError
from quenchqem.gates import Gate
from quenchqem.noise import (
    TWO_QUBIT_PAULIS,
    NoiseError,
    NoiseModel,
    _batched_trajectories,
    apply_confusion_to_probabilities,
    apply_readout_confusion,
    confusion,
    density_matrix_execute,
    draw_errors,
    exact_noisy_probabilities,
    global_depolarizing_reference,
    noisy_execute,
    run_trajectory,
    split_evenly,
    trajectory_probabilities,
)
from quenchqem.sim import StateVector, apply_circuit, phase_distance
from quenchqem.trotter import XXZParams, build_trotter_circuit, neel_state


def single_cx():
    return Circuit(2, [[Gate("cx", (0, 1))]])


def test_pauli_table():
    assert len(TWO_QUBIT_PAULIS) == 15
    assert "II" not in TWO_QUBIT_PAULIS and len(set(TWO_QUBIT_PAULIS)) == 15


def test_depolarized_cx_closed_form():
    # X or Y on a qubit flips it: 4 of 15 Paulis flip only a, 4 only b, 4 both.
    p2 = 0.3
    expect = np.array([1 - p2 + p2 * 3 / 15, p2 * 4 / 15, p2 * 4 / 15, p2 * 4 / 15])
    dm = exact_noisy_probabilities(single_cx(), StateVector.zero(2), NoiseModel(p2=p2))
    assert np.allclose(dm, expect, atol=1e-14)
    probs = trajectory_probabilities(single_cx(), StateVector.zero(2), NoiseModel(p2=p2), 20_000, 1)
    assert np.abs(np.mean(probs, axis=0) - expect).max() < 0.01


def test_trajectories_converge_to_density_matrix():
    c = build_trotter_circuit(XXZParams(4, n_steps=2))
    noise = NoiseModel(p2=0.05, eps2=0.03, idle_z=0.02)
    dm = exact_noisy_probabilities(c, neel_state(4), noise)
    probs = np.mean(trajectory_probabilities(c, neel_state(4), noise, 3000, 7), axis=0)
    assert np.abs(probs - dm).max() < 0.01


def test_noiseless_trajectory_equals_ideal_state():
    c = build_trotter_circuit(XXZParams(4, n_steps=3))
    state, traj = run_trajectory(c, neel_state(4), NoiseModel(), seed=1)
    assert traj.inserted_errors == []
    assert phase_distance(state, apply_circuit(neel_state(4), c)) < 1e-13


def test_replay_reproduces_trajectory():
    c = build_trotter_circuit(XXZParams(4, n_steps=3))
    noise = NoiseModel(p2=0.2, eps2=0.05)
    state, traj = run_trajectory(c, neel_state(4), noise, seed=9, index=4)
    assert traj.inserted_errors
    again, _ = run_trajectory(c, neel_state(4), noise, seed=123, replay=traj)
    assert np.array_equal(state.amplitudes, again.amplitudes)


def test_batched_trajectories_match_single_runs():
    c = build_trotter_circuit(XXZParams(4, n_steps=2))
    noise = NoiseModel(p2=0.1, eps2=0.02, idle_z=0.05)
    batch = _batched_trajectories(c, neel_state(4), noise, [0, 3, 5], 11)
    for col, k in enumerate([0, 3, 5]):
        state, _ = run_trajectory(c, neel_state(4), noise, 11, k)
        assert np.allclose(batch[:, col], state.amplitudes, atol=1e-14)


@given(n_ops=st.integers(0, 200), p2=st.floats(0, 1), seed=st.integers(0, 2**32))
@settings(max_examples=40, deadline=None)
def test_draw_errors_is_deterministic(n_ops, p2, seed):
    a = draw_errors(n_ops, p2, seed, 3)
    assert a == draw_errors(n_ops, p2, seed, 3)
    assert all(0 <= k < n_ops and v in TWO_QUBIT_PAULIS for k, v in a.items())


def test_draw_errors_rate():
    hits = sum(len(draw_errors(100, 0.05, 2, k)) for k in range(400))
    assert abs(hits - 2000) < 5 * np.sqrt(2000)


def test_coherent_zz_error_matches_oracle():
    c = Circuit(2, [[Gate("h", (0,))], [Gate("cx", (0, 1))], [Gate("h", (0,))]])
    noise = NoiseModel(eps2=0.4)
    state, _ = run_trajectory(c, StateVector.zero(2), noise, seed=0)
    rho = density_matrix_execute(c, StateVector.zero(2), noise)
    assert np.allclose(np.outer(state.amplitudes, state.amplitudes.conj()), rho, atol=1e-13)


def test_confusion_matrix_layout():
    m = confusion(0.08, 0.02)
    assert np.allclose(m, [[0.92, 0.02], [0.08, 0.98]])
    with pytest.raises(NoiseError):
        confusion(1.2, 0.0)


def test_confusion_on_probabilities_matches_kronecker():
    a, b = confusion(0.1, 0.2), confusion(0.05, 0.3)
    p = np.array([0.1, 0.2, 0.3, 0.4])
    # bit 0 is the least significant index
    assert np.allclose(apply_confusion_to_probabilities(p, [a, b]), np.kron(b, a) @ p)


def test_readout_flips_per_shot():
    counts = Counts({"0": 100_000})
    out = apply_readout_confusion(counts, [confusion(0.1, 0.0)], seed=3)
    assert out.shots == 100_000
    assert abs(out.get("1", 0) - 10_000) < 5 * np.sqrt(9000)
    with pytest.raises(CountsError):
        apply_readout_confusion(counts, [None, None], seed=3)


def test_noise_model_text_roundtrip(tmp_path):
    nm = NoiseModel(p2=0.01, eps2=0.02, idle_z=0.003,
                    readout={-1: confusion(0.02, 0.04), 3: confusion(0.1, 0.2)})
    back = NoiseModel.from_text(nm.to_text())
    assert back.to_text() == nm.to_text()
    assert np.allclose(back.readout_for(3), confusion(0.1, 0.2))
    assert np.allclose(back.readout_for(0), confusion(0.02, 0.04))
    nm.save(tmp_path / "n.txt")
    assert NoiseModel.load(tmp_path / "n.txt").to_text() == nm.to_text()
    with pytest.raises(NoiseError):
        NoiseModel.from_text("p3=0.1\n")
    with pytest.raises(NoiseError):
        NoiseModel(p2=1.5)


@given(total=st.integers(0, 10**6), parts=st.integers(1, 300))
def test_split_evenly(total, parts):
    out = split_evenly(total, parts)
    assert sum(out) == total and len(out) == parts and max(out) - min(out) <= 1


def test_noisy_execute_determinism_and_divisibility():
    c = build_trotter_circuit(XXZParams(4, n_steps=2))
    noise = NoiseModel.default()
    a = noisy_execute(c, neel_state(4), noise, 1000, 10, seed=5)
    assert a == noisy_execute(c, neel_state(4), noise, 1000, 10, seed=5)
    assert a != noisy_execute(c, neel_state(4), noise, 1000, 10, seed=6)
    assert a.shots == 1000
    with pytest.raises(NoiseError):
        noisy_execute(c, neel_state(4), noise, 1001, 10, seed=5)


def test_global_depolarizing_reference():
    assert global_depolarizing_reference(0.2, -0.5) == pytest.approx(-0.4)
    with pytest.raises(NoiseError):
        global_depolarizing_reference(1.0, 0.3)
