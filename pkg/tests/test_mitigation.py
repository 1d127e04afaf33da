import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import I2, X, Y, Z, cx, op_on
from quenchqem.circuit import Circuit
from quenchqem.counts import Counts
from quenchqem.gates import Gate
from quenchqem.mitigation import (
    MitigationConfig,
    TWIRL_TABLE,
    apply_mask,
    dd_insert,
    pauli_twirl,
    run_mitigated_experiment,
    run_repetitions,
    sm_mitigate,
    trex_collapse,
    trex_masks,
    zne_extrapolate,
    zne_fold,
)
from quenchqem.mitigation.trex import permute_probabilities, unflip
from quenchqem.noise import NoiseModel, global_depolarizing_reference, run_trajectory
from quenchqem.sim import StateVector, apply_circuit, circuit_unitary, phase_distance, unitary_phase_distance
from quenchqem.trotter import XXZParams, build_trotter_circuit, neel_state

PAULIS = {"I": I2, "X": X, "Y": Y, "Z": Z}
CZ = np.diag([1, 1, 1, -1]).astype(complex)


def pauli_pair(label):
    return op_on(2, {0: PAULIS[label[0]], 1: PAULIS[label[1]]})


# TREX ---------------------------------------------------------------------------


@given(width=st.integers(1, 8), n=st.integers(1, 20), seed=st.integers(0, 2**32))
@settings(max_examples=30, deadline=None)
def test_trex_masks_are_balanced(width, n, seed):
    masks = trex_masks(width, n, seed)
    assert len(masks) == n and all(0 <= m < 2**width for m in masks)
    paired = masks[: n - n % 2]
    for j in range(width):
        assert sum((m >> j) & 1 for m in paired) == len(paired) // 2
    assert masks == trex_masks(width, n, seed)


def test_apply_mask_flips_measured_qubits_only():
    c = Circuit(3, [[Gate("h", (1,))]], measured=(2, 0))
    flipped = apply_mask(c, 0b01)  # bit 0 is measured[0] = qubit 2
    assert [g.qubits for g in flipped.layers[-1]] == [(2,)]
    assert flipped.durations[-1] == 0.0
    assert apply_mask(c, 0) is c


def test_unflip_and_collapse():
    assert unflip(Counts({"01": 3}), 0b11) == {"10": 3}
    merged = trex_collapse([(Counts({"01": 3}), 0b11), (Counts({"10": 2}), 0)])
    assert merged == {"10": 5}


def test_mask_permutes_probabilities_like_x_layer():
    psi = StateVector.random(3, np.random.default_rng(0))
    c = Circuit(3, [[Gate("h", (0,))]])
    for mask in range(8):
        direct = apply_circuit(psi, apply_mask(c, mask)).probabilities()
        via = permute_probabilities(apply_circuit(psi, c).probabilities(), mask)
        assert np.allclose(direct, via)


# DD -----------------------------------------------------------------------------


def idle_circuit(durations):
    return Circuit(3, [[Gate("h", (0,))] for _ in durations], durations=durations)


def test_dd_echo_cancels_static_z():
    c = idle_circuit((1.0, 1.0, 1.0, 1.0))
    dd = dd_insert(c)
    assert dd.meta["dd_windows"] == 2 and dd.count("x") == 4
    psi = StateVector.random(3, np.random.default_rng(1))
    noise = NoiseModel(idle_z=0.7)
    ideal = apply_circuit(psi, c)
    bare, _ = run_trajectory(c, psi, noise, seed=0)
    echoed, _ = run_trajectory(dd, psi, noise, seed=0)
    assert phase_distance(echoed, ideal) < 1e-12
    assert phase_distance(bare, ideal) > 0.1


def test_dd_is_identity_without_noise():
    c = build_trotter_circuit(XXZParams(4, n_steps=2))
    dd = dd_insert(c)
    assert dd.meta["dd_windows"] > 0
    assert unitary_phase_distance(circuit_unitary(dd), circuit_unitary(c)) < 1e-12


def test_dd_skips_short_windows():
    dd = dd_insert(idle_circuit((0.25, 0.25)), min_duration=1.0)
    assert dd.meta["dd_windows"] == 0
    assert dd.meta["dd_skipped"] == ((1, 0, 2), (2, 0, 2))


def test_dd_pulse_timing_within_window():
    dd = dd_insert(idle_circuit((2.0, 2.0)))
    slots = [g for layer in dd.layers for g in layer if g.qubits == (1,)]
    ops = [op for s in slots for op in (s.ops if s.kind == "seq" else (s,))]
    kinds = [(op.kind, op.param) for op in ops]
    # window 4: delay 1, X, delay 2 (split 1 + 1 across slots), X, delay 1
    assert kinds == [("delay", 1.0), ("x", None), ("delay", 1.0), ("delay", 1.0), ("x", None), ("delay", 1.0)]


# PT -----------------------------------------------------------------------------


@pytest.mark.parametrize("kind,g", [("cx", cx(2, 0, 1)), ("cz", CZ)])
def test_twirl_table_against_dense_conjugation(kind, g):
    rows = TWIRL_TABLE.entries[kind]
    assert len(rows) == 16
    assert {r[0] for r in rows} == {a + b for a, b in itertools.product("IXYZ", repeat=2)}
    for pre, post in rows:
        m = pauli_pair(post) @ g @ pauli_pair(pre)
        phase = np.vdot(g.ravel(), m.ravel()) / 4
        assert abs(abs(phase) - 1) < 1e-12
        assert np.allclose(m, phase * g, atol=1e-12)


def test_twirled_copies_are_noiselessly_equivalent():
    c = build_trotter_circuit(XXZParams(4, n_steps=2))
    ref = circuit_unitary(c)
    copies = pauli_twirl(c, 8, seed=4)
    assert any(cc.count(("x", "y", "z")) for cc in copies)
    for cc in copies:
        assert unitary_phase_distance(circuit_unitary(cc), ref) < 1e-10
        assert cc.cx_count() == c.cx_count()
    assert [cc.layers for cc in pauli_twirl(c, 8, seed=4)] == [cc.layers for cc in copies]


# ZNE ----------------------------------------------------------------------------


@pytest.mark.parametrize("factor", [1, 3, 5])
def test_folding_preserves_unitary_and_scales_cx(factor):
    c = build_trotter_circuit(XXZParams(4, n_steps=1))
    f = zne_fold(c, factor)
    assert f.cx_count() == factor * c.cx_count()
    assert unitary_phase_distance(circuit_unitary(f), circuit_unitary(c)) < 1e-12
    assert sum(f.durations) > sum(c.durations) or factor == 1


def test_folding_rejects_even_factor():
    with pytest.raises(ValueError):
        zne_fold(build_trotter_circuit(XXZParams(4, n_steps=1)), 2)


@given(a=st.floats(-1, 1), b=st.floats(-0.1, 0.1))
@settings(max_examples=30, deadline=None)
def test_linear_extrapolation_is_exact_on_lines(a, b):
    est = zne_extrapolate([(f, a + b * f) for f in (1, 3, 5)], "linear")
    assert est.mitigated == pytest.approx(a, abs=1e-10)


def test_exponential_extrapolation_is_exact_on_exponentials():
    pts = [(f, -0.5 * np.exp(-0.2 * f), 0.001) for f in (1, 3, 5)]
    est = zne_extrapolate(pts, "exponential")
    assert est.mitigated == pytest.approx(-0.5, abs=1e-8)
    assert est.method_breakdown["fit"] == "exponential"


def test_both_fits_reported_side_by_side():
    pts = [(f, -0.5 * np.exp(-0.2 * f), 0.001) for f in (1, 3, 5)]
    fits = zne_extrapolate(pts, "linear").method_breakdown["fits"]
    assert fits["exponential"][0] == pytest.approx(-0.5, abs=1e-8)
    assert fits["linear"][0] == pytest.approx(zne_extrapolate(pts).mitigated)
    line = zne_extrapolate([(1, 0.1, 0.01), (3, -0.05, 0.01), (5, -0.1, 0.01)])
    assert line.method_breakdown["fits"]["exponential"] is None


def test_exponential_falls_back_on_sign_change():
    est = zne_extrapolate([(1, 0.1, 0.01), (3, -0.05, 0.01), (5, -0.1, 0.01)], "exponential")
    assert est.method_breakdown["fit"] == "linear"
    assert any("fallback" in f for f in est.flags)


def test_weighted_linear_error_propagation():
    # equal errors s: intercept variance of OLS on x = 1, 3, 5 is s^2 * 35/24
    est = zne_extrapolate([(1, 0.3, 0.01), (3, 0.2, 0.01), (5, 0.1, 0.01)])
    assert est.std_error == pytest.approx(0.01 * np.sqrt(35 / 24))


# SM -----------------------------------------------------------------------------


@given(p=st.floats(0, 0.9), ideal=st.floats(-0.5, 0.5), test_ideal=st.sampled_from([-0.5, 0.3]))
def test_sm_exact_under_global_depolarizing(p, ideal, test_ideal):
    target = global_depolarizing_reference(p, ideal)
    test = global_depolarizing_reference(p, test_ideal)
    est = sm_mitigate(target, test, test_ideal)
    assert est.mitigated == pytest.approx(ideal, abs=1e-12)
    assert est.method_breakdown["p"] == pytest.approx(p, abs=1e-12)


def test_sm_dead_zone_and_cap():
    est = sm_mitigate(0.2, 0.01, 0.02)
    assert est.mitigated == 0.2 and est.flags
    est = sm_mitigate(0.2, -0.01, -0.5)
    assert est.mitigated == 0.2 and "p_max" in est.flags[0]


def test_sm_error_propagation():
    est = sm_mitigate(-0.4, -0.25, -0.5, target_std=0.01, test_std=0.005)
    assert est.mitigated == pytest.approx(-0.8)
    assert est.std_error == pytest.approx(np.hypot(2 * 0.01, 0.8 / 0.25 * 0.005))


# config and orchestration ---------------------------------------------------------


def test_config_labels():
    cfg = MitigationConfig.from_label("TREX+DD+PT+ZNE")
    assert cfg.label == "TREX+DD+PT+ZNE"
    assert MitigationConfig.from_label("NOQEM").label == "NOQEM"
    with pytest.raises(ValueError):
        MitigationConfig.from_label("TREX+FOO")


def test_config_validation():
    from dataclasses import replace

    base = MitigationConfig()
    with pytest.raises(ValueError):
        replace(base, zne=replace(base.zne, fold_factors=(1, 2, 5)))
    with pytest.raises(ValueError):
        replace(base, pt=replace(base.pt, n_copies=0))


SMALL = XXZParams(4, n_steps=2)


def test_execution_bookkeeping():
    cfg = MitigationConfig.from_label("TREX+PT+ZNE")
    res = run_mitigated_experiment(SMALL, NoiseModel.default(), cfg, shots=3000, n_trajectories=2, steps=[1])
    assert res[0].circuits_executed == 10 * 3 * 10
    cfg = MitigationConfig.from_label("TREX+PT+SM")
    res = run_mitigated_experiment(SMALL, NoiseModel.default(), cfg, shots=3000, n_trajectories=2, steps=[1])
    assert res[0].circuits_executed == 2 * 10 * 10


def test_sm_with_zne_prefers_sm():
    cfg = MitigationConfig.from_label("SM+ZNE")
    res = run_mitigated_experiment(SMALL, NoiseModel(p2=0.02), cfg, shots=2000, n_trajectories=4, steps=[2])
    assert any("ZNE skipped" in f for f in res[0].flags)
    assert res[0].method_breakdown["fold_factors"] == [1]


def test_zne_unit_level_equals_baseline_pipeline():
    noise = NoiseModel.default()
    base = run_mitigated_experiment(SMALL, noise, MitigationConfig.from_label("TREX+DD+PT"),
                                    shots=2000, seed=3, n_trajectories=4)
    zne = run_mitigated_experiment(SMALL, noise, MitigationConfig.from_label("TREX+DD+PT+ZNE"),
                                   shots=2000, seed=3, n_trajectories=4)
    assert [e.raw for e in zne] == [e.mitigated for e in base]


def test_noiseless_run_returns_trotter_reference():
    res = run_mitigated_experiment(SMALL, NoiseModel(), MitigationConfig(), shots=200_000, n_trajectories=1)
    for e in res:
        assert abs(e.raw - e.method_breakdown["reference"]) < 4 * e.std_error + 1e-12


def test_repetitions_are_deterministic_and_distinct():
    args = (SMALL, NoiseModel.default(), MitigationConfig.from_label("TREX"), 2000, 5, 2, 4)
    a = run_repetitions(*args)
    b = run_repetitions(*args)
    assert [[e.mitigated for e in r] for r in a] == [[e.mitigated for e in r] for r in b]
    assert [e.mitigated for e in a[0]] != [e.mitigated for e in a[1]]


def test_trajectory_spread_enters_error_bar():
    noise = NoiseModel(p2=0.05)
    few = run_mitigated_experiment(SMALL, noise, MitigationConfig(), shots=100_000, n_trajectories=5, steps=[2])
    many = run_mitigated_experiment(SMALL, noise, MitigationConfig(), shots=100_000, n_trajectories=500, steps=[2])
    assert few[0].std_error > many[0].std_error
