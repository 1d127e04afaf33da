import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.linalg import expm

from oracles import bond_exponential, global_phase_distance, xxz_dense
from quenchqem.circuit import format_layers, parse_block_layers
from quenchqem.sim import apply_circuit, circuit_unitary, phase_distance, unitary_phase_distance
from quenchqem.trotter import (
    Boundary,
    TrotterOrder,
    XXZParams,
    bond_pairs,
    build_sm_test_circuit,
    build_trotter_circuit,
    exact_evolve,
    expected_cx_count,
    hamiltonian,
    neel_state,
    sm_signs,
    trotter_states,
    unit_block_circuit,
    xxz_bond_unitary,
)

angles = st.floats(-3.5, 3.5, allow_nan=False)


@given(tx=angles, ty=angles, tz=angles)
@settings(max_examples=40, deadline=None)
def test_unit_block_matches_bond_exponential(tx, ty, tz):
    u = circuit_unitary(unit_block_circuit(tx, ty, tz))
    assert unitary_phase_distance(u, bond_exponential(tx, ty, tz)) < 1e-10


@given(tx=angles, ty=angles, tz=angles)
@settings(max_examples=40, deadline=None)
def test_closed_form_bond_unitary(tx, ty, tz):
    assert np.allclose(xxz_bond_unitary(tx, ty, tz), bond_exponential(tx, ty, tz), atol=1e-12)


def test_unit_block_has_three_cx_and_seven_layers():
    c = unit_block_circuit(0.1, 0.2, 0.3)
    assert c.cx_count() == 3
    assert c.depth() == 7


def test_params_validation():
    with pytest.raises(ValueError):
        XXZParams(5, boundary=Boundary.PBC)
    with pytest.raises(ValueError):
        XXZParams(4, n_steps=0)
    with pytest.raises(ValueError):
        XXZParams(4, j1=-1)
    assert XXZParams(4, j1=2.0, dt=0.5, delta=0.5).theta == (0.5, 0.5, 0.25)


def test_bond_pairs():
    assert bond_pairs(6, Boundary.OBC, 0) == [(0, 1), (2, 3), (4, 5)]
    assert bond_pairs(6, Boundary.OBC, 1) == [(1, 2), (3, 4)]
    assert bond_pairs(6, Boundary.PBC, 1) == [(1, 2), (3, 4), (5, 0)]


GOLDEN_OBC_N4_M2 = """\
L1: U(0,1;0.125,0.125,0.125) U(2,3;0.125,0.125,0.125)
L2: U(1,2;0.25,0.25,0.25)
L3: U(0,1;0.25,0.25,0.25) U(2,3;0.25,0.25,0.25)
L4: U(1,2;0.25,0.25,0.25)
L5: U(0,1;0.125,0.125,0.125) U(2,3;0.125,0.125,0.125)
"""

GOLDEN_PBC_N4_M1 = """\
L1: U(0,1;0.125,0.125,0.125) U(2,3;0.125,0.125,0.125)
L2: U(1,2;0.25,0.25,0.25) U(3,0;0.25,0.25,0.25)
L3: U(0,1;0.125,0.125,0.125) U(2,3;0.125,0.125,0.125)
"""

GOLDEN_FIRST_N4_M2 = """\
L1: U(0,1;0.25,0.25,0.25) U(2,3;0.25,0.25,0.25)
L2: U(1,2;0.25,0.25,0.25)
L3: U(0,1;0.25,0.25,0.25) U(2,3;0.25,0.25,0.25)
L4: U(1,2;0.25,0.25,0.25)
"""


def test_golden_layer_listings():
    assert format_layers(build_trotter_circuit(XXZParams(4, n_steps=2))) == GOLDEN_OBC_N4_M2
    pbc = XXZParams(4, n_steps=1, boundary=Boundary.PBC)
    assert format_layers(build_trotter_circuit(pbc)) == GOLDEN_PBC_N4_M1
    first = build_trotter_circuit(XXZParams(4, n_steps=2), TrotterOrder.FIRST)
    assert format_layers(first) == GOLDEN_FIRST_N4_M2


def test_layer_listing_roundtrip():
    c = build_trotter_circuit(XXZParams(6, n_steps=3, delta=0.7))
    assert [tuple(map(tuple, l)) for l in parse_block_layers(format_layers(c))] == [
        tuple(tuple(b) for b in l) for l in c.meta["blocks"]
    ]


@given(n=st.sampled_from([4, 6, 8, 20]), m=st.integers(1, 10), pbc=st.booleans())
@settings(max_examples=30, deadline=None)
def test_cx_count_formula(n, m, pbc):
    p = XXZParams(n, n_steps=m, boundary=Boundary.PBC if pbc else Boundary.OBC)
    assert build_trotter_circuit(p).cx_count() == expected_cx_count(p)
    n_bonds = n if pbc else n - 1
    assert build_trotter_circuit(p, TrotterOrder.FIRST).cx_count() == 3 * m * n_bonds


def test_trotter_circuit_matches_fused_states():
    p = XXZParams(6, delta=0.6, n_steps=4, boundary=Boundary.PBC)
    states = list(trotter_states(p))
    for m in (1, 4):
        out = apply_circuit(neel_state(6), build_trotter_circuit(p, n_steps=m))
        assert phase_distance(out, states[m - 1]) < 1e-12


def test_second_order_symmetric_step_is_time_reversible():
    p = XXZParams(4, n_steps=3)
    u = circuit_unitary(build_trotter_circuit(p))
    back = circuit_unitary(build_trotter_circuit(p.with_(dt=-p.dt)))
    assert unitary_phase_distance(back @ u, np.eye(16)) < 1e-12


@pytest.mark.parametrize("m", [2, 4, 6])
def test_sm_test_circuit_is_identity_for_even_m(m):
    c = build_sm_test_circuit(XXZParams(6, n_steps=m))
    assert c.meta["exact_identity"]
    assert unitary_phase_distance(circuit_unitary(c), np.eye(64)) < 1e-10
    assert c.cx_count() == build_trotter_circuit(XXZParams(6, n_steps=m)).cx_count()


def test_sm_test_circuit_odd_m_is_flagged():
    c = build_sm_test_circuit(XXZParams(4, n_steps=3))
    assert not c.meta["exact_identity"]
    assert sm_signs(3) == [1.0, 1.0, -1.0]
    assert sm_signs(4) == [1.0, 1.0, -1.0, -1.0]


def test_sm_central_blocks_kept_as_real_gates():
    c = build_sm_test_circuit(XXZParams(4, n_steps=2))
    centre = c.meta["blocks"][2]
    assert all(b[2:] == (0.0, 0.0, 0.0) for b in centre)
    assert c.cx_count() == expected_cx_count(XXZParams(4, n_steps=2))


@pytest.mark.parametrize("pbc", [False, True])
def test_sparse_hamiltonian_matches_dense(pbc):
    p = XXZParams(6, j1=1.3, delta=0.4, boundary=Boundary.PBC if pbc else Boundary.OBC)
    assert np.allclose(hamiltonian(p).toarray(), xxz_dense(6, 1.3, 0.4, pbc), atol=1e-13)


def test_exact_evolution_matches_dense_expm():
    p = XXZParams(6, delta=1.0)
    psi0 = neel_state(6)
    ref = expm(-1j * 1.3 * xxz_dense(6, 1.0, 1.0, False)) @ psi0.amplitudes
    out = exact_evolve(p, psi0, 1.3)
    assert global_phase_distance(out.amplitudes, ref) < 1e-10


def test_exact_evolution_refuses_large_systems():
    with pytest.raises(ValueError):
        exact_evolve(XXZParams(16), neel_state(16), 1.0)


def test_neel_state():
    psi = neel_state(4)
    assert np.argmax(np.abs(psi.amplitudes)) == 0b1010
