import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qcpcp import simulator as sim
from qcpcp.simulator import ClassicalProof, Gate, Statevector

import oracles

SQRT2_INV = 1 / math.sqrt(2)


def basis(m, i):
    return Statevector.basis(m, i)


def test_hadamard_on_zero():
    out = sim.apply_gate(Statevector.zero(1), sim.H(0))
    np.testing.assert_allclose(out.amplitudes, [SQRT2_INV, SQRT2_INV], atol=1e-12)


def test_x_on_zero():
    out = sim.apply_gate(Statevector.zero(1), sim.X(0))
    np.testing.assert_allclose(out.amplitudes, [0, 1], atol=1e-12)


def test_qubit_zero_is_most_significant():
    out = sim.apply_gate(Statevector.zero(3), sim.X(0))
    assert out.amplitudes[0b100] == 1


@pytest.mark.parametrize("gate", [sim.H(1), sim.X(0), sim.CNOT(0, 2), sim.CNOT(2, 1)])
def test_self_inverse_gates(gate):
    rng = np.random.default_rng(1)
    v = rng.normal(size=8) + 1j * rng.normal(size=8)
    state = Statevector(3, v / np.linalg.norm(v))
    twice = sim.apply_gate(sim.apply_gate(state, gate), gate)
    np.testing.assert_allclose(twice.amplitudes, state.amplitudes, atol=1e-12)


def test_gate_index_out_of_range_names_gate_and_index():
    with pytest.raises(sim.GateError, match=r"H gate.*qubit index 5"):
        sim.apply_gate(Statevector.zero(2), sim.H(5))


def test_query_target_in_register_rejected():
    with pytest.raises(sim.GateError):
        sim.StdQuery([0, 1], 1)


@pytest.mark.parametrize("gate", [
    sim.H(0), sim.X(2), sim.Z(1), sim.S(0), sim.T(2), sim.RY(1, 0.7),
    sim.CNOT(2, 0), sim.CZ(0, 1), sim.X(2, controls=(0, 1)), sim.Z(0, controls=(2,)),
])
def test_gates_match_kronecker_oracle(gate):
    rng = np.random.default_rng(5)
    v = rng.normal(size=8) + 1j * rng.normal(size=8)
    state = Statevector(3, v / np.linalg.norm(v))
    expected = oracles.full_unitary(gate, 3) @ state.amplitudes
    np.testing.assert_allclose(sim.apply_gate(state, gate).amplitudes, expected, atol=1e-12)


# -- queries ---------------------------------------------------------------

def test_standard_query_reads_one_based_index():
    y = ClassicalProof.from_bits("0010")
    state = basis(4, 0b0110)  # |i=3>|0>, index qubits 0..2, target 3
    out = sim.apply_standard_query(state, y, [0, 1, 2], 3)
    assert abs(out.amplitudes[0b0111]) == pytest.approx(1.0)


def test_standard_query_all_zero_proof_is_identity():
    y = ClassicalProof.zeros(4)
    state = Statevector.zero(4)
    for q in range(3):
        state = sim.apply_gate(state, sim.H(q))
    out = sim.apply_standard_query(state, y, [0, 1, 2], 3)
    np.testing.assert_allclose(out.amplitudes, state.amplitudes, atol=1e-12)


def test_out_of_range_register_values_read_zero():
    y = ClassicalProof.from_bits("11")
    for value in (0, 3):
        state = basis(3, value << 1)
        out = sim.apply_standard_query(state, y, [0, 1], 2)
        assert abs(out.amplitudes[value << 1]) == pytest.approx(1.0)


def test_phase_query_definition():
    y = ClassicalProof.from_bits("10")
    state = Statevector(2, np.array([0, SQRT2_INV, SQRT2_INV, 0]))
    out = sim.apply_phase_query(state, y, [0, 1])
    np.testing.assert_allclose(out.amplitudes, [0, -SQRT2_INV, SQRT2_INV, 0], atol=1e-12)


def test_phase_query_zero_proof_identity():
    state = Statevector(2, np.full(4, 0.5))
    out = sim.apply_phase_query(state, ClassicalProof.zeros(3), [0, 1])
    np.testing.assert_allclose(out.amplitudes, state.amplitudes, atol=1e-12)


def test_offset_shifts_proof_index():
    y = ClassicalProof.from_bits("01")
    out = sim.apply_standard_query(basis(2, 0b00), y, [0], 1, offset=2)
    assert abs(out.amplitudes[0b01]) == pytest.approx(1.0)


proofs = st.integers(1, 8).flatmap(lambda n: st.lists(st.integers(0, 1), min_size=n, max_size=n))


def _random_state(m, seed):
    rng = np.random.default_rng(seed)
    v = rng.normal(size=1 << m) + 1j * rng.normal(size=1 << m)
    return Statevector(m, v / np.linalg.norm(v))


@settings(max_examples=60, deadline=None)
@given(bits=proofs, seed=st.integers(0, 2**32 - 1))
def test_standard_query_involution(bits, seed):
    y = ClassicalProof.from_bits(bits)
    state = _random_state(5, seed)
    once = sim.apply_standard_query(state, y, [0, 1, 2, 3], 4)
    twice = sim.apply_standard_query(once, y, [0, 1, 2, 3], 4)
    np.testing.assert_allclose(twice.amplitudes, state.amplitudes, atol=1e-12)
    assert abs(once.norm_squared() - 1) <= 1e-9


@settings(max_examples=60, deadline=None)
@given(bits=proofs, seed=st.integers(0, 2**32 - 1))
def test_phase_equals_standard_in_minus_frame(bits, seed):
    y = ClassicalProof.from_bits(bits)
    reg = _random_state(4, seed)
    minus = np.array([SQRT2_INV, -SQRT2_INV])
    joint = Statevector(5, np.kron(reg.amplitudes, minus))
    via_std = sim.apply_standard_query(joint, y, [0, 1, 2, 3], 4)
    via_phase = sim.apply_phase_query(reg, y, [0, 1, 2, 3])
    np.testing.assert_allclose(via_std.amplitudes, np.kron(via_phase.amplitudes, minus), atol=1e-12)


@settings(max_examples=40, deadline=None)
@given(bits=proofs, seed=st.integers(0, 2**32 - 1))
def test_query_linearity(bits, seed):
    y = ClassicalProof.from_bits(bits)
    rng = np.random.default_rng(seed)
    idx = rng.choice(32, size=3, replace=False)
    w = rng.normal(size=3) + 1j * rng.normal(size=3)
    w /= np.linalg.norm(w)
    amps = np.zeros(32, dtype=complex)
    amps[idx] = w
    whole = sim.apply_standard_query(Statevector(5, amps), y, [0, 1, 2, 3], 4).amplitudes
    parts = sum(wk * sim.apply_standard_query(basis(5, int(i)), y, [0, 1, 2, 3], 4).amplitudes
                for wk, i in zip(w, idx))
    np.testing.assert_allclose(whole, parts, atol=1e-12)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), bits=proofs)
def test_query_matches_dense_oracle(seed, bits):
    state = _random_state(5, seed)
    for gate in (sim.StdQuery([1, 2, 3], 0), sim.PhaseQuery([4, 0, 2], offset=1)):
        expected = oracles.query_matrix(gate, 5, bits) @ state.amplitudes
        got = sim.apply_gate(state, gate, ClassicalProof.from_bits(bits)).amplitudes
        np.testing.assert_allclose(got, expected, atol=1e-12)


def test_norm_preserved_through_random_gate_sequence():
    rng = np.random.default_rng(11)
    state = Statevector.zero(4)
    y = ClassicalProof.from_bits("1011")
    gates = [sim.H(0), sim.RY(2, 1.3), sim.CNOT(0, 3), sim.T(1), sim.StdQuery([0, 1, 2], 3),
             sim.S(2), sim.CZ(3, 1), sim.PhaseQuery([1, 2, 3])]
    for _ in range(50):
        state = sim.apply_gate(state, gates[rng.integers(len(gates))], y)
        assert abs(state.norm_squared() - 1) <= 1e-9


# -- measurement -----------------------------------------------------------

def test_acceptance_probability_cases():
    assert sim.acceptance_probability(basis(3, 0b100), 0) == pytest.approx(1.0, abs=1e-12)
    assert sim.acceptance_probability(Statevector.zero(1), 0) == 0.0
    plus = sim.apply_gate(Statevector.zero(1), sim.H(0))
    assert sim.acceptance_probability(plus, 0) == pytest.approx(0.5, abs=1e-12)


def test_sample_shot_deterministic_cases():
    one, zero = basis(1, 1), basis(1, 0)
    assert all(sim.sample_shot(one, 0, seed) == 1 for seed in range(50))
    assert all(sim.sample_shot(zero, 0, seed) == 0 for seed in range(50))


def test_sample_shot_fixed_seed_replays():
    plus = sim.apply_gate(Statevector.zero(1), sim.H(0))
    assert [sim.sample_shot(plus, 0, 99) for _ in range(5)] == [sim.sample_shot(plus, 0, 99)] * 5


def test_sample_shot_half_probability_mean():
    # binomial sd at 1e5 shots is 0.0016, so 0.01 is a > 6 sigma window
    plus = sim.apply_gate(Statevector.zero(1), sim.H(0))
    mean = np.mean([sim.sample_shot(plus, 0, seed) for seed in range(100_000)])
    assert abs(mean - 0.5) <= 0.01


def test_measure_register_on_basis_state():
    assert sim.measure_register(basis(3, 0b101), [0, 1, 2], 0) == "101"
    assert sim.measure_register(basis(3, 0b101), [2, 0], 0) == "11"


def test_proof_validation():
    with pytest.raises(sim.ProofError):
        ClassicalProof(())
    with pytest.raises(sim.ProofError):
        ClassicalProof.from_bits("012")
    assert ClassicalProof.from_bits("0010").bit(3) == 1
    assert ClassicalProof.from_bits("0010").bit(0) == 0
    assert ClassicalProof.from_bits("0010").bit(9) == 0


def test_unknown_gate_kind():
    with pytest.raises(ValueError):
        Gate("Y", (0,))
