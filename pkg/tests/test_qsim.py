import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_circuit, random_state
from oracles import circuit_unitary, inner_product_mp, z_expect_dense
from qmlhealth import qsim
from qmlhealth.errors import CapacityError, ValidationError

S2 = 1 / math.sqrt(2)


def test_zero_state():
    np.testing.assert_array_equal(qsim.zero_state(1).amps, [1, 0])
    np.testing.assert_array_equal(qsim.zero_state(2).amps, [1, 0, 0, 0])


@pytest.mark.parametrize("n", [0, 21, -1])
def test_zero_state_capacity(n):
    with pytest.raises(CapacityError):
        qsim.zero_state(n)


def test_zero_state_at_capacity():
    s = qsim.zero_state(qsim.MAX_QUBITS)
    assert s.amps.size == 1 << 20


def test_hadamard(backend):
    s = qsim.apply_gate(qsim.zero_state(1), qsim.h(0))
    np.testing.assert_allclose(s.amps, [S2, S2], atol=1e-15)


def test_ry_pi(backend):
    s = qsim.apply_gate(qsim.zero_state(1), qsim.ry(0, math.pi))
    np.testing.assert_allclose(s.amps, [0, 1], atol=1e-15)


def test_cnot_truth_table(backend):
    # |10> in the "control=0 is set" sense: index 1 (qubit 0 set)
    s = qsim.StateVector(2, [0, 1, 0, 0])
    out = qsim.apply_gate(s, qsim.cnot(0, 1))
    np.testing.assert_array_equal(out.amps, [0, 0, 0, 1])
    # control clear -> untouched
    s = qsim.StateVector(2, [0, 0, 1, 0])
    np.testing.assert_array_equal(qsim.apply_gate(s, qsim.cnot(0, 1)).amps, [0, 0, 1, 0])


def test_cz_negates_11(backend, rng):
    s = random_state(rng, 2)
    out = qsim.apply_gate(s, qsim.cz(0, 1))
    np.testing.assert_array_equal(out.amps[:3], s.amps[:3])
    assert out.amps[3] == -s.amps[3]


def test_apply_gate_does_not_mutate_input(rng):
    s = random_state(rng, 3)
    before = s.amps.copy()
    qsim.apply_gate(s, qsim.h(1))
    np.testing.assert_array_equal(s.amps, before)


@pytest.mark.parametrize("gate", [qsim.h(2), qsim.cnot(0, 3), qsim.cz(5, 1)])
def test_gate_wire_out_of_range(gate):
    with pytest.raises(ValidationError):
        qsim.apply_gate(qsim.zero_state(2), gate)


@pytest.mark.parametrize("kind,wires,angle", [
    ("H", (0, 1), None), ("CNOT", (0,), None), ("CNOT", (1, 1), None),
    ("RX", (0,), None), ("H", (0,), 1.0), ("SWAP", (0, 1), None),
])
def test_gate_validation(kind, wires, angle):
    with pytest.raises(ValidationError):
        qsim.Gate(kind, wires, angle)


def test_empty_circuit_is_identity(rng):
    s = random_state(rng, 3)
    np.testing.assert_array_equal(qsim.apply_circuit(s, qsim.Circuit(3)).amps, s.amps)


def test_hh_identity(backend):
    out = qsim.apply_circuit(qsim.zero_state(1), qsim.Circuit(1, [qsim.h(0), qsim.h(0)]))
    np.testing.assert_allclose(out.amps, [1, 0], atol=1e-12)


def test_circuit_qubit_mismatch():
    with pytest.raises(ValidationError):
        qsim.apply_circuit(qsim.zero_state(2), qsim.Circuit(3))


def test_random_3q_circuit_matches_kronecker_oracle(backend, rng):
    for _ in range(10):
        c = random_circuit(rng, 3, 20)
        s = random_state(rng, 3)
        expected = circuit_unitary(c.gates, 3) @ s.amps
        np.testing.assert_allclose(qsim.apply_circuit(s, c).amps, expected, atol=1e-12)


def test_inner_product_basics(rng):
    s = random_state(rng, 3)
    assert abs(abs(qsim.inner_product(s, s)) - 1) < 1e-10
    a = qsim.StateVector(1, [1, 0])
    b = qsim.StateVector(1, [0, 1])
    assert qsim.inner_product(a, b) == 0


def test_inner_product_extended_precision_oracle(rng):
    for _ in range(5):
        a, b = random_state(rng, 3), random_state(rng, 3)
        ref = inner_product_mp(a.amps, b.amps)
        assert abs(qsim.inner_product(a, b) - ref) < 1e-15


def test_inner_product_conjugates_first_argument():
    a = qsim.StateVector(1, [1j, 0])
    b = qsim.StateVector(1, [1, 0])
    assert qsim.inner_product(a, b) == -1j


def test_inner_product_size_mismatch():
    with pytest.raises(ValidationError):
        qsim.inner_product(qsim.zero_state(1), qsim.zero_state(2))


def test_z_expectation_examples(backend):
    s = qsim.zero_state(4)
    assert all(qsim.z_expectation(s, w) == 1.0 for w in range(4))
    flipped = qsim.apply_gate(qsim.zero_state(2), qsim.ry(0, math.pi))
    assert qsim.z_expectation(flipped, 0) == pytest.approx(-1, abs=1e-15)
    assert qsim.z_expectation(flipped, 1) == pytest.approx(1, abs=1e-15)
    half = qsim.apply_gate(qsim.zero_state(1), qsim.ry(0, math.pi / 2))
    assert abs(qsim.z_expectation(half, 0)) < 1e-12


def test_z_expectation_wire_out_of_range():
    with pytest.raises(ValidationError):
        qsim.z_expectation(qsim.zero_state(2), 2)


def test_z_expectation_matches_dense_operator(backend, rng):
    for n in (1, 2, 4):
        s = random_state(rng, n)
        for w in range(n):
            assert qsim.z_expectation(s, w) == pytest.approx(z_expect_dense(s.amps, w, n), abs=1e-12)


def test_adjoint_undoes_circuit(rng):
    c = random_circuit(rng, 3, 15)
    s = random_state(rng, 3)
    back = qsim.apply_circuit(qsim.apply_circuit(s, c), c.adjoint())
    np.testing.assert_allclose(back.amps, s.amps, atol=1e-12)


def test_large_state_single_gate():
    s = qsim.apply_gate(qsim.zero_state(20), qsim.h(19))
    assert s.amps[0] == pytest.approx(S2)
    assert s.amps[1 << 19] == pytest.approx(S2)
    assert s.norm() == pytest.approx(1.0, abs=1e-12)


# --- properties -----------------------------------------------------------

seeds = st.integers(min_value=0, max_value=2**32 - 1)


@settings(max_examples=40, deadline=None)
@given(seed=seeds, n=st.integers(1, 5), n_gates=st.integers(0, 40))
def test_norm_preserved(seed, n, n_gates):
    rng = np.random.default_rng(seed)
    s = random_state(rng, n)
    out = qsim.apply_circuit(s, random_circuit(rng, n, n_gates))
    assert abs(out.norm() - 1) < 1e-10


@settings(max_examples=30, deadline=None)
@given(seed=seeds, n=st.integers(1, 4))
def test_unitarity_oracle(seed, n):
    rng = np.random.default_rng(seed)
    c = random_circuit(rng, n, 12)
    s = random_state(rng, n)
    np.testing.assert_allclose(qsim.apply_circuit(s, c).amps,
                               circuit_unitary(c.gates, n) @ s.amps, atol=1e-10)


@settings(max_examples=30, deadline=None)
@given(seed=seeds)
def test_involutions(seed):
    rng = np.random.default_rng(seed)
    n = 3
    s = random_state(rng, n)
    a, b = (int(v) for v in rng.choice(n, 2, replace=False))
    for gate in (qsim.h(a), qsim.cnot(a, b), qsim.cz(a, b)):
        twice = qsim.apply_circuit(s, qsim.Circuit(n, [gate, gate]))
        np.testing.assert_allclose(twice.amps, s.amps, atol=1e-12)


@settings(max_examples=40, deadline=None)
@given(seed=seeds, a=st.floats(-10, 10), b=st.floats(-10, 10))
def test_rotation_additivity(seed, a, b):
    s = random_state(np.random.default_rng(seed), 1)
    two = qsim.apply_circuit(s, qsim.Circuit(1, [qsim.ry(0, a), qsim.ry(0, b)]))
    one = qsim.apply_gate(s, qsim.ry(0, a + b))
    np.testing.assert_allclose(two.amps, one.amps, atol=1e-12)


@settings(max_examples=40, deadline=None)
@given(seed=seeds, n=st.integers(1, 5))
def test_z_expectation_probability_identity(seed, n):
    rng = np.random.default_rng(seed)
    s = qsim.apply_circuit(random_state(rng, n), random_circuit(rng, n, 10))
    probs = np.abs(s.amps) ** 2
    for w in range(n):
        p1 = probs[(np.arange(2**n) >> w) & 1 == 1].sum()
        z = qsim.z_expectation(s, w)
        assert -1 <= z <= 1
        assert z == pytest.approx(1 - 2 * p1, abs=1e-12)
