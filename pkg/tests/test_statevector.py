"""Kernel correctness against explicit Kronecker-product matrices, plus the
statevector API contracts (capacity, indexing, marginals, sampling)."""

import math
from collections import Counter

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from igoqnn.statevector import (
    CapacityError,
    H_MATRIX,
    StateVector,
    X_MATRIX,
    fidelity,
    is_unitary2,
    new_zero_state,
    u3_matrix,
)

from conftest import dense_1q, dense_controlled_1q, random_circuit, random_state


def random_u2(rng):
    # Haar-ish 2x2 unitary from QR of a complex Gaussian
    a = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
    q, r = np.linalg.qr(a)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def test_zero_state():
    sv = new_zero_state(3)
    assert sv.dim == 8
    assert sv.amps[0] == 1.0
    assert np.all(sv.amps[1:] == 0.0)


def test_capacity_limits():
    with pytest.raises(CapacityError):
        new_zero_state(0)
    with pytest.raises(CapacityError):
        new_zero_state(25)
    new_zero_state(2, max_qubits=2)
    with pytest.raises(CapacityError):
        new_zero_state(3, max_qubits=2)


@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_apply_1q_matches_kronecker(n, rng):
    for _ in range(20):
        u = random_u2(rng)
        target = int(rng.integers(n))
        sv = StateVector(n, random_state(rng, n))
        expect = dense_1q(u, target, n) @ sv.amps
        sv.apply_1q(u, target)
        assert np.max(np.abs(sv.amps - expect)) < 1e-12


@pytest.mark.parametrize("n", [2, 3, 4])
def test_apply_controlled_1q_matches_kronecker(n, rng):
    for _ in range(20):
        u = random_u2(rng)
        control = int(rng.integers(n))
        target = int(rng.integers(n - 1))
        target = target if target < control else target + 1
        sv = StateVector(n, random_state(rng, n))
        expect = dense_controlled_1q(u, control, target, n) @ sv.amps
        sv.apply_controlled_1q(u, control, target)
        assert np.max(np.abs(sv.amps - expect)) < 1e-12


def test_controlled_rejects_same_qubit():
    sv = new_zero_state(2)
    with pytest.raises(ValueError):
        sv.apply_controlled_1q(X_MATRIX, 1, 1)


def test_qubit_out_of_range():
    sv = new_zero_state(2)
    with pytest.raises(IndexError):
        sv.apply_1q(X_MATRIX, 2)
    with pytest.raises(IndexError):
        sv.apply_controlled_1q(X_MATRIX, 0, -1)


def test_qubit0_is_least_significant_bit():
    sv = new_zero_state(3)
    sv.apply_1q(X_MATRIX, 0)
    assert sv.amps[0b001] == 1.0
    sv = new_zero_state(3)
    sv.apply_1q(X_MATRIX, 2)
    assert sv.amps[0b100] == 1.0


def test_linearity(rng):
    n = 4
    u = random_u2(rng)
    x = random_state(rng, n)
    y = random_state(rng, n)
    a, b = 0.3 - 0.2j, -0.7 + 0.1j
    lhs = StateVector(n, a * x + b * y)
    lhs.apply_controlled_1q(u, 3, 1)
    xs = StateVector(n, x.copy())
    ys = StateVector(n, y.copy())
    xs.apply_controlled_1q(u, 3, 1)
    ys.apply_controlled_1q(u, 3, 1)
    assert np.max(np.abs(lhs.amps - (a * xs.amps + b * ys.amps))) < 1e-12


def test_disjoint_gates_commute(rng):
    u, v = random_u2(rng), random_u2(rng)
    x = random_state(rng, 4)
    ab = StateVector(4, x.copy())
    ab.apply_1q(u, 0)
    ab.apply_controlled_1q(v, 3, 2)
    ba = StateVector(4, x.copy())
    ba.apply_controlled_1q(v, 3, 2)
    ba.apply_1q(u, 0)
    assert np.max(np.abs(ab.amps - ba.amps)) < 1e-12


@settings(max_examples=40, deadline=None)
@given(st.integers(min_value=1, max_value=8), st.integers(min_value=0, max_value=60),
       st.integers(min_value=0, max_value=2**32 - 1))
def test_norm_preserved_property(n, gates, seed):
    """Unitary evolution keeps ||psi|| = 1 to near machine precision."""
    rng = np.random.default_rng(seed)
    c = random_circuit(rng, n, gates)
    sv = c.run()
    assert abs(sv.norm_sq() - 1.0) < 1e-9


def test_marginal_prob_one_matches_direct(rng):
    n = 5
    amps = random_state(rng, n)
    sv = StateVector(n, amps.copy())
    for q in range(n):
        mask = 1 << q
        direct = sum(abs(amps[i]) ** 2 for i in range(1 << n) if i & mask)
        assert abs(sv.marginal_prob_one(q) - direct) < 1e-12


def test_sampling_frequencies_track_probabilities():
    sv = new_zero_state(2)
    sv.apply_1q(H_MATRIX, 0)
    counts = Counter(sv.sample_bitstrings(20000, seed=11))
    assert set(counts) <= {"00", "01"}  # qubit 1 never flips
    assert abs(counts["01"] / 20000 - 0.5) < 0.02


def test_sampling_bit_order():
    sv = new_zero_state(3)
    sv.apply_1q(X_MATRIX, 0)
    # qubit 2 is the leftmost character
    assert sv.sample_bitstrings(10, seed=0) == ["001"] * 10


def test_sampling_rejects_bad_shots():
    with pytest.raises(ValueError):
        new_zero_state(1).sample_bitstrings(0, seed=0)


def test_sampling_deterministic_per_seed():
    sv = new_zero_state(2)
    sv.apply_1q(H_MATRIX, 0)
    sv.apply_1q(H_MATRIX, 1)
    assert sv.sample_bitstrings(100, seed=5) == sv.sample_bitstrings(100, seed=5)


def test_u3_special_cases():
    assert np.max(np.abs(u3_matrix(math.pi, 0.0, math.pi) - X_MATRIX)) < 1e-15
    assert np.max(np.abs(u3_matrix(math.pi / 2, 0.0, math.pi) - H_MATRIX)) < 1e-15
    # 2*pi rotation is the global-phase gate -I, not the identity
    assert np.max(np.abs(u3_matrix(2 * math.pi, 0.0, 0.0) + np.eye(2))) < 1e-15


def test_u3_always_unitary(rng):
    for _ in range(50):
        t, p, l = rng.uniform(-10, 10, 3)
        assert is_unitary2(u3_matrix(t, p, l))


def test_fidelity_bounds(rng):
    x = random_state(rng, 3)
    a = StateVector(3, x.copy())
    b = StateVector(3, x.copy())
    assert abs(fidelity(a, b) - 1.0) < 1e-12
    c = new_zero_state(3)
    c.apply_1q(X_MATRIX, 0)
    d = new_zero_state(3)
    assert fidelity(c, d) < 1e-12


def test_copy_is_independent():
    a = new_zero_state(2)
    b = a.copy()
    b.apply_1q(X_MATRIX, 0)
    assert a.amps[0] == 1.0 and b.amps[0] == 0.0
