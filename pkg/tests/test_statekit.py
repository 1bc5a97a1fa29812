import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from shallow_sampler.gatezoo import CNOT, HADAMARD, a_theta
from shallow_sampler.statekit import (
    LinearOp,
    StateVector,
    ZeroProbabilityError,
    apply_local_op,
    apply_matrix,
    basis_state,
    conditional_state,
    exact_distribution,
    ghz_state,
    random_state,
    split_scale,
    state_norm,
    zero_state,
)


def kron_reference(psi, n, mat, targets):
    # build the full operator by permuting qubits: slow but obviously right
    k = len(targets)
    rest = [q for q in range(n) if q not in targets]
    order = list(targets) + rest
    t = psi.reshape((2,) * n).transpose(order).reshape(1 << k, -1)
    out = (mat @ t).reshape((2,) * n)
    return out.transpose(np.argsort(order)).reshape(-1)


def test_hadamard_on_zero():
    out = apply_local_op(zero_state(1), LinearOp(1, HADAMARD, True), [0])
    assert np.allclose(out.amplitudes, [2**-0.5, 2**-0.5])


def test_cnot_on_10():
    out = apply_local_op(basis_state("10"), LinearOp(2, CNOT, True), [0, 1])
    assert out.amplitude("11") == pytest.approx(1)
    flipped = apply_local_op(basis_state("01"), LinearOp(2, CNOT, True), [1, 0])
    assert flipped.amplitude("11") == pytest.approx(1)


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 6), st.integers(1, 3), st.integers(0, 2**32 - 1))
def test_apply_matches_kron(n, k, seed):
    k = min(k, n)
    rng = np.random.default_rng(seed)
    targets = list(rng.choice(n, size=k, replace=False))
    mat = rng.normal(size=(1 << k, 1 << k)) + 1j * rng.normal(size=(1 << k, 1 << k))
    psi = random_state(n, rng).amplitudes
    ref = kron_reference(np.array(psi), n, mat, targets)
    assert np.allclose(apply_matrix(psi, n, mat, targets), ref)
    assert np.allclose(apply_matrix(np.array(psi), n, mat, targets, inplace=True), ref)


def test_wide_gate_uses_general_path():
    rng = np.random.default_rng(3)
    mat = rng.normal(size=(16, 16)) + 0j
    psi = random_state(5, rng).amplitudes
    assert np.allclose(apply_matrix(psi, 5, mat, [4, 0, 2, 1]), kron_reference(np.array(psi), 5, mat, [4, 0, 2, 1]))


def test_input_not_mutated_by_default():
    psi = np.array(ghz_state(3).amplitudes)
    keep = psi.copy()
    apply_matrix(psi, 3, HADAMARD, [1])
    assert np.array_equal(psi, keep)


def test_split_scale():
    s, m = split_scale(HADAMARD)
    assert s == pytest.approx(2**-0.5)
    assert np.array_equal(m, np.array([[1, 1], [1, -1]]))
    s, m = split_scale(a_theta(0.3).matrix)
    assert s == 1.0


def test_norm_and_nonunitary():
    assert state_norm(zero_state(4)) == pytest.approx(1)
    # columns of A_theta have unit norm but are not orthogonal
    probe = StateVector(1, np.array([1, 1j]) / np.sqrt(2))
    shrunk = apply_local_op(probe, a_theta(0.5), [0])
    assert state_norm(shrunk) ** 2 == pytest.approx(1 + np.sin(0.5))
    pmf = exact_distribution(shrunk)
    assert pmf.total() == pytest.approx(1)


def test_plus_distribution():
    plus = apply_local_op(zero_state(1), LinearOp(1, HADAMARD, True), [0])
    assert exact_distribution(plus).as_dict() == pytest.approx({"0": 0.5, "1": 0.5})


def test_conditional_ghz():
    prob, rest = conditional_state(ghz_state(2), [0], "0")
    assert prob == pytest.approx(0.5)
    assert np.allclose(rest.amplitudes, [1, 0])
    with pytest.raises(ZeroProbabilityError):
        conditional_state(basis_state("00"), [1], "1")


def test_validation():
    with pytest.raises(ValueError):
        StateVector(2, np.zeros(3))
    with pytest.raises(ValueError):
        LinearOp(1, np.array([[1, 1], [0, 1]]), unitary=True)
    with pytest.raises(ValueError):
        apply_local_op(zero_state(2), LinearOp(1, HADAMARD), [0, 0])
    with pytest.raises(IndexError):
        apply_local_op(zero_state(2), LinearOp(1, HADAMARD), [2])
    with pytest.raises(ZeroProbabilityError):
        exact_distribution(StateVector(1, np.zeros(2)))
