import math

import numpy as np
import pytest
from scipy.stats import unitary_group

from shallow_sampler import circuits as circ
from shallow_sampler.compiler import (
    Cnot,
    Gate1,
    TwoLevel,
    compile_circuit,
    compile_unitary,
    gate_count_guard,
    multi_controlled,
    phase_distance,
    synthesize_two_level,
    two_level_factorization,
)
from shallow_sampler.gatezoo import CNOT, PAULI_X, u_unitarized
from shallow_sampler.statekit import ghz_state


def product(factors, dim):
    out = np.eye(dim, dtype=complex)
    for f in factors:
        out = out @ f.to_matrix()
    return out


def test_identity_has_no_factors():
    assert two_level_factorization(np.eye(8)) == []


def test_diagonal_phases():
    d = np.diag(np.exp(1j * np.arange(8)))
    fs = two_level_factorization(d)
    assert len(fs) <= 7
    assert phase_distance(product(fs, 8), d) < 1e-10


@pytest.mark.parametrize("m", [1, 2, 3, 4])
def test_random_factorization(m):
    u = unitary_group.rvs(1 << m, random_state=m)
    fs = two_level_factorization(u)
    assert np.abs(product(fs, 1 << m) - u).max() < 1e-10
    for f in fs:
        assert np.abs(f.mat.conj().T @ f.mat - np.eye(2)).max() < 1e-12


def test_non_unitary_rejected():
    with pytest.raises(ValueError):
        two_level_factorization(np.array([[1, 1], [0, 1]]))
    with pytest.raises(ValueError):
        two_level_factorization(np.eye(32))


def test_two_level_small_cases():
    w = unitary_group.rvs(2, random_state=1)
    prog = synthesize_two_level(TwoLevel(2, 0, 1, w))
    assert prog.gate_count == 1
    x_on_second = TwoLevel(4, 0, 1, PAULI_X)
    prog = synthesize_two_level(x_on_second)
    assert phase_distance(prog.unitary(), x_on_second.to_matrix()) < 1e-10


@pytest.mark.parametrize("seed", range(4))
def test_two_level_random_m3(seed):
    rng = np.random.default_rng(seed)
    i, j = sorted(rng.choice(8, size=2, replace=False))
    tl = TwoLevel(8, int(i), int(j), unitary_group.rvs(2, random_state=seed))
    prog = synthesize_two_level(tl)
    assert phase_distance(prog.unitary(), tl.to_matrix()) < 1e-10
    assert all(isinstance(op, (Gate1, Cnot)) for op in prog.ops)


def test_multi_controlled():
    w = unitary_group.rvs(2, random_state=5)
    from shallow_sampler.compiler import ElementaryProgram

    prog = ElementaryProgram(4, multi_controlled(w, [0, 1, 2], 3))
    want = np.eye(16, dtype=complex)
    want[14:, 14:] = w
    assert phase_distance(prog.unitary(), want) < 1e-10


def test_cnot_compiles_to_itself():
    prog = compile_unitary(CNOT)
    assert prog.gate_count == 1 and prog.cnot_count == 1


@pytest.mark.parametrize("m,p", [(2, 7), (3, 11), (4, 3)])
def test_unitarized_blocks(m, p):
    u = u_unitarized(m, math.pi / p).matrix
    prog = compile_unitary(u)
    assert phase_distance(prog.unitary(), u) < 1e-9
    assert prog.gate_count <= gate_count_guard(m)


def test_compile_circuit_end_to_end():
    c = circ.unitary_majmod_circuit(7, 0.45)
    compiled = compile_circuit(c)
    assert all(pl.gate.arity <= 2 for pl in compiled.placements())
    a = circ.run_exact(c, ghz_state(7))
    b = circ.run_exact(compiled, ghz_state(7))
    assert np.abs(a.dense() - b.dense()).max() < 1e-9
