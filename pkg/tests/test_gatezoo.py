import itertools
import math

import numpy as np
import pytest
from scipy.linalg import expm

from shallow_sampler.gatezoo import (
    PAULI_X,
    GateFamily,
    GateSpec,
    a_multi,
    a_theta,
    cyclic_shift,
    gram_entry,
    standard_gate,
    u_unitarized,
    x_rotation,
)


def a_multi_oracle(m, theta):
    # column x is the tensor product of exp(-i theta X x_{j-1})|x_j>, x_0 = x_m
    mat = np.zeros((1 << m, 1 << m), dtype=complex)
    for idx, x in enumerate(itertools.product((0, 1), repeat=m)):
        col = np.ones(1, dtype=complex)
        for j in range(m):
            e = np.eye(2)[x[j]]
            col = np.kron(col, expm(-1j * theta * PAULI_X * x[j - 1]) @ e)
        mat[:, idx] = col
    return mat


@pytest.mark.parametrize("m", [1, 2, 3, 4])
def test_a_multi_matches_oracle(m):
    for th in (0.1, 0.7, math.pi / 5):
        assert np.allclose(a_multi(m, th).matrix, a_multi_oracle(m, th))


def test_a_theta_columns():
    th = 0.4
    a = a_theta(th).matrix
    assert np.allclose(a[:, 0], [1, 0])
    assert np.allclose(a[:, 1], [-1j * math.sin(th), math.cos(th)])
    assert np.allclose(a_multi(1, th).matrix, a)


@pytest.mark.parametrize("m", [2, 3, 4])
def test_gram_entries(m):
    for th in (0.1, 0.5, 1.0):
        a = a_multi(m, th).matrix
        g = a.conj().T @ a
        full = (1 << m) - 1
        for x in range(1 << m):
            assert g[x ^ full, x] == pytest.approx(gram_entry(m, th, x), abs=1e-12)


def test_gram_example_value():
    # m=2, theta=pi/4, x=00: i^2 sin^2 = -1/2
    assert gram_entry(2, math.pi / 4, 0) == pytest.approx(-0.5)


@pytest.mark.parametrize("m", [2, 3, 4])
def test_u_unitarized(m):
    for th in (0.05, 0.3, 1.0):
        u = u_unitarized(m, th).matrix
        assert np.abs(u.conj().T @ u - np.eye(1 << m)).max() < 1e-12
        a = a_multi(m, th).matrix
        assert np.allclose(u[:, : 1 << (m - 1)], a[:, : 1 << (m - 1)])
    assert np.allclose(u_unitarized(m, 0.0).matrix, np.eye(1 << m))


def test_u_degenerate():
    with pytest.raises(ValueError):
        u_unitarized(2, math.pi / 2)


def test_x_rotation():
    assert np.allclose(x_rotation(0).matrix, np.eye(2))
    assert np.allclose(x_rotation(math.pi / 2).matrix, 1j * PAULI_X)
    th = -math.pi / 4
    assert np.allclose(x_rotation(th).matrix[:, 0], [math.cos(th), 1j * math.sin(th)])


def test_cyclic_shift():
    swap = np.eye(4)[[0, 2, 1, 3]]
    assert np.allclose(cyclic_shift(2).matrix, swap)
    c3 = cyclic_shift(3).matrix
    assert c3[0b001, 0b100] == 1
    c4 = cyclic_shift(4).matrix
    assert np.allclose(np.linalg.matrix_power(c4, 4), np.eye(16))


def test_standard_gates():
    h = standard_gate("H").matrix
    assert np.allclose(h @ h, np.eye(2))
    z = standard_gate("Z").matrix
    assert np.allclose(z @ [0, 1], [0, -1])
    with pytest.raises(ValueError):
        standard_gate("T")


def test_gatespec_roundtrip_and_checks():
    specs = [
        GateSpec(GateFamily.A_THETA, 1, 0.3),
        GateSpec(GateFamily.U_UNITARIZED, 3, 0.2),
        GateSpec(GateFamily.STANDARD, name="CNOT"),
        GateSpec(GateFamily.MATRIX, 1, matrix=[[0, 1j], [1j, 0]]),
    ]
    for s in specs:
        back = GateSpec.from_json(s.to_json())
        assert back == s
        assert np.allclose(back.build().matrix, s.build().matrix)
    assert GateSpec(GateFamily.MATRIX, 1, matrix=np.eye(2)) != GateSpec(GateFamily.MATRIX, 1, matrix=np.diag([1, -1]))
    with pytest.raises(ValueError):
        GateSpec(GateFamily.A_THETA, 2, 0.1)
    with pytest.raises(ValueError):
        GateSpec(GateFamily.XROT, 1, math.nan)
