"""Dense statevector engine.

Qubits are numbered 0..n-1 and qubit 0 is the most significant bit of the
basis index, so the string z_0 z_1 ... z_{n-1} sits at index sum z_i 2^(n-1-i).
Operators need not be unitary; distributions renormalize.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .pmf import Pmf, bits_to_int

MAX_QUBITS = 24
MAX_ARITY = 6
UNITARY_TOL = 1e-12


class ZeroProbabilityError(ValueError):
    """Raised when conditioning on an outcome of probability zero."""


@dataclass(frozen=True, eq=False)
class LinearOp:
    arity: int
    matrix: np.ndarray
    unitary: bool = False

    def __post_init__(self):
        mat = np.array(self.matrix, dtype=np.complex128)
        dim = 1 << self.arity
        if not 1 <= self.arity <= MAX_ARITY:
            raise ValueError(f"arity must be in [1, {MAX_ARITY}]")
        if mat.shape != (dim, dim):
            raise ValueError(f"matrix must be {dim}x{dim}")
        if self.unitary and unitarity_defect(mat) > UNITARY_TOL:
            raise ValueError("matrix flagged unitary but U^dag U != I")
        mat.setflags(write=False)
        object.__setattr__(self, "matrix", mat)

    @classmethod
    def from_matrix(cls, matrix, unitary: bool | None = None) -> "LinearOp":
        mat = np.asarray(matrix, dtype=np.complex128)
        arity = mat.shape[0].bit_length() - 1
        if unitary is None:
            unitary = unitarity_defect(mat) <= UNITARY_TOL
        return cls(arity, mat, unitary)

    def adjoint(self) -> "LinearOp":
        return LinearOp(self.arity, self.matrix.conj().T, self.unitary)

    def __matmul__(self, other: "LinearOp") -> "LinearOp":
        if self.arity != other.arity:
            raise ValueError("arity mismatch")
        return LinearOp.from_matrix(self.matrix @ other.matrix)


def unitarity_defect(mat) -> float:
    mat = np.asarray(mat)
    return float(np.abs(mat.conj().T @ mat - np.eye(mat.shape[0])).max())


@dataclass(frozen=True, eq=False)
class StateVector:
    n_qubits: int
    amplitudes: np.ndarray

    def __post_init__(self):
        if not 1 <= self.n_qubits <= MAX_QUBITS:
            raise ValueError(f"n_qubits must be in [1, {MAX_QUBITS}]")
        amp = np.array(self.amplitudes, dtype=np.complex128).reshape(-1)
        if amp.size != 1 << self.n_qubits:
            raise ValueError("amplitude count must be 2^n_qubits")
        if not np.all(np.isfinite(amp)):
            raise ValueError("non-finite amplitude")
        amp.setflags(write=False)
        object.__setattr__(self, "amplitudes", amp)

    @classmethod
    def _adopt(cls, n_qubits: int, amplitudes: np.ndarray) -> "StateVector":
        # wrap a freshly computed complex128 array without copying; the caller
        # gives up ownership and the array becomes read-only
        if amplitudes.dtype != np.complex128 or amplitudes.size != 1 << n_qubits:
            return cls(n_qubits, amplitudes)
        amplitudes.setflags(write=False)
        out = object.__new__(cls)
        object.__setattr__(out, "n_qubits", n_qubits)
        object.__setattr__(out, "amplitudes", amplitudes)
        return out

    @classmethod
    def from_amplitudes(cls, amplitudes) -> "StateVector":
        amp = np.asarray(amplitudes, dtype=np.complex128).reshape(-1)
        return cls(amp.size.bit_length() - 1, amp)

    def normalized(self) -> "StateVector":
        nrm = state_norm(self)
        if nrm == 0:
            raise ZeroProbabilityError("cannot normalize the zero vector")
        return StateVector(self.n_qubits, self.amplitudes / nrm)

    def amplitude(self, bits) -> complex:
        return complex(self.amplitudes[bits_to_int(bits)])

    def tensor(self, other: "StateVector") -> "StateVector":
        return StateVector(self.n_qubits + other.n_qubits, np.kron(self.amplitudes, other.amplitudes))


def basis_state(bits) -> StateVector:
    if isinstance(bits, str):
        n = len(bits)
    else:
        bits = list(bits)
        n = len(bits)
    amp = np.zeros(1 << n, dtype=np.complex128)
    amp[bits_to_int(bits)] = 1.0
    return StateVector(n, amp)


def zero_state(n: int) -> StateVector:
    return basis_state("0" * n)


def ghz_state(n: int) -> StateVector:
    amp = np.zeros(1 << n, dtype=np.complex128)
    amp[0] = amp[-1] = 1 / np.sqrt(2)
    return StateVector(n, amp)


def random_state(n: int, rng: np.random.Generator) -> StateVector:
    v = rng.normal(size=1 << n) + 1j * rng.normal(size=1 << n)
    return StateVector(n, v / np.linalg.norm(v))


def _check_targets(n: int, targets) -> list[int]:
    targets = [int(t) for t in targets]
    if len(set(targets)) != len(targets):
        raise ValueError("targets must be distinct")
    for t in targets:
        if not 0 <= t < n:
            raise IndexError(f"qubit {t} out of range for {n} qubits")
    return targets


def _scalar(c):
    # real coefficients multiply complex arrays at half the cost
    return c.real if c.imag == 0 else c


def split_scale(matrix: np.ndarray) -> tuple[float, np.ndarray]:
    """(s, M/s) when every nonzero entry of M has modulus s, else (1, M).

    Gates like H then run as +-1 butterflies with the scale applied once.
    """
    mags = np.abs(matrix[matrix != 0])
    if mags.size and np.all(np.abs(mags - mags[0]) <= 1e-15 * mags[0]) and mags[0] != 1:
        s = float(mags[0])
        m = matrix / s
        snapped = np.round(m.real) + 1j * np.round(m.imag)
        if np.all(np.abs(snapped - m) <= 1e-14):
            m = snapped
        return s, m
    return 1.0, matrix


def _apply_sliced(psi: np.ndarray, n: int, matrix: np.ndarray, targets: list[int], scratch=None) -> np.ndarray:
    # In place over basis slices.  Rows of M equal to the identity are left
    # alone, and an old slice is copied only if a later row still reads it
    # after it has been overwritten.  A CNOT costs about half a pass.
    k = len(targets)
    dim = 1 << k
    size = 1 << (n - k)

    def view(code):
        idx = [slice(None)] * n
        for j, t in enumerate(targets):
            idx[t] = (code >> (k - 1 - j)) & 1
        return psi[(*idx, ...)]

    eye = np.eye(dim)
    changed = [y for y in range(dim) if not np.array_equal(matrix[y], eye[y])]
    order = {y: i for i, y in enumerate(changed)}
    keep = [x for x in changed if any(matrix[y, x] != 0 for y in changed if order[y] > order[x])]
    want = (len(keep) + 1) * size
    if scratch is None or scratch.size < want:
        scratch = np.empty(want, dtype=np.complex128)
    pieces = [scratch[i * size:(i + 1) * size].reshape((2,) * (n - k)) for i in range(len(keep) + 1)]
    saved = {}
    tmp = pieces[-1]

    for y in changed:
        dst = view(y)
        if y in keep:
            saved[y] = pieces[len(saved)]
            np.copyto(saved[y], dst)
        others = [(_scalar(matrix[y, x]), saved.get(x, view(x))) for x in range(dim) if x != y and matrix[y, x] != 0]
        c_self = _scalar(matrix[y, y])
        if c_self == 0:
            if not others:
                dst[...] = 0
                continue
            c, src = others.pop(0)
            if c == 1:
                np.copyto(dst, src)
            elif c == -1:
                np.negative(src, out=dst)
            else:
                np.multiply(src, c, out=dst)
        elif c_self == -1 and others and others[0][0] == 1:
            np.subtract(others.pop(0)[1], dst, out=dst)
        elif c_self != 1:
            dst *= c_self
        for c, src in others:
            if c == 1:
                dst += src
            elif c == -1:
                dst -= src
            else:
                np.multiply(src, c, out=tmp)
                dst += tmp
    return psi.reshape(-1)


def apply_matrix(
    amplitudes: np.ndarray, n: int, matrix: np.ndarray, targets, inplace: bool = False, scratch=None
) -> np.ndarray:
    """(I (x) M (x) I) psi on raw arrays.

    Returns a new array unless inplace is set, in which case a complex128
    contiguous input is overwritten for gates on at most three qubits.
    `scratch` is an optional complex128 work buffer reused across calls.
    """
    k = len(targets)
    matrix = np.asarray(matrix)
    if k <= 3:
        if inplace and isinstance(amplitudes, np.ndarray) and amplitudes.dtype == np.complex128 and amplitudes.flags.c_contiguous:
            buf = amplitudes
        else:
            buf = np.array(amplitudes, dtype=np.complex128)
        return _apply_sliced(buf.reshape((2,) * n), n, matrix, list(targets), scratch)
    psi = np.asarray(amplitudes).reshape((2,) * n)
    m = np.asarray(matrix).reshape((2,) * (2 * k))
    out = np.tensordot(m, psi, axes=(list(range(k, 2 * k)), list(targets)))
    # tensordot puts the k new axes first; move them back into place
    out = np.moveaxis(out, list(range(k)), list(targets))
    return np.ascontiguousarray(out).reshape(-1)


def apply_local_op(state: StateVector, op: LinearOp, targets) -> StateVector:
    targets = _check_targets(state.n_qubits, targets)
    if op.arity != len(targets):
        raise ValueError(f"operator arity {op.arity} != {len(targets)} targets")
    return StateVector(state.n_qubits, apply_matrix(state.amplitudes, state.n_qubits, op.matrix, targets))


def state_norm(state: StateVector) -> float:
    return float(np.linalg.norm(state.amplitudes))


def probabilities(state: StateVector) -> np.ndarray:
    """Dense Born-rule probabilities, renormalized."""
    w = np.abs(state.amplitudes) ** 2
    total = w.sum()
    if total == 0:
        raise ZeroProbabilityError("zero-norm state has no distribution")
    return w / total


def exact_distribution(state: StateVector) -> Pmf:
    return Pmf.from_dense(probabilities(state), state.n_qubits, normalize=False)


def conditional_state(state: StateVector, measured_qubits, outcome) -> tuple[float, StateVector]:
    """Probability of `outcome` on `measured_qubits` and the renormalized rest.

    The residual keeps the unmeasured qubits in their original order.
    """
    n = state.n_qubits
    measured = _check_targets(n, measured_qubits)
    bits = [int(b) for b in (outcome if not isinstance(outcome, str) else list(outcome))]
    if len(bits) != len(measured):
        raise ValueError("outcome length does not match measured qubits")
    if len(measured) == n:
        raise ValueError("at least one qubit must remain unmeasured")
    psi = state.amplitudes.reshape((2,) * n)
    index = [slice(None)] * n
    for q, b in zip(measured, bits):
        index[q] = b
    rest = psi[tuple(index)].reshape(-1)
    total = float(np.vdot(state.amplitudes, state.amplitudes).real)
    if total == 0:
        raise ZeroProbabilityError("zero-norm state")
    mass = float(np.vdot(rest, rest).real)
    if mass == 0:
        raise ZeroProbabilityError(f"outcome {bits} has probability zero")
    return mass / total, StateVector(n - len(measured), rest / np.sqrt(mass))
