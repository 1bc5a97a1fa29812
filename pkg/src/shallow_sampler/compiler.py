"""Exact compilation of small unitaries into single-qubit gates and CNOTs.

Pipeline: two-level factorization by column elimination, Gray-code routing
of each two-level factor onto one target qubit, and ancilla-free expansion
of the resulting multi-controlled gate.  Programs are exact (no phase is
dropped), so they also match up to global phase.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field

import numpy as np

from .circuits import Circuit, Placement
from .gatezoo import PAULI_X, GateFamily, GateSpec, std
from .statekit import LinearOp, apply_matrix, unitarity_defect

MAX_COMPILE_ARITY = 4
TOL = 1e-12


@dataclass(frozen=True)
class TwoLevel:
    """A unitary acting as `mat` on span{|i>, |j>} (i < j) and as identity elsewhere."""

    dim: int
    i: int
    j: int
    mat: np.ndarray

    def to_matrix(self) -> np.ndarray:
        out = np.eye(self.dim, dtype=np.complex128)
        out[np.ix_([self.i, self.j], [self.i, self.j])] = self.mat
        return out


@dataclass(frozen=True)
class Gate1:
    target: int
    mat: np.ndarray


@dataclass(frozen=True)
class Cnot:
    control: int
    target: int


@dataclass
class ElementaryProgram:
    n_qubits: int
    ops: list = field(default_factory=list)

    def __post_init__(self):
        for op in self.ops:
            if isinstance(op, Gate1) and unitarity_defect(op.mat) > TOL:
                raise ValueError("single-qubit gate is not unitary")

    @property
    def gate_count(self) -> int:
        return len(self.ops)

    @property
    def cnot_count(self) -> int:
        return sum(isinstance(op, Cnot) for op in self.ops)

    def unitary(self) -> np.ndarray:
        n = self.n_qubits
        dim = 1 << n
        cols = np.eye(dim, dtype=np.complex128)
        out = np.empty_like(cols)
        for c in range(dim):
            v = cols[:, c]
            for op in self.ops:
                if isinstance(op, Gate1):
                    v = apply_matrix(v, n, op.mat, [op.target])
                else:
                    v = apply_matrix(v, n, _CNOT, [op.control, op.target])
            out[:, c] = v
        return out

    def extend(self, other: "ElementaryProgram") -> None:
        self.ops.extend(other.ops)

    def to_circuit(self, qubit_map=None, n_qubits: int | None = None) -> Circuit:
        """ASAP-layered circuit; single-qubit gates become explicit-matrix gates."""
        qmap = list(range(self.n_qubits)) if qubit_map is None else list(qubit_map)
        circ = Circuit(n_qubits or (max(qmap) + 1))
        ready = {}
        for op in self.ops:
            if isinstance(op, Gate1):
                qs = (qmap[op.target],)
                pl = Placement(GateSpec(GateFamily.MATRIX, 1, name="U1", matrix=op.mat), qs)
            else:
                qs = (qmap[op.control], qmap[op.target])
                pl = Placement(std("CNOT"), qs)
            k = max(ready.get(q, 0) for q in qs)
            while len(circ.layers) <= k:
                circ.layers.append([])
            circ.layers[k].append(pl)
            for q in qs:
                ready[q] = k + 1
        return circ

    def to_json(self) -> dict:
        return self.to_circuit().to_json()


_CNOT = std("CNOT").build().matrix


def phase_distance(a: np.ndarray, b: np.ndarray) -> float:
    """min over phi of max|e^{i phi} a - b|, with phi from the Frobenius-optimal alignment."""
    inner = np.vdot(a, b)
    phase = inner / abs(inner) if abs(inner) > 0 else 1.0
    return float(np.abs(phase * a - b).max())


# ------------------------------------------------------ two-level factorization


def two_level_factorization(U) -> list[TwoLevel]:
    """Factors F_1..F_k with U = F_1 F_2 ... F_k.

    Column c is cleared below the diagonal by Givens-type rotations that
    leave a real positive pivot; a leftover pivot phase gets its own factor
    on (c, c+1).  The last 2x2 block is taken whole.
    """
    mat = np.array(U.matrix if isinstance(U, LinearOp) else U, dtype=np.complex128)
    dim = mat.shape[0]
    if dim > 1 << MAX_COMPILE_ARITY:
        raise ValueError(f"arity above {MAX_COMPILE_ARITY}")
    if unitarity_defect(mat) > 1e-10:
        raise ValueError("input is not unitary")
    work = mat.copy()
    eliminators = []  # G with G ... G U = I

    def apply(i, j, g):
        work[[i, j], :] = g @ work[[i, j], :]
        eliminators.append(TwoLevel(dim, i, j, g))

    for c in range(dim - 2):
        for r in range(c + 1, dim):
            b = work[r, c]
            if abs(b) < TOL:
                continue
            a = work[c, c]
            nu = math.hypot(abs(a), abs(b))
            apply(c, r, np.array([[a.conjugate(), b.conjugate()], [-b, a]]) / nu)
        a = work[c, c]
        if abs(a - 1) > TOL:
            ph = a / abs(a)
            apply(c, c + 1, np.diag([ph.conjugate(), ph]))
    if dim >= 2:
        block = work[dim - 2 :, dim - 2 :]
        if np.abs(block - np.eye(2)).max() > TOL:
            apply(dim - 2, dim - 1, block.conj().T)
    return [TwoLevel(t.dim, t.i, t.j, t.mat.conj().T) for t in eliminators]


# --------------------------------------------------- multi-controlled gates


def _zyz(w: np.ndarray) -> tuple[float, float, float, float]:
    """w = e^{i alpha} Rz(beta) Ry(gamma) Rz(delta)."""
    det = np.linalg.det(w)
    alpha = cmath.phase(det) / 2
    v = w * cmath.exp(-1j * alpha)  # in SU(2)
    gamma = 2 * math.atan2(abs(v[1, 0]), abs(v[0, 0]))
    s = cmath.phase(v[1, 1]) if abs(v[1, 1]) > 1e-15 else 0.0  # (beta + delta) / 2
    t = cmath.phase(v[1, 0]) if abs(v[1, 0]) > 1e-15 else 0.0  # (beta - delta) / 2
    if abs(v[1, 1]) <= 1e-15:
        s = 0.0
        t = cmath.phase(v[1, 0])
    if abs(v[1, 0]) <= 1e-15:
        t = 0.0
    return alpha, s + t, gamma, s - t


def _rz(a: float) -> np.ndarray:
    return np.diag([cmath.exp(-0.5j * a), cmath.exp(0.5j * a)])


def _ry(a: float) -> np.ndarray:
    c, s = math.cos(a / 2), math.sin(a / 2)
    return np.array([[c, -s], [s, c]], dtype=np.complex128)


def _is_identity(w) -> bool:
    return np.abs(w - np.eye(2)).max() < TOL


def _controlled(w: np.ndarray, control: int, target: int) -> list:
    """Single-control gate as at most 2 CNOTs and 4 single-qubit gates."""
    if _is_identity(w):
        return []
    if np.abs(w - PAULI_X).max() < TOL:
        return [Cnot(control, target)]
    alpha, beta, gamma, delta = _zyz(w)
    a = _rz(beta) @ _ry(gamma / 2)
    b = _ry(-gamma / 2) @ _rz(-(delta + beta) / 2)
    c = _rz((delta - beta) / 2)
    ops = [Gate1(target, c), Cnot(control, target), Gate1(target, b), Cnot(control, target), Gate1(target, a)]
    ops = [op for op in ops if not (isinstance(op, Gate1) and _is_identity(op.mat))]
    if abs(cmath.exp(1j * alpha) - 1) > TOL:
        ops.append(Gate1(control, np.diag([1, cmath.exp(1j * alpha)])))
    return ops


def _sqrt_unitary(w: np.ndarray) -> np.ndarray:
    vals, vecs = np.linalg.eig(w)
    # eigenvectors of a normal matrix; re-orthonormalize for safety
    q, _ = np.linalg.qr(vecs)
    d = np.diag(q.conj().T @ w @ q)
    return q @ np.diag(np.sqrt(d)) @ q.conj().T


def multi_controlled(w: np.ndarray, controls: list[int], target: int) -> list:
    """Gate w on target when every control is 1 (no ancillas, recursive halving)."""
    if not controls:
        return [] if _is_identity(w) else [Gate1(target, w)]
    if len(controls) == 1:
        return _controlled(w, controls[0], target)
    v = _sqrt_unitary(w)
    *rest, last = controls
    ops = _controlled(v, last, target)
    ops += multi_controlled(PAULI_X, rest, last)
    ops += _controlled(v.conj().T, last, target)
    ops += multi_controlled(PAULI_X, rest, last)
    ops += multi_controlled(v, rest, target)
    return ops


def _with_values(ops: list, controls: list[tuple[int, int]]) -> list:
    flips = [Gate1(q, PAULI_X) for q, val in controls if val == 0]
    return flips + ops + flips


def _mc_on_values(w, controls: list[tuple[int, int]], target: int) -> list:
    return _with_values(multi_controlled(w, [q for q, _ in controls], target), controls)


# -------------------------------------------------------- two-level synthesis


def _gray_path(a: int, b: int, m: int) -> list[int]:
    path = [a]
    cur = a
    for q in range(m):
        bit = 1 << (m - 1 - q)
        if (cur ^ b) & bit:
            cur ^= bit
            path.append(cur)
    return path


def synthesize_two_level(tl: TwoLevel) -> ElementaryProgram:
    """Route |i> next to |j> along a Gray path with multi-controlled X swaps,
    apply the 2x2 block as a multi-controlled gate, then undo the routing."""
    m = tl.dim.bit_length() - 1
    if tl.dim != 1 << m or m > MAX_COMPILE_ARITY:
        raise ValueError("dimension must be 2^m with m <= 4")
    path = _gray_path(tl.i, tl.j, m)
    steps = []
    for s, t in zip(path[:-2], path[1:-1]):
        steps.append(_flip_between(s, t, m))
    a, b = path[-2], path[-1]
    q = (m - 1) - ((a ^ b).bit_length() - 1)
    ctrl = [(k, (a >> (m - 1 - k)) & 1) for k in range(m) if k != q]
    w = tl.mat
    if (a >> (m - 1 - q)) & 1:  # a holds the 1 on the target qubit: swap basis order
        w = PAULI_X @ w @ PAULI_X
    ops = []
    for st in steps:
        ops += st
    ops += _mc_on_values(w, ctrl, q)
    for st in reversed(steps):
        ops += st
    return ElementaryProgram(m, _merge(ops))


def _flip_between(s: int, t: int, m: int) -> list:
    q = (m - 1) - ((s ^ t).bit_length() - 1)
    ctrl = [(k, (s >> (m - 1 - k)) & 1) for k in range(m) if k != q]
    return _mc_on_values(PAULI_X, ctrl, q)


def _merge(ops: list) -> list:
    """Fuse runs of single-qubit gates on the same wire and drop identities."""
    out: list = []
    pending: dict[int, np.ndarray] = {}

    def flush(q):
        mat = pending.pop(q, None)
        if mat is not None and not _is_identity(mat):
            out.append(Gate1(q, mat))

    for op in ops:
        if isinstance(op, Gate1):
            pending[op.target] = op.mat @ pending.get(op.target, np.eye(2, dtype=np.complex128))
        else:
            flush(op.control)
            flush(op.target)
            out.append(op)
    for q in sorted(pending):
        flush(q)
    return out


def compile_unitary(U) -> ElementaryProgram:
    mat = np.asarray(U.matrix if isinstance(U, LinearOp) else U, dtype=np.complex128)
    m = mat.shape[0].bit_length() - 1
    factors = two_level_factorization(mat)
    ops: list = []
    for tl in reversed(factors):  # U = F_1 ... F_k, so F_k acts first
        ops += synthesize_two_level(tl).ops
    return ElementaryProgram(m, _merge(ops))


def gate_count_guard(m: int) -> int:
    return 10 * m**3 * 4**m * 5


def compile_circuit(circuit: Circuit) -> Circuit:
    """Replace every multi-qubit non-standard unitary placement by its compiled program."""
    out = Circuit(circuit.n_qubits)
    for layer in circuit.layers:
        keep, expanded = [], []
        for pl in layer:
            if pl.gate.family in (GateFamily.U_UNITARIZED, GateFamily.CYCLIC) and pl.gate.arity > 1:
                prog = compile_unitary(pl.operator())
                expanded.append(prog.to_circuit(pl.targets, circuit.n_qubits))
            else:
                keep.append(pl)
        sub_depth = max((len(c.layers) for c in expanded), default=0)
        sub_layers = [[] for _ in range(sub_depth)]
        for c in expanded:
            for k, lay in enumerate(c.layers):
                sub_layers[k].extend(lay)
        if keep:
            out.add_layer(keep)
        for lay in sub_layers:
            out.add_layer(lay)
    return out
