"""Gate families: A_theta, its multi-qubit version, the unitarized block,
X rotations, the cyclic shift C_m and a few standard gates.

Sign convention: A_theta|1> = exp(-i theta X)|1>, and the multi-qubit gate
uses the same sign, A_{m,theta}|x> = (x)_j exp(-i theta X x_{j-1})|x_j> with
x_0 := x_m.  With this sign A_{1,theta} = A_theta and the block identities
against the per-qubit circuit hold exactly.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from functools import reduce

import numpy as np

from .statekit import LinearOp

I2 = np.eye(2, dtype=np.complex128)
PAULI_X = np.array([[0, 1], [1, 0]], dtype=np.complex128)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=np.complex128)
HADAMARD = np.array([[1, 1], [1, -1]], dtype=np.complex128) / np.sqrt(2)
CNOT = np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=np.complex128)
# H on the first qubit followed by CNOT from it: |00> -> (|00> + |11>)/sqrt2
BELL = CNOT @ np.kron(HADAMARD, I2)

STANDARD = {"H": (1, HADAMARD), "X": (1, PAULI_X), "Z": (1, PAULI_Z), "CNOT": (2, CNOT), "BELL": (2, BELL)}


class GateFamily(str, enum.Enum):
    A_THETA = "A_THETA"
    A_MULTI = "A_MULTI"
    U_UNITARIZED = "U_UNITARIZED"
    XROT = "XROT"
    CYCLIC = "CYCLIC"
    STANDARD = "STANDARD"
    MATRIX = "MATRIX"


def _rot(theta: float, sign: int) -> np.ndarray:
    # exp(sign * i theta X)
    return math.cos(theta) * I2 + sign * 1j * math.sin(theta) * PAULI_X


def a_theta(theta: float) -> LinearOp:
    s, c = math.sin(theta), math.cos(theta)
    mat = np.array([[1, -1j * s], [0, c]], dtype=np.complex128)
    return LinearOp(1, mat, unitary=abs(s) < 1e-15)


def x_rotation(theta: float) -> LinearOp:
    """exp(i theta X)."""
    return LinearOp(1, _rot(theta, +1), unitary=True)


def _bits(x: int, m: int) -> list[int]:
    return [(x >> (m - 1 - j)) & 1 for j in range(m)]


def _a_multi_matrix(m: int, theta: float) -> np.ndarray:
    dim = 1 << m
    rots = (I2, _rot(theta, -1))
    mat = np.zeros((dim, dim), dtype=np.complex128)
    for x in range(dim):
        b = _bits(x, m)
        cols = [rots[b[j - 1]][:, b[j]] for j in range(m)]  # b[-1] is x_m
        mat[:, x] = reduce(np.kron, cols)
    return mat


def a_multi(m: int, theta: float) -> LinearOp:
    if m < 1:
        raise ValueError("m must be >= 1")
    mat = _a_multi_matrix(m, theta)
    return LinearOp(m, mat, unitary=abs(math.sin(theta)) < 1e-15)


def gram_entry(m: int, theta: float, x: int) -> complex:
    """Closed form of <x-bar| A^dag A |x> for A = A_{m,theta}."""
    w = bin(x).count("1")
    return (1j ** ((m + 2 * w) % 4)) * math.sin(theta) ** m


def u_unitarized(m: int, theta: float) -> LinearOp:
    """Gram-Schmidt unitarization of A_{m,theta}.

    Columns with x_1 = 0 are copied from A; for x_1 = 1 the column is
    C^{-1}(A|x> - g_x A|x-bar>), g_x = <x-bar|A^dag A|x>, C = sqrt(1 - sin^{2m}).
    """
    if m < 2:
        raise ValueError("m must be >= 2")
    s2m = math.sin(theta) ** (2 * m)
    if s2m >= 1 - 1e-12:
        raise ValueError("degenerate unitarization: sin^{2m}(theta) = 1")
    a = _a_multi_matrix(m, theta)
    dim = 1 << m
    full = dim - 1
    cnorm = math.sqrt(1 - s2m)
    u = a.copy()
    for x in range(dim >> 1, dim):
        u[:, x] = (a[:, x] - gram_entry(m, theta, x) * a[:, x ^ full]) / cnorm
    return LinearOp(m, u, unitary=True)


def cyclic_shift(m: int) -> LinearOp:
    """C_m |x_1 x_2 ... x_m> = |x_2 ... x_m x_1>."""
    if m < 2:
        raise ValueError("m must be >= 2")
    dim = 1 << m
    mat = np.zeros((dim, dim), dtype=np.complex128)
    for x in range(dim):
        y = ((x << 1) & (dim - 1)) | (x >> (m - 1))
        mat[y, x] = 1
    return LinearOp(m, mat, unitary=True)


def standard_gate(name: str) -> LinearOp:
    try:
        arity, mat = STANDARD[name.upper()]
    except KeyError:
        raise ValueError(f"unknown standard gate {name!r}") from None
    return LinearOp(arity, mat, unitary=True)


@dataclass(frozen=True)
class GateSpec:
    """Serializable description of a gate; `build` returns the LinearOp."""

    family: GateFamily
    m: int = 1
    theta: float = 0.0
    name: str | None = None
    matrix: tuple | None = None

    def __post_init__(self):
        fam = GateFamily(self.family)
        object.__setattr__(self, "family", fam)
        if not math.isfinite(self.theta):
            raise ValueError("theta must be finite")
        if self.m < 1:
            raise ValueError("m must be >= 1")
        if fam in (GateFamily.A_THETA, GateFamily.XROT) and self.m != 1:
            raise ValueError(f"{fam.value} acts on one qubit")
        if fam is GateFamily.STANDARD:
            if self.name is None or self.name.upper() not in STANDARD:
                raise ValueError(f"unknown standard gate {self.name!r}")
            object.__setattr__(self, "m", STANDARD[self.name.upper()][0])
        if fam is GateFamily.MATRIX:
            if self.matrix is None:
                raise ValueError("MATRIX gates need an explicit matrix")
            mat = np.asarray(self.matrix, dtype=np.complex128)
            if mat.shape != (1 << self.m, 1 << self.m):
                raise ValueError("matrix shape does not match m")
            object.__setattr__(self, "matrix", tuple(map(tuple, mat.tolist())))

    @property
    def arity(self) -> int:
        return self.m

    def build(self) -> LinearOp:
        fam = self.family
        if fam is GateFamily.A_THETA:
            return a_theta(self.theta)
        if fam is GateFamily.A_MULTI:
            return a_theta(self.theta) if self.m == 1 else a_multi(self.m, self.theta)
        if fam is GateFamily.U_UNITARIZED:
            return u_unitarized(self.m, self.theta)
        if fam is GateFamily.XROT:
            return x_rotation(self.theta)
        if fam is GateFamily.CYCLIC:
            return cyclic_shift(self.m)
        if fam is GateFamily.STANDARD:
            return standard_gate(self.name)
        return LinearOp.from_matrix(np.array(self.matrix, dtype=np.complex128))

    def to_json(self) -> dict:
        out = {"family": self.family.value, "m": self.m, "theta": self.theta, "name": self.name}
        if self.matrix is not None:
            out["matrix"] = [[[z.real, z.imag] for z in row] for row in self.matrix]
        return out

    @classmethod
    def from_json(cls, obj: dict) -> "GateSpec":
        mat = obj.get("matrix")
        if mat is not None:
            mat = [[complex(re, im) for re, im in row] for row in mat]
        return cls(GateFamily(obj["family"]), int(obj.get("m", 1)), float(obj.get("theta", 0.0)), obj.get("name"), mat)


def std(name: str) -> GateSpec:
    return GateSpec(GateFamily.STANDARD, name=name)
