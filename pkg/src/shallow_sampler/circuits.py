"""Layered circuit IR, exact simulation, sampling and the circuit builders.

Qubits are 0-based with qubit 0 the most significant output bit.  The
tree circuits use 2n-1 qubits laid out as edges e_1..e_{n-1}, then vertices
v_1..v_{n-1}, then the root v_0, so a measured string reads (d, x, y).
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .bintree import BalancedTree
from .gatezoo import GateFamily, GateSpec, std
from .pmf import Pmf
from .statekit import (
    split_scale,
    MAX_QUBITS,
    LinearOp,
    StateVector,
    apply_matrix,
    exact_distribution,
    ghz_state,
    zero_state,
)
from .targets import _check_odd_prime, select_prime


@dataclass(frozen=True)
class Placement:
    gate: GateSpec
    targets: tuple
    adjoint: bool = False

    def __post_init__(self):
        object.__setattr__(self, "targets", tuple(int(t) for t in self.targets))

    def operator(self) -> LinearOp:
        op = self.gate.build()
        return op.adjoint() if self.adjoint else op

    def to_json(self) -> dict:
        return {"gate": self.gate.to_json(), "targets": list(self.targets), "adjoint": self.adjoint}


@dataclass
class Circuit:
    n_qubits: int
    layers: list = field(default_factory=list)

    def __post_init__(self):
        if not 1 <= self.n_qubits <= MAX_QUBITS:
            raise ValueError(f"n_qubits must be in [1, {MAX_QUBITS}]")
        self.layers = [list(layer) for layer in self.layers]

    def add_layer(self, placements) -> "Circuit":
        self.layers.append(list(placements))
        return self

    def validate(self) -> list[str]:
        problems = []
        for k, layer in enumerate(self.layers):
            used = set()
            for pl in layer:
                if pl.gate.arity != len(pl.targets):
                    problems.append(f"layer {k}: arity {pl.gate.arity} on {len(pl.targets)} targets")
                for t in pl.targets:
                    if not 0 <= t < self.n_qubits:
                        problems.append(f"layer {k}: qubit {t} out of range")
                    if t in used:
                        problems.append(f"layer {k}: qubit {t} used twice")
                    used.add(t)
        return problems

    def placements(self):
        for layer in self.layers:
            yield from layer

    def all_unitary(self) -> bool:
        return all(pl.operator().unitary for pl in self.placements())

    def to_json(self) -> dict:
        return {"n_qubits": self.n_qubits, "layers": [[pl.to_json() for pl in layer] for layer in self.layers]}

    def dumps(self) -> str:
        return json.dumps(self.to_json())

    @classmethod
    def from_json(cls, obj) -> "Circuit":
        if isinstance(obj, str):
            obj = json.loads(obj)
        layers = [
            [Placement(GateSpec.from_json(p["gate"]), tuple(p["targets"]), bool(p.get("adjoint", False))) for p in layer]
            for layer in obj["layers"]
        ]
        return cls(int(obj["n_qubits"]), layers)


def depth_of(circuit: Circuit) -> int:
    return len(circuit.layers)


def run_state(circuit: Circuit, input_state: StateVector | None = None) -> StateVector:
    if input_state is None:
        input_state = zero_state(circuit.n_qubits)
    if input_state.n_qubits != circuit.n_qubits:
        raise ValueError("input state size does not match circuit")
    problems = circuit.validate()
    if problems:
        raise ValueError("invalid circuit: " + "; ".join(problems))
    cache: dict = {}
    amp = np.array(input_state.amplitudes, dtype=np.complex128)
    n = circuit.n_qubits
    scratch = np.empty(amp.size * 3 // 2 + 1, dtype=np.complex128)
    scale = 1.0
    for pl in circuit.placements():
        key = (pl.gate, pl.adjoint)
        if key not in cache:
            cache[key] = split_scale(pl.operator().matrix)
        s, mat = cache[key]
        scale *= s
        amp = apply_matrix(amp, n, mat, pl.targets, inplace=True, scratch=scratch)
        if not 1e-100 < scale < 1e100:
            amp *= scale
            scale = 1.0
    if scale != 1.0:
        amp *= scale
    if not np.all(np.isfinite(amp)):
        raise ValueError("non-finite amplitude")
    return StateVector._adopt(n, amp)


def run_exact(circuit: Circuit, input_state: StateVector | None = None) -> Pmf:
    return exact_distribution(run_state(circuit, input_state))


def draw_samples(
    circuit_or_pmf, input_state: StateVector | None = None, shots: int = 1, seed: int = 0,
    workers: int = 1, batch_size: int = 1 << 16,
) -> np.ndarray:
    """Integer-coded i.i.d. samples.

    Shots are split into fixed-size batches, each with its own child seed, so
    the stream does not depend on `workers`.
    """
    if shots < 1:
        raise ValueError("shots must be >= 1")
    pmf = circuit_or_pmf if isinstance(circuit_or_pmf, Pmf) else run_exact(circuit_or_pmf, input_state)
    sizes = [batch_size] * (shots // batch_size)
    if shots % batch_size:
        sizes.append(shots % batch_size)
    children = np.random.SeedSequence(seed).spawn(len(sizes))
    cdf = np.cumsum(pmf.probs)
    cdf /= cdf[-1]

    def one(i):
        u = np.random.default_rng(children[i]).random(sizes[i])
        return pmf.outcomes[np.minimum(np.searchsorted(cdf, u, side="right"), cdf.size - 1)]

    if workers > 1 and len(sizes) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(one, range(len(sizes))))
    else:
        parts = [one(i) for i in range(len(sizes))]
    return np.concatenate(parts)


def empirical_pmf(samples: np.ndarray, bit_length: int) -> Pmf:
    uniq, counts = np.unique(samples, return_counts=True)
    return Pmf(bit_length, uniq, counts / counts.sum())


# ---------------------------------------------------------------- builders


def _tile(qubits, theta: float, block: str | None, m: int | None):
    """Adjoint gate placements covering `qubits` in consecutive blocks.

    block None -> per-qubit A_theta; "A" -> A_{m,theta}; "U" -> U_{m,theta}.
    A trailing remainder r >= 2 gets an r-qubit block of the same family, and
    r = 1 falls back to a single A_theta.
    """
    qubits = list(qubits)
    out = []
    if block is None or m is None or m <= 1:
        return [Placement(GateSpec(GateFamily.A_THETA, 1, theta), (q,), True) for q in qubits], []
    fam = GateFamily.A_MULTI if block == "A" else GateFamily.U_UNITARIZED
    chunks = [qubits[i : i + m] for i in range(0, len(qubits), m)]
    for ch in chunks:
        if len(ch) == 1:
            out.append(Placement(GateSpec(GateFamily.A_THETA, 1, theta), tuple(ch), True))
        else:
            out.append(Placement(GateSpec(fam, len(ch), theta), tuple(ch), True))
    return out, [ch for ch in chunks if len(ch) > 1]


def even_superposition_prep(n: int) -> Circuit:
    """|0..0> -> H^n |GHZ_n>: H on the first n-1 qubits, then CNOT_{i,n} for each i."""
    if n < 2:
        raise ValueError("n must be >= 2")
    c = Circuit(n).add_layer([Placement(std("H"), (q,)) for q in range(n - 1)])
    for q in range(n - 1):
        c.add_layer([Placement(std("CNOT"), (q, n - 1))])
    return c


def nonunitary_majmod_circuit(n: int, p: int, block_m: int | None = None) -> Circuit:
    """Expects |GHZ_n> as input.  H layer, then A_{pi/p}^dag on the first n-1
    qubits (per qubit, or in A_{m,theta} blocks when block_m is given) and
    exp(-i pi X / 4) on the last qubit."""
    if n < 3:
        raise ValueError("n must be >= 3")
    _check_odd_prime(p)
    theta = math.pi / p
    gates, _ = _tile(range(n - 1), theta, "A" if block_m else None, block_m)
    gates.append(Placement(GateSpec(GateFamily.XROT, 1, -math.pi / 4), (n - 1,)))
    c = Circuit(n)
    c.add_layer([Placement(std("H"), (q,)) for q in range(n)])
    c.add_layer(gates)
    return c


def unitary_block_size(c: float) -> int:
    if not 0 < c < 0.5:
        raise ValueError("c must lie in (0, 1/2)")
    return math.ceil(1 / c + 1 - 1e-12)


def unitary_majmod_circuit(n: int, c: float, m: int | None = None, p: int | None = None) -> Circuit:
    """Majmod circuit with U_{m',theta'}^dag blocks, theta' = pi/p and p chosen from n^c.

    When m' does not divide n-1 the last block is a smaller U block; a lone
    leftover qubit gets A_theta^dag, the only non-unitary case."""
    if n < 3:
        raise ValueError("n must be >= 3")
    m = m or unitary_block_size(c)
    p = p or select_prime(n, c)
    theta = math.pi / p
    gates, _ = _tile(range(n - 1), theta, "U", m)
    gates.append(Placement(GateSpec(GateFamily.XROT, 1, -math.pi / 4), (n - 1,)))
    circ = Circuit(n)
    circ.add_layer([Placement(std("H"), (q,)) for q in range(n)])
    circ.add_layer(gates)
    return circ


def tree_qubits(n: int) -> dict:
    """Qubit index of every edge ("d", i) and vertex ("x", i) for a 2n-1 qubit tree circuit."""
    q = {("d", i): i - 1 for i in range(1, n)}
    q.update({("x", i): n - 2 + i for i in range(1, n)})
    q[("x", 0)] = 2 * n - 2
    return q


def poor_mans_ghz_circuit(n: int) -> Circuit:
    """Depth-3 preparation of the Poor Man's GHZ state on 2n-1 qubits.

    Layer 2 copies each parent into its left-child edge, layer 3 into its
    right-child edge.  A vertex's copy into its own edge goes into whichever
    of those layers leaves both qubits free; when neither does (internal
    vertices with both roles taken) the H and that CNOT are fused into one
    two-qubit gate in layer 1.
    """
    if n < 2:
        raise ValueError("n must be >= 2")
    if 2 * n - 1 > MAX_QUBITS:
        raise ValueError("too many qubits")
    tree = BalancedTree(n)
    q = tree_qubits(n)
    layer1, layer2, layer3 = [], [], []
    for k in range(1, n):
        par = tree.parent(k)
        (layer2 if k % 2 else layer3).append(Placement(std("CNOT"), (q[("x", par)], q[("d", k)])))
    for k in range(0, n):
        v = q[("x", k)]
        if k == 0:
            layer1.append(Placement(std("H"), (v,)))
            continue
        kids = tree.children(k)
        busy2 = len(kids) >= 1 or k % 2 == 1  # left child edge in use, or e_k is a left edge
        busy3 = len(kids) >= 2 or k % 2 == 0
        own = Placement(std("CNOT"), (v, q[("d", k)]))
        if not busy2:
            layer1.append(Placement(std("H"), (v,)))
            layer2.append(own)
        elif not busy3:
            layer1.append(Placement(std("H"), (v,)))
            layer3.append(own)
        else:
            layer1.append(Placement(std("BELL"), (v, q[("d", k)])))
    return Circuit(2 * n - 1, [layer1, layer2, layer3])


def pm_ghz_closed_form(n: int) -> np.ndarray:
    """Amplitudes of sum_d 2^{-(n-1)/2} |d> (|h(d) 0> + |h(d)-bar 1>)/sqrt2."""
    from .bintree import path_sums

    tree = BalancedTree(n)
    k = n - 1
    amp = np.zeros(1 << (2 * n - 1), dtype=np.complex128)
    val = 2 ** (-(n - 1) / 2) / math.sqrt(2)
    full = (1 << k) - 1
    for dcode in range(1 << k):
        d = [(dcode >> (k - 1 - i)) & 1 for i in range(k)]
        h = 0
        for b in path_sums(tree, d):
            h = (h << 1) | b
        amp[(((dcode << k) | h) << 1) | 0] = val
        amp[(((dcode << k) | (h ^ full)) << 1) | 1] = val
    return amp


def pmmajmod_circuit(n: int, p: int, block: str | None = None, m: int | None = None, shuffle: bool = True) -> Circuit:
    """Tree circuit from |0..0>: Poor Man's GHZ prep, H on the vertex qubits,
    then A_{pi/p}^dag per vertex qubit (block=None) or A/U blocks of size m
    followed by an inverse cyclic shuffle C_m^{-1} on each block, and exp(-i pi X/4) on the root."""
    _check_odd_prime(p)
    if n < 2:
        raise ValueError("n must be >= 2")
    theta = math.pi / p
    circ = poor_mans_ghz_circuit(n)
    q = tree_qubits(n)
    verts = [q[("x", i)] for i in range(1, n)]
    root = q[("x", 0)]
    circ.add_layer([Placement(std("H"), (v,)) for v in verts + [root]])
    gates, blocks = _tile(verts, theta, block, m)
    gates.append(Placement(GateSpec(GateFamily.XROT, 1, -math.pi / 4), (root,)))
    circ.add_layer(gates)
    if blocks and shuffle:
        # block gates put qubit j's rotation under control of qubit j-1; C_m^{-1} realigns them
        circ.add_layer([Placement(GateSpec(GateFamily.CYCLIC, len(b)), tuple(b), True) for b in blocks])
    return circ


def unitary_pmmajmod_circuit(n: int, c: float, m: int | None = None, p: int | None = None) -> Circuit:
    m = m or unitary_block_size(c)
    p = p or select_prime(n, c)
    return pmmajmod_circuit(n, p, block="U", m=m)


# ------------------------------------------------------ closed-form references


def majmod_output_pmf(n: int, p: int, block_m: int | None = None) -> Pmf:
    return run_exact(nonunitary_majmod_circuit(n, p, block_m), ghz_state(n))


def majmod_failure_sum(n: int, p: int) -> float:
    """2^{-(n-1)} sum_x Pr[Y_x != majmod_p(x) xor parity(x)] via binomial weights."""
    _check_odd_prime(p)
    total = 0.0
    for k in range(n):
        c2 = math.cos(-math.pi / 4 + math.pi * k / p) ** 2
        fail = (1 - c2) if (k % p) < p / 2 else c2
        total += math.comb(n - 1, k) * fail
    return total / 2 ** (n - 1)


def majmod_tvd_bound(n: int, p: int, const: float = 1.0) -> float:
    return 0.5 - 1 / math.pi + 1 / (2 * p) + const * p ** 1.5 * math.exp(-n / p**2)
