"""The classical side: d-local functions, block decompositions, statistical
tests and exhaustive minimum-TVD search.

Inputs and outputs are 0-based and strings are read MSB-first, so input 0 is
the most significant bit of an input code.  For tree targets the outputs are
laid out as (d_1..d_{n-1}, x_1..x_{n-1}, b), matching circuits.tree_qubits.
"""

from __future__ import annotations

import enum
import itertools
import json
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .bintree import (
    BalancedTree,
    ForestPartition,
    TreePartition,
    path_sums,
    root_path,
    tree_neighborhood,
)
from .pmf import Pmf, bits_to_int, total_variation
from .targets import BiasedSource, _mm_table, modp_weight_pmf, pmmajmod_table, uniformity_defect

MAX_INPUTS = 24
MAX_SEARCH = 10**9


def popcount(a: np.ndarray) -> np.ndarray:
    a = np.asarray(a, dtype=np.int64)
    if hasattr(np, "bitwise_count"):
        return np.bitwise_count(a).astype(np.int64)
    out = np.zeros_like(a)
    while np.any(a):
        out += a & 1
        a = a >> 1
    return out


# ------------------------------------------------------------ local functions


@dataclass(frozen=True)
class OutputRule:
    deps: tuple
    table: tuple  # table[idx] with idx = sum u[deps[j]] 2^(k-1-j)

    def __post_init__(self):
        object.__setattr__(self, "deps", tuple(int(v) for v in self.deps))
        object.__setattr__(self, "table", tuple(int(v) & 1 for v in self.table))
        if len(self.table) != 1 << len(self.deps):
            raise ValueError("truth table length must be 2^|deps|")
        if len(set(self.deps)) != len(self.deps):
            raise ValueError("repeated dependency")


@dataclass(frozen=True)
class LocalFunction:
    l: int
    d: int
    outputs: tuple

    def __post_init__(self):
        object.__setattr__(self, "outputs", tuple(self.outputs))
        for j, rule in enumerate(self.outputs):
            if len(rule.deps) > self.d:
                raise ValueError(f"output {j} depends on {len(rule.deps)} > d = {self.d} inputs")
            if any(not 0 <= v < self.l for v in rule.deps):
                raise ValueError(f"output {j} depends on an input outside [0, {self.l})")

    @property
    def m(self) -> int:
        return len(self.outputs)

    @classmethod
    def from_callables(cls, l: int, d: int, spec) -> "LocalFunction":
        """spec: list of (deps, fn) with fn taking a tuple of dependency bits."""
        rules = []
        for deps, fn in spec:
            deps = tuple(deps)
            table = [fn(tuple((i >> (len(deps) - 1 - j)) & 1 for j in range(len(deps)))) for i in range(1 << len(deps))]
            rules.append(OutputRule(deps, table))
        return cls(l, d, rules)

    def to_json(self) -> dict:
        return {
            "l": self.l,
            "d": self.d,
            "outputs": [{"deps": list(r.deps), "table": "".join(map(str, r.table))} for r in self.outputs],
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json())

    @classmethod
    def from_json(cls, obj) -> "LocalFunction":
        if isinstance(obj, str):
            obj = json.loads(obj)
        rules = [OutputRule(o["deps"], [int(c) for c in o["table"]]) for o in obj["outputs"]]
        return cls(int(obj["l"]), int(obj["d"]), rules)


def identity_function(l: int) -> LocalFunction:
    return LocalFunction(l, 1, [OutputRule((i,), (0, 1)) for i in range(l)])


def constant_function(bits, l: int = 1) -> LocalFunction:
    return LocalFunction(l, 0, [OutputRule((), (int(b),)) for b in bits])


def parity_chain(k: int) -> LocalFunction:
    """(r_1, r_1 xor r_2, ..., r_{k-1} xor r_k, r_k): a uniform (X, parity(X)) sampler."""
    rules = [OutputRule((0,), (0, 1))]
    rules += [OutputRule((i, i + 1), (0, 1, 1, 0)) for i in range(k - 1)]
    rules.append(OutputRule((k - 1,), (0, 1)))
    return LocalFunction(k, 2, rules)


def random_local_function(l: int, m: int, d: int, rng: np.random.Generator) -> LocalFunction:
    rules = []
    for _ in range(m):
        k = int(rng.integers(0, min(d, l) + 1))
        deps = tuple(sorted(int(v) for v in rng.choice(l, size=k, replace=False)))
        rules.append(OutputRule(deps, tuple(int(b) for b in rng.integers(0, 2, size=1 << k))))
    return LocalFunction(l, d, rules)


def evaluate(f: LocalFunction, u) -> str:
    bits = [int(b) for b in (u if not isinstance(u, (int, np.integer)) else format(u, "b").zfill(f.l))]
    if len(bits) != f.l:
        raise ValueError(f"input must have {f.l} bits")
    out = []
    for rule in f.outputs:
        idx = 0
        for v in rule.deps:
            idx = (idx << 1) | bits[v]
        out.append(str(rule.table[idx]))
    return "".join(out)


def _input_bits(l: int) -> np.ndarray:
    codes = np.arange(1 << l, dtype=np.int64)
    return ((codes[:, None] >> np.arange(l - 1, -1, -1)) & 1).astype(np.int64)


def output_bit_columns(f: LocalFunction) -> np.ndarray:
    """Array (2^l, m) of output bits for every input code."""
    if f.l > MAX_INPUTS:
        raise ValueError(f"input enumeration capped at {MAX_INPUTS} bits")
    ubits = _input_bits(f.l)
    cols = np.zeros((1 << f.l, f.m), dtype=np.int64)
    for j, rule in enumerate(f.outputs):
        idx = np.zeros(1 << f.l, dtype=np.int64)
        for v in rule.deps:
            idx = (idx << 1) | ubits[:, v]
        cols[:, j] = np.asarray(rule.table, dtype=np.int64)[idx]
    return cols


def evaluate_all(f: LocalFunction) -> np.ndarray:
    """Output code for every input code, as an int64 array of length 2^l."""
    cols = output_bit_columns(f)
    weights = np.left_shift(np.int64(1), np.arange(f.m - 1, -1, -1, dtype=np.int64))
    return cols @ weights


def _input_weights(l: int, source) -> np.ndarray:
    if source is None:
        return np.full(1 << l, 2.0**-l)
    if isinstance(source, BiasedSource):
        if source.count not in (0, l):
            raise ValueError("source count differs from input count")
        return BiasedSource(source.bias, l).input_weights()
    return BiasedSource(float(source), l).input_weights()


def output_pmf(f: LocalFunction, source=None) -> Pmf:
    """Exact law of f(u) for u uniform, or i.i.d. biased when `source` is a BiasedSource."""
    codes = evaluate_all(f)
    w = _input_weights(f.l, source)
    uniq, inv = np.unique(codes, return_inverse=True)
    return Pmf(f.m, uniq, np.bincount(inv, weights=w))


def dependency_graph(f: LocalFunction) -> np.ndarray:
    """Boolean (l, m) matrix: entry [u, j] is true when output j reads input u."""
    g = np.zeros((f.l, f.m), dtype=bool)
    for j, rule in enumerate(f.outputs):
        g[list(rule.deps), j] = True
    return g


def biased_input_stream(source: BiasedSource, seed: int | None = None, count: int | None = None) -> np.ndarray:
    n = source.count if count is None else count
    rng = np.random.default_rng(seed)
    return (rng.random(n) < source.p_one).astype(np.int8)


# ------------------------------------------------------- block decompositions


@dataclass(frozen=True)
class BlockDecomposition:
    f: LocalFunction
    x_indices: tuple
    y_indices: tuple
    blocks: tuple  # frozensets of output indices, aligned with x_indices
    residual: frozenset
    final_bit: int

    @property
    def s(self) -> int:
        return len(self.x_indices)

    def block_masks(self) -> list[int]:
        m = self.f.m
        return [sum(1 << (m - 1 - j) for j in b) for b in self.blocks]

    def to_json(self) -> dict:
        return {
            "x_indices": list(self.x_indices),
            "y_indices": list(self.y_indices),
            "blocks": [sorted(b) for b in self.blocks],
            "residual": sorted(self.residual),
            "final_bit": self.final_bit,
        }


def _feeds(g: np.ndarray) -> list[set]:
    return [set(np.flatnonzero(g[u])) for u in range(g.shape[0])]


def viola_block_decomposition(f: LocalFunction, final_bit: int | None = None, max_degree: int | None = None) -> BlockDecomposition:
    """Greedy choice of inputs whose output sets do not overlap.

    Inputs read by the final bit go to y up front, so b is a function of y.
    Scanning candidates in index order, each chosen input u blocks every
    input that shares an output with it.  Inputs that feed nothing, or more
    than `max_degree` outputs, are never chosen.
    """
    b = f.m - 1 if final_bit is None else final_bit
    g = dependency_graph(f)
    feeds = _feeds(g)
    forced = set(f.outputs[b].deps)
    chosen, blocked = [], set()
    for u in range(f.l):
        if u in forced or u in blocked or not feeds[u]:
            continue
        if max_degree is not None and len(feeds[u]) > max_degree:
            continue
        chosen.append(u)
        for o in feeds[u]:
            blocked |= set(f.outputs[o].deps)
    blocks = tuple(frozenset(int(o) for o in feeds[u]) for u in chosen)
    covered = set().union(*blocks) if blocks else set()
    residual = frozenset(j for j in range(f.m) if j != b and j not in covered)
    ys = tuple(u for u in range(f.l) if u not in chosen)
    return BlockDecomposition(f, tuple(chosen), ys, blocks, residual, b)


def verify_block_decomposition(decomp: BlockDecomposition) -> list[str]:
    """Toggle every chosen input on every input string; outputs outside its block must not move."""
    f = decomp.f
    codes = evaluate_all(f)
    allidx = np.arange(1 << f.l, dtype=np.int64)
    problems = []
    all_mask = (1 << f.m) - 1
    seen = 0
    for i, (x, mask) in enumerate(zip(decomp.x_indices, decomp.block_masks())):
        if mask & seen:
            problems.append(f"block {i} overlaps an earlier block")
        seen |= mask
        flipped = codes[allidx ^ (1 << (f.l - 1 - x))]
        stray = (codes ^ flipped) & (all_mask ^ mask)
        if np.any(stray):
            problems.append(f"toggling input {x} changes outputs outside block {i}")
    return problems


def _bits_to_y_input(decomp: BlockDecomposition, y) -> int:
    ybits = [int(c) for c in (y if not isinstance(y, (int, np.integer)) else format(y, "b").zfill(len(decomp.y_indices)))]
    if len(ybits) != len(decomp.y_indices):
        raise ValueError("y has the wrong length")
    u = 0
    for idx, bit in zip(decomp.y_indices, ybits):
        if bit:
            u |= 1 << (decomp.f.l - 1 - idx)
    return u


def block_is_y_fixed(decomp: BlockDecomposition, i: int, y) -> bool:
    """g_i(0, y) == g_i(1, y), with the other x bits at 0 (they cannot reach block i)."""
    if not 0 <= i < decomp.s:
        raise IndexError("block index out of range")
    f = decomp.f
    u0 = _bits_to_y_input(decomp, y)
    u1 = u0 | (1 << (f.l - 1 - decomp.x_indices[i]))
    a, b = evaluate(f, u0), evaluate(f, u1)
    return all(a[j] == b[j] for j in decomp.blocks[i])


def y_fixed_counts(decomp: BlockDecomposition, codes: np.ndarray | None = None) -> np.ndarray:
    """For every input code u, how many blocks are y-fixed under u's y."""
    f = decomp.f
    if codes is None:
        codes = evaluate_all(f)
    allidx = np.arange(1 << f.l, dtype=np.int64)
    count = np.zeros(allidx.size, dtype=np.int64)
    for x, mask in zip(decomp.x_indices, decomp.block_masks()):
        bit = np.int64(1 << (f.l - 1 - x))
        count += ((codes[allidx & ~bit] ^ codes[allidx | bit]) & mask) == 0
    return count


# ------------------------------------------------------- tree decompositions


def tree_output_index(n: int) -> dict:
    """Output position of each tree variable under the (d, x, b) layout."""
    idx = {("d", i): i - 1 for i in range(1, n)}
    idx.update({("x", i): n - 2 + i for i in range(1, n)})
    return idx


def tree_forest_decomposition(
    f: LocalFunction, tree: BalancedTree, tree_partition: TreePartition, max_degree: int | None = None
) -> tuple[BlockDecomposition, ForestPartition]:
    """Greedy forest partition with one controlling input per forest.

    L collects inputs read by T_0 or by b.  Candidates are the other inputs
    feeding between 1 and max_degree (default 4d) outputs.  Repeatedly take
    the lowest candidate v, set F = N_T(N_f(v)) and drop every input that
    reads anything in F.
    """
    n = tree.n_vertices
    if f.m != 2 * n - 1:
        raise ValueError(f"expected {2 * n - 1} outputs for a {n}-vertex tree")
    out_of = tree_output_index(n)
    var_of = {v: k for k, v in out_of.items()}
    b = 2 * n - 2
    g = dependency_graph(f)
    feeds = _feeds(g)
    cap = 4 * f.d if max_degree is None else max_degree

    top_outputs = {out_of[v] for v in tree_partition.top_tree_variables} | {b}
    L = set().union(*(set(f.outputs[o].deps) for o in top_outputs))
    remaining = [u for u in range(f.l) if u not in L and 1 <= len(feeds[u]) <= cap]
    alive = set(remaining)
    chosen, forests = [], []
    for v in remaining:
        if v not in alive:
            continue
        forest = tree_neighborhood(tree_partition, {var_of[o] for o in feeds[v]})
        chosen.append(v)
        forests.append(forest)
        for var in forest:
            alive -= set(f.outputs[out_of[var]].deps)
    used = set().union(*forests) if forests else set()
    f0 = frozenset(v for v in tree.variables() if v not in used)
    fp = ForestPartition((f0, *forests), tuple(chosen))
    blocks = tuple(frozenset(out_of[v] for v in fr) for fr in forests)
    residual = frozenset(out_of[v] for v in f0)
    ys = tuple(u for u in range(f.l) if u not in chosen)
    return BlockDecomposition(f, tuple(chosen), ys, blocks, residual, b), fp


def _z_bits(z, n: int) -> list[int]:
    bits = [int(c) for c in (z if not isinstance(z, (int, np.integer)) else format(z, "b").zfill(2 * n - 1))]
    if len(bits) not in (2 * n - 2, 2 * n - 1):
        raise ValueError("z must hold (d, x) or (d, x, b)")
    return bits


def _forest_signed_sum(tree: BalancedTree, assign: dict, forest_vertices) -> int:
    dvec = [assign[("d", i)] for i in range(1, tree.n_vertices)]
    h = path_sums(tree, dvec)
    return sum(assign[("x", v)] * (1 - 2 * h[v - 1]) for v in forest_vertices)


def block_is_minimal(
    z, forest_partition: ForestPartition, tree_partition: TreePartition, i: int, method: str = "closed"
) -> bool:
    """Whether block F_i attains the least signed sum given z outside F_i.

    method "closed": every small tree in F_i has all x = 1, interior d = 0 and
    path parity 1 at its root.  method "brute": compare with the minimum over
    all reassignments of F_i (|F_i| <= 20).  method "both" asserts agreement.
    """
    tree = tree_partition.tree
    n = tree.n_vertices
    if not 1 <= i <= forest_partition.s:
        raise IndexError("forest index out of range")
    bits = _z_bits(z, n)
    out_of = tree_output_index(n)
    assign = {v: bits[k] for v, k in out_of.items()}
    forest = forest_partition.forests[i]
    verts = sorted(v for kind, v in forest if kind == "x")

    def closed() -> bool:
        owned = [t for t in tree_partition.small_trees if t.variables <= forest]
        for t in owned:
            if any(assign[("x", v)] != 1 for v in t.vertices):
                return False
            if any(assign[("d", e)] != 0 for e in t.edges if e != t.root):
                return False
            if sum(assign[("d", e)] for e in root_path(tree, t.root)) % 2 != 1:
                return False
        return True

    def brute() -> bool:
        fvars = sorted(forest)
        if len(fvars) > 20:
            raise ValueError("block too large for the brute-force path")
        current = _forest_signed_sum(tree, assign, verts)
        trial = dict(assign)
        best = current
        for vals in itertools.product((0, 1), repeat=len(fvars)):
            trial.update(zip(fvars, vals))
            best = min(best, _forest_signed_sum(tree, trial, verts))
        return current == best

    if method == "closed":
        return closed()
    if method == "brute":
        return brute()
    a, c = closed(), brute()
    if a != c:
        raise AssertionError(f"closed form and brute minimum disagree on block {i}")
    return a


# ----------------------------------------------------------- statistical tests


class TestVariant(str, enum.Enum):
    MAJMOD = "MAJMOD"
    TREE = "TREE"


@dataclass
class StatTestConfig:
    variant: TestVariant
    f: LocalFunction
    decomposition: BlockDecomposition
    p: int
    N0: int
    NF: int
    NM: int | None = None
    tree: BalancedTree | None = None
    tree_partition: TreePartition | None = None
    forest_partition: ForestPartition | None = None
    tf_mode: str = "exact"  # or "likely"
    source: BiasedSource | None = None

    def __post_init__(self):
        self.variant = TestVariant(self.variant)
        for name in ("N0", "NF"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")
        if self.variant is TestVariant.TREE:
            if self.tree is None or self.tree_partition is None or self.forest_partition is None:
                raise ValueError("tree tests need the tree, its partition and a forest partition")
            if self.NM is None or self.NM < 1:
                raise ValueError("tree tests need a positive N_M")
        if self.tf_mode not in ("exact", "likely"):
            raise ValueError("tf_mode is 'exact' or 'likely'")

    @classmethod
    def from_alpha(
        cls, variant, f: LocalFunction, alpha: float, p: int, tree: BalancedTree | None = None,
        tree_partition: TreePartition | None = None, **kw,
    ) -> "StatTestConfig":
        """Thresholds N_0 = 3n^{3a}, N_F = 2n^{3a} (N_M = N_0 for trees), rounded up."""
        variant = TestVariant(variant)
        size = f.m - 1
        n0 = math.ceil(3 * size ** (3 * alpha))
        nf = math.ceil(2 * size ** (3 * alpha))
        if variant is TestVariant.MAJMOD:
            return cls(variant, f, viola_block_decomposition(f), p, n0, nf, **kw)
        decomp, fp = tree_forest_decomposition(f, tree, tree_partition)
        return cls(variant, f, decomp, p, n0, nf, NM=n0, tree=tree, tree_partition=tree_partition, forest_partition=fp, **kw)

    @cached_property
    def _codes(self) -> np.ndarray:
        return evaluate_all(self.f)

    @cached_property
    def tf_codes(self) -> np.ndarray:
        """Sorted output codes belonging to T_F (or T_F' in 'likely' mode)."""
        codes = self._codes
        heavy = y_fixed_counts(self.decomposition, codes) >= self.NF
        if self.tf_mode == "exact":
            return np.unique(codes[heavy])
        w = _input_weights(self.f.l, self.source)
        mass = np.bincount(np.unique(codes, return_inverse=True)[1], weights=w * heavy)
        uniq = np.unique(codes)
        big_n = self.f.m - 1
        score = (2.0**big_n) * mass
        return uniq[score >= 1 / math.log2(big_n)]


def _ts_mask(codes: np.ndarray, cfg: StatTestConfig) -> np.ndarray:
    m = cfg.f.m
    b = codes & 1
    if cfg.variant is TestVariant.MAJMOD:
        w = popcount(codes >> 1)
        want = _mm_table(cfg.p)[w % cfg.p] ^ (w & 1)
    else:
        k = cfg.tree.n_vertices - 1
        table = pmmajmod_table(cfg.p, cfg.tree)
        x = (codes >> 1) & ((1 << k) - 1)
        d = codes >> (k + 1)
        want = table[d, x]
    del m
    return b != want


def _minimal_count(codes: np.ndarray, cfg: StatTestConfig) -> np.ndarray:
    """Vectorized closed-form count of minimal forests."""
    tree, tp, fp = cfg.tree, cfg.tree_partition, cfg.forest_partition
    n = tree.n_vertices
    m = 2 * n - 1
    out_of = tree_output_index(n)

    def mask(vs):
        return sum(1 << (m - 1 - out_of[v]) for v in vs)

    total = np.zeros(codes.size, dtype=np.int64)
    for forest in fp.forests[1:]:
        ok = np.ones(codes.size, dtype=bool)
        for t in tp.small_trees:
            if not t.variables <= forest:
                continue
            xm = mask([("x", v) for v in t.vertices])
            im = mask([("d", e) for e in t.edges if e != t.root])
            pm = mask([("d", e) for e in root_path(tree, t.root)])
            ok &= ((codes & xm) == xm) & ((codes & im) == 0) & ((popcount(codes & pm) & 1) == 1)
        total += ok
    return total


def label_masks(codes, cfg: StatTestConfig) -> dict:
    codes = np.asarray(codes, dtype=np.int64)
    masks = cfg.decomposition.block_masks()
    zero_blocks = np.zeros(codes.size, dtype=np.int64)
    for mk in masks:
        zero_blocks += (codes & mk) == 0
    out = {
        "T0": zero_blocks <= cfg.N0,
        "TF": np.isin(codes, cfg.tf_codes),
        "TS": _ts_mask(codes, cfg),
    }
    if cfg.variant is TestVariant.TREE:
        out["TM"] = _minimal_count(codes, cfg) <= cfg.NM
    return out


def test_membership(z, cfg: StatTestConfig) -> set:
    code = bits_to_int(z)
    if not isinstance(z, (int, np.integer)) and len(z) != cfg.f.m:
        raise ValueError(f"z must have {cfg.f.m} bits")
    return {k for k, v in label_masks(np.array([code]), cfg).items() if v[0]}


def test_pass_probabilities(source, cfg: StatTestConfig) -> dict:
    """Exact probability of each label and of the union T.

    `source` is a Pmf, or a (LocalFunction, BiasedSource-or-None) pair.
    """
    if isinstance(source, Pmf):
        pmf = source
    else:
        fn, src = source
        pmf = output_pmf(fn, src)
    masks = label_masks(pmf.outcomes, cfg)
    union = np.zeros(pmf.outcomes.size, dtype=bool)
    result = {}
    for k, v in masks.items():
        union |= v
        result[k] = pmf.probability_of(v)
    result["T"] = pmf.probability_of(union)
    return result


def test_pass_probability(source, cfg: StatTestConfig) -> float:
    return test_pass_probabilities(source, cfg)["T"]


# ------------------------------------------------------------- sum mod p


def mmp_sum_probability(p: int, a, u, b: int, a0: int = 0, u0: int = 0) -> float:
    """Exact Pr_x[MM_p(a0 + sum a_i x_i) xor parity(u0 + sum u_i x_i) = b], x uniform."""
    dist = np.zeros((p, 2))
    dist[a0 % p, u0 & 1] = 1.0
    for ai, ui in zip(a, u):
        dist = 0.5 * dist + 0.5 * np.roll(np.roll(dist, ai % p, axis=0), ui & 1, axis=1)
    mm = _mm_table(p)
    good = (mm[:, None] ^ np.arange(2)[None, :]) == b
    return float(dist[good].sum())


def mmp_chain_bound(p: int, a, u, a0: int = 0) -> float:
    """A chained lower bound, evaluated exactly.

    If most u_i are even, fix the odd ones; the answer is at least
    (p-1)/(2p) minus the uniformity defect of the even-indexed sum.  Otherwise
    keep the odd ones, pull out the last coefficient a', and get
    (p - 2a')/(2p) minus the defect of the remaining sum.
    """
    a, u = list(a), list(u)
    even = [ai for ai, ui in zip(a, u) if ui % 2 == 0]
    odd = [ai for ai, ui in zip(a, u) if ui % 2 == 1]
    if 2 * len(even) >= len(a) and even:
        defect = uniformity_defect(modp_weight_pmf(len(even), p, even))
        return (p - 1) / (2 * p) - defect
    last = odd[-1]
    rest = odd[:-1]
    defect = uniformity_defect(modp_weight_pmf(len(rest), p, rest)) if rest else 1 - 1 / p
    return (p - 2 * last) / (2 * p) - defect


# ------------------------------------------------------------- brute force


@dataclass
class SearchReport:
    min_tvd: float
    witness: LocalFunction
    space_size: int
    wall_time: float
    per_output_choices: int = field(default=0)

    def to_json(self) -> dict:
        return {
            "min_tvd": self.min_tvd,
            "witness": self.witness.to_json(),
            "space_size": self.space_size,
            "wall_time": self.wall_time,
        }


def _candidate_rules(l: int, d: int) -> list[OutputRule]:
    """Every dependency set of exactly min(d, l) inputs with every truth table, in lexicographic order."""
    k = min(d, l)
    rules = []
    for deps in itertools.combinations(range(l), k):
        for t in range(1 << (1 << k)):
            table = tuple((t >> ((1 << k) - 1 - j)) & 1 for j in range(1 << k))
            rules.append(OutputRule(deps, table))
    return rules


def search_space_size(n_out: int, d: int, l: int) -> int:
    k = min(d, l)
    return (math.comb(l, k) * 2 ** (2**k)) ** n_out


def brute_force_min_tvd(n_out: int, d: int, l: int, target: Pmf, source=None, workers: int = 1,
                        chunk: int = 1 << 14) -> SearchReport:
    """Global minimum of TVD(f(source), target) over all d-local f with n_out outputs.

    Functions reading fewer than d inputs are covered by tables that ignore
    some of their inputs.  Candidates are enumerated in mixed-radix order,
    first output most significant; the first minimizer wins ties.
    """
    if target.bit_length != n_out:
        raise ValueError("target length differs from n_out")
    size = search_space_size(n_out, d, l)
    if size > MAX_SEARCH:
        raise ValueError(f"search space {size} exceeds {MAX_SEARCH}")
    t0 = time.perf_counter()
    rules = _candidate_rules(l, d)
    K = len(rules)
    ubits = _input_bits(l)
    cand = np.zeros((K, 1 << l), dtype=np.int64)
    for c, rule in enumerate(rules):
        idx = np.zeros(1 << l, dtype=np.int64)
        for v in rule.deps:
            idx = (idx << 1) | ubits[:, v]
        cand[c] = np.asarray(rule.table)[idx]
    w = _input_weights(l, source)
    tgt = target.dense()
    dim = 1 << n_out
    n_in = 1 << l
    radix = [K ** (n_out - 1 - j) for j in range(n_out)]

    def scan(start: int) -> tuple[float, int]:
        ids = np.arange(start, min(start + chunk, size), dtype=np.int64)
        codes = np.zeros((ids.size, n_in), dtype=np.int64)
        for j in range(n_out):
            digit = (ids // radix[j]) % K
            codes |= cand[digit] << (n_out - 1 - j)
        flat = (np.arange(ids.size, dtype=np.int64)[:, None] * dim + codes).ravel()
        hist = np.bincount(flat, weights=np.broadcast_to(w, codes.shape).ravel(), minlength=ids.size * dim)
        tv = 0.5 * np.abs(hist.reshape(ids.size, dim) - tgt).sum(axis=1)
        k = int(np.argmin(tv))
        return float(tv[k]), int(ids[k])

    starts = range(0, size, chunk)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(scan, starts))
    else:
        results = [scan(s) for s in starts]
    best_tv, best_id = min(results, key=lambda r: (round(r[0], 12), r[1]))
    witness = LocalFunction(l, d, [rules[(best_id // radix[j]) % K] for j in range(n_out)])
    return SearchReport(best_tv, witness, size, time.perf_counter() - t0, K)


def witnessed_gap(f: LocalFunction, target: Pmf, cfg: StatTestConfig, source=None) -> dict:
    """Pass probabilities of f(U) and the target and the TVD lower bound they witness."""
    pf = test_pass_probability((f, source), cfg)
    pt = test_pass_probability(target, cfg)
    return {
        "pass_f": pf,
        "pass_target": pt,
        "witnessed_lower_bound": abs(pf - pt),
        "tvd": total_variation(output_pmf(f, source), target),
    }
