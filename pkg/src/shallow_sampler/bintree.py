"""Heap-shaped balanced binary trees, path parities and the tree/forest partitions.

Vertices are v_0..v_{n-1} with parent(i) = (i-1)//2.  Edge e_i joins v_i to
its parent, so edges are labelled 1..n-1 by their child vertex.  Bitstrings d
(edges) and x (vertices v_1..v_{n-1}) are sequences of length n-1 with
position i-1 holding the bit for e_i / v_i.

Tree variables are named ("d", i) for edge e_i and ("x", i) for vertex v_i.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class BalancedTree:
    n_vertices: int

    def __post_init__(self):
        if self.n_vertices < 2:
            raise ValueError("a tree needs at least 2 vertices")

    def parent(self, i: int) -> int:
        if not 1 <= i < self.n_vertices:
            raise IndexError(f"vertex {i} has no parent")
        return (i - 1) // 2

    def children(self, i: int) -> list[int]:
        return [c for c in (2 * i + 1, 2 * i + 2) if c < self.n_vertices]

    def depth_of_vertex(self, i: int) -> int:
        return (i + 1).bit_length() - 1

    @property
    def depth(self) -> int:
        """Number of vertex layers."""
        return self.depth_of_vertex(self.n_vertices - 1) + 1

    @property
    def edges(self) -> list[tuple[int, int]]:
        return [(i, self.parent(i)) for i in range(1, self.n_vertices)]

    def variables(self) -> list[tuple[str, int]]:
        return [("d", i) for i in range(1, self.n_vertices)] + [("x", i) for i in range(1, self.n_vertices)]

    def to_json(self) -> dict:
        return {"n_vertices": self.n_vertices}


def build_tree(n: int) -> BalancedTree:
    return BalancedTree(n)


def root_path(tree: BalancedTree, i: int) -> set[int]:
    """Edge labels on the path from v_0 to v_i."""
    if not 1 <= i < tree.n_vertices:
        raise IndexError(f"vertex {i} out of range")
    path = set()
    while i > 0:
        path.add(i)
        i = (i - 1) // 2
    return path


def path_sums(tree: BalancedTree, d) -> tuple[int, ...]:
    """h(d)_i = XOR of d over the root path of v_i, for i = 1..n-1."""
    d = [int(b) for b in d]
    if len(d) != tree.n_vertices - 1:
        raise ValueError("d must have n-1 bits")
    h = [0] * tree.n_vertices
    for i in range(1, tree.n_vertices):
        h[i] = h[(i - 1) // 2] ^ d[i - 1]
    return tuple(h[1:])


def path_sum_matrix(tree: BalancedTree) -> np.ndarray:
    """0/1 matrix P with h(d) = P d mod 2; row i-1 marks the root path of v_i."""
    n = tree.n_vertices
    mat = np.zeros((n - 1, n - 1), dtype=np.int64)
    for i in range(1, n):
        for e in root_path(tree, i):
            mat[i - 1, e - 1] = 1
    return mat


def inverse_path_sums(tree: BalancedTree, h) -> tuple[int, ...]:
    """The unique d with path_sums(d) = h: d_i = h_i XOR h_parent(i)."""
    h = [0] + [int(b) for b in h]
    if len(h) != tree.n_vertices:
        raise ValueError("h must have n-1 bits")
    return tuple(h[i] ^ h[(i - 1) // 2] for i in range(1, tree.n_vertices))


@dataclass(frozen=True)
class SmallTree:
    root: int
    vertices: frozenset
    edges: frozenset  # includes the root edge e_root

    @property
    def variables(self) -> frozenset:
        return frozenset([("x", v) for v in self.vertices] + [("d", e) for e in self.edges])


@dataclass(frozen=True)
class TreePartition:
    tree: BalancedTree
    D: int
    top_tree_vertices: frozenset
    small_trees: tuple

    @property
    def top_tree_variables(self) -> frozenset:
        tv = self.top_tree_vertices
        out = [("x", v) for v in tv if v > 0] + [("d", v) for v in tv if v > 0]
        return frozenset(out)

    def owner(self) -> dict:
        """Map each variable to 0 (top tree) or j (small tree T_j, 1-based)."""
        own = {v: 0 for v in self.top_tree_variables}
        for j, t in enumerate(self.small_trees, start=1):
            for v in t.variables:
                own[v] = j
        return own

    def to_json(self) -> dict:
        return {
            "n_vertices": self.tree.n_vertices,
            "D": self.D,
            "top_tree_vertices": sorted(self.top_tree_vertices),
            "small_trees": [
                {"root": t.root, "vertices": sorted(t.vertices), "edges": sorted(t.edges)} for t in self.small_trees
            ],
        }


def layer_count(d_locality: int) -> int:
    if d_locality < 1:
        raise ValueError("locality must be positive")
    return max(1, math.ceil(math.log2(2 * d_locality)))


def layer_partition(tree: BalancedTree, d_locality: int) -> TreePartition:
    """Top tree T_0 = first depth-D layers; each vertex at layer depth-D roots a small tree."""
    D = layer_count(d_locality)
    if tree.depth <= D:
        raise ValueError(f"tree depth {tree.depth} must exceed D = {D}")
    cut = tree.depth - D
    top = frozenset(v for v in range(tree.n_vertices) if tree.depth_of_vertex(v) < cut)
    small = []
    for r in range(tree.n_vertices):
        if tree.depth_of_vertex(r) != cut:
            continue
        verts, stack = [], [r]
        while stack:
            v = stack.pop()
            verts.append(v)
            stack.extend(tree.children(v))
        small.append(SmallTree(r, frozenset(verts), frozenset(verts)))
    return TreePartition(tree, D, top, tuple(small))


def tree_neighborhood(partition: TreePartition, variables) -> frozenset:
    """Union of the whole trees (T_0 or a small tree) touching `variables`."""
    own = partition.owner()
    hit = {own[v] for v in variables}
    out = set()
    for j in hit:
        out |= partition.top_tree_variables if j == 0 else partition.small_trees[j - 1].variables
    return frozenset(out)


@dataclass(frozen=True)
class ForestPartition:
    forests: tuple  # F_0, F_1, ..., F_s as frozensets of variables
    controlling_inputs: tuple = field(default=())  # w_1..w_s

    @property
    def s(self) -> int:
        return len(self.forests) - 1

    def to_json(self) -> dict:
        return {
            "forests": [sorted(f) for f in self.forests],
            "controlling_inputs": list(self.controlling_inputs),
        }


def validate_forest_partition(partition: ForestPartition, tree_partition: TreePartition) -> tuple[bool, list[str]]:
    problems = []
    allvars = set(tree_partition.tree.variables())
    seen: dict = {}
    for i, f in enumerate(partition.forests):
        for v in f:
            if v in seen:
                problems.append(f"variable {v} in both F_{seen[v]} and F_{i}")
            seen[v] = i
    missing = allvars - set(seen)
    if missing:
        problems.append(f"{len(missing)} variables not covered, e.g. {sorted(missing)[0]}")
    extra = set(seen) - allvars
    if extra:
        problems.append(f"unknown variables {sorted(extra)}")
    if partition.forests and not tree_partition.top_tree_variables <= set(partition.forests[0]):
        problems.append("T_0 is not contained in F_0")
    for i, f in enumerate(partition.forests[1:], start=1):
        nb = tree_neighborhood(tree_partition, f & allvars)
        if nb != f:
            own = tree_partition.owner()
            broken = sorted({own[v] for v in nb - f})
            problems.append(f"F_{i} splits tree(s) {['T_%d' % j for j in broken]}")
    if len(partition.controlling_inputs) not in (0, partition.s):
        problems.append("controlling input count differs from s")
    return (not problems, problems)
