"""Target functions and distributions, the mod-p weight DP and bias/entropy helpers."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .bintree import BalancedTree, path_sum_matrix
from .pmf import Pmf, export_pmf, load_pmf, total_variation  # noqa: F401  (re-exported)

__all__ = [
    "Pmf", "total_variation", "export_pmf", "load_pmf", "BiasedSource", "TargetKind",
    "is_prime", "odd_prime_at_most", "select_prime", "mm_int", "majmod_xor_parity", "pmmajmod",
    "augmented_target_pmf", "modp_weight_pmf", "uniformity_defect", "modp_envelope",
    "bias_entropy", "entropy_to_bias", "binary_entropy",
]

MAX_TARGET_BITS = 24


def is_prime(p: int) -> bool:
    if p < 2:
        return False
    if p % 2 == 0:
        return p == 2
    return all(p % q for q in range(3, math.isqrt(p) + 1, 2))


def _check_odd_prime(p: int) -> None:
    if p == 2 or not is_prime(p):
        raise ValueError(f"p = {p} is not an odd prime")


def odd_prime_at_most(x: float) -> int:
    """Largest odd prime <= x, never below 3."""
    k = int(math.floor(x + 1e-9))
    while k > 3:
        if k % 2 and is_prime(k):
            return k
        k -= 1
    return 3


def select_prime(n: int, alpha: float) -> int:
    return odd_prime_at_most(n ** alpha)


def mm_int(p: int, j: int) -> int:
    _check_odd_prime(p)
    return 0 if (j % p) < p / 2 else 1


def _mm_table(p: int) -> np.ndarray:
    _check_odd_prime(p)
    return (np.arange(p) > p // 2).astype(np.int64)


def majmod_xor_parity(p: int, x) -> int:
    w = sum(int(b) for b in x)
    return mm_int(p, w) ^ (w & 1)


def pmmajmod(p: int, tree: BalancedTree, x, d) -> int:
    """MM_p(sum_i x_i (-1)^{h(d)_i} mod p) XOR parity(x)."""
    from .bintree import path_sums

    x = [int(b) for b in x]
    if len(x) != tree.n_vertices - 1:
        raise ValueError("x must have n-1 bits")
    h = path_sums(tree, d)
    s = sum(xi * (1 - 2 * hi) for xi, hi in zip(x, h))
    return mm_int(p, s) ^ (sum(x) & 1)


def signed_sums(tree: BalancedTree, d_codes: np.ndarray, x_codes: np.ndarray) -> np.ndarray:
    """Vectorized S(d, x) = sum x_i (-1)^{h(d)_i} for integer-coded d and x (MSB = index 1)."""
    k = tree.n_vertices - 1
    shifts = np.arange(k - 1, -1, -1)
    dbits = (np.asarray(d_codes)[:, None] >> shifts) & 1
    xbits = (np.asarray(x_codes)[:, None] >> shifts) & 1
    h = (dbits @ path_sum_matrix(tree).T) & 1
    return (xbits * (1 - 2 * h)).sum(axis=1)


def pmmajmod_table(p: int, tree: BalancedTree) -> np.ndarray:
    """Array T[d_code, x_code] of pmmajmod values."""
    k = tree.n_vertices - 1
    codes = np.arange(1 << k)
    dd, xx = np.meshgrid(codes, codes, indexing="ij")
    s = signed_sums(tree, dd.ravel(), xx.ravel())
    par = np.array([bin(int(c)).count("1") & 1 for c in codes])
    out = _mm_table(p)[s % p] ^ par[xx.ravel()]
    return out.reshape(1 << k, 1 << k)


class TargetKind(str, enum.Enum):
    MAJMOD_PARITY = "MAJMOD_PARITY"
    PMMAJMOD = "PMMAJMOD"


def augmented_target_pmf(kind, n: int, p: int, tree: BalancedTree | None = None) -> Pmf:
    """Uniform first block plus a deterministic final bit.

    MAJMOD_PARITY: n is the total output length, (x_1..x_{n-1}, b).
    PMMAJMOD: n is the tree size; outputs are (d, x, b) with 2n-1 bits.
    """
    kind = TargetKind(kind)
    _check_odd_prime(p)
    if kind is TargetKind.MAJMOD_PARITY:
        if n - 1 > MAX_TARGET_BITS - 1 or n < 1:
            raise ValueError("output length outside supported range")
        xs = np.arange(1 << (n - 1))
        w = np.array([bin(int(c)).count("1") for c in xs])
        b = _mm_table(p)[w % p] ^ (w & 1)
        return Pmf(n, (xs << 1) | b, np.full(xs.size, 1.0 / xs.size))
    tree = tree or BalancedTree(n)
    if tree.n_vertices != n:
        raise ValueError("tree size does not match n")
    if 2 * n - 1 > MAX_TARGET_BITS:
        raise ValueError("output length exceeds cap")
    k = n - 1
    table = pmmajmod_table(p, tree)
    dd, xx = np.meshgrid(np.arange(1 << k), np.arange(1 << k), indexing="ij")
    codes = (((dd << k) | xx) << 1 | table).ravel()
    return Pmf(2 * n - 1, codes, np.full(codes.size, 1.0 / codes.size))


@dataclass(frozen=True)
class BiasedSource:
    """Pr[bit = 0] = 1/2 + bias, over `count` i.i.d. bits."""

    bias: float = 0.0
    count: int = 1

    def __post_init__(self):
        if not abs(self.bias) <= 0.5:
            raise ValueError("bias must lie in [-1/2, 1/2]")
        if self.count < 0:
            raise ValueError("count must be nonnegative")

    @property
    def p_one(self) -> float:
        return 0.5 - self.bias

    def input_weights(self) -> np.ndarray:
        """Probability of every input string, indexed MSB-first."""
        ones = np.zeros(1, dtype=np.int64)
        for _ in range(self.count):
            ones = np.concatenate([ones, ones + 1])
        # concatenation order makes the last-added bit the MSB; weights only depend on popcount
        return (self.p_one ** ones) * ((1 - self.p_one) ** (self.count - ones))


def modp_weight_pmf(t: int, p: int, coefficients=None, bias: float = 0.0) -> np.ndarray:
    """Exact law of sum a_i X_i mod p with Pr[X_i = 1] = 1/2 - bias, as a length-p array."""
    if t < 1:
        raise ValueError("t must be >= 1")
    if p < 2:
        raise ValueError("p must be >= 2")
    coeffs = [1] * t if coefficients is None else [int(a) for a in coefficients]
    if len(coeffs) != t:
        raise ValueError("need exactly t coefficients")
    q = 0.5 - bias
    dist = np.zeros(p)
    dist[0] = 1.0
    for a in coeffs:
        dist = (1 - q) * dist + q * np.roll(dist, a % p)
    return dist


def uniformity_defect(residue_pmf) -> float:
    r = np.asarray(residue_pmf, dtype=float)
    return float(0.5 * np.abs(r - 1.0 / r.size).sum())


def modp_envelope(t: int, p: int, bias: float = 0.0) -> float:
    """sqrt(p) exp(-t (1 - 4 b^2) / p^2); at b = 0 this is the unbiased bound."""
    return math.sqrt(p) * math.exp(-t * (1 - 4 * bias * bias) / (p * p))


def binary_entropy(q: float) -> float:
    if q <= 0 or q >= 1:
        return 0.0
    return float(-q * math.log2(q) - (1 - q) * math.log2(1 - q))


def bias_entropy(b: float) -> float:
    if not abs(b) <= 0.5:
        raise ValueError("bias must lie in [-1/2, 1/2]")
    return binary_entropy(0.5 + b)


def entropy_to_bias(h: float) -> float:
    """Nonnegative b with H(1/2 + b) = h."""
    if not 0 <= h <= 1:
        raise ValueError("entropy must lie in [0, 1]")
    if h == 1:
        return 0.0
    if h == 0:
        return 0.5
    return float(brentq(lambda b: bias_entropy(b) - h, 0.0, 0.5, xtol=1e-15, rtol=4 * np.finfo(float).eps))
