"""Explicit finite distributions over fixed-length bitstrings.

Outcomes are integers read MSB-first, so index 0b011 on three bits is the
string "011".  Storage is sparse: a sorted array of outcomes with their
probabilities.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

DENSE_LIMIT = 20
SUM_TOL = 1e-12


def bits_to_int(bits) -> int:
    """Accepts "0101", a sequence of 0/1, or an int (returned unchanged)."""
    if isinstance(bits, (int, np.integer)):
        return int(bits)
    if isinstance(bits, str):
        return int(bits, 2) if bits else 0
    out = 0
    for b in bits:
        out = (out << 1) | int(b)
    return out


def int_to_bits(value: int, width: int) -> str:
    return format(value, "b").zfill(width) if width else ""


def int_to_tuple(value: int, width: int) -> tuple[int, ...]:
    return tuple((value >> (width - 1 - i)) & 1 for i in range(width))


@dataclass(frozen=True, eq=False)
class Pmf:
    bit_length: int
    outcomes: np.ndarray
    probs: np.ndarray

    def __post_init__(self):
        out = np.asarray(self.outcomes, dtype=np.int64)
        pr = np.asarray(self.probs, dtype=float)
        if out.shape != pr.shape or out.ndim != 1:
            raise ValueError("outcomes and probs must be 1-d arrays of equal length")
        if np.any(pr < 0):
            raise ValueError("negative probability")
        if out.size and (out.min() < 0 or out.max() >= (1 << self.bit_length)):
            raise ValueError("outcome outside {0,1}^m")
        order = np.argsort(out, kind="stable")
        out, pr = out[order], pr[order]
        if out.size > 1 and np.any(np.diff(out) == 0):
            raise ValueError("duplicate outcomes")
        total = pr.sum()
        if abs(total - 1.0) > 1e-12:
            raise ValueError(f"probabilities sum to {total}, not 1")
        out.setflags(write=False)
        pr.setflags(write=False)
        object.__setattr__(self, "outcomes", out)
        object.__setattr__(self, "probs", pr)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Pmf):
            return NotImplemented
        return (
            self.bit_length == other.bit_length
            and np.array_equal(self.outcomes, other.outcomes)
            and np.array_equal(self.probs, other.probs)
        )

    __hash__ = None

    @classmethod
    def from_dense(cls, weights, bit_length: int | None = None, normalize: bool = True) -> "Pmf":
        w = np.asarray(weights, dtype=float)
        if bit_length is None:
            bit_length = int(w.size).bit_length() - 1
        if w.size != 1 << bit_length:
            raise ValueError("dense array length must be 2^bit_length")
        if normalize:
            s = w.sum()
            if s <= 0:
                raise ValueError("zero total weight")
            w = w / s
        idx = np.flatnonzero(w)
        return cls(bit_length, idx, w[idx])

    @classmethod
    def from_dict(cls, mapping: dict, bit_length: int | None = None) -> "Pmf":
        if bit_length is None:
            keys = [k for k in mapping if isinstance(k, str)]
            if not keys:
                raise ValueError("bit_length needed for integer keys")
            bit_length = len(keys[0])
        outs = np.array([bits_to_int(k) for k in mapping], dtype=np.int64)
        prs = np.array(list(mapping.values()), dtype=float)
        keep = prs > 0
        return cls(bit_length, outs[keep], prs[keep])

    @classmethod
    def point_mass(cls, bits, bit_length: int | None = None) -> "Pmf":
        if bit_length is None:
            bit_length = len(bits)
        return cls(bit_length, np.array([bits_to_int(bits)]), np.array([1.0]))

    @classmethod
    def uniform(cls, bit_length: int) -> "Pmf":
        n = 1 << bit_length
        return cls(bit_length, np.arange(n), np.full(n, 1.0 / n))

    def __len__(self) -> int:
        return int(self.outcomes.size)

    def __getitem__(self, bits) -> float:
        key = bits_to_int(bits)
        i = np.searchsorted(self.outcomes, key)
        if i < self.outcomes.size and self.outcomes[i] == key:
            return float(self.probs[i])
        return 0.0

    def total(self) -> float:
        return float(self.probs.sum())

    def dense(self) -> np.ndarray:
        if self.bit_length > 24:
            raise ValueError("dense view capped at 24 bits")
        out = np.zeros(1 << self.bit_length)
        out[self.outcomes] = self.probs
        return out

    def as_dict(self) -> dict[str, float]:
        return {int_to_bits(int(o), self.bit_length): float(p) for o, p in zip(self.outcomes, self.probs)}

    def marginal(self, positions) -> "Pmf":
        """Marginal on the given bit positions (0-based, MSB first), kept in that order."""
        positions = list(positions)
        m = self.bit_length
        keys = np.zeros_like(self.outcomes)
        for p in positions:
            keys = (keys << 1) | ((self.outcomes >> (m - 1 - p)) & 1)
        uniq, inv = np.unique(keys, return_inverse=True)
        return Pmf(len(positions), uniq, np.bincount(inv, weights=self.probs))

    def map_outcomes(self, fn_array: np.ndarray, bit_length: int) -> "Pmf":
        """Push forward through an integer relabeling given as an array over outcomes."""
        uniq, inv = np.unique(np.asarray(fn_array, dtype=np.int64), return_inverse=True)
        return Pmf(bit_length, uniq, np.bincount(inv, weights=self.probs))

    def probability_of(self, predicate_mask) -> float:
        """Mass of outcomes where predicate_mask (aligned with .outcomes) is true."""
        return float(self.probs[np.asarray(predicate_mask, dtype=bool)].sum())


def total_variation(P: Pmf, Q: Pmf) -> float:
    if P.bit_length != Q.bit_length:
        raise ValueError("pmfs have different bit lengths")
    keys = np.union1d(P.outcomes, Q.outcomes)
    a = np.zeros(keys.size)
    b = np.zeros(keys.size)
    a[np.searchsorted(keys, P.outcomes)] = P.probs
    b[np.searchsorted(keys, Q.outcomes)] = Q.probs
    return float(0.5 * np.abs(a - b).sum())


def export_pmf(pmf: Pmf, path, fmt: str = "csv") -> None:
    """Write outcomes in lexicographic order; CSV floats use 17 significant digits."""
    path = Path(path)
    fmt = fmt.lower()
    if fmt == "csv":
        with path.open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["bitstring", "probability"])
            for o, p in zip(pmf.outcomes, pmf.probs):
                w.writerow([int_to_bits(int(o), pmf.bit_length), f"{p:.17g}"])
    elif fmt == "json":
        payload = {"bit_length": pmf.bit_length, "probabilities": pmf.as_dict()}
        path.write_text(json.dumps(payload, indent=1) + "\n")
    else:
        raise ValueError(f"unknown format {fmt!r}")


def load_pmf(path, fmt: str | None = None) -> Pmf:
    path = Path(path)
    fmt = (fmt or path.suffix.lstrip(".")).lower()
    if fmt == "csv":
        with path.open(newline="") as fh:
            rows = list(csv.reader(fh))[1:]
        if not rows:
            raise ValueError("empty pmf file")
        return Pmf.from_dict({r[0]: float(r[1]) for r in rows}, bit_length=len(rows[0][0]))
    if fmt == "json":
        payload = json.loads(path.read_text())
        return Pmf.from_dict(payload["probabilities"], bit_length=payload["bit_length"])
    raise ValueError(f"unknown format {fmt!r}")
