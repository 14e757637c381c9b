"""Exact pmfs over {+1,-1}^p, interaction moments, and test distributions.

Cells are indexed by bit patterns with X_1 most significant and bit j = 1
meaning X_j = -1, so cell 0 is the all-(+1) corner.  The generators round
probabilities to dyadic rationals (denominator 2^14 per conditional factor),
which keeps every oracle identity exact in binary64.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .bitgroup import WIDTH_CAP, Mask
from .hadamard import fwht

__all__ = [
    "Pmf",
    "moments_from_pmf",
    "pmf_from_samples",
    "draw_samples",
    "interaction_cov",
    "make_ci_pmf",
    "make_generic_pmf",
    "make_ising_cycle_pmf",
    "write_pmf_csv",
    "read_pmf_csv",
    "write_samples_csv",
    "read_samples_csv",
]

# denominator exponent for dyadic rounding: three factors of 2^-14 still
# multiply exactly inside a binary64 mantissa
DYADIC_BITS = 14


@dataclass(frozen=True)
class Pmf:
    """Probability mass function over the 2^p sign cells."""

    p: int
    probs: np.ndarray
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self) -> None:
        if not 1 <= self.p <= WIDTH_CAP:
            raise ValueError(f"p must be in 1..{WIDTH_CAP}, got {self.p}")
        arr = np.asarray(self.probs, dtype=np.float64)
        if arr.shape != (1 << self.p,):
            raise ValueError(f"probs must have length 2^{self.p}, got {arr.shape}")
        if arr.min() < 0.0:
            raise ValueError(f"negative probability {arr.min()}")
        total = arr.sum()
        if abs(total - 1.0) > 1e-12:
            raise ValueError(f"probabilities sum to {total!r}, not 1")
        arr = arr.copy()
        arr.flags.writeable = False
        object.__setattr__(self, "probs", arr)

    @property
    def support(self) -> np.ndarray:
        """Cell indices with strictly positive probability."""
        return np.flatnonzero(self.probs > 0.0)

    @property
    def support_size(self) -> int:
        return int((self.probs > 0.0).sum())


def moments_from_pmf(pmf: Pmf) -> np.ndarray:
    """All interaction means m[mask] = E[X_mask]; m[0] = 1."""
    return fwht(pmf.probs)


def pmf_from_samples(data: np.ndarray) -> Pmf:
    """Empirical cell frequencies from an n x p matrix of +-1 entries."""
    arr = np.asarray(data)
    if arr.ndim != 2 or arr.shape[0] < 1:
        raise ValueError(f"expected an n x p sample matrix, got shape {arr.shape}")
    if not np.isin(arr, (-1, 1)).all():
        raise ValueError("sample entries must be +1 or -1")
    n, p = arr.shape
    cells = _cells_from_signs(arr.astype(np.int64))
    counts = np.bincount(cells, minlength=1 << p)
    return Pmf(p, counts / n, meta={"generator": "empirical", "n": n})


def _cells_from_signs(rows: np.ndarray) -> np.ndarray:
    """Cell index per row: bit j set iff column j is -1, X_1 most significant."""
    p = rows.shape[1]
    weights = 1 << np.arange(p - 1, -1, -1, dtype=np.int64)
    return (rows < 0) @ weights


def draw_samples(pmf: Pmf, n: int, seed: int) -> np.ndarray:
    """Seeded n x p matrix of +-1 rows distributed per the pmf."""
    rng = np.random.default_rng(seed)
    cells = rng.choice(1 << pmf.p, size=n, p=pmf.probs)
    shifts = np.arange(pmf.p - 1, -1, -1, dtype=np.int64)
    bits = (cells[:, None] >> shifts[None, :]) & 1
    return (1 - 2 * bits).astype(np.int64)


def interaction_cov(
    pmf: Pmf, row_masks: Sequence[Mask], col_masks: Sequence[Mask]
) -> np.ndarray:
    """Covariance block of interaction features.

    Entry (i,j) = m[r_i XOR c_j] - m[r_i] m[c_j]; products of interactions
    XOR their masks, so the second moment is itself a first moment.
    """
    for mask in (*row_masks, *col_masks):
        if mask.width != pmf.p:
            raise ValueError(f"mask width {mask.width} != pmf width {pmf.p}")
    m = moments_from_pmf(pmf)
    rows = np.array([mk.bits for mk in row_masks], dtype=np.int64).reshape(-1)
    cols = np.array([mk.bits for mk in col_masks], dtype=np.int64).reshape(-1)
    if rows.size == 0 or cols.size == 0:
        return np.zeros((rows.size, cols.size))
    return m[np.bitwise_xor.outer(rows, cols)] - np.outer(m[rows], m[cols])


def _dyadic_probs(weights: np.ndarray, bits: int = DYADIC_BITS) -> np.ndarray:
    """Round nonnegative weights to exact probabilities k/2^bits.

    Largest-remainder apportionment; strictly positive weights keep strictly
    positive counts so the rounding never manufactures new zeros.
    """
    w = np.asarray(weights, dtype=np.float64)
    total = w.sum()
    if not total > 0.0:
        raise ValueError("weights must have positive sum")
    scaled = w / total * (1 << bits)
    counts = np.floor(scaled).astype(np.int64)
    counts[(w > 0) & (counts == 0)] = 1
    shortfall = (1 << bits) - counts.sum()
    if shortfall > 0:
        order = np.argsort(-(scaled - np.floor(scaled)), kind="stable")
        order = order[w[order] > 0]
        counts[order[: int(shortfall)]] += 1
    elif shortfall < 0:
        order = np.argsort(-counts, kind="stable")
        for idx in order:
            if shortfall == 0:
                break
            take = min(counts[idx] - 1, -shortfall)
            counts[idx] -= take
            shortfall += take
    return counts / float(1 << bits)


def _dirichlet_table(
    rng: np.random.Generator, size: int, alpha: float, zero_prob: float
) -> np.ndarray:
    """One dyadic conditional pmf of the given size, optionally with hard zeros."""
    weights = rng.dirichlet(np.full(size, alpha))
    if zero_prob > 0.0 and size > 1:
        keep = rng.random(size) >= zero_prob
        if not keep.any():
            keep[rng.integers(size)] = True
        weights = np.where(keep, weights, 0.0)
    return _dyadic_probs(weights)


def make_ci_pmf(
    r: int,
    s: int,
    t: int,
    seed: int,
    zero_prob: float = 0.0,
    alpha: float = 1.0,
) -> Pmf:
    """Seeded pmf factored as p(b) p(a|b) p(c|b) over coordinate blocks.

    Conditionals come from a symmetric Dirichlet rounded to dyadic rationals;
    zero_prob > 0 plants hard zeros in the conditional tables and in p(b).
    """
    if min(r, s, t) < 0 or not 1 <= r + s + t <= WIDTH_CAP:
        raise ValueError("invalid block dimensions")
    rng = np.random.default_rng(seed)
    na, nb, nc = 1 << r, 1 << s, 1 << t
    pb = _dirichlet_table(rng, nb, alpha, zero_prob)
    probs = np.zeros(na * nb * nc)
    for b in range(nb):
        pa = _dirichlet_table(rng, na, alpha, zero_prob)
        pc = _dirichlet_table(rng, nc, alpha, zero_prob)
        if pb[b] == 0.0:
            continue
        block = pb[b] * np.outer(pa, pc)
        for a in range(na):
            base = (a * nb + b) * nc
            probs[base : base + nc] = block[a]
    meta = {
        "generator": "ci",
        "r": r,
        "s": s,
        "t": t,
        "seed": seed,
        "zero_prob": zero_prob,
        "alpha": alpha,
        "denom_bits": DYADIC_BITS,
    }
    return Pmf(r + s + t, probs, meta=meta)


def make_generic_pmf(p: int, seed: int, zero_fraction: float = 0.0) -> Pmf:
    """Seeded random pmf with roughly the requested fraction of zero cells."""
    if not 0.0 <= zero_fraction < 1.0:
        raise ValueError(f"zero_fraction must be in [0,1), got {zero_fraction}")
    if not 1 <= p <= WIDTH_CAP:
        raise ValueError(f"p must be in 1..{WIDTH_CAP}, got {p}")
    rng = np.random.default_rng(seed)
    n = 1 << p
    weights = rng.random(n) + 1e-3
    n_zero = min(int(round(zero_fraction * n)), n - 1)
    if n_zero:
        weights[rng.choice(n, size=n_zero, replace=False)] = 0.0
    probs = _dyadic_probs(weights)
    meta = {
        "generator": "generic",
        "p": p,
        "seed": seed,
        "zero_fraction": zero_fraction,
        "denom_bits": DYADIC_BITS,
    }
    return Pmf(p, probs, meta=meta)


def make_ising_cycle_pmf(thetas: Sequence[float], chord: float = 0.0) -> Pmf:
    """Four-cycle pairwise model: weights on edges 12, 23, 34, 41.

    chord adds a 13 diagonal term, which breaks X1 _||_ X3 | (X2,X4).
    Probabilities are not dyadic here; downstream checks use tolerances.
    """
    th = [float(v) for v in thetas]
    if len(th) != 4 or not all(np.isfinite(th)):
        raise ValueError("need four finite edge weights")
    cells = np.arange(16, dtype=np.int64)
    x = [1.0 - 2.0 * ((cells >> (3 - j)) & 1) for j in range(4)]
    energy = (
        th[0] * x[0] * x[1]
        + th[1] * x[1] * x[2]
        + th[2] * x[2] * x[3]
        + th[3] * x[3] * x[0]
        + chord * x[0] * x[2]
    )
    weights = np.exp(energy - energy.max())
    meta = {"generator": "ising", "thetas": th, "chord": chord}
    return Pmf(4, weights / weights.sum(), meta=meta)


# --- file formats ---------------------------------------------------------


def write_pmf_csv(pmf: Pmf, path: str) -> None:
    """CSV with header bits,prob; bits over {+,-}, X_1 leftmost.

    Metadata goes into leading comment lines; zero cells are omitted.
    Probabilities are printed with 17 significant digits, which round-trips
    binary64 exactly.
    """
    with open(path, "w", newline="") as fh:
        for key in sorted(pmf.meta):
            fh.write(f"# {key}: {pmf.meta[key]}\n")
        fh.write("bits,prob\n")
        for cell in pmf.support:
            pattern = "".join(
                "-" if (cell >> (pmf.p - 1 - j)) & 1 else "+" for j in range(pmf.p)
            )
            fh.write(f"{pattern},{pmf.probs[cell]:.17g}\n")


def _parse_bits(text: str) -> tuple[int, int]:
    """Bit pattern from a {+,-} or {0,1} string; returns (cell, width)."""
    cell = 0
    for ch in text:
        if ch in "+0":
            cell = cell << 1
        elif ch in "-1":
            cell = (cell << 1) | 1
        else:
            raise ValueError(f"bad bits string {text!r}")
    if not text:
        raise ValueError("empty bits string")
    return cell, len(text)


def read_pmf_csv(path: str) -> Pmf:
    """Load the pmf CSV format; missing cells mean probability zero."""
    meta: dict = {}
    rows: list[tuple[int, float]] = []
    width: Optional[int] = None
    with open(path, newline="") as fh:
        reader = csv.reader(line for line in fh if line.strip())
        for row in reader:
            if row[0].lstrip().startswith("#"):
                text = ",".join(row).lstrip()[1:].strip()
                if ":" in text:
                    key, _, val = text.partition(":")
                    meta[key.strip()] = val.strip()
                continue
            if row[0] == "bits":
                continue
            if len(row) != 2:
                raise ValueError(f"malformed pmf row: {row!r}")
            cell, w = _parse_bits(row[0].strip())
            if width is None:
                width = w
            elif w != width:
                raise ValueError(f"inconsistent bits width in {row!r}")
            rows.append((cell, float(row[1])))
    if width is None:
        raise ValueError("pmf file has no data rows")
    probs = np.zeros(1 << width)
    seen = set()
    for cell, prob in rows:
        if cell in seen:
            raise ValueError(f"duplicate cell {cell:0{width}b}")
        seen.add(cell)
        probs[cell] = prob
    total = probs.sum()
    if abs(total - 1.0) > 1e-9:
        raise ValueError(f"pmf file sums to {total!r}")
    if abs(total - 1.0) > 1e-12:
        probs = probs / total
    return Pmf(width, probs, meta=meta)


def write_samples_csv(data: np.ndarray, path: str) -> None:
    """CSV of +-1 integers, one observation per row."""
    arr = np.asarray(data, dtype=np.int64)
    with open(path, "w", newline="") as fh:
        for row in arr:
            fh.write(",".join(str(int(v)) for v in row) + "\n")


def read_samples_csv(path: str) -> np.ndarray:
    """Load a +-1 sample matrix; malformed entries raise."""
    rows = []
    with open(path, newline="") as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            rows.append([int(v) for v in line.split(",")])
    if not rows:
        raise ValueError("sample file has no rows")
    arr = np.array(rows, dtype=np.int64)
    if arr.ndim != 2 or not np.isin(arr, (-1, 1)).all():
        raise ValueError("sample entries must be +1 or -1")
    return arr
