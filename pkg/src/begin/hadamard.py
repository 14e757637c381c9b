"""Fast Walsh-Hadamard transform in Sylvester order and the prism operator.

The transform matrix is the p-fold Kronecker power of [[1,1],[1,-1]] with the
first factor owning the most significant index bit, so entry (i,j) equals
(-1)^popcount(i AND j).  The prism of a symbol vector y is the group-circulant
matrix entry(i,j) = y[i XOR j]; applied to a moment vector it produces the
second-moment matrix of the full interaction vector.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

__all__ = [
    "fwht",
    "dense_hadamard",
    "PrismMatrix",
    "prism",
    "prism_eigenvalues",
    "prism_recursion_check",
]

# past this order a dense 2^p x 2^p materialization stops being reasonable
_DENSE_ORDER_CAP = 12


def _as_symbol(y: Sequence[float]) -> tuple[np.ndarray, int]:
    arr = np.asarray(y, dtype=np.float64)
    if arr.ndim != 1 or arr.size == 0 or arr.size & (arr.size - 1):
        raise ValueError(f"expected a vector of length 2^p, got shape {arr.shape}")
    return arr, arr.size.bit_length() - 1


def fwht(y: Sequence[float]) -> np.ndarray:
    """Walsh-Hadamard transform, butterfly recursion, O(p 2^p) arithmetic."""
    arr, _ = _as_symbol(y)
    out = arr.copy()
    n = out.size
    h = 1
    while h < n:
        blocks = out.reshape(-1, 2 * h)
        top = blocks[:, :h].copy()
        bot = blocks[:, h:].copy()
        blocks[:, :h] = top + bot
        blocks[:, h:] = top - bot
        h *= 2
    return out


@dataclass(frozen=True)
class PrismMatrix:
    """Group-circulant matrix entry(i,j) = symbol[i XOR j], held lazily."""

    symbol: np.ndarray
    p: int

    def block(self, rows: Sequence[int], cols: Sequence[int]) -> np.ndarray:
        """Materialize only the requested index block via the circulant rule."""
        r = np.asarray(rows, dtype=np.int64)
        c = np.asarray(cols, dtype=np.int64)
        if r.size and (r.min() < 0 or r.max() >= self.symbol.size):
            raise ValueError("row index out of range")
        if c.size and (c.min() < 0 or c.max() >= self.symbol.size):
            raise ValueError("column index out of range")
        return self.symbol[np.bitwise_xor.outer(r, c)]

    def dense(self) -> np.ndarray:
        if self.p > _DENSE_ORDER_CAP:
            raise ValueError(
                f"dense prism capped at order {_DENSE_ORDER_CAP}; use block()"
            )
        idx = np.arange(self.symbol.size, dtype=np.int64)
        return self.symbol[np.bitwise_xor.outer(idx, idx)]

    @property
    def entries(self) -> np.ndarray:
        return self.dense()

    def eigenvalues(self) -> np.ndarray:
        return fwht(self.symbol)


def prism(y: Sequence[float]) -> PrismMatrix:
    """Prism of y: (1/2^p) H diag(H y) H, stored by its circulant symbol."""
    arr, p = _as_symbol(y)
    arr = arr.copy()
    arr.flags.writeable = False
    return PrismMatrix(arr, p)


def prism_eigenvalues(y: Sequence[float]) -> np.ndarray:
    """Eigenvalues of prism(y): exactly fwht(y), the 2^p scaling cancels."""
    return fwht(y)


def dense_hadamard(p: int) -> np.ndarray:
    """Dense transform matrix, entry (i,j) = (-1)^popcount(i AND j)."""
    if not 0 <= p <= _DENSE_ORDER_CAP:
        raise ValueError(f"dense transform capped at order {_DENSE_ORDER_CAP}")
    idx = np.arange(1 << p, dtype=np.int64)
    parity = np.bitwise_count(np.bitwise_and.outer(idx, idx)) & 1
    return 1.0 - 2.0 * parity


def prism_recursion_check(
    y1: Sequence[float], y2: Sequence[float], tol: float = 1e-12
) -> bool:
    """True iff prism(concat(y1,y2)) matches the 2x2-block doubling rule.

    The doubled matrix is evaluated through the explicit conjugation formula
    H diag(H y) H / 2^p, the blocks through the circulant rule, so the check
    ties the two computation routes together rather than comparing a formula
    with itself.
    """
    a1, d = _as_symbol(y1)
    a2, _ = _as_symbol(y2)
    if a1.size != a2.size:
        raise ValueError(f"length mismatch: {a1.size} != {a2.size}")
    y = np.concatenate([a1, a2])
    h = dense_hadamard(d + 1)
    big = (h * fwht(y)) @ h / y.size
    small1 = prism(a1).dense()
    small2 = prism(a2).dense()
    n = a1.size
    err = max(
        np.abs(big[:n, :n] - small1).max(),
        np.abs(big[n:, n:] - small1).max(),
        np.abs(big[:n, n:] - small2).max(),
        np.abs(big[n:, :n] - small2).max(),
    )
    return bool(err <= tol)
