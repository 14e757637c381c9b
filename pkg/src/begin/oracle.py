"""Brute-force reference checks, independent of the matrix machinery.

Everything here works by direct summation over cells, straight from the
definitions.  Slow on purpose; the fast paths are validated against these.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, Optional, Sequence, Tuple

import numpy as np

from .bitgroup import Mask, Partition
from .distribution import Pmf

__all__ = [
    "OracleReport",
    "oracle_ci",
    "oracle_second_moment",
    "oracle_cond_expectation",
]

_ORACLE_WIDTH_CAP = 10


@dataclass(frozen=True)
class OracleReport:
    """Result of the definitional conditional-independence check.

    worst_cell holds the (a, b, c) configuration achieving the deviation,
    each block as a tuple of +-1 signs aligned with its echelon basis.
    n_configs counts the positive-probability center configurations checked.
    """

    is_ci: bool
    worst_cell: Optional[Tuple[Tuple[int, ...], Tuple[int, ...], Tuple[int, ...]]]
    deviation: float
    n_configs: int
    tol: float


def _config_keys(p: int, basis: Sequence[int]) -> np.ndarray:
    """Per-cell configuration index over the sign pattern of basis parities."""
    cells = np.arange(1 << p, dtype=np.int64)
    keys = np.zeros(1 << p, dtype=np.int64)
    for gen in basis:
        keys = (keys << 1) | (np.bitwise_count(cells & gen) & 1)
    return keys


def oracle_ci(pmf: Pmf, part: Partition, tol: float = 1e-12) -> OracleReport:
    """Check P(a,c|b) = P(a|b) P(c|b) for every positive-probability b.

    Configurations a, b, c are the joint sign patterns of the parities
    spanned by the respective generator groups.
    """
    if pmf.p > _ORACLE_WIDTH_CAP:
        raise ValueError(f"oracle capped at p <= {_ORACLE_WIDTH_CAP}")
    if part.p != pmf.p:
        raise ValueError(f"partition width {part.p} != pmf width {pmf.p}")
    basis_a = part.a_span.basis
    basis_b = part.b_span.basis
    basis_c = part.c_span.basis
    ka = _config_keys(pmf.p, [m.bits for m in basis_a])
    kb = _config_keys(pmf.p, [m.bits for m in basis_b])
    kc = _config_keys(pmf.p, [m.bits for m in basis_c])
    na, nb, nc = 1 << len(basis_a), 1 << len(basis_b), 1 << len(basis_c)
    joint = np.zeros((na, nb, nc))
    np.add.at(joint, (ka, kb, kc), pmf.probs)

    pb = joint.sum(axis=(0, 2))
    pab = joint.sum(axis=2)
    pbc = joint.sum(axis=0)
    worst = 0.0
    worst_cell = None
    checked = 0
    for b in np.flatnonzero(pb > 0.0):
        lhs = joint[:, b, :] / pb[b]
        rhs = np.outer(pab[:, b] / pb[b], pbc[b, :] / pb[b])
        gaps = np.abs(lhs - rhs)
        here = float(gaps.max())
        if worst_cell is None or here > worst:
            a, c = np.unravel_index(int(gaps.argmax()), gaps.shape)
            worst_cell = (
                _key_signs(int(a), len(basis_a)),
                _key_signs(int(b), len(basis_b)),
                _key_signs(int(c), len(basis_c)),
            )
            worst = here
        checked += 1
    return OracleReport(
        is_ci=worst <= tol,
        worst_cell=worst_cell,
        deviation=worst,
        n_configs=checked,
        tol=tol,
    )


def _key_signs(key: int, n: int) -> Tuple[int, ...]:
    """Configuration index back to the +-1 signs of its basis parities."""
    return tuple(1 - 2 * ((key >> (n - 1 - i)) & 1) for i in range(n))


def oracle_second_moment(pmf: Pmf) -> np.ndarray:
    """Full table E[X_L X_M] for all mask pairs, by summation over cells.

    X_L X_M = X_{L xor M}, so the result must match the first-moment vector
    looked up at the xor; this routine does not use that identity.
    """
    if pmf.p > _ORACLE_WIDTH_CAP:
        raise ValueError(f"oracle capped at p <= {_ORACLE_WIDTH_CAP}")
    idx = np.arange(1 << pmf.p, dtype=np.int64)
    signs = 1.0 - 2.0 * (np.bitwise_count(np.bitwise_and.outer(idx, idx)) & 1)
    return (signs * pmf.probs) @ signs.T


def oracle_cond_expectation(
    pmf: Pmf, target: Mask, given: Sequence[Mask]
) -> Dict[Tuple[int, ...], float]:
    """E[X_target | sign pattern of the given parities], by summation.

    Keys are tuples of +-1 signs aligned with the given masks; only
    positive-probability configurations appear.
    """
    if pmf.p > _ORACLE_WIDTH_CAP:
        raise ValueError(f"oracle capped at p <= {_ORACLE_WIDTH_CAP}")
    if target.width != pmf.p or any(g.width != pmf.p for g in given):
        raise ValueError("mask width mismatch")
    keys = _config_keys(pmf.p, [g.bits for g in given])
    cells = np.arange(1 << pmf.p, dtype=np.int64)
    chi = 1.0 - 2.0 * (np.bitwise_count(cells & target.bits) & 1)
    n_keys = 1 << len(given)
    mass = np.bincount(keys, weights=pmf.probs, minlength=n_keys)
    num = np.bincount(keys, weights=pmf.probs * chi, minlength=n_keys)
    table: Dict[Tuple[int, ...], float] = {}
    for key in np.flatnonzero(mass > 0.0):
        table[_key_signs(int(key), len(given))] = float(num[key] / mass[key])
    return table
