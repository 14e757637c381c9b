"""Rank-aware symmetric linear algebra for interaction covariances.

Pseudoinverses go through a symmetric eigendecomposition; the generalized
Schur complement and its block inverse keep exact structural symmetry so
downstream equality checks can be bit-for-bit.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from .bitgroup import IndexSets

__all__ = [
    "pinv_sym",
    "SigmaPartition",
    "SchurResult",
    "OmegaMatrix",
    "schur_complement",
    "sb_inverse",
]

_SYM_TOL = 1e-10
_PSD_TOL = -1e-10
_RESIDUAL_TOL = 1e-8


def _require_symmetric(a: np.ndarray, tol: float = _SYM_TOL) -> None:
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    if a.size and float(np.abs(a - a.T).max()) > tol:
        raise ValueError("matrix is not symmetric within tolerance")


def _pinv_eigh(
    arr: np.ndarray, rank_tol: Optional[float], anchor: float
) -> Tuple[np.ndarray, int]:
    # anchor raises the default cutoff floor for matrices whose entries were
    # formed by cancellation at a larger scale than their own spectrum
    n = arr.shape[0]
    if n == 0:
        return arr.copy().reshape(0, 0), 0
    vals, vecs = np.linalg.eigh((arr + arr.T) / 2.0)
    scale = float(np.abs(vals).max())
    if rank_tol is None:
        cutoff = n * np.finfo(np.float64).eps * max(scale, anchor)
    else:
        cutoff = rank_tol * scale
    keep = np.abs(vals) > cutoff
    inv_vals = np.zeros_like(vals)
    inv_vals[keep] = 1.0 / vals[keep]
    pinv = (vecs * inv_vals) @ vecs.T
    return (pinv + pinv.T) / 2.0, int(keep.sum())


def _pinv_top(arr: np.ndarray, rank: int) -> np.ndarray:
    # invert exactly the given number of leading eigenvalues; used when the
    # rank is known from structure rather than from a noise threshold
    n = arr.shape[0]
    if n == 0:
        return arr.copy().reshape(0, 0)
    vals, vecs = np.linalg.eigh((arr + arr.T) / 2.0)
    inv_vals = np.zeros_like(vals)
    if rank > 0:
        top = np.argsort(vals)[-rank:]
        inv_vals[top] = 1.0 / vals[top]
    pinv = (vecs * inv_vals) @ vecs.T
    return (pinv + pinv.T) / 2.0


def _rank_eigh(arr: np.ndarray, rank_tol: Optional[float]) -> int:
    n = arr.shape[0]
    if n == 0:
        return 0
    vals = np.linalg.eigvalsh((arr + arr.T) / 2.0)
    scale = float(np.abs(vals).max())
    if rank_tol is None:
        rank_tol = n * np.finfo(np.float64).eps
    return int((np.abs(vals) > rank_tol * scale).sum())


def pinv_sym(
    a: np.ndarray, rank_tol: Optional[float] = None
) -> Tuple[np.ndarray, int]:
    """Moore-Penrose inverse of a symmetric matrix, with its numerical rank.

    Eigenvalues of magnitude <= rank_tol * max|eigenvalue| count as zero;
    rank_tol defaults to dim * binary64 epsilon.  The result is exactly
    symmetric (symmetrized term by term, which is bitwise safe).
    """
    arr = np.asarray(a, dtype=np.float64)
    _require_symmetric(arr)
    return _pinv_eigh(arr, rank_tol, 0.0)


@dataclass(frozen=True)
class SigmaPartition:
    """Interaction covariance over masks ordered center, left wing, right wing."""

    sigma: np.ndarray
    labels: IndexSets

    def __post_init__(self) -> None:
        arr = np.asarray(self.sigma, dtype=np.float64)
        expected = len(self.labels.b_set) + len(self.labels.l_set) + len(
            self.labels.r_set
        )
        if arr.shape != (expected, expected):
            raise ValueError(
                f"sigma shape {arr.shape} does not match {expected} labeled masks"
            )
        _require_symmetric(arr, tol=1e-12)
        if arr.size:
            low = float(np.linalg.eigvalsh((arr + arr.T) / 2.0).min())
            if low < _PSD_TOL:
                raise ValueError(f"sigma has eigenvalue {low}, not PSD")
        arr = arr.copy()
        arr.flags.writeable = False
        object.__setattr__(self, "sigma", arr)

    @property
    def n_b(self) -> int:
        return len(self.labels.b_set)

    @property
    def n_l(self) -> int:
        return len(self.labels.l_set)

    @property
    def n_r(self) -> int:
        return len(self.labels.r_set)

    @property
    def b_block(self) -> np.ndarray:
        return self.sigma[: self.n_b, : self.n_b]

    @property
    def f_block(self) -> np.ndarray:
        """Coupling block: center rows against both wings."""
        return self.sigma[: self.n_b, self.n_b :]

    @property
    def wing_block(self) -> np.ndarray:
        return self.sigma[self.n_b :, self.n_b :]


@dataclass(frozen=True)
class SchurResult:
    """Generalized Schur complement of the center block, plus row-space data."""

    s: np.ndarray
    s_pinv: np.ndarray
    m: np.ndarray
    rank_b: int
    residual: float
    rank_s: int
    b_pinv: np.ndarray


@dataclass(frozen=True)
class OmegaMatrix:
    """Block generalized inverse over (center, left wing, right wing)."""

    omega: np.ndarray
    f: np.ndarray
    n_b: int
    sigma_residual: float

    @property
    def wing_block(self) -> np.ndarray:
        return self.omega[self.n_b :, self.n_b :]


def schur_complement(
    sp: SigmaPartition, rank_tol: Optional[float] = None
) -> SchurResult:
    """S = D - F' B+ F over the wings, with the row-space coefficients M.

    residual = max |sigma[wings, center] - M @ B|, which vanishes for any
    covariance because wing rows lie in the row space of the center block.

    The default rank cutoff for the center block is anchored to max|sigma|;
    the rank of S is not thresholded at all but taken from the additivity
    identity rank(S) = rank(sigma) - rank(B), which holds for any positive
    semidefinite partitioned matrix. The subtraction forming S cancels
    entries at the scale of sigma, so S's small eigenvalues carry no usable
    scale information and a threshold there is unreliable; the two ranks on
    the right are read off matrices built directly from moments.
    """
    b = sp.b_block
    f = sp.f_block
    d = sp.wing_block
    anchor = float(np.abs(sp.sigma).max()) if sp.sigma.size else 0.0
    b_pinv, rank_b = _pinv_eigh(b, rank_tol, anchor)
    m = f.T @ b_pinv
    s = d - m @ f if sp.n_b else d.copy()
    s = (s + s.T) / 2.0
    residual = float(np.abs(f.T - m @ b).max()) if f.size else 0.0
    if rank_tol is None:
        rank_s = max(_rank_eigh(sp.sigma, None) - rank_b, 0)
        s_pinv = _pinv_top(s, rank_s)
    else:
        s_pinv, rank_s = _pinv_eigh(s, rank_tol, anchor)
    return SchurResult(
        s=s,
        s_pinv=s_pinv,
        m=m,
        rank_b=rank_b,
        residual=residual,
        rank_s=rank_s,
        b_pinv=b_pinv,
    )


def sb_inverse(sp: SigmaPartition, sr: SchurResult) -> OmegaMatrix:
    """Block generalized inverse assembled from the Schur complement.

    The wing corner is sr.s_pinv assigned directly (bit-for-bit); the whole
    matrix is symmetric by construction, not by post-hoc symmetrization.
    """
    if sr.residual > _RESIDUAL_TOL:
        raise ValueError(
            f"row-space residual {sr.residual} exceeds {_RESIDUAL_TOL}; "
            "the input is not an interaction covariance"
        )
    n_b = sp.n_b
    n_w = sp.n_l + sp.n_r
    omega = np.zeros((n_b + n_w, n_b + n_w))
    if n_b:
        k = sr.b_pinv @ sp.f_block
        g = k @ sr.s_pinv
        corner = g @ k.T
        omega[:n_b, :n_b] = sr.b_pinv + (corner + corner.T) / 2.0
        omega[:n_b, n_b:] = -g
        omega[n_b:, :n_b] = -g.T
    omega[n_b:, n_b:] = sr.s_pinv
    sigma = sp.sigma
    sigma_residual = (
        float(np.abs(sigma @ omega @ sigma - sigma).max()) if sigma.size else 0.0
    )
    return OmegaMatrix(
        omega=omega, f=sp.f_block.copy(), n_b=n_b, sigma_residual=sigma_residual
    )
