"""Dyadic quantization of [-1,1] variables and the depth-d CI discrepancy.

A coordinate is cut into 2^d equal cells; the cell center has an exact
d-term sign expansion, so each quantized coordinate becomes d new +-1
variables and the CI machinery applies unchanged.  Analytic sources carry
exact conditional structure, which keeps the discrepancy arithmetic honest:
piecewise-constant grids are dyadic-exact, tilted-density sources have
closed-form cell probabilities.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from .bitgroup import WIDTH_CAP, Partition
from .distribution import Pmf
from .engine import CiVerdict, test_ci

__all__ = [
    "QuantConfig",
    "quantize_index",
    "quantize_value",
    "GridSource",
    "SmoothSource",
    "source_from_json",
    "quantized_pmf",
    "quantized_partition",
    "quantized_ci_scan",
    "DeltaPoint",
    "DeltaReport",
    "delta_curve",
]

# full-event enumeration walks all 2^n subsets per side
_EXACT_ATOM_CAP = 12
_EXACT_SUBSET_CAP = 4096


@dataclass(frozen=True)
class QuantConfig:
    """Depth and coordinate counts of one quantization run."""

    d: int
    r: int
    s: int
    t: int

    def __post_init__(self) -> None:
        if self.d < 1:
            raise ValueError(f"depth must be >= 1, got {self.d}")
        if min(self.r, self.s, self.t) < 0 or self.r + self.s + self.t < 1:
            raise ValueError("coordinate counts must be nonnegative, total >= 1")
        if self.total_bits > WIDTH_CAP:
            raise ValueError(
                f"{self.total_bits} quantized bits exceed the {WIDTH_CAP}-bit cap"
            )

    @property
    def dims(self) -> Tuple[int, int, int]:
        return (self.r, self.s, self.t)

    @property
    def total_bits(self) -> int:
        return self.d * (self.r + self.s + self.t)


def quantize_index(x, d: int):
    """Dyadic cell number in 0..2^d-1; x = 1 clamps into the top cell."""
    if d < 1:
        raise ValueError(f"depth must be >= 1, got {d}")
    arr = np.asarray(x, dtype=np.float64)
    if arr.size and (arr.min() < -1.0 or arr.max() > 1.0):
        raise ValueError("values must lie in [-1, 1]")
    idx = np.minimum(np.floor((arr + 1.0) * (1 << (d - 1))), (1 << d) - 1)
    idx = idx.astype(np.int64)
    return int(idx) if np.isscalar(x) else idx


def quantize_value(x, d: int):
    """Center of the dyadic cell containing x: -1 + 2^-d + 2^(1-d) * cell."""
    idx = quantize_index(x, d)
    val = -1.0 + 2.0 ** (-d) + 2.0 ** (1 - d) * np.asarray(idx, dtype=np.float64)
    return float(val) if np.isscalar(x) else val


def _cell_centers(d: int) -> np.ndarray:
    return -1.0 + 2.0 ** (-d) + 2.0 ** (1 - d) * np.arange(1 << d)


def _check_pmf_vector(name: str, vec: np.ndarray) -> None:
    if vec.min() < 0.0 or abs(vec.sum() - 1.0) > 1e-12:
        raise ValueError(f"{name} must be a probability vector")


@dataclass(frozen=True)
class GridSource:
    """Piecewise-constant joint density on a dyadic grid, V-conditional.

    U and W are conditionally uniform within their atoms given the V-atom;
    conditional atom weights come either as a product (u_given_v, w_given_v:
    conditional independence built in) or as one full table uw_given_v.
    """

    v_depth: int
    v_probs: np.ndarray
    u_depth: int
    w_depth: int
    u_given_v: Optional[np.ndarray] = None
    w_given_v: Optional[np.ndarray] = None
    uw_given_v: Optional[np.ndarray] = None
    alpha: Optional[float] = None
    l_u: Optional[float] = None
    l_w: Optional[float] = None

    def __post_init__(self) -> None:
        for depth in (self.v_depth, self.u_depth, self.w_depth):
            if not 0 <= depth <= WIDTH_CAP:
                raise ValueError(f"bad grid depth {depth}")
        nv, nu, nw = 1 << self.v_depth, 1 << self.u_depth, 1 << self.w_depth
        vp = np.asarray(self.v_probs, dtype=np.float64).reshape(nv)
        _check_pmf_vector("v_probs", vp)
        object.__setattr__(self, "v_probs", vp)
        product_mode = self.u_given_v is not None or self.w_given_v is not None
        if product_mode == (self.uw_given_v is not None):
            raise ValueError("supply either u_given_v/w_given_v or uw_given_v")
        if product_mode:
            ug = np.asarray(self.u_given_v, dtype=np.float64).reshape(nv, nu)
            wg = np.asarray(self.w_given_v, dtype=np.float64).reshape(nv, nw)
            for j in range(nv):
                _check_pmf_vector("u_given_v row", ug[j])
                _check_pmf_vector("w_given_v row", wg[j])
            object.__setattr__(self, "u_given_v", ug)
            object.__setattr__(self, "w_given_v", wg)
        else:
            uw = np.asarray(self.uw_given_v, dtype=np.float64).reshape(nv, nu, nw)
            for j in range(nv):
                _check_pmf_vector("uw_given_v slice", uw[j].reshape(-1))
            object.__setattr__(self, "uw_given_v", uw)

    @property
    def max_depth(self) -> int:
        return max(self.v_depth, self.u_depth, self.w_depth)

    def _atom_table(self) -> np.ndarray:
        """Joint atom probabilities, axes (U-atom, V-atom, W-atom)."""
        if self.uw_given_v is not None:
            return np.einsum("b,bac->abc", self.v_probs, self.uw_given_v)
        return np.einsum(
            "b,ba,bc->abc", self.v_probs, self.u_given_v, self.w_given_v
        )

    def joint_table(self, d: int) -> np.ndarray:
        """Exact joint of (U_d, V_d, W_d) cells; dyadic inputs stay exact."""
        table = self._atom_table()
        fu = _depth_map(d, self.u_depth)
        fv = _depth_map(d, self.v_depth)
        fw = _depth_map(d, self.w_depth)
        return np.einsum("ia,jb,kc,abc->ijk", fu, fv, fw, table)

    def measured_constants(self) -> Optional[Tuple[float, float, float]]:
        if None in (self.alpha, self.l_u, self.l_w):
            return None
        return (self.alpha, self.l_u, self.l_w)


def _depth_map(d: int, atom_depth: int) -> np.ndarray:
    """Mass-split matrix from atoms to depth-d cells.

    Entry (cell, atom) = conditional probability of the cell given the atom,
    with the coordinate uniform inside its atom; every entry is a power of
    two or zero.
    """
    n_cell, n_atom = 1 << d, 1 << atom_depth
    f = np.zeros((n_cell, n_atom))
    if d >= atom_depth:
        split = 1 << (d - atom_depth)
        f[np.arange(n_cell), np.arange(n_cell) >> (d - atom_depth)] = 1.0 / split
    else:
        merge = 1 << (atom_depth - d)
        f[np.arange(n_atom) >> (atom_depth - d), np.arange(n_atom)] = 1.0
    return f


@dataclass(frozen=True)
class SmoothSource:
    """Tilted-density source: U and W conditionally linear in shape given V.

    V has a piecewise-constant density on 2^v_depth dyadic atoms; given
    V = v, U has density (1 + m_U(v) u)/2 on [-1,1] with m_U affine on each
    V-atom (rows of u_mean are (intercept, slope)), and W likewise.  U and W
    are conditionally independent given the exact V, so any dependence of
    the quantized variables is pure discretization effect.
    """

    v_depth: int
    v_probs: np.ndarray
    u_mean: np.ndarray
    w_mean: np.ndarray
    alpha: Optional[float] = None
    l_u: Optional[float] = None
    l_w: Optional[float] = None

    def __post_init__(self) -> None:
        if not 0 <= self.v_depth <= WIDTH_CAP:
            raise ValueError(f"bad grid depth {self.v_depth}")
        nv = 1 << self.v_depth
        vp = np.asarray(self.v_probs, dtype=np.float64).reshape(nv)
        _check_pmf_vector("v_probs", vp)
        um = np.asarray(self.u_mean, dtype=np.float64).reshape(nv, 2)
        wm = np.asarray(self.w_mean, dtype=np.float64).reshape(nv, 2)
        edges = -1.0 + 2.0 ** (1 - self.v_depth) * np.arange(nv + 1)
        for name, coef in (("u_mean", um), ("w_mean", wm)):
            ends = np.stack(
                [coef[:, 0] + coef[:, 1] * edges[:-1], coef[:, 0] + coef[:, 1] * edges[1:]]
            )
            if np.abs(ends).max() > 1.0 + 1e-12:
                raise ValueError(f"{name} exceeds magnitude 1 on some atom")
        object.__setattr__(self, "v_probs", vp)
        object.__setattr__(self, "u_mean", um)
        object.__setattr__(self, "w_mean", wm)

    @property
    def max_depth(self) -> int:
        return self.v_depth

    def joint_table(self, d: int) -> np.ndarray:
        """Closed-form joint of (U_d, V_d, W_d): polynomial piece integrals."""
        nv_cell = 1 << d
        a0 = np.zeros(nv_cell)
        au = np.zeros(nv_cell)
        aw = np.zeros(nv_cell)
        ax = np.zeros(nv_cell)
        atom_width = 2.0 ** (1 - self.v_depth)
        rho = self.v_probs / atom_width
        cell_edges = -1.0 + 2.0 ** (1 - d) * np.arange(nv_cell + 1)
        atom_edges = -1.0 + atom_width * np.arange((1 << self.v_depth) + 1)
        for j in range(nv_cell):
            for a in range(1 << self.v_depth):
                lo = max(cell_edges[j], atom_edges[a])
                hi = min(cell_edges[j + 1], atom_edges[a + 1])
                if hi <= lo:
                    continue
                j0 = hi - lo
                j1 = (hi * hi - lo * lo) / 2.0
                j2 = (hi**3 - lo**3) / 3.0
                c0u, c1u = self.u_mean[a]
                c0w, c1w = self.w_mean[a]
                a0[j] += rho[a] * j0
                au[j] += rho[a] * (c0u * j0 + c1u * j1)
                aw[j] += rho[a] * (c0w * j0 + c1w * j1)
                ax[j] += rho[a] * (
                    c0u * c0w * j0 + (c0u * c1w + c1u * c0w) * j1 + c1u * c1w * j2
                )
        ubar = _cell_centers(d)
        wbar = _cell_centers(d)
        table = (
            a0[None, :, None]
            + ubar[:, None, None] * au[None, :, None]
            + wbar[None, None, :] * aw[None, :, None]
            + ubar[:, None, None] * wbar[None, None, :] * ax[None, :, None]
        )
        return table / float(1 << (2 * d))

    def measured_constants(self) -> Optional[Tuple[float, float, float]]:
        """Holder data (alpha, L_U, L_W) from the mean families.

        Declared values win; otherwise alpha = 1 with L = max slope / 4,
        valid only when each mean family is continuous across atoms.
        """
        if None not in (self.alpha, self.l_u, self.l_w):
            return (self.alpha, self.l_u, self.l_w)
        nv = 1 << self.v_depth
        edges = -1.0 + 2.0 ** (1 - self.v_depth) * np.arange(nv + 1)
        for coef in (self.u_mean, self.w_mean):
            left = coef[1:, 0] + coef[1:, 1] * edges[1:-1]
            right = coef[:-1, 0] + coef[:-1, 1] * edges[1:-1]
            if left.size and np.abs(left - right).max() > 1e-12:
                return None
        return (
            1.0,
            float(np.abs(self.u_mean[:, 1]).max()) / 4.0,
            float(np.abs(self.w_mean[:, 1]).max()) / 4.0,
        )


Source = Union[GridSource, SmoothSource]


def source_from_json(text: str) -> Source:
    """Parse an analytic source spec; kind selects grid or smooth."""
    obj = json.loads(text)
    kind = obj.get("kind")
    common = {
        key: obj[key] for key in ("alpha", "l_u", "l_w") if key in obj
    }
    if kind == "grid":
        return GridSource(
            v_depth=int(obj["v_depth"]),
            v_probs=np.asarray(obj["v_probs"], dtype=np.float64),
            u_depth=int(obj["u_depth"]),
            w_depth=int(obj["w_depth"]),
            u_given_v=_opt_array(obj.get("u_given_v")),
            w_given_v=_opt_array(obj.get("w_given_v")),
            uw_given_v=_opt_array(obj.get("uw_given_v")),
            **common,
        )
    if kind == "smooth":
        return SmoothSource(
            v_depth=int(obj["v_depth"]),
            v_probs=np.asarray(obj["v_probs"], dtype=np.float64),
            u_mean=np.asarray(obj["u_mean"], dtype=np.float64),
            w_mean=np.asarray(obj["w_mean"], dtype=np.float64),
            **common,
        )
    raise ValueError(f"unknown source kind {kind!r}")


def _opt_array(val) -> Optional[np.ndarray]:
    return None if val is None else np.asarray(val, dtype=np.float64)


def quantized_partition(cfg: QuantConfig) -> Partition:
    """Coordinate blocks of the quantized bits: U bits | V bits | W bits."""
    return Partition.coordinate_split(
        cfg.d * cfg.r, cfg.d * cfg.s, cfg.d * cfg.t
    )


def quantized_pmf(data, cfg: QuantConfig) -> Pmf:
    """Pmf of the quantized sign bits from samples or an analytic source.

    A sample matrix is n x (r+s+t) with entries in [-1,1], columns ordered
    (U..., V..., W...).  Cell bits encode -1 as 1, so a coordinate's bit
    pattern is the complement of its cell number.
    """
    if isinstance(data, (GridSource, SmoothSource)):
        if cfg.dims != (1, 1, 1):
            raise ValueError("analytic sources are scalar: dims must be (1,1,1)")
        table = data.joint_table(cfg.d)
        return _pmf_from_table(table, cfg.d, meta={"generator": "quantized-source"})
    arr = np.asarray(data, dtype=np.float64)
    n_coords = cfg.r + cfg.s + cfg.t
    if arr.ndim != 2 or arr.shape[1] != n_coords:
        raise ValueError(f"expected n x {n_coords} samples, got shape {arr.shape}")
    top = (1 << cfg.d) - 1
    cells = np.zeros(arr.shape[0], dtype=np.int64)
    for col in range(n_coords):
        cells = (cells << cfg.d) | (top ^ quantize_index(arr[:, col], cfg.d))
    counts = np.bincount(cells, minlength=1 << cfg.total_bits)
    meta = {"generator": "quantized-samples", "n": arr.shape[0], "d": cfg.d}
    return Pmf(cfg.total_bits, counts / arr.shape[0], meta=meta)


def _pmf_from_table(table: np.ndarray, d: int, meta: dict) -> Pmf:
    """Joint cell table (U,V,W) to a pmf over 3d sign bits."""
    n = 1 << d
    top = n - 1
    comp = top ^ np.arange(n)
    cell = (
        (comp[:, None, None] << (2 * d))
        | (comp[None, :, None] << d)
        | comp[None, None, :]
    )
    probs = np.zeros(1 << (3 * d))
    probs[cell.reshape(-1)] = table.reshape(-1)
    return Pmf(3 * d, probs, meta=meta)


def quantized_ci_scan(
    source: Source, depths: Sequence[int], tol: float = 1e-8
) -> List[CiVerdict]:
    """Engine verdicts for U_d vs W_d given V_d at each requested depth."""
    verdicts = []
    for d in depths:
        cfg = QuantConfig(d=d, r=1, s=1, t=1)
        pmf = quantized_pmf(source, cfg)
        verdicts.append(test_ci(pmf, quantized_partition(cfg), tol))
    return verdicts


@dataclass(frozen=True)
class DeltaPoint:
    """Discrepancy tiers at one depth; exact is None beyond enumeration."""

    d: int
    delta_rect: float
    delta_exact: Optional[float]
    delta_upper: float
    bound_rhs: Optional[float]

    def __post_init__(self) -> None:
        slack = 1e-12 * (1.0 + self.delta_upper)
        if self.delta_exact is not None:
            if not (
                self.delta_rect <= self.delta_exact + slack
                and self.delta_exact <= self.delta_upper + slack
            ):
                raise ValueError(f"tier ordering violated at depth {self.d}")
        elif self.delta_rect > self.delta_upper + slack:
            raise ValueError(f"tier ordering violated at depth {self.d}")


@dataclass(frozen=True)
class DeltaReport:
    """Discrepancy-versus-depth table with the rate-bound constants used."""

    points: Tuple[DeltaPoint, ...]
    alpha: Optional[float]
    l_u: Optional[float]
    l_w: Optional[float]
    mode: str

    def to_csv(self) -> str:
        lines = ["d,delta_rect,delta_exact,delta_upper,bound_rhs"]
        for pt in self.points:
            cells = [
                str(pt.d),
                f"{pt.delta_rect:.17g}",
                "" if pt.delta_exact is None else f"{pt.delta_exact:.17g}",
                f"{pt.delta_upper:.17g}",
                "" if pt.bound_rhs is None else f"{pt.bound_rhs:.17g}",
            ]
            lines.append(",".join(cells))
        return "\n".join(lines) + "\n"


def _subset_indicators(n: int) -> np.ndarray:
    """All-subsets 0/1 matrix, row index read as a bitmask over atoms."""
    rows = np.arange(1 << n, dtype=np.int64)
    return ((rows[:, None] >> np.arange(n)) & 1).astype(np.float64)


def delta_curve(
    source: Source,
    depths: Sequence[int],
    mode: str = "auto",
    constants: Optional[Tuple[float, float, float]] = None,
) -> DeltaReport:
    """Quantized-CI discrepancy per depth, three tiers per point.

    rect restricts events to single-atom rectangles; exact enumerates every
    event pair (feasible only for small atom counts); upper is the half-L1
    envelope, always valid.  The sup sits outside the expectation over the
    conditioning cell in every tier.
    """
    if mode not in ("auto", "rect", "exact", "upper"):
        raise ValueError(f"unknown mode {mode!r}")
    if constants is None:
        constants = source.measured_constants()
    points = []
    for d in depths:
        table = source.joint_table(d)
        nu, nw = table.shape[0], table.shape[2]
        if max(nu, nw) > _EXACT_SUBSET_CAP:
            raise ValueError(f"atom count {max(nu, nw)} beyond exact-mode cap")
        want_exact = mode in ("exact", "auto") and max(nu, nw) <= _EXACT_ATOM_CAP
        if mode == "exact" and max(nu, nw) > _EXACT_ATOM_CAP:
            raise ValueError(
                f"exact mode needs <= {_EXACT_ATOM_CAP} atoms per side, got {max(nu, nw)}"
            )
        p_v = table.sum(axis=(0, 2))
        acc_rect = np.zeros((nu, nw))
        upper = 0.0
        acc_exact = (
            np.zeros((1 << nu, 1 << nw)) if want_exact else None
        )
        su = _subset_indicators(nu) if want_exact else None
        sw = _subset_indicators(nw) if want_exact else None
        for j in np.flatnonzero(p_v > 0.0):
            q = table[:, j, :] / p_v[j]
            e = q - np.outer(q.sum(axis=1), q.sum(axis=0))
            acc_rect += p_v[j] * np.abs(e)
            upper += p_v[j] * 0.5 * float(np.abs(e).sum())
            if want_exact:
                acc_exact += p_v[j] * np.abs(su @ e @ sw.T)
        rect = float(acc_rect.max()) if acc_rect.size else 0.0
        exact = float(acc_exact.max()) if want_exact else None
        bound = None
        if constants is not None:
            alpha, l_u, l_w = constants
            # scalar V, so the s^alpha factor is 1
            bound = l_u * l_w * 2.0 ** (2 * alpha * (1 - d) - 2)
        points.append(
            DeltaPoint(
                d=d,
                delta_rect=rect,
                delta_exact=exact,
                delta_upper=upper,
                bound_rhs=bound,
            )
        )
    alpha, l_u, l_w = constants if constants is not None else (None, None, None)
    return DeltaReport(
        points=tuple(points), alpha=alpha, l_u=l_u, l_w=l_w, mode=mode
    )
