"""Conditional-independence engine over interaction covariances.

Assembles the covariance of the interaction features ordered (center, left
wing, right wing), then decides CI four ways: vanishing wing off-block of the
generalized Schur complement, block factorization of the cross-covariance,
conditional-expectation tables, and graph separation on the block inverse.
The four must agree; the Schur off-block is the primary verdict.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from .bitgroup import IndexSets, Mask, Partition, build_index_sets, span_generate
from .distribution import Pmf, interaction_cov, moments_from_pmf
from .graph import build_graph, separates
from .schur import SchurResult, SigmaPartition, pinv_sym, sb_inverse, schur_complement

__all__ = [
    "Partition",
    "CiVerdict",
    "BeliefCoefficients",
    "FactorizationWitness",
    "SubsetFinding",
    "assemble_sigma",
    "test_ci",
    "belief_coefficients",
    "verify_block_factorization",
    "scan_markov_chain",
    "subset_offblock",
    "search_subset_counterexamples",
]

DEFAULT_TOL = 1e-8


@dataclass(frozen=True)
class CiVerdict:
    """Outcome of one conditional-independence decision.

    criterion_agreement lines up as (expectation tables, factorization and
    Schur off-block, graph separation); entries must coincide whenever all
    magnitudes are far from the tolerance.
    """

    is_ci: bool
    max_offblock_s: float
    max_offblock_omega: float
    belief_residual: float
    criterion_agreement: Tuple[bool, bool, bool]
    criteria: Dict[str, bool]
    rank_b: int
    support_b: int
    tol: float
    degenerate_wings: bool = False
    wing_overlap: int = 0

    def to_json_dict(self) -> dict:
        return {
            "is_ci": self.is_ci,
            "max_offblock_S": self.max_offblock_s,
            "max_offblock_Omega": self.max_offblock_omega,
            "belief_residual": self.belief_residual,
            "rank_B": self.rank_b,
            "support_B": self.support_b,
            "tol": self.tol,
            "criteria": dict(self.criteria),
        }


@dataclass(frozen=True)
class BeliefCoefficients:
    """Linear representation of E[X_target | center group].

    coefficients[c] weights the c-th group-ordered member of span(B gens);
    the fitted values reproduce the conditional expectation on every
    positive-mass center configuration.  Coefficients are canonical
    (minimum-norm) but not unique when the center support is thin, so only
    fitted values are contract.
    """

    target: Mask
    members: Tuple[Mask, ...]
    coefficients: np.ndarray
    residual: float
    fit_residual: float
    condition_on: str


@dataclass(frozen=True)
class FactorizationWitness:
    """Cross-covariance factorization check with its witness matrices."""

    ok: bool
    m1: np.ndarray
    m2: np.ndarray
    lhs: np.ndarray
    rhs: np.ndarray
    gap: float

    def __bool__(self) -> bool:
        return self.ok


def assemble_sigma(pmf: Pmf, part: Partition) -> SigmaPartition:
    """Interaction covariance over the ordered index sets of the partition."""
    if pmf.p != part.p:
        raise ValueError(f"pmf width {pmf.p} != partition width {part.p}")
    labels = build_index_sets(part)
    masks = labels.all_masks()
    sigma = interaction_cov(pmf, masks, masks)
    sigma = (sigma + sigma.T) / 2.0
    return SigmaPartition(sigma=sigma, labels=labels)


def _parity_keys(cells: np.ndarray, gens_bits: Sequence[int]) -> np.ndarray:
    """Configuration index of each cell over the given parity generators."""
    keys = np.zeros(cells.shape, dtype=np.int64)
    for g in gens_bits:
        keys = (keys << 1) | (np.bitwise_count(cells & g) & 1)
    return keys


def _cond_table_residual(
    probs: np.ndarray,
    cells: np.ndarray,
    targets_bits: Sequence[int],
    b_basis: Sequence[int],
    other_basis: Sequence[int],
) -> float:
    """Worst gap between E[X_t | center, other] and E[X_t | center].

    Tables run over positive-mass configurations only; cells with zero
    probability never contribute.
    """
    kb = _parity_keys(cells, b_basis)
    ko = _parity_keys(cells, other_basis)
    nb, no = 1 << len(b_basis), 1 << len(other_basis)
    combined = kb * no + ko
    mass_b = np.bincount(kb, weights=probs, minlength=nb)
    mass_bo = np.bincount(combined, weights=probs, minlength=nb * no)
    pos_b = mass_b > 0.0
    pos_bo = mass_bo > 0.0
    bo_parent = (np.arange(nb * no) // no)[pos_bo]
    worst = 0.0
    for t in targets_bits:
        chi = 1.0 - 2.0 * (np.bitwise_count(cells & t) & 1)
        num_b = np.bincount(kb, weights=probs * chi, minlength=nb)
        num_bo = np.bincount(combined, weights=probs * chi, minlength=nb * no)
        cond_b = np.zeros(nb)
        cond_b[pos_b] = num_b[pos_b] / mass_b[pos_b]
        gap = np.abs(num_bo[pos_bo] / mass_bo[pos_bo] - cond_b[bo_parent])
        if gap.size:
            worst = max(worst, float(gap.max()))
    return worst


def _belief_residual(pmf: Pmf, part: Partition, labels: IndexSets) -> float:
    """Criterion over both wings: wing interactions forget the far block."""
    cells = pmf.support
    probs = pmf.probs[cells]
    b_basis = [m.bits for m in part.b_span.basis]
    a_basis = [m.bits for m in part.a_span.basis]
    c_basis = [m.bits for m in part.c_span.basis]
    left = _cond_table_residual(
        probs, cells, [m.bits for m in labels.l_set], b_basis, c_basis
    )
    right = _cond_table_residual(
        probs, cells, [m.bits for m in labels.r_set], b_basis, a_basis
    )
    return max(left, right)


def _factorization_witness(
    sp: SigmaPartition, sr: SchurResult, tol: float
) -> FactorizationWitness:
    n_b, n_l = sp.n_b, sp.n_l
    lhs = sp.wing_block[:n_l, n_l:]
    m1 = sr.m[:n_l, :]
    m2 = sr.m[n_l:, :]
    rhs = m1 @ sp.b_block @ m2.T if n_b else np.zeros_like(lhs)
    gap = float(np.abs(lhs - rhs).max()) if lhs.size else 0.0
    return FactorizationWitness(
        ok=gap <= tol, m1=m1, m2=m2, lhs=lhs, rhs=rhs, gap=gap
    )


def _support_b(pmf: Pmf, part: Partition) -> int:
    cells = pmf.support
    probs = pmf.probs[cells]
    b_basis = [m.bits for m in part.b_span.basis]
    keys = _parity_keys(cells, b_basis)
    mass = np.bincount(keys, weights=probs, minlength=1 << len(b_basis))
    return int((mass > 0.0).sum())


def test_ci(
    pmf: Pmf,
    part: Partition,
    tol: float = DEFAULT_TOL,
    rank_tol: Optional[float] = None,
) -> CiVerdict:
    """Decide whether the A-group and C-group are independent given B.

    The primary verdict thresholds the wing off-block of the generalized
    Schur complement; the other three criteria are computed as cross-checks
    and reported in the criteria map.
    """
    sp = assemble_sigma(pmf, part)
    sr = schur_complement(sp, rank_tol)
    om = sb_inverse(sp, sr)

    n_l = sp.n_l
    s_off = sr.s[:n_l, n_l:]
    omega_off = om.wing_block[:n_l, n_l:]
    max_s = float(np.abs(s_off).max()) if s_off.size else 0.0
    max_omega = float(np.abs(omega_off).max()) if omega_off.size else 0.0

    belief_residual = _belief_residual(pmf, part, sp.labels)
    fact = _factorization_witness(sp, sr, tol)

    graph = build_graph(om, sp.labels, tol)
    separated = separates(graph)

    schur_ok = max_s <= tol
    belief_ok = belief_residual <= tol
    agreement = (belief_ok, fact.ok and schur_ok, separated)
    criteria = {
        "belief": belief_ok,
        "factorization": fact.ok,
        "schur": schur_ok,
        "separation": separated,
    }
    return CiVerdict(
        is_ci=schur_ok,
        max_offblock_s=max_s,
        max_offblock_omega=max_omega,
        belief_residual=belief_residual,
        criterion_agreement=agreement,
        criteria=criteria,
        rank_b=sr.rank_b,
        support_b=_support_b(pmf, part),
        tol=tol,
        degenerate_wings=not (sp.labels.l_set and sp.labels.r_set),
        wing_overlap=len(sp.labels.overlap),
    )


def belief_coefficients(
    pmf: Pmf,
    part: Partition,
    target: Mask,
    condition_on: str = "auto",
    rank_tol: Optional[float] = None,
) -> BeliefCoefficients:
    """Canonical coefficients of E[X_target | B] over the center group.

    The Gram system is the group-circulant of the center moment vector,
    solved by pseudoinverse; condition_on picks which far block joins the
    center when measuring the two-conditioning residual ("C" for left-wing
    targets, "A" for right-wing, "auto" to infer from the spans).
    """
    if target.width != pmf.p or part.p != pmf.p:
        raise ValueError("width mismatch")
    span_ab = span_generate(part.a_gens + part.b_gens, width=part.p)
    span_bc = span_generate(part.b_gens + part.c_gens, width=part.p)
    if condition_on == "auto":
        if target in span_ab:
            condition_on = "C"
        elif target in span_bc:
            condition_on = "A"
        else:
            raise ValueError(
                f"target {target} lies in neither wing span; pass condition_on"
            )
    if condition_on not in ("A", "C"):
        raise ValueError(f"condition_on must be 'A' or 'C', got {condition_on!r}")
    if condition_on == "C" and target not in span_ab:
        raise ValueError(f"target {target} outside the center-left span")
    if condition_on == "A" and target not in span_bc:
        raise ValueError(f"target {target} outside the center-right span")

    span_b = part.b_span
    lam = span_b.member_bits()
    m = moments_from_pmf(pmf)
    gram = m[np.bitwise_xor.outer(lam, lam)]
    cross = m[lam ^ target.bits]
    gram_pinv, _ = pinv_sym(gram, rank_tol)
    alpha = gram_pinv @ cross

    cells = pmf.support
    probs = pmf.probs[cells]
    chi_t = 1.0 - 2.0 * (np.bitwise_count(cells & target.bits) & 1)
    fitted_cells = np.zeros(cells.shape)
    for c, lam_c in enumerate(lam):
        fitted_cells += alpha[c] * (
            1.0 - 2.0 * (np.bitwise_count(cells & int(lam_c)) & 1)
        )

    b_basis = [mk.bits for mk in span_b.basis]
    other = part.c_span.basis if condition_on == "C" else part.a_span.basis
    fit_residual = _fitted_gap(probs, cells, chi_t, fitted_cells, b_basis, [])
    residual = _fitted_gap(
        probs, cells, chi_t, fitted_cells, b_basis, [mk.bits for mk in other]
    )
    members = tuple(Mask(int(v), part.p) for v in lam)
    return BeliefCoefficients(
        target=target,
        members=members,
        coefficients=alpha,
        residual=residual,
        fit_residual=fit_residual,
        condition_on=condition_on,
    )


def _fitted_gap(
    probs: np.ndarray,
    cells: np.ndarray,
    chi_t: np.ndarray,
    fitted_cells: np.ndarray,
    b_basis: Sequence[int],
    other_basis: Sequence[int],
) -> float:
    """Max |E[X_t | config] - fitted| over positive-mass configurations.

    fitted is constant on each center configuration, so its conditional
    average equals its value there.
    """
    keys = _parity_keys(cells, list(b_basis) + list(other_basis))
    n = 1 << (len(b_basis) + len(other_basis))
    mass = np.bincount(keys, weights=probs, minlength=n)
    num = np.bincount(keys, weights=probs * chi_t, minlength=n)
    fit = np.bincount(keys, weights=probs * fitted_cells, minlength=n)
    pos = mass > 0.0
    if not pos.any():
        return 0.0
    gap = np.abs(num[pos] / mass[pos] - fit[pos] / mass[pos])
    return float(gap.max())


def verify_block_factorization(
    pmf: Pmf,
    part: Partition,
    tol: float = DEFAULT_TOL,
    rank_tol: Optional[float] = None,
) -> FactorizationWitness:
    """Check sigma[L,R] = M1 sigma_B M2' with the row-space coefficients.

    Truthy iff the factorization holds within tol; with an empty center the
    check degenerates to plain uncorrelatedness of the wings.
    """
    sp = assemble_sigma(pmf, part)
    sr = schur_complement(sp, rank_tol)
    return _factorization_witness(sp, sr, tol)


def scan_markov_chain(
    pmf: Pmf, k: int, tol: float = DEFAULT_TOL
) -> List[CiVerdict]:
    """Past-future splits at every interior coordinate of a length-k chain."""
    if k < 3:
        raise ValueError(f"chain scan needs k >= 3 coordinates, got {k}")
    if pmf.p != k:
        raise ValueError(f"pmf width {pmf.p} != chain length {k}")
    verdicts = []
    for j in range(2, k):
        part = Partition.coordinate_split(j - 1, 1, k - j)
        verdicts.append(test_ci(pmf, part, tol))
    return verdicts


def subset_offblock(
    pmf: Pmf,
    part: Partition,
    subset: Sequence[Mask],
    rank_tol: Optional[float] = None,
) -> float:
    """Wing off-block magnitude when conditioning on a subset of the center.

    Replacing the full center index set by a proper subset breaks the CI
    equivalence in both directions; this is the probe used to exhibit that.
    """
    labels = build_index_sets(part)
    trimmed = IndexSets(
        b_set=tuple(subset),
        l_set=labels.l_set,
        r_set=labels.r_set,
        width=labels.width,
        part=part,
    )
    masks = trimmed.all_masks()
    sigma = interaction_cov(pmf, masks, masks)
    sp = SigmaPartition(sigma=(sigma + sigma.T) / 2.0, labels=trimmed)
    sr = schur_complement(sp, rank_tol)
    n_l = sp.n_l
    off = sr.s[:n_l, n_l:]
    return float(np.abs(off).max()) if off.size else 0.0


@dataclass(frozen=True)
class SubsetFinding:
    """One instance where a proper center subset breaks the equivalence.

    direction 1: subset off-block vanishes although CI fails;
    direction 2: CI holds although the subset off-block does not vanish.
    """

    index: int
    subset: Tuple[Mask, ...]
    direction: int
    offblock: float
    full_offblock: float


def search_subset_counterexamples(
    cases: Iterable[Tuple[Pmf, Partition]],
    tol: float = DEFAULT_TOL,
    magnitude: float = 1e-2,
) -> List[SubsetFinding]:
    """Scan (pmf, partition) pairs for proper-subset failures of both kinds.

    Every nonempty proper subset of the center index set is probed; findings
    require a clear margin (offblock either <= tol or >= magnitude) so the
    report never rests on borderline arithmetic.
    """
    findings: List[SubsetFinding] = []
    for index, (pmf, part) in enumerate(cases):
        labels = build_index_sets(part)
        center = labels.b_set
        if len(center) < 2:
            continue
        full = test_ci(pmf, part, tol)
        for pattern in range(1, (1 << len(center)) - 1):
            subset = tuple(
                mk for i, mk in enumerate(center) if (pattern >> i) & 1
            )
            off = subset_offblock(pmf, part, subset)
            if full.is_ci and off >= magnitude:
                findings.append(
                    SubsetFinding(index, subset, 2, off, full.max_offblock_s)
                )
            elif not full.is_ci and off <= tol:
                findings.append(
                    SubsetFinding(index, subset, 1, off, full.max_offblock_s)
                )
    return findings
