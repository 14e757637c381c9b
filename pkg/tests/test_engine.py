import numpy as np
import pytest

from begin import (
    Mask,
    Partition,
    Pmf,
    assemble_sigma,
    belief_coefficients,
    fwht,
    make_ci_pmf,
    make_generic_pmf,
    scan_markov_chain,
    search_subset_counterexamples,
    subset_offblock,
    verify_block_factorization,
)
from begin import test_ci as decide_ci

from conftest import cell_index, random_chain_pmf


def direction_one_case():
    """Four coordinates (A, B1, B2, C) where only the {B1} probe vanishes.

    B1 is a fair coin independent of everything else; the remaining three
    coordinates carry a dependence that conditioning on the full center
    detects but conditioning on B1 alone cannot.
    """
    mom3 = {
        0b000: 1.0,
        0b100: 0.25,
        0b010: 0.0,
        0b001: 0.25,
        0b110: 0.25,
        0b011: 0.25,
        0b101: 1.0 / 16.0,
        0b111: 1.0 / 16.0,
    }
    m16 = np.zeros(16)
    for m3, v in mom3.items():
        a, b2, c = (m3 >> 2) & 1, (m3 >> 1) & 1, m3 & 1
        m16[(a << 3) | (b2 << 1) | c] = v
    pmf = Pmf(4, fwht(m16) / 16.0)
    part = Partition(
        4,
        a_gens=[Mask(0b1000, 4)],
        b_gens=[Mask(0b0100, 4), Mask(0b0010, 4)],
        c_gens=[Mask(0b0001, 4)],
    )
    return pmf, part


def test_sigma_assembly_order_and_entries(xor_pmf, split111):
    sp = assemble_sigma(xor_pmf, split111)
    assert [mk.bits for mk in sp.labels.all_masks()] == [0b010, 0b100, 0b110, 0b001, 0b011]
    assert sp.sigma.shape == (5, 5)
    # X1*X2 and X3 multiply to the full parity, whose mean is 1 here
    assert sp.sigma[2, 3] == 1.0
    np.testing.assert_array_equal(sp.sigma, sp.sigma.T)


def test_sigma_of_point_mass_is_zero(split111):
    pt = Pmf(3, np.eye(8)[0])
    assert np.abs(assemble_sigma(pt, split111).sigma).max() == 0.0


def test_sigma_width_mismatch_raises(split111):
    with pytest.raises(ValueError):
        assemble_sigma(Pmf(2, np.full(4, 0.25)), split111)


def test_ci_holds_on_halves(halves_pmf, split111):
    v = decide_ci(halves_pmf, split111)
    assert v.is_ci
    assert v.max_offblock_s <= 1e-12
    assert v.max_offblock_omega <= 1e-10
    assert v.belief_residual <= 1e-12
    assert v.criterion_agreement == (True, True, True)
    assert v.criteria == {
        "belief": True,
        "factorization": True,
        "schur": True,
        "separation": True,
    }


def test_ci_fails_on_xor(xor_pmf, split111):
    v = decide_ci(xor_pmf, split111)
    assert not v.is_ci
    assert v.max_offblock_s == 1.0
    assert v.belief_residual == 1.0
    assert v.criterion_agreement == (False, False, False)
    assert not any(v.criteria.values())


def test_verdict_json_payload(halves_pmf, split111):
    v = decide_ci(halves_pmf, split111)
    payload = v.to_json_dict()
    assert sorted(payload) == [
        "belief_residual",
        "criteria",
        "is_ci",
        "max_offblock_Omega",
        "max_offblock_S",
        "rank_B",
        "support_B",
        "tol",
    ]
    assert sorted(payload["criteria"]) == ["belief", "factorization", "schur", "separation"]
    assert payload["tol"] == 1e-8
    assert payload["rank_B"] == 1
    assert payload["support_B"] == 2


def test_degenerate_wing_is_trivially_ci():
    # left span collapses into the center, so there is nothing to separate
    part = Partition(
        3,
        a_gens=[Mask(0b010, 3)],
        b_gens=[Mask(0b010, 3), Mask(0b100, 3)],
        c_gens=[Mask(0b001, 3)],
    )
    v = decide_ci(make_generic_pmf(3, seed=5), part)
    assert v.degenerate_wings
    assert v.is_ci
    assert v.max_offblock_s == 0.0


def test_wing_overlap_is_counted():
    part = Partition(
        3,
        a_gens=[Mask(0b110, 3)],
        b_gens=[Mask(0b010, 3)],
        c_gens=[Mask(0b100, 3)],
    )
    v = decide_ci(make_generic_pmf(3, seed=2), part)
    assert v.wing_overlap == 2


def test_verdict_invariant_under_generator_change():
    """Equivalent generating sets span the same groups, so every reported
    number must match exactly, not merely within tolerance."""
    pmf = make_generic_pmf(4, seed=9)
    base = Partition(
        4,
        a_gens=[Mask(0b1000, 4)],
        b_gens=[Mask(0b0100, 4), Mask(0b0010, 4)],
        c_gens=[Mask(0b0001, 4)],
    )
    recombined = Partition(
        4,
        a_gens=[Mask(0b1000, 4)],
        b_gens=[Mask(0b0110, 4), Mask(0b0100, 4)],
        c_gens=[Mask(0b0001, 4)],
    )
    va, vb = decide_ci(pmf, base), decide_ci(pmf, recombined)
    assert va.is_ci == vb.is_ci
    assert va.max_offblock_s == vb.max_offblock_s
    assert va.max_offblock_omega == vb.max_offblock_omega
    assert va.belief_residual == vb.belief_residual
    assert va.rank_b == vb.rank_b


def test_belief_indicator_for_center_member(halves_pmf, split111):
    bc = belief_coefficients(halves_pmf, split111, Mask(0b010, 3), condition_on="C")
    assert [m.bits for m in bc.members] == [0b000, 0b010]
    np.testing.assert_allclose(bc.coefficients, [0.0, 1.0], atol=1e-12)
    assert bc.residual <= 1e-12
    assert bc.fit_residual <= 1e-12


def test_belief_halves_coefficient(halves_pmf, split111):
    bc = belief_coefficients(halves_pmf, split111, Mask(0b100, 3))
    assert bc.condition_on == "C"
    np.testing.assert_allclose(bc.coefficients, [0.0, 0.5], atol=1e-12)
    assert bc.residual <= 1e-12


def test_belief_two_conditioning_gap_on_xor(xor_pmf, split111):
    # the single-conditioning fit is exact, the double-conditioning one is not
    bc = belief_coefficients(xor_pmf, split111, Mask(0b100, 3))
    assert bc.fit_residual <= 1e-12
    assert bc.residual == 1.0


def test_belief_target_outside_spans_raises(halves_pmf):
    part = Partition(3, [Mask(0b100, 3)], [Mask(0b010, 3)], [Mask(0b001, 3)])
    with pytest.raises(ValueError):
        belief_coefficients(halves_pmf, part, Mask(0b101, 3))
    with pytest.raises(ValueError):
        belief_coefficients(halves_pmf, part, Mask(0b100, 3), condition_on="B")
    with pytest.raises(ValueError):
        belief_coefficients(halves_pmf, part, Mask(0b001, 3), condition_on="C")


def test_belief_fitted_values_survive_thin_center():
    """A duplicated center coordinate makes the Gram system singular; the
    minimum-norm coefficients still reproduce the conditional expectation."""
    probs = np.zeros(16)
    for a in (1, -1):
        for b in (1, -1):
            for c in (1, -1):
                pa = (1 + a * b * 0.5) / 2
                pc = (1 + c * b * 0.5) / 2
                probs[cell_index((a, b, b, c))] = 0.5 * pa * pc
    pmf = Pmf(4, probs)
    part = Partition(
        4,
        a_gens=[Mask(0b1000, 4)],
        b_gens=[Mask(0b0100, 4), Mask(0b0010, 4)],
        c_gens=[Mask(0b0001, 4)],
    )
    bc = belief_coefficients(pmf, part, Mask(0b1000, 4))
    assert len(bc.members) == 4
    assert bc.fit_residual <= 1e-12
    assert bc.residual <= 1e-12


def test_factorization_witness_on_halves(halves_pmf, split111):
    fw = verify_block_factorization(halves_pmf, split111)
    assert bool(fw)
    assert fw.lhs[0, 0] == 0.25
    np.testing.assert_allclose(fw.m1[:, 0], [0.5, 0.0], atol=1e-12)
    np.testing.assert_allclose(fw.m2[:, 0], [0.5, 0.0], atol=1e-12)
    np.testing.assert_allclose(fw.rhs, fw.lhs, atol=1e-12)
    assert fw.gap <= 1e-12


def test_factorization_fails_on_xor(xor_pmf, split111):
    fw = verify_block_factorization(xor_pmf, split111)
    assert not fw
    assert fw.gap == 1.0


def test_factorization_with_empty_center():
    part = Partition(2, [Mask(0b10, 2)], [], [Mask(0b01, 2)])
    prod = Pmf(2, np.outer([0.3, 0.7], [0.6, 0.4]).reshape(-1))
    fw = verify_block_factorization(prod, part)
    assert bool(fw)
    assert np.abs(fw.rhs).max() == 0.0
    copy = Pmf(2, np.array([0.5, 0.0, 0.0, 0.5]))
    fc = verify_block_factorization(copy, part)
    assert not fc
    assert fc.gap == 1.0


def test_chain_scans_pass_on_random_chains():
    for seed in (11, 12, 13):
        pmf = random_chain_pmf(4, seed)
        verdicts = scan_markov_chain(pmf, 4)
        assert len(verdicts) == 2
        assert all(v.is_ci for v in verdicts)
        assert max(v.max_offblock_s for v in verdicts) <= 1e-12


def test_chain_scan_on_iid():
    verdicts = scan_markov_chain(Pmf(3, np.full(8, 0.125)), 3)
    assert [v.is_ci for v in verdicts] == [True]


def test_chain_scan_flags_skip_link():
    # X3 copies X1 past the middle coordinate, so the split at 2 fails
    probs = np.zeros(8)
    for a in (1, -1):
        for b in (1, -1):
            probs[cell_index((a, b, a))] = 0.25
    verdicts = scan_markov_chain(Pmf(3, probs), 3)
    assert [v.is_ci for v in verdicts] == [False]
    assert verdicts[0].max_offblock_s == 1.0


def test_chain_scan_validation():
    iid = Pmf(3, np.full(8, 0.125))
    with pytest.raises(ValueError):
        scan_markov_chain(Pmf(2, np.full(4, 0.25)), 2)
    with pytest.raises(ValueError):
        scan_markov_chain(iid, 4)


def test_center_subset_hides_a_dependence():
    """Conditioning on the independent B1 alone reports a vanishing
    off-block even though the full-center verdict is negative."""
    pmf, part = direction_one_case()
    full = decide_ci(pmf, part)
    assert not full.is_ci
    assert full.max_offblock_s == 0.0625
    assert subset_offblock(pmf, part, [Mask(0b0100, 4)]) == 0.0
    findings = search_subset_counterexamples([(pmf, part)])
    ones = [f for f in findings if f.direction == 1]
    assert {mk.bits for f in ones for mk in f.subset} == {0b0100, 0b0110}
    assert all(f.offblock == 0.0 for f in ones)
    assert all(f.full_offblock == 0.0625 for f in ones)


def test_center_subset_fakes_a_dependence():
    # direction 2: the pmf is conditionally independent given the full
    # center, yet every probed proper subset leaves a visible off-block
    part = Partition.coordinate_split(1, 2, 1)
    for seed in (1, 2, 3):
        pmf = make_ci_pmf(1, 2, 1, seed=seed)
        assert decide_ci(pmf, part).is_ci
        twos = [
            f
            for f in search_subset_counterexamples([(pmf, part)])
            if f.direction == 2
        ]
        assert twos
        assert all(f.offblock >= 1e-2 for f in twos)
        assert all(f.full_offblock <= 1e-8 for f in twos)


def test_subset_search_skips_single_mask_centers(halves_pmf, split111):
    assert search_subset_counterexamples([(halves_pmf, split111)]) == []
