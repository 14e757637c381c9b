"""Shared fixtures and naive reference helpers for the test suite."""

import numpy as np
import pytest

from begin import Mask, Partition, Pmf


def cell_index(signs):
    """Cell index of a +-1 tuple, first coordinate most significant."""
    bits = 0
    for s in signs:
        bits = (bits << 1) | (1 if s < 0 else 0)
    return bits


def naive_wht(y):
    """O(4^p) sign-matrix transform; parity by shift folding, not popcount."""
    y = np.asarray(y, dtype=np.float64)
    n = y.size
    idx = np.arange(n, dtype=np.int64)
    out = np.empty(n)
    for i in range(n):
        v = idx & i
        for shift in (32, 16, 8, 4, 2, 1):
            v = v ^ (v >> shift)
        out[i] = ((1.0 - 2.0 * (v & 1)) * y).sum()
    return out


def dyadic_rows(rng, n_rows, bits=12):
    """Rows of binary distributions with denominators 2^bits."""
    rows = np.empty((n_rows, 2))
    scale = float(1 << bits)
    for i in range(n_rows):
        k = int(rng.integers(1, 1 << bits))
        rows[i] = (k / scale, (scale - k) / scale)
    return rows


def chain_pmf(init, transitions):
    """Forward-multiplied chain pmf; each row indexed by the previous bit."""
    probs = np.asarray(init, dtype=np.float64)
    for rows in transitions:
        state = np.arange(probs.size) & 1
        probs = (probs[:, None] * np.asarray(rows)[state]).reshape(-1)
    return Pmf(probs.size.bit_length() - 1, probs)


def random_chain_pmf(k, seed):
    rng = np.random.default_rng(seed)
    init = dyadic_rows(rng, 1)[0]
    return chain_pmf(init, [dyadic_rows(rng, 2) for _ in range(k - 1)])


@pytest.fixture(scope="session")
def xor_pmf():
    # X2 = X1 * X3 with X1, X3 independent fair coins
    probs = np.zeros(8)
    for a in (1, -1):
        for c in (1, -1):
            probs[cell_index((a, a * c, c))] = 0.25
    return Pmf(3, probs)


@pytest.fixture(scope="session")
def halves_pmf():
    # fair X2; X1 and X3 conditionally independent with
    # E[X1 | X2] = E[X3 | X2] = X2 / 2
    probs = np.zeros(8)
    for b in (1, -1):
        for a in (1, -1):
            for c in (1, -1):
                pa = (1 + a * b * 0.5) / 2
                pc = (1 + c * b * 0.5) / 2
                probs[cell_index((a, b, c))] = 0.5 * pa * pc
    return Pmf(3, probs)


@pytest.fixture(scope="session")
def split111():
    return Partition.coordinate_split(1, 1, 1)


@pytest.fixture(scope="session")
def parity_feature_case():
    """X4 depends on (X1,X2,X3) only through the pairwise parities.

    Every parity class carries mass 1/4 and every conditional is a power of
    two, so all conditional quotients are exact in binary64.
    """
    pa = np.array([1, 3, 1, 2, 2, 3, 1, 3], dtype=np.float64) / 16.0
    x4_given_class = {0: 0.5, 1: 0.25, 2: 0.75, 3: 0.125}
    probs = np.zeros(16)
    for cell in range(8):
        cls = ((((cell >> 2) ^ (cell >> 1)) & 1) << 1) | (((cell >> 1) ^ cell) & 1)
        q = x4_given_class[cls]
        probs[(cell << 1) | 1] = pa[cell] * q
        probs[cell << 1] = pa[cell] * (1 - q)
    pmf = Pmf(4, probs)
    part = Partition(
        4,
        a_gens=[Mask(0b0001, 4)],
        b_gens=[Mask(0b1100, 4), Mask(0b0110, 4), Mask(0b1010, 4)],
        c_gens=[Mask(0b1000, 4), Mask(0b0100, 4), Mask(0b0010, 4)],
    )
    return pmf, part
