"""GF(2) algebra of interaction masks.

A mask over p binary coordinates selects which coordinates enter a product
interaction: bit j set means coordinate X_j is a factor.  Coordinate X_1 is
the MOST significant bit everywhere, so the string "100" at width 3 is the
first coordinate alone.  Multiplying two interactions XORs their masks, which
makes every collection of interactions a GF(2) linear span; the wing/center
index sets are span differences.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np

__all__ = [
    "WIDTH_CAP",
    "Mask",
    "MaskSpan",
    "Partition",
    "IndexSets",
    "mask_product",
    "span_generate",
    "span_intersect",
    "build_index_sets",
    "partition_to_json",
    "partition_from_json",
]

# dense 2^p objects downstream become infeasible past this
WIDTH_CAP = 24


@dataclass(frozen=True, order=True)
class Mask:
    """One interaction: bit j set iff coordinate X_j enters the product."""

    bits: int
    width: int

    def __post_init__(self) -> None:
        if not 1 <= self.width <= WIDTH_CAP:
            raise ValueError(f"width must be in 1..{WIDTH_CAP}, got {self.width}")
        if not 0 <= self.bits < (1 << self.width):
            raise ValueError(f"bits {self.bits} out of range for width {self.width}")

    @classmethod
    def from_string(cls, text: str) -> "Mask":
        """Parse a {0,1} string, X_1 leftmost."""
        if not text or any(ch not in "01" for ch in text):
            raise ValueError(f"mask string must be nonempty over {{0,1}}, got {text!r}")
        return cls(int(text, 2), len(text))

    def to_string(self) -> str:
        return format(self.bits, f"0{self.width}b")

    def coords(self) -> tuple[int, ...]:
        """1-based coordinates in the product, ascending."""
        return tuple(
            j + 1 for j in range(self.width) if self.bits >> (self.width - 1 - j) & 1
        )

    @property
    def is_identity(self) -> bool:
        return self.bits == 0

    def __str__(self) -> str:
        return self.to_string()


def _check_same_width(a: Mask, b: Mask) -> None:
    if a.width != b.width:
        raise ValueError(f"width mismatch: {a.width} != {b.width}")


def mask_product(a: Mask, b: Mask) -> Mask:
    """Product of interactions X_a * X_b = X_(a XOR b)."""
    _check_same_width(a, b)
    return Mask(a.bits ^ b.bits, a.width)


def _echelon_basis(vectors: Iterable[int]) -> list[int]:
    """Reduced row-echelon GF(2) basis as ints, descending by pivot bit."""
    basis: dict[int, int] = {}
    for v in vectors:
        while v:
            pivot = v.bit_length() - 1
            if pivot in basis:
                v ^= basis[pivot]
            else:
                basis[pivot] = v
                break
    # clear every pivot column from the other rows
    for p in sorted(basis):
        for q in list(basis):
            if q != p and (basis[q] >> p) & 1:
                basis[q] ^= basis[p]
    return [basis[p] for p in sorted(basis, reverse=True)]


@dataclass(frozen=True)
class MaskSpan:
    """GF(2) span of masks, kept as a reduced echelon basis."""

    basis: tuple[Mask, ...]
    width: int

    @property
    def dim(self) -> int:
        return len(self.basis)

    def __len__(self) -> int:
        return 1 << self.dim

    def __contains__(self, mask: Mask) -> bool:
        if mask.width != self.width:
            raise ValueError(f"width mismatch: {mask.width} != {self.width}")
        v = mask.bits
        for b in self.basis:
            if v >> (b.bits.bit_length() - 1) & 1:
                v ^= b.bits
        return v == 0

    def member_bits(self) -> np.ndarray:
        """All 2^dim elements as an int64 array in group order.

        Index c selects basis elements by its bits, basis[0] most significant,
        so element[c1] XOR element[c2] = element[c1 XOR c2].
        """
        members = np.zeros(1, dtype=np.int64)
        for b in reversed(self.basis):
            members = np.concatenate([members, members ^ b.bits])
        return members

    def members(self) -> list[Mask]:
        """All elements sorted ascending by integer value."""
        return [Mask(int(v), self.width) for v in np.sort(self.member_bits())]


def span_generate(gens: Sequence[Mask], width: Optional[int] = None) -> MaskSpan:
    """Reduced echelon span of the given masks; {0} for an empty list."""
    if gens:
        w = gens[0].width
        for g in gens[1:]:
            _check_same_width(gens[0], g)
    elif width is not None:
        w = width
    else:
        raise ValueError("empty generator list needs an explicit width")
    rows = _echelon_basis(g.bits for g in gens)
    return MaskSpan(tuple(Mask(r, w) for r in rows), w)


def span_intersect(u: MaskSpan, v: MaskSpan) -> MaskSpan:
    """Intersection of two spans (Zassenhaus over GF(2) with paired bits)."""
    if u.width != v.width:
        raise ValueError(f"width mismatch: {u.width} != {v.width}")
    w = u.width
    # rows (x | x) for x in u and (y | 0) for y in v; after elimination the
    # rows whose high half vanished carry a basis of the intersection low.
    rows = [(b.bits << w) | b.bits for b in u.basis] + [b.bits << w for b in v.basis]
    basis: dict[int, int] = {}
    for r in rows:
        while r:
            pivot = r.bit_length() - 1
            if pivot in basis:
                r ^= basis[pivot]
            else:
                basis[pivot] = r
                break
    low = [r & ((1 << w) - 1) for p, r in basis.items() if p < w]
    return MaskSpan(tuple(Mask(b, w) for b in _echelon_basis(low)), w)


@dataclass(frozen=True)
class Partition:
    """Three generator-mask lists defining derived binary vectors A, B, C."""

    p: int
    a_gens: tuple[Mask, ...]
    b_gens: tuple[Mask, ...]
    c_gens: tuple[Mask, ...]

    def __post_init__(self) -> None:
        if not 1 <= self.p <= WIDTH_CAP:
            raise ValueError(f"base width must be in 1..{WIDTH_CAP}, got {self.p}")
        object.__setattr__(self, "a_gens", tuple(self.a_gens))
        object.__setattr__(self, "b_gens", tuple(self.b_gens))
        object.__setattr__(self, "c_gens", tuple(self.c_gens))
        union_dim = 0
        for gens in (self.a_gens, self.b_gens, self.c_gens):
            for g in gens:
                if g.width != self.p:
                    raise ValueError(f"generator width {g.width} != base width {self.p}")
                if g.is_identity:
                    raise ValueError("generator masks must be nonzero")
        all_gens = self.a_gens + self.b_gens + self.c_gens
        union_dim = span_generate(all_gens, width=self.p).dim if all_gens else 0
        if union_dim < 1:
            raise ValueError("the union of the generator spans must be nondegenerate")

    @property
    def a_span(self) -> "MaskSpan":
        return span_generate(self.a_gens, width=self.p)

    @property
    def b_span(self) -> "MaskSpan":
        return span_generate(self.b_gens, width=self.p)

    @property
    def c_span(self) -> "MaskSpan":
        return span_generate(self.c_gens, width=self.p)

    @classmethod
    def coordinate_split(cls, r: int, s: int, t: int) -> "Partition":
        """Disjoint single-coordinate blocks: first r coords A, next s B, last t C."""
        if min(r, s, t) < 0 or r + s + t < 1:
            raise ValueError("block sizes must be nonnegative with positive total")
        p = r + s + t
        single = lambda j: Mask(1 << (p - 1 - j), p)  # noqa: E731
        return cls(
            p,
            tuple(single(j) for j in range(r)),
            tuple(single(r + j) for j in range(s)),
            tuple(single(r + s + j) for j in range(t)),
        )


@dataclass(frozen=True)
class IndexSets:
    """Center and wing mask lists: B = <B>\\{1}, L = <A,B>\\<B>, R = <B,C>\\<B>."""

    b_set: tuple[Mask, ...]
    l_set: tuple[Mask, ...]
    r_set: tuple[Mask, ...]
    width: int
    part: Optional[Partition] = field(default=None, compare=False)

    @property
    def overlap(self) -> tuple[Mask, ...]:
        """Masks present in both wings (derived-feature partitions only)."""
        shared = set(self.l_set) & set(self.r_set)
        return tuple(sorted(shared))

    def all_masks(self) -> tuple[Mask, ...]:
        return self.b_set + self.l_set + self.r_set


def build_index_sets(partition: Partition) -> IndexSets:
    """Index sets ordered (center, left wing, right wing), each ascending."""
    p = partition.p
    span_b = span_generate(partition.b_gens, width=p)
    span_ab = span_generate(partition.a_gens + partition.b_gens, width=p)
    span_bc = span_generate(partition.b_gens + partition.c_gens, width=p)
    in_b = set(int(v) for v in span_b.member_bits())
    b_set = sorted(v for v in in_b if v != 0)
    l_set = sorted(int(v) for v in span_ab.member_bits() if int(v) not in in_b)
    r_set = sorted(int(v) for v in span_bc.member_bits() if int(v) not in in_b)
    wrap = lambda vals: tuple(Mask(v, p) for v in vals)  # noqa: E731
    return IndexSets(wrap(b_set), wrap(l_set), wrap(r_set), p, partition)


def partition_to_json(part: Partition) -> str:
    """Serialize to the partition file format: {"p":3,"A":["100"],...}."""
    obj = {
        "p": part.p,
        "A": [g.to_string() for g in part.a_gens],
        "B": [g.to_string() for g in part.b_gens],
        "C": [g.to_string() for g in part.c_gens],
    }
    return json.dumps(obj, sort_keys=True)


def partition_from_json(text: str) -> Partition:
    """Parse the partition file format; mask strings are {0,1}, X_1 leftmost."""
    obj = json.loads(text)
    try:
        p = int(obj["p"])
        lists = {key: list(obj.get(key, [])) for key in ("A", "B", "C")}
    except (TypeError, KeyError) as exc:
        raise ValueError(f"partition JSON missing field: {exc}") from exc

    def parse_block(strings: list) -> tuple[Mask, ...]:
        masks = []
        for s in strings:
            m = Mask.from_string(str(s))
            if m.width != p:
                raise ValueError(f"mask {s!r} has width {m.width}, expected {p}")
            masks.append(m)
        return tuple(masks)

    return Partition(p, parse_block(lists["A"]), parse_block(lists["B"]), parse_block(lists["C"]))
