"""Binary relation calculus and subpower projection machinery.

Relations are stored as packed bit rows: row x is an int whose bit y is set
iff (x, y) is in the relation.  The JSON form is the sorted pair list.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Mapping, Sequence

import numpy as np

from .algebra import FiniteAlgebra, ProductCodec, SubPower, product, subpower_is_closed, tuple_engine
from .errors import GuardError, MajlabError, ValidationError


@dataclass(frozen=True)
class BinaryRelation:
    size: int
    rows: tuple[int, ...]

    def __post_init__(self):
        if self.size <= 0:
            raise ValidationError("relation size must be positive")
        if len(self.rows) != self.size:
            raise ValidationError("relation must have one row per element")
        mask = (1 << self.size) - 1
        for r in self.rows:
            if r & ~mask:
                raise ValidationError("relation row has bits outside the carrier")

    # -- constructors

    @classmethod
    def empty(cls, size: int) -> "BinaryRelation":
        return cls(size, tuple([0] * size))

    @classmethod
    def diagonal(cls, size: int) -> "BinaryRelation":
        return cls(size, tuple(1 << i for i in range(size)))

    @classmethod
    def full(cls, size: int) -> "BinaryRelation":
        mask = (1 << size) - 1
        return cls(size, tuple([mask] * size))

    @classmethod
    def from_pairs(cls, size: int, pairs: Iterable[Sequence[int]]) -> "BinaryRelation":
        rows = [0] * size
        for x, y in pairs:
            if not (0 <= x < size and 0 <= y < size):
                raise ValidationError(f"pair ({x}, {y}) out of range for size {size}")
            rows[x] |= 1 << y
        return cls(size, tuple(rows))

    @classmethod
    def from_blocks(cls, size: int, blocks: Iterable[Sequence[int]]) -> "BinaryRelation":
        rows = [0] * size
        for blk in blocks:
            mask = 0
            for x in blk:
                mask |= 1 << x
            for x in blk:
                rows[x] |= mask
        return cls(size, tuple(rows))

    # -- queries

    def has(self, x: int, y: int) -> bool:
        return bool(self.rows[x] >> y & 1)

    def pairs(self) -> list[tuple[int, int]]:
        out = []
        for x, row in enumerate(self.rows):
            while row:
                low = row & -row
                out.append((x, low.bit_length() - 1))
                row ^= low
        return out

    @cached_property
    def pair_count(self) -> int:
        return sum(r.bit_count() for r in self.rows)

    def is_reflexive(self) -> bool:
        return all(r >> i & 1 for i, r in enumerate(self.rows))

    def is_symmetric(self) -> bool:
        return self == self.opposite()

    def is_transitive(self) -> bool:
        return self.compose(self).issubset(self)

    def issubset(self, other: "BinaryRelation") -> bool:
        self._check(other)
        return all(r & ~s == 0 for r, s in zip(self.rows, other.rows))

    def _check(self, other: "BinaryRelation") -> None:
        if self.size != other.size:
            raise ValidationError(
                f"relation size mismatch: {self.size} vs {other.size}"
            )

    # -- calculus

    def compose(self, other: "BinaryRelation") -> "BinaryRelation":
        """(x, z) related iff some y has (x, y) here and (y, z) in other."""
        self._check(other)
        rows = []
        for row in self.rows:
            acc = 0
            r = row
            while r:
                low = r & -r
                acc |= other.rows[low.bit_length() - 1]
                r ^= low
            rows.append(acc)
        return BinaryRelation(self.size, tuple(rows))

    def meet(self, other: "BinaryRelation") -> "BinaryRelation":
        self._check(other)
        return BinaryRelation(
            self.size, tuple(a & b for a, b in zip(self.rows, other.rows))
        )

    def union(self, other: "BinaryRelation") -> "BinaryRelation":
        self._check(other)
        return BinaryRelation(
            self.size, tuple(a | b for a, b in zip(self.rows, other.rows))
        )

    def opposite(self) -> "BinaryRelation":
        rows = [0] * self.size
        for x, row in enumerate(self.rows):
            r = row
            while r:
                low = r & -r
                rows[low.bit_length() - 1] |= 1 << x
                r ^= low
        return BinaryRelation(self.size, tuple(rows))

    def transitive_closure(self) -> "BinaryRelation":
        rows = list(self.rows)
        for k in range(self.size):
            bk = rows[k]
            mk = 1 << k
            for i in range(self.size):
                if rows[i] & mk:
                    rows[i] |= bk
        return BinaryRelation(self.size, tuple(rows))

    def to_json_dict(self) -> dict:
        return {"size": self.size, "pairs": [list(p) for p in self.pairs()]}


def compose(r: BinaryRelation, s: BinaryRelation) -> BinaryRelation:
    return r.compose(s)


def meet(r: BinaryRelation, s: BinaryRelation) -> BinaryRelation:
    return r.meet(s)


def opposite(r: BinaryRelation) -> BinaryRelation:
    return r.opposite()


def union_transitive_closure(r: BinaryRelation, s: BinaryRelation) -> BinaryRelation:
    """Least transitive relation containing the union."""
    return r.union(s).transitive_closure()


# ---------------------------------------------------------------------------
# Subpower projections and reconstruction


def j_image(subpower: SubPower, indices: Sequence[int]) -> SubPower:
    """Projection of a subpower onto the listed coordinates, in that order."""
    idx = list(indices)
    if not idx:
        raise ValidationError("projection onto an empty index set is undefined")
    for i in idx:
        if not (0 <= i < len(subpower.factors)):
            raise ValidationError(f"factor index {i} out of range")
    factors = tuple(subpower.factors[i] for i in idx)
    tuples = frozenset(tuple(t[i] for i in idx) for t in subpower.tuples)
    return SubPower(factors=factors, tuples=tuples)


def pullback_reconstruct(
    factors: Sequence[FiniteAlgebra],
    images: Mapping[tuple[int, int], SubPower],
) -> SubPower:
    """Largest subpower whose pairwise projections lie inside the given images.

    The result always contains any subpower whose images were taken.
    """
    factors = tuple(factors)
    sizes = tuple(f.size for f in factors)
    total = 1
    for s in sizes:
        total *= s
    if total > 50_000_000:
        raise GuardError(f"reconstruction grid too large: {total} tuples")
    masks = {}
    for (i, j), img in images.items():
        if not (0 <= i < len(factors) and 0 <= j < len(factors) and i != j):
            raise ValidationError(f"invalid factor index pair ({i}, {j})")
        if img.sizes != (sizes[i], sizes[j]):
            raise ValidationError(
                f"image for pair ({i}, {j}) has factor sizes {img.sizes}, "
                f"expected {(sizes[i], sizes[j])}"
            )
        m = np.zeros((sizes[i], sizes[j]), dtype=bool)
        for t in img.tuples:
            m[t[0], t[1]] = True
        masks[(i, j)] = m
    grid = np.ones(sizes, dtype=bool)
    k = len(factors)
    for (i, j), m in masks.items():
        shape = [1] * k
        shape[i] = sizes[i]
        shape[j] = sizes[j]
        if i < j:
            grid &= m.reshape(shape)
        else:
            grid &= m.T.reshape(shape)
    tuples = frozenset(tuple(int(c) for c in t) for t in np.argwhere(grid))
    return SubPower(factors=factors, tuples=tuples)


# ---------------------------------------------------------------------------
# The ternary Horn condition


@dataclass(frozen=True)
class TernaryWitness:
    """A violation instance: three premise triples present, conclusion absent.

    Premises are (x, y, z_prime), (x, y_prime, z), (x_prime, y, z); the absent
    conclusion is (x, y, z).
    """

    x: int
    y: int
    z: int
    x_prime: int
    y_prime: int
    z_prime: int

    def premises(self) -> tuple[tuple[int, int, int], ...]:
        return (
            (self.x, self.y, self.z_prime),
            (self.x, self.y_prime, self.z),
            (self.x_prime, self.y, self.z),
        )

    def conclusion(self) -> tuple[int, int, int]:
        return (self.x, self.y, self.z)

    def to_json_dict(self) -> dict:
        return {
            "x": self.x,
            "y": self.y,
            "z": self.z,
            "x_prime": self.x_prime,
            "y_prime": self.y_prime,
            "z_prime": self.z_prime,
        }


def check_majority_selecting(subpower: SubPower) -> TernaryWitness | None:
    """Least witness violating the majority-selecting Horn condition, if any.

    The witness is lexicographically least over (x, y, z, x', y', z').
    """
    if len(subpower.factors) != 3:
        raise ValidationError("majority-selecting check needs exactly 3 factors")
    s1, s2, s3 = subpower.sizes
    tuples = subpower.sorted_tuples
    if not tuples:
        return None
    arr = np.array(tuples, dtype=np.int64)
    m12 = np.zeros((s1, s2), dtype=bool)
    m13 = np.zeros((s1, s3), dtype=bool)
    m23 = np.zeros((s2, s3), dtype=bool)
    m12[arr[:, 0], arr[:, 1]] = True
    m13[arr[:, 0], arr[:, 2]] = True
    m23[arr[:, 1], arr[:, 2]] = True
    member = subpower.tuples
    slices: dict[int, np.ndarray] = {}
    for t in tuples:
        sl = slices.get(t[0])
        if sl is None:
            sl = np.zeros((s2, s3), dtype=bool)
            slices[t[0]] = sl
        sl[t[1], t[2]] = True
    empty = np.zeros((s2, s3), dtype=bool)
    for x in range(s1):
        cand = m12[x][:, None] & m13[x][None, :] & m23
        viol = cand & ~slices.get(x, empty)
        if not viol.any():
            continue
        y, z = (int(c) for c in np.argwhere(viol)[0])
        z_prime = min(zz for zz in range(s3) if (x, y, zz) in member)
        y_prime = min(yy for yy in range(s2) if (x, yy, z) in member)
        x_prime = min(xx for xx in range(s1) if (xx, y, z) in member)
        return TernaryWitness(x, y, z, x_prime, y_prime, z_prime)
    return None


# ---------------------------------------------------------------------------
# Transpose products and direct decomposability


def transpose_product(r1: BinaryRelation, r2: BinaryRelation) -> BinaryRelation:
    """Relation on the product relating ((x,y),(x',y')) iff componentwise related."""
    s1, s2 = r1.size, r2.size
    size = s1 * s2
    rows = []
    for x in range(s1):
        row1 = r1.rows[x]
        for y in range(s2):
            acc = 0
            r = row1
            while r:
                low = r & -r
                xp = low.bit_length() - 1
                acc |= r2.rows[y] << (xp * s2)
                r ^= low
            rows.append(acc)
    return BinaryRelation(size, tuple(rows))


@dataclass(frozen=True)
class DecompositionReport:
    holds: bool
    r1: BinaryRelation
    r2: BinaryRelation
    witness_pair: tuple[int, int] | None
    relation_pairs: int
    product_pairs: int

    def to_json_dict(self) -> dict:
        return {
            "holds": self.holds,
            "r1": self.r1.to_json_dict(),
            "r2": self.r2.to_json_dict(),
            "witness_pair": list(self.witness_pair) if self.witness_pair else None,
            "relation_pairs": self.relation_pairs,
            "product_pairs": self.product_pairs,
        }


def projection_relations(
    relation: BinaryRelation, left_size: int, right_size: int
) -> tuple[BinaryRelation, BinaryRelation]:
    """Images of a relation on X x Y under the projections to X^2 and Y^2."""
    if relation.size != left_size * right_size:
        raise ValidationError("relation size does not match the product size")
    rows1 = [0] * left_size
    rows2 = [0] * right_size
    for u, v in relation.pairs():
        x, y = divmod(u, right_size)
        xp, yp = divmod(v, right_size)
        rows1[x] |= 1 << xp
        rows2[y] |= 1 << yp
    return (
        BinaryRelation(left_size, tuple(rows1)),
        BinaryRelation(right_size, tuple(rows2)),
    )


def direct_decomposability(
    left: FiniteAlgebra,
    right: FiniteAlgebra,
    relation: BinaryRelation,
    validate: bool = True,
) -> DecompositionReport:
    """Whether a reflexive compatible relation on a 2-factor product equals the
    transpose product of its two projections."""
    prod, _ = product((left, right))
    if relation.size != prod.size:
        raise ValidationError("relation size does not match the product size")
    if not relation.is_reflexive():
        raise ValidationError("relation is not reflexive")
    if validate:
        witness = subpower_is_closed((prod, prod), relation.pairs())
        if witness is not None:
            opname, args, result = witness
            raise ValidationError(
                f"relation not compatible with {opname!r}: {args} -> {result}"
            )
    r1, r2 = projection_relations(relation, left.size, right.size)
    prod_rel = transpose_product(r1, r2)
    if not relation.issubset(prod_rel):
        raise MajlabError(
            "internal invariant violated: relation exceeds its projection product"
        )
    holds = prod_rel == relation
    witness_pair = None
    if not holds:
        witness_pair = min(set(prod_rel.pairs()) - set(relation.pairs()))
    return DecompositionReport(
        holds=holds,
        r1=r1,
        r2=r2,
        witness_pair=witness_pair,
        relation_pairs=relation.pair_count,
        product_pairs=prod_rel.pair_count,
    )
