"""Congruences as compatible partitions, with generation and lattice operations."""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Sequence

from .algebra import FiniteAlgebra, Homomorphism
from .errors import GuardError, ValidationError
from .relations import BinaryRelation

DEFAULT_SIZE_GUARD = 12


@dataclass(frozen=True)
class Congruence:
    """A partition of {0..size-1}, blocks sorted by least element.

    Compatibility with an algebra is checked on demand, not at construction,
    so the same type also serves as a plain equivalence relation.
    """

    size: int
    blocks: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        seen: set[int] = set()
        for blk in self.blocks:
            if not blk:
                raise ValidationError("empty block in partition")
            if list(blk) != sorted(blk):
                raise ValidationError("block elements must be sorted")
            for x in blk:
                if not (0 <= x < self.size):
                    raise ValidationError(f"element {x} out of range")
                if x in seen:
                    raise ValidationError(f"element {x} appears in two blocks")
                seen.add(x)
        if len(seen) != self.size:
            raise ValidationError("partition does not cover the carrier")
        if [blk[0] for blk in self.blocks] != sorted(blk[0] for blk in self.blocks):
            raise ValidationError("blocks must be sorted by least element")

    @classmethod
    def from_blocks(cls, size: int, blocks: Iterable[Iterable[int]]) -> "Congruence":
        canon = sorted(tuple(sorted(set(blk))) for blk in blocks if blk)
        return cls(size=size, blocks=tuple(canon))

    @classmethod
    def from_block_of(cls, block_of: Sequence[int]) -> "Congruence":
        groups: dict[int, list[int]] = {}
        for x, b in enumerate(block_of):
            groups.setdefault(b, []).append(x)
        return cls.from_blocks(len(block_of), groups.values())

    @classmethod
    def from_pairs(cls, size: int, pairs: Iterable[Sequence[int]]) -> "Congruence":
        """Equivalence closure of a pair set."""
        parent = list(range(size))

        def find(x: int) -> int:
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        for x, y in pairs:
            rx, ry = find(x), find(y)
            if rx != ry:
                parent[ry] = rx
        return cls.from_block_of([find(x) for x in range(size)])

    @classmethod
    def discrete(cls, size: int) -> "Congruence":
        return cls(size=size, blocks=tuple((i,) for i in range(size)))

    @classmethod
    def codiscrete(cls, size: int) -> "Congruence":
        return cls(size=size, blocks=(tuple(range(size)),))

    @cached_property
    def block_of(self) -> tuple[int, ...]:
        out = [0] * self.size
        for b, blk in enumerate(self.blocks):
            for x in blk:
                out[x] = b
        return tuple(out)

    def related(self, x: int, y: int) -> bool:
        return self.block_of[x] == self.block_of[y]

    def block_containing(self, x: int) -> tuple[int, ...]:
        return self.blocks[self.block_of[x]]

    def as_relation(self) -> BinaryRelation:
        return BinaryRelation.from_blocks(self.size, self.blocks)

    def refines(self, other: "Congruence") -> bool:
        other_of = other.block_of
        return all(len({other_of[x] for x in blk}) == 1 for blk in self.blocks)

    def compatibility_witness(self, algebra: FiniteAlgebra):
        """First operation application separating related arguments, or None."""
        if algebra.size != self.size:
            raise ValidationError("congruence size does not match algebra size")
        block_of = self.block_of
        n = self.size
        for op_index, (opname, arity) in enumerate(algebra.signature.ops):
            if arity == 0:
                continue
            for args_a in itertools.product(range(n), repeat=arity):
                va = algebra.apply_by_index(op_index, args_a)
                for pos in range(arity):
                    for b in self.blocks[block_of[args_a[pos]]]:
                        args_b = args_a[:pos] + (b,) + args_a[pos + 1 :]
                        vb = algebra.apply_by_index(op_index, args_b)
                        if block_of[va] != block_of[vb]:
                            return opname, args_a, args_b
        return None

    def is_congruence_on(self, algebra: FiniteAlgebra) -> bool:
        return self.compatibility_witness(algebra) is None

    def to_json_dict(self) -> dict:
        return {"blocks": [list(blk) for blk in self.blocks]}


def principal_congruence(algebra: FiniteAlgebra, a: int, b: int) -> Congruence:
    """Least congruence identifying a and b.

    Iterates operation closure over related pairs differing in one coordinate,
    interleaved with equivalence closure, to a fixpoint.
    """
    n = algebra.size
    if not (0 <= a < n and 0 <= b < n):
        raise ValidationError("elements out of range")
    parent = list(range(n))

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    def union(x: int, y: int) -> bool:
        rx, ry = find(x), find(y)
        if rx == ry:
            return False
        if ry < rx:
            rx, ry = ry, rx
        parent[ry] = rx
        return True

    union(a, b)
    changed = True
    while changed:
        changed = False
        groups: dict[int, list[int]] = {}
        for x in range(n):
            groups.setdefault(find(x), []).append(x)
        pairs = [
            p for blk in groups.values() for p in itertools.combinations(blk, 2)
        ]
        for op_index, (_, arity) in enumerate(algebra.signature.ops):
            if arity == 0:
                continue
            for u, v in pairs:
                for pos in range(arity):
                    for ctx in itertools.product(range(n), repeat=arity - 1):
                        args_u = ctx[:pos] + (u,) + ctx[pos:]
                        args_v = ctx[:pos] + (v,) + ctx[pos:]
                        if union(
                            algebra.apply_by_index(op_index, args_u),
                            algebra.apply_by_index(op_index, args_v),
                        ):
                            changed = True
    return Congruence.from_block_of([find(x) for x in range(n)])


def all_congruences(
    algebra: FiniteAlgebra, size_guard: int = DEFAULT_SIZE_GUARD
) -> list[Congruence]:
    """Complete congruence list, canonically sorted, via principal-join closure.

    Every congruence is a join of principal ones, so closing the principal
    congruences under pairwise join enumerates the whole lattice.  This is
    far cheaper than filtering all partitions.
    """
    n = algebra.size
    if n > size_guard:
        raise GuardError(
            f"congruence enumeration guard exceeded: size {n} > {size_guard}"
        )
    found: dict[tuple, Congruence] = {}
    delta = Congruence.discrete(n)
    found[delta.blocks] = delta
    for a in range(n):
        for b in range(a + 1, n):
            c = principal_congruence(algebra, a, b)
            found[c.blocks] = c
    while True:
        new: dict[tuple, Congruence] = {}
        items = list(found.values())
        for i, x in enumerate(items):
            for y in items[i + 1 :]:
                j = congruence_join(x, y)
                if j.blocks not in found and j.blocks not in new:
                    new[j.blocks] = j
        if not new:
            break
        found.update(new)
    return sorted(found.values(), key=lambda c: c.blocks)


def kernel(f: Homomorphism) -> Congruence:
    """Partition of the domain by fibers of the map."""
    fibers: dict[int, list[int]] = {}
    for x, y in enumerate(f.mapping):
        fibers.setdefault(y, []).append(x)
    return Congruence.from_blocks(f.domain.size, fibers.values())


def congruence_meet(theta: Congruence, psi: Congruence) -> Congruence:
    if theta.size != psi.size:
        raise ValidationError("congruence size mismatch")
    labels = list(zip(theta.block_of, psi.block_of))
    groups: dict[tuple[int, int], list[int]] = {}
    for x, lab in enumerate(labels):
        groups.setdefault(lab, []).append(x)
    return Congruence.from_blocks(theta.size, groups.values())


def congruence_join(theta: Congruence, psi: Congruence) -> Congruence:
    if theta.size != psi.size:
        raise ValidationError("congruence size mismatch")
    pairs = [(blk[0], x) for blk in theta.blocks for x in blk[1:]]
    pairs += [(blk[0], x) for blk in psi.blocks for x in blk[1:]]
    return Congruence.from_pairs(theta.size, pairs)


def congruence_compose(theta: Congruence, psi: Congruence) -> BinaryRelation:
    """Relation composition; not a congruence in general, so a relation."""
    if theta.size != psi.size:
        raise ValidationError("congruence size mismatch")
    return theta.as_relation().compose(psi.as_relation())


def relation_image(f: Homomorphism, relation: BinaryRelation) -> BinaryRelation:
    """Image of a relation on the domain under f applied to both coordinates."""
    if relation.size != f.domain.size:
        raise ValidationError("relation size does not match the domain")
    rows = [0] * f.codomain.size
    for x, y in relation.pairs():
        rows[f.mapping[x]] |= 1 << f.mapping[y]
    return BinaryRelation(f.codomain.size, tuple(rows))


def relation_preimage(f: Homomorphism, relation: BinaryRelation) -> BinaryRelation:
    """Preimage of a relation on the codomain under f on both coordinates."""
    if relation.size != f.codomain.size:
        raise ValidationError("relation size does not match the codomain")
    rows = []
    for x in range(f.domain.size):
        acc = 0
        row = relation.rows[f.mapping[x]]
        for y in range(f.domain.size):
            if row >> f.mapping[y] & 1:
                acc |= 1 << y
        rows.append(acc)
    return BinaryRelation(f.domain.size, tuple(rows))


def check_inverse_image_identity(f: Homomorphism, relation: BinaryRelation) -> bool:
    """Whether pulling back the pushforward of a relation equals K.S.K with K
    the kernel of f.  Expected to hold for every surjection."""
    if not f.is_surjective():
        raise ValidationError("homomorphism is not surjective")
    lhs = relation_preimage(f, relation_image(f, relation))
    k = kernel(f).as_relation()
    rhs = k.compose(relation).compose(k)
    return lhs == rhs
