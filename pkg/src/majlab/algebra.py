"""Finite algebras given by operation tables, and their basic constructions.

Elements of an algebra of size n are the integers 0..n-1.  An operation of
arity k is a flat table of length n**k indexed with the leftmost argument
most significant: index(a_1, ..., a_k) = (((a_1 * n) + a_2) * n + ...) + a_k.
Products use the same mixed-radix convention, leftmost factor most
significant, so file formats and witnesses are bit-exact across runs.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from functools import cached_property, lru_cache
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import ParseError, ValidationError


@dataclass(frozen=True)
class Signature:
    """Operation names with arities.  Names unique, arity 0 allowed."""

    ops: tuple[tuple[str, int], ...]

    def __post_init__(self):
        names = [name for name, _ in self.ops]
        if len(set(names)) != len(names):
            raise ValidationError("duplicate operation name in signature")
        for name, arity in self.ops:
            if arity < 0:
                raise ValidationError(f"operation {name!r} has negative arity")

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(name for name, _ in self.ops)

    def arity(self, name: str) -> int:
        for n, a in self.ops:
            if n == name:
                return a
        raise ValidationError(f"unknown operation {name!r}")

    def index(self, name: str) -> int:
        for i, (n, _) in enumerate(self.ops):
            if n == name:
                return i
        raise ValidationError(f"unknown operation {name!r}")


def flat_index(args: Sequence[int], n: int) -> int:
    """Table index of an argument tuple, leftmost argument most significant."""
    idx = 0
    for a in args:
        idx = idx * n + a
    return idx


@dataclass(frozen=True)
class FiniteAlgebra:
    """A finite algebra: carrier {0..size-1} plus one flat table per operation.

    Immutable and hashable; tables are stored in signature order.
    """

    name: str
    size: int
    signature: Signature
    tables: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        if self.size <= 0:
            raise ValidationError(f"algebra size must be positive, got {self.size}")
        if len(self.tables) != len(self.signature.ops):
            raise ValidationError("one table required per operation")
        for (opname, arity), table in zip(self.signature.ops, self.tables):
            expected = self.size ** arity
            if len(table) != expected:
                raise ValidationError(
                    f"table length mismatch for operation {opname!r}: "
                    f"expected {expected}, got {len(table)}"
                )
            for i, v in enumerate(table):
                if not (0 <= v < self.size):
                    raise ValidationError(
                        f"entry out of range for operation {opname!r} at index {i}: {v}"
                    )

    @property
    def elements(self) -> range:
        return range(self.size)

    def table(self, name: str) -> tuple[int, ...]:
        return self.tables[self.signature.index(name)]

    def apply(self, name: str, args: Sequence[int]) -> int:
        arity = self.signature.arity(name)
        if len(args) != arity:
            raise ValidationError(
                f"operation {name!r} expects {arity} arguments, got {len(args)}"
            )
        return self.table(name)[flat_index(args, self.size)]

    def apply_by_index(self, op_index: int, args: Sequence[int]) -> int:
        return self.tables[op_index][flat_index(args, self.size)]

    def constants(self) -> list[int]:
        return [
            table[0]
            for (_, arity), table in zip(self.signature.ops, self.tables)
            if arity == 0
        ]

    def to_json_dict(self) -> dict:
        return {
            "name": self.name,
            "size": self.size,
            "operations": [
                {"name": opname, "arity": arity, "table": list(table)}
                for (opname, arity), table in zip(self.signature.ops, self.tables)
            ],
        }


def parse_algebra(text: str) -> FiniteAlgebra:
    """Parse the JSON algebra file format and verify all table invariants."""
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"malformed algebra file: {exc}") from exc
    if not isinstance(data, dict):
        raise ParseError("malformed algebra file: top level must be an object")
    try:
        name = data["name"]
        size = data["size"]
        operations = data["operations"]
    except KeyError as exc:
        raise ParseError(f"malformed algebra file: missing key {exc}") from exc
    if not isinstance(name, str):
        raise ParseError("malformed algebra file: 'name' must be a string")
    if not isinstance(size, int) or isinstance(size, bool):
        raise ParseError("malformed algebra file: 'size' must be an integer")
    if not isinstance(operations, list):
        raise ParseError("malformed algebra file: 'operations' must be a list")
    ops = []
    tables = []
    for entry in operations:
        if not isinstance(entry, dict):
            raise ParseError("malformed algebra file: operation entries must be objects")
        try:
            opname = entry["name"]
            arity = entry["arity"]
            table = entry["table"]
        except KeyError as exc:
            raise ParseError(
                f"malformed algebra file: operation missing key {exc}"
            ) from exc
        if not isinstance(opname, str):
            raise ParseError("malformed algebra file: operation name must be a string")
        if not isinstance(arity, int) or isinstance(arity, bool) or arity < 0:
            raise ParseError(
                f"malformed algebra file: bad arity for operation {opname!r}"
            )
        if not isinstance(table, list) or not all(
            isinstance(v, int) and not isinstance(v, bool) for v in table
        ):
            raise ParseError(
                f"malformed algebra file: table of operation {opname!r} must be a list of integers"
            )
        ops.append((opname, arity))
        tables.append(tuple(table))
    return FiniteAlgebra(
        name=name, size=size, signature=Signature(tuple(ops)), tables=tuple(tables)
    )


def algebra_to_json(algebra: FiniteAlgebra) -> str:
    return json.dumps(algebra.to_json_dict(), indent=2, sort_keys=True) + "\n"


# ---------------------------------------------------------------------------
# Terms


@dataclass(frozen=True)
class Var:
    """A term variable, by 0-based index."""

    index: int

    def to_prefix(self) -> str:
        return f"x{self.index}"


@dataclass(frozen=True)
class App:
    """An operation applied to subterms."""

    op: str
    args: tuple["TermExpr", ...]

    def to_prefix(self) -> str:
        inner = " ".join([self.op] + [a.to_prefix() for a in self.args])
        return f"({inner})"


TermExpr = Var | App


def eval_term(algebra: FiniteAlgebra, term: TermExpr, args: Sequence[int]) -> int:
    """Evaluate a term on concrete arguments under the obvious semantics."""
    if isinstance(term, Var):
        if term.index >= len(args):
            raise ValidationError(
                f"variable x{term.index} needs at least {term.index + 1} arguments"
            )
        return args[term.index]
    arity = algebra.signature.arity(term.op)
    if arity != len(term.args):
        raise ValidationError(
            f"operation {term.op!r} expects {arity} arguments, got {len(term.args)}"
        )
    values = [eval_term(algebra, sub, args) for sub in term.args]
    return algebra.apply(term.op, values)


# ---------------------------------------------------------------------------
# Products


@dataclass(frozen=True)
class ProductCodec:
    """Mixed-radix codec between product elements and coordinate tuples."""

    sizes: tuple[int, ...]

    @cached_property
    def places(self) -> tuple[int, ...]:
        acc = 1
        out = [1] * len(self.sizes)
        for i in reversed(range(len(self.sizes))):
            out[i] = acc
            acc *= self.sizes[i]
        return tuple(out)

    @cached_property
    def total(self) -> int:
        t = 1
        for s in self.sizes:
            t *= s
        return t

    def encode(self, coords: Sequence[int]) -> int:
        if len(coords) != len(self.sizes):
            raise ValidationError("coordinate count does not match factor count")
        code = 0
        for c, s, p in zip(coords, self.sizes, self.places):
            if not (0 <= c < s):
                raise ValidationError(f"coordinate {c} out of range for factor size {s}")
            code += c * p
        return code

    def decode(self, code: int) -> tuple[int, ...]:
        if not (0 <= code < self.total):
            raise ValidationError(f"element {code} out of range for product")
        return tuple((code // p) % s for s, p in zip(self.sizes, self.places))


@lru_cache(maxsize=256)
def product(algebras: tuple[FiniteAlgebra, ...]) -> tuple[FiniteAlgebra, ProductCodec]:
    """Direct product acting coordinatewise, with its element codec."""
    if not algebras:
        raise ValidationError("product of an empty family is not supported")
    signature = algebras[0].signature
    for a in algebras[1:]:
        if a.signature != signature:
            raise ValidationError(
                f"signature mismatch between {algebras[0].name!r} and {a.name!r}"
            )
    codec = ProductCodec(tuple(a.size for a in algebras))
    n = codec.total
    tables = []
    for op_index, (_, arity) in enumerate(signature.ops):
        table = []
        for args in itertools.product(range(n), repeat=arity):
            coords = [codec.decode(a) for a in args]
            value = [
                alg.apply_by_index(op_index, [c[i] for c in coords])
                for i, alg in enumerate(algebras)
            ]
            table.append(codec.encode(value))
        tables.append(tuple(table))
    name = "x".join(a.name for a in algebras)
    return (
        FiniteAlgebra(name=name, size=n, signature=signature, tables=tuple(tables)),
        codec,
    )


def power(algebra: FiniteAlgebra, exponent: int) -> tuple[FiniteAlgebra, ProductCodec]:
    """The direct power A^e (A itself for e = 1, with a 1-factor codec)."""
    if exponent < 1:
        raise ValidationError("power exponent must be at least 1")
    if exponent == 1:
        return algebra, ProductCodec((algebra.size,))
    alg, codec = product(tuple([algebra] * exponent))
    return (
        FiniteAlgebra(
            name=f"{algebra.name}^{exponent}",
            size=alg.size,
            signature=alg.signature,
            tables=alg.tables,
        ),
        codec,
    )


# ---------------------------------------------------------------------------
# Coordinatewise closure engine over lists of factors.
#
# Tuples over factors A_1 x ... x A_k are encoded as mixed-radix integers and
# operations are applied to whole batches with numpy, one factor at a time.
# This keeps subpower generation fast without materialising product tables.


class _TupleEngine:
    def __init__(self, factors: tuple[FiniteAlgebra, ...]):
        signature = factors[0].signature
        for f in factors[1:]:
            if f.signature != signature:
                raise ValidationError("signature mismatch among factors")
        self.factors = factors
        self.signature = signature
        self.codec = ProductCodec(tuple(f.size for f in factors))
        self.sizes = np.array(self.codec.sizes, dtype=np.int64)
        self.places = np.array(self.codec.places, dtype=np.int64)
        self.op_tables = [
            [np.array(f.tables[i], dtype=np.int64) for f in factors]
            for i in range(len(signature.ops))
        ]
        self._flat_tables: list[list[int] | None] | None = None
        self._np_flat_tables: list[np.ndarray | None] | None = None

    def _flat(self) -> list[list[int] | None]:
        """Per-operation flat tables over encoded codes, for small universes.

        Entry is None when the table would be too large to precompute.
        """
        if self._flat_tables is None:
            total = self.codec.total
            out: list[list[int] | None] = []
            for op_index, (_, arity) in enumerate(self.signature.ops):
                if arity == 0 or total ** arity > 250_000:
                    out.append(None)
                    continue
                codes = np.arange(total, dtype=np.int64)
                grids = np.meshgrid(*([codes] * arity), indexing="ij")
                args = [g.reshape(-1) for g in grids]
                out.append(self.apply(op_index, args).tolist())
            self._flat_tables = out
        return self._flat_tables

    def encode_rows(self, rows: Iterable[Sequence[int]]) -> list[int]:
        return [self.codec.encode(r) for r in rows]

    def decode_codes(self, codes: Iterable[int]) -> list[tuple[int, ...]]:
        return [self.codec.decode(int(c)) for c in codes]

    def _np_flat(self, op_index: int) -> np.ndarray | None:
        """Flat encoded-code table for one operation, cached; None if too big."""
        if self._np_flat_tables is None:
            self._np_flat_tables = [None] * len(self.signature.ops)
        cached = self._np_flat_tables[op_index]
        if cached is not None:
            return cached
        arity = self.signature.ops[op_index][1]
        total = self.codec.total
        if arity == 0 or total ** arity > 4_000_000:
            return None
        codes = np.arange(total, dtype=np.int64)
        grids = np.meshgrid(*([codes] * arity), indexing="ij")
        table = self._apply_raw(op_index, [g.reshape(-1) for g in grids])
        self._np_flat_tables[op_index] = table
        return table

    def _apply_raw(self, op_index: int, args: list[np.ndarray]) -> np.ndarray:
        out = np.zeros(len(args[0]), dtype=np.int64)
        for fi in range(len(self.factors)):
            place = int(self.places[fi])
            n = int(self.sizes[fi])
            tbl = self.op_tables[op_index][fi]
            flat = (args[0] // place) % n
            for a in args[1:]:
                flat = flat * n + (a // place) % n
            out += place * tbl[flat]
        return out

    def apply(self, op_index: int, args: list[np.ndarray]) -> np.ndarray:
        arity = self.signature.ops[op_index][1]
        if arity >= 1 and len(args[0]) >= 1024:
            flat_table = self._np_flat(op_index)
            if flat_table is not None:
                total = self.codec.total
                idx = args[0]
                for a in args[1:]:
                    idx = idx * total + a
                return flat_table[idx]
        return self._apply_raw(op_index, args)

    def constants(self) -> list[int]:
        out = []
        for op_index, (_, arity) in enumerate(self.signature.ops):
            if arity == 0:
                coords = [int(f.tables[op_index][0]) for f in self.factors]
                out.append(self.codec.encode(coords))
        return out

    def close(self, codes: Iterable[int]) -> list[int]:
        """Least superset closed under all operations, as sorted codes."""
        known = set(int(c) for c in codes)
        known.update(self.constants())
        if self.codec.total <= 300:
            return self._close_small(known)
        frontier = sorted(known)
        all_codes = list(frontier)
        while frontier:
            front_arr = np.array(frontier, dtype=np.int64)
            all_arr = np.array(all_codes, dtype=np.int64)
            old_arr = np.array(sorted(set(all_codes) - set(frontier)), dtype=np.int64)
            fresh: set[int] = set()
            for op_index, (_, arity) in enumerate(self.signature.ops):
                if arity == 0:
                    continue
                for args in _mixed_batches(old_arr, front_arr, all_arr, arity):
                    results = np.unique(self.apply(op_index, args))
                    for c in results.tolist():
                        if c not in known:
                            known.add(c)
                            fresh.add(c)
            frontier = sorted(fresh)
            all_codes.extend(frontier)
        return sorted(known)

    def _close_small(self, known: set[int]) -> list[int]:
        total = self.codec.total
        flats = self._flat()
        frontier = list(known)
        current = list(known)
        while frontier:
            fresh: list[int] = []
            old = list(current)
            for op_index, (_, arity) in enumerate(self.signature.ops):
                if arity == 0:
                    continue
                table = flats[op_index]
                if table is None:
                    # arity too wide to flatten; fall back to direct evaluation
                    for args in itertools.product(current, repeat=arity):
                        if not any(a in frontier for a in args):
                            continue
                        c = self._apply_one(op_index, args)
                        if c not in known:
                            known.add(c)
                            fresh.append(c)
                    continue
                if arity == 1:
                    for a in frontier:
                        c = table[a]
                        if c not in known:
                            known.add(c)
                            fresh.append(c)
                elif arity == 2:
                    for a in frontier:
                        base = a * total
                        for b in old:
                            c = table[base + b]
                            if c not in known:
                                known.add(c)
                                fresh.append(c)
                            c = table[b * total + a]
                            if c not in known:
                                known.add(c)
                                fresh.append(c)
                else:
                    front_set = set(frontier)
                    for args in itertools.product(current, repeat=arity):
                        if not any(a in front_set for a in args):
                            continue
                        idx = 0
                        for a in args:
                            idx = idx * total + a
                        c = table[idx]
                        if c not in known:
                            known.add(c)
                            fresh.append(c)
            current.extend(fresh)
            frontier = fresh
        return sorted(known)

    def _apply_one(self, op_index: int, args) -> int:
        coords_args = [self.codec.decode(a) for a in args]
        out = []
        for fi, factor in enumerate(self.factors):
            out.append(
                factor.apply_by_index(op_index, [c[fi] for c in coords_args])
            )
        return self.codec.encode(out)

    def closure_witness(self, codes: set[int]):
        """First operation application escaping the set, or None if closed."""
        arr = np.array(sorted(codes), dtype=np.int64)
        for op_index, (opname, arity) in enumerate(self.signature.ops):
            if arity == 0:
                c = self.constants()[_nullary_position(self.signature, op_index)]
                if c not in codes:
                    return opname, (), self.codec.decode(c)
                continue
            grids = np.meshgrid(*([arr] * arity), indexing="ij")
            args = [g.reshape(-1) for g in grids]
            results = self.apply(op_index, args)
            bad = [i for i, r in enumerate(results.tolist()) if r not in codes]
            if bad:
                i = bad[0]
                arg_tuple = tuple(self.codec.decode(int(a[i])) for a in args)
                return opname, arg_tuple, self.codec.decode(int(results[i]))
        return None


def _nullary_position(signature: Signature, op_index: int) -> int:
    pos = 0
    for i, (_, arity) in enumerate(signature.ops):
        if i == op_index:
            return pos
        if arity == 0:
            pos += 1
    raise ValidationError("operation index out of range")


def _mixed_batches(old: np.ndarray, new: np.ndarray, allc: np.ndarray, arity: int):
    """Argument batches covering every tuple with at least one new entry.

    Position i is the first coordinate drawn from the new elements; earlier
    coordinates come from old elements, later ones from the full set.
    """
    for i in range(arity):
        parts = [old] * i + [new] + [allc] * (arity - 1 - i)
        if any(len(p) == 0 for p in parts):
            continue
        grids = np.meshgrid(*parts, indexing="ij")
        yield [g.reshape(-1) for g in grids]


def content_key(algebra: FiniteAlgebra) -> tuple:
    """Cache key identifying an algebra up to renaming."""
    return (algebra.size, algebra.signature, algebra.tables)


_ENGINES: dict[tuple, _TupleEngine] = {}


def tuple_engine(factors: Sequence[FiniteAlgebra]) -> _TupleEngine:
    key = tuple(content_key(f) for f in factors)
    eng = _ENGINES.get(key)
    if eng is None:
        eng = _TupleEngine(tuple(factors))
        if len(_ENGINES) > 512:
            _ENGINES.clear()
        _ENGINES[key] = eng
    return eng


# ---------------------------------------------------------------------------
# Subpowers


@dataclass(frozen=True)
class SubPower:
    """A subuniverse of a finite product, stored as an explicit tuple set."""

    factors: tuple[FiniteAlgebra, ...]
    tuples: frozenset[tuple[int, ...]]

    @cached_property
    def sorted_tuples(self) -> tuple[tuple[int, ...], ...]:
        return tuple(sorted(self.tuples))

    @property
    def sizes(self) -> tuple[int, ...]:
        return tuple(f.size for f in self.factors)

    def __contains__(self, item: tuple[int, ...]) -> bool:
        return tuple(item) in self.tuples

    def validate(self) -> None:
        """Check coordinate ranges and closure under all operations."""
        sizes = self.sizes
        for t in self.tuples:
            if len(t) != len(self.factors):
                raise ValidationError(f"tuple {t} has wrong length")
            for i, (c, s) in enumerate(zip(t, sizes)):
                if not (0 <= c < s):
                    raise ValidationError(
                        f"tuple {t} coordinate {i} out of range for factor size {s}"
                    )
        engine = tuple_engine(self.factors)
        codes = set(engine.encode_rows(self.tuples))
        witness = engine.closure_witness(codes)
        if witness is not None:
            opname, args, result = witness
            raise ValidationError(
                f"tuple set not closed under {opname!r}: {args} -> {result}"
            )

    def to_json_dict(self) -> dict:
        return {
            "factors": list(self.sizes),
            "tuples": [list(t) for t in self.sorted_tuples],
        }


def generate_subpower(
    factors: Sequence[FiniteAlgebra], generators: Iterable[Sequence[int]]
) -> SubPower:
    """Close a set of generator tuples under all operations coordinatewise."""
    factors = tuple(factors)
    engine = tuple_engine(factors)
    gens = [tuple(g) for g in generators]
    sizes = engine.codec.sizes
    for g in gens:
        if len(g) != len(factors):
            raise ValidationError(f"generator {g} has wrong length")
        for i, (c, s) in enumerate(zip(g, sizes)):
            if not (0 <= c < s):
                raise ValidationError(
                    f"generator {g} coordinate {i} out of range for factor size {s}"
                )
    if not gens and not engine.constants():
        raise ValidationError("empty subalgebra undefined")
    codes = engine.close(engine.encode_rows(gens))
    return SubPower(
        factors=factors, tuples=frozenset(engine.decode_codes(codes))
    )


def subpower_is_closed(factors: Sequence[FiniteAlgebra], tuples: Iterable[Sequence[int]]):
    """Witness of non-closure (op, args, result) or None."""
    engine = tuple_engine(tuple(factors))
    codes = set(engine.encode_rows([tuple(t) for t in tuples]))
    return engine.closure_witness(codes)


# ---------------------------------------------------------------------------
# Homomorphisms, quotients, images


@dataclass(frozen=True)
class Homomorphism:
    """A map between algebras, stored as an image array over the domain."""

    domain: FiniteAlgebra
    codomain: FiniteAlgebra
    mapping: tuple[int, ...]

    def __post_init__(self):
        if len(self.mapping) != self.domain.size:
            raise ValidationError("homomorphism map must cover the whole domain")
        for x, y in enumerate(self.mapping):
            if not (0 <= y < self.codomain.size):
                raise ValidationError(f"image of {x} out of range: {y}")

    def __call__(self, x: int) -> int:
        return self.mapping[x]

    def validate(self) -> None:
        """Exhaustively check commutation with every operation table."""
        if self.domain.signature != self.codomain.signature:
            raise ValidationError("homomorphism endpoints have different signatures")
        n = self.domain.size
        for op_index, (opname, arity) in enumerate(self.domain.signature.ops):
            for args in itertools.product(range(n), repeat=arity):
                lhs = self.mapping[self.domain.apply_by_index(op_index, args)]
                rhs = self.codomain.apply_by_index(
                    op_index, [self.mapping[a] for a in args]
                )
                if lhs != rhs:
                    raise ValidationError(
                        f"map does not commute with {opname!r} at arguments {args}"
                    )

    def is_surjective(self) -> bool:
        return len(set(self.mapping)) == self.codomain.size


def image_of_hom(f: Homomorphism, subset: Iterable[int]) -> frozenset[int]:
    """Elementwise image of a closed subset; the image is closed again."""
    elems = sorted(set(int(x) for x in subset))
    for x in elems:
        if not (0 <= x < f.domain.size):
            raise ValidationError(f"element {x} out of domain range")
    witness = subpower_is_closed((f.domain,), [(x,) for x in elems])
    if witness is not None:
        opname, args, result = witness
        raise ValidationError(
            f"subset not closed under {opname!r}: {args} -> {result}"
        )
    return frozenset(f.mapping[x] for x in elems)


def quotient(algebra: FiniteAlgebra, theta) -> tuple[FiniteAlgebra, Homomorphism]:
    """Quotient by a congruence, blocks numbered by least element.

    Raises if the partition fails compatibility with some operation, naming
    the operation and a witness argument pair.
    """
    if theta.size != algebra.size:
        raise ValidationError("congruence size does not match algebra size")
    block_of = theta.block_of
    n_blocks = len(theta.blocks)
    reps = [blk[0] for blk in theta.blocks]
    tables = []
    for op_index, (opname, arity) in enumerate(algebra.signature.ops):
        table = []
        for bargs in itertools.product(range(n_blocks), repeat=arity):
            args = [reps[b] for b in bargs]
            table.append(block_of[algebra.apply_by_index(op_index, args)])
        # Well-definedness: every choice of representatives must agree.
        for args in itertools.product(range(algebra.size), repeat=arity):
            expected = table[flat_index([block_of[a] for a in args], n_blocks)]
            actual = block_of[algebra.apply_by_index(op_index, args)]
            if actual != expected:
                rep_args = tuple(reps[block_of[a]] for a in args)
                raise ValidationError(
                    f"partition not compatible with operation {opname!r}: "
                    f"arguments {args} and {rep_args} land in different blocks"
                )
        tables.append(tuple(table))
    quot = FiniteAlgebra(
        name=f"{algebra.name}/~",
        size=n_blocks,
        signature=algebra.signature,
        tables=tuple(tables),
    )
    hom = Homomorphism(domain=algebra, codomain=quot, mapping=tuple(block_of))
    return quot, hom
