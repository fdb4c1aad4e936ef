"""Term-operation clones and near-unanimity term synthesis.

The set of k-ary term operations of an algebra A is generated as the
subalgebra of A^(A^k) spanned by the k projections, keeping a witness
expression for every function discovered.  Closure is breadth-first by term
depth, operations in signature order, argument tuples in lexicographic order
over discovery indices, so "first found" is deterministic and witnesses stay
shallow.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .algebra import App, FiniteAlgebra, TermExpr, Var, flat_index
from .errors import GuardError, ValidationError

DEFAULT_COORD_BUDGET = 64
DEFAULT_SIZE_BUDGET = 100_000


def _carrier_size(table_length: int, arity: int) -> int:
    n = round(table_length ** (1.0 / arity))
    for cand in (n - 1, n, n + 1):
        if cand >= 1 and cand ** arity == table_length:
            return cand
    raise ValidationError(f"table length {table_length} is not a perfect {arity}th power")


@dataclass(frozen=True)
class TermOperation:
    """A function table A^arity -> A with a term expression witnessing it."""

    arity: int
    table: tuple[int, ...]
    witness: TermExpr

    def apply(self, args) -> int:
        return self.table[flat_index(args, _carrier_size(len(self.table), self.arity))]


@dataclass(frozen=True)
class CloneSearchReport:
    found: TermOperation | None
    generated_count: int
    exhausted: bool
    note: str = ""

    def to_json_dict(self) -> dict:
        return {
            "found": self.found is not None,
            "term": self.found.witness.to_prefix() if self.found else None,
            "table": list(self.found.table) if self.found else None,
            "clone_size": self.generated_count,
            "exhausted": self.exhausted,
        }


def free_subpower(
    algebra: FiniteAlgebra,
    arity: int,
    coord_budget: int = DEFAULT_COORD_BUDGET,
    size_budget: int = DEFAULT_SIZE_BUDGET,
) -> list[TermOperation]:
    """All arity-ary term operations of the algebra, in closure order."""
    if arity < 1:
        raise ValidationError("term arity must be at least 1")
    n = algebra.size
    length = n ** arity
    if length > coord_budget:
        raise GuardError(
            f"clone budget: {n}^{arity} = {length} coordinates exceeds {coord_budget}",
            partial=0,
        )
    # Coordinate c encodes an argument tuple, leftmost variable most significant.
    coords = np.arange(length, dtype=np.int64)
    rows: list[np.ndarray] = []
    witnesses: list[TermExpr] = []
    levels: list[int] = []
    index: dict[bytes, int] = {}

    def add(row: np.ndarray, witness: TermExpr, level: int) -> bool:
        key = row.tobytes()
        if key in index:
            return False
        if len(rows) >= size_budget:
            raise GuardError(
                f"clone budget: generated set exceeds {size_budget} elements",
                partial=len(rows),
            )
        index[key] = len(rows)
        rows.append(row)
        witnesses.append(witness)
        levels.append(level)
        return True

    for i in range(arity):
        proj = (coords // (n ** (arity - 1 - i))) % n
        add(proj.astype(np.int64), Var(i), 0)

    op_tables = [np.array(t, dtype=np.int64) for t in algebra.tables]
    depth = 0
    while True:
        snapshot = len(rows)
        produced = False
        for op_index, (opname, op_arity) in enumerate(algebra.signature.ops):
            if op_arity == 0:
                if depth == 0:
                    row = np.full(length, algebra.tables[op_index][0], dtype=np.int64)
                    produced |= add(row, App(opname, ()), 1)
                continue
            # Lazy iteration keeps the size budget responsive even when the
            # clone is far larger than the cap.
            arg_tuples = (
                t
                for t in itertools.product(range(snapshot), repeat=op_arity)
                if max(levels[i] for i in t) == depth
            )
            tbl = op_tables[op_index]
            while True:
                chunk = list(itertools.islice(arg_tuples, 4096))
                if not chunk:
                    break
                stacked = [
                    np.stack([rows[t[pos]] for t in chunk])
                    for pos in range(op_arity)
                ]
                flat = stacked[0]
                for part in stacked[1:]:
                    flat = flat * n + part
                results = tbl[flat]
                for t, row in zip(chunk, results):
                    if add(
                        row,
                        App(opname, tuple(witnesses[i] for i in t)),
                        depth + 1,
                    ):
                        produced = True
        if not produced:
            break
        depth += 1
    return [
        TermOperation(arity=arity, table=tuple(int(v) for v in row), witness=w)
        for row, w in zip(rows, witnesses)
    ]


def _nu_identity_indices(n: int, arity: int) -> list[tuple[np.ndarray, np.ndarray]]:
    """For each argument position, flat indices of the near-unanimity pattern
    (x everywhere, y at that position) paired with the expected values x."""
    xs, ys = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
    xs = xs.reshape(-1)
    ys = ys.reshape(-1)
    out = []
    for pos in range(arity):
        idx = np.zeros(len(xs), dtype=np.int64)
        for p in range(arity):
            idx = idx * n + (ys if p == pos else xs)
        out.append((idx, xs))
    return out


def _scan_for_identities(
    algebra: FiniteAlgebra, arity: int, coord_budget: int, size_budget: int
) -> CloneSearchReport:
    try:
        ops = free_subpower(algebra, arity, coord_budget, size_budget)
    except GuardError as exc:
        return CloneSearchReport(
            found=None,
            generated_count=exc.partial or 0,
            exhausted=False,
            note=str(exc),
        )
    patterns = _nu_identity_indices(algebra.size, arity)
    for op in ops:
        table = np.array(op.table, dtype=np.int64)
        if all((table[idx] == expected).all() for idx, expected in patterns):
            return CloneSearchReport(
                found=op, generated_count=len(ops), exhausted=True
            )
    return CloneSearchReport(found=None, generated_count=len(ops), exhausted=True)


def find_majority_term(
    algebra: FiniteAlgebra,
    coord_budget: int = DEFAULT_COORD_BUDGET,
    size_budget: int = DEFAULT_SIZE_BUDGET,
) -> CloneSearchReport:
    """Search the ternary clone for a term m with m(x,x,y)=m(x,y,x)=m(y,x,x)=x.

    "Not found" is only claimed when the whole clone was generated; a budget
    stop reports exhausted=False, meaning the answer is unknown.
    """
    return _scan_for_identities(algebra, 3, coord_budget, size_budget)


def find_nu_term(
    algebra: FiniteAlgebra,
    arity: int,
    coord_budget: int = DEFAULT_COORD_BUDGET,
    size_budget: int = DEFAULT_SIZE_BUDGET,
) -> CloneSearchReport:
    """Search the arity-ary clone for a near-unanimity term."""
    if arity < 3:
        raise ValidationError("near-unanimity terms need arity at least 3")
    return _scan_for_identities(algebra, arity, coord_budget, size_budget)


def is_majority_operation(algebra: FiniteAlgebra, op: TermOperation) -> bool:
    n = algebra.size
    if op.arity != 3 or len(op.table) != n ** 3:
        return False
    for x in range(n):
        for y in range(n):
            if op.table[flat_index((x, x, y), n)] != x:
                return False
            if op.table[flat_index((x, y, x), n)] != x:
                return False
            if op.table[flat_index((y, x, x), n)] != x:
                return False
    return True
