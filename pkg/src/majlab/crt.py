"""Congruence-system solvability: pairwise tests, brute forcing, and the
majority-driven constructive solver."""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass

import numpy as np

from .algebra import FiniteAlgebra
from .clone import TermOperation, is_majority_operation
from .congruence import Congruence, all_congruences
from .errors import MajlabError, ParseError, ValidationError


@dataclass(frozen=True)
class CongruenceSystem:
    """Rows x = a_i mod theta_i over one algebra."""

    algebra: FiniteAlgebra
    rows: tuple[tuple[Congruence, int], ...]

    def __post_init__(self):
        for theta, a in self.rows:
            if theta.size != self.algebra.size:
                raise ValidationError("congruence size does not match the algebra")
            if not (0 <= a < self.algebra.size):
                raise ValidationError(f"element {a} out of range")

    def block_masks(self) -> list[int]:
        """Bitmask of each row's target block."""
        out = []
        for theta, a in self.rows:
            mask = 0
            for x in theta.block_containing(a):
                mask |= 1 << x
            out.append(mask)
        return out

    def satisfied_by(self, x: int) -> bool:
        return all(theta.related(x, a) for theta, a in self.rows)

    def without_row(self, i: int) -> "CongruenceSystem":
        return CongruenceSystem(
            algebra=self.algebra, rows=self.rows[:i] + self.rows[i + 1 :]
        )

    def to_json_dict(self) -> dict:
        return {
            "rows": [
                {"blocks": theta.to_json_dict()["blocks"], "element": a}
                for theta, a in self.rows
            ]
        }


@dataclass(frozen=True)
class SolveReport:
    pairwise_solvable: bool
    failing_pair: tuple[int, int] | None
    solution: int | None
    method: str

    def to_json_dict(self) -> dict:
        return {
            "pairwise_solvable": self.pairwise_solvable,
            "failing_pair": list(self.failing_pair) if self.failing_pair else None,
            "solution": self.solution,
            "method": self.method,
        }


def is_pairwise_solvable(system: CongruenceSystem) -> tuple[bool, tuple[int, int] | None]:
    """Whether every two rows admit a common solution; first failing pair if not."""
    masks = system.block_masks()
    for i, j in itertools.combinations(range(len(masks)), 2):
        if masks[i] & masks[j] == 0:
            return False, (i, j)
    return True, None


def solve_brute(system: CongruenceSystem) -> SolveReport:
    """Least element of the intersection of all target blocks, if any."""
    pairwise, failing = is_pairwise_solvable(system)
    inter = (1 << system.algebra.size) - 1
    for mask in system.block_masks():
        inter &= mask
    solution = (inter & -inter).bit_length() - 1 if inter else None
    return SolveReport(
        pairwise_solvable=pairwise,
        failing_pair=failing,
        solution=solution,
        method="brute",
    )


def solve_constructive(system: CongruenceSystem, majority: TermOperation) -> SolveReport:
    """Solve a pairwise-solvable system by recursing on three subsystems.

    For three or more rows, solutions of the system minus row 1, minus row 2
    and minus row 3 are combined with the majority operation; each removed
    row is restored because the other two sub-solutions agree with its target
    modulo its congruence.  Systems of at most two rows are solved directly
    by block intersection.  Subsets recur, so results are memoized per subset.
    """
    if not is_majority_operation(system.algebra, majority):
        raise ValidationError("supplied operation is not a majority operation")
    pairwise, failing = is_pairwise_solvable(system)
    if not pairwise:
        raise ValidationError(f"system is not pairwise solvable at rows {failing}")
    masks = system.block_masks()
    n = system.algebra.size
    table = majority.table
    memo: dict[tuple[int, ...], int] = {}

    def solve(indices: tuple[int, ...]) -> int:
        if indices in memo:
            return memo[indices]
        if len(indices) <= 2:
            inter = (1 << n) - 1
            for i in indices:
                inter &= masks[i]
            if not inter:
                raise MajlabError(
                    f"subsystem {indices} not pairwise solvable; caller bug"
                )
            result = (inter & -inter).bit_length() - 1
        else:
            x1 = solve(indices[1:])
            x2 = solve(indices[:1] + indices[2:])
            x3 = solve(indices[:2] + indices[3:])
            result = table[(x1 * n + x2) * n + x3]
        memo[indices] = result
        return result

    solution = solve(tuple(range(len(system.rows))))
    for i, (theta, a) in enumerate(system.rows):
        if not theta.related(solution, a):
            raise MajlabError(f"constructive solution violates row {i}; solver bug")
    return SolveReport(
        pairwise_solvable=True,
        failing_pair=None,
        solution=solution,
        method="constructive",
    )


def check_pcrt(algebra: FiniteAlgebra, powers=None, cfg=None):
    """Search for a pairwise-solvable but unsolvable congruence system.

    Enumerates, for each configured power, every congruence tuple up to the
    configured length together with every element tuple, in canonical order.
    Pairwise solvability and the triple intersection are evaluated on block
    bitmask grids, one congruence tuple at a time.
    """
    from .checkers import CheckOutcome, _kept_powers
    from .config import RunConfig
    from .algebra import power as algebra_power

    cfg = cfg or RunConfig()
    powers = cfg.powers if powers is None else tuple(powers)
    kept, skipped = _kept_powers(algebra, powers, cfg.cong_size_guard)
    bounds = {
        "powers": list(kept),
        "skipped_powers": list(skipped),
        "max_rows": cfg.sys_len,
        "exhaustive_over_bounds": True,
    }
    for e in kept:
        base, _ = algebra_power(algebra, e)
        n = base.size
        congs = all_congruences(base, cfg.cong_size_guard)
        # masks[c][a] = bitmask of the block of a under congruence c
        masks = np.array(
            [
                [
                    sum(1 << x for x in c.block_containing(a))
                    for a in range(n)
                ]
                for c in congs
            ],
            dtype=np.int64,
        )
        for length in range(1, cfg.sys_len + 1):
            for cong_tuple in itertools.product(range(len(congs)), repeat=length):
                grids = []
                for pos, ci in enumerate(cong_tuple):
                    shape = [1] * length
                    shape[pos] = n
                    grids.append(masks[ci].reshape(shape))
                pairwise = np.ones([n] * length, dtype=bool)
                for i in range(length):
                    for j in range(i + 1, length):
                        pairwise &= (grids[i] & grids[j]) != 0
                total = grids[0].copy()
                for g in grids[1:]:
                    total = total & g
                violation = pairwise & (total == 0)
                if violation.any():
                    elems = tuple(int(v) for v in np.argwhere(violation)[0])
                    rows = [
                        {
                            "blocks": congs[ci].to_json_dict()["blocks"],
                            "element": a,
                        }
                        for ci, a in zip(cong_tuple, elems)
                    ]
                    witness = {"power": e, "rows": rows}
                    return CheckOutcome("PCRT", "fail", witness, bounds)
    verdict = "pass" if kept else "unknown"
    return CheckOutcome("PCRT", verdict, None, bounds)


def parse_system(text: str, algebra: FiniteAlgebra) -> CongruenceSystem:
    """Parse the JSON system format and validate each row's congruence."""
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"malformed system file: {exc}") from exc
    if not isinstance(data, dict) or not isinstance(data.get("rows"), list):
        raise ParseError("malformed system file: expected an object with 'rows'")
    rows = []
    for entry in data["rows"]:
        if not isinstance(entry, dict):
            raise ParseError("malformed system file: rows must be objects")
        try:
            blocks = entry["blocks"]
            element = entry["element"]
        except KeyError as exc:
            raise ParseError(f"malformed system file: row missing key {exc}") from exc
        theta = Congruence.from_blocks(algebra.size, blocks)
        witness = theta.compatibility_witness(algebra)
        if witness is not None:
            opname, args_a, args_b = witness
            raise ValidationError(
                f"row partition not compatible with {opname!r}: "
                f"{args_a} vs {args_b}"
            )
        if not isinstance(element, int) or isinstance(element, bool):
            raise ParseError("malformed system file: row element must be an integer")
        rows.append((theta, element))
    return CongruenceSystem(algebra=algebra, rows=tuple(rows))
