"""Executable condition checks and the cross-check harness.

Every check returns a CheckOutcome whose verdict is pass, fail or unknown.
A fail always carries a witness that can be re-verified independently.  A
pass is definitive only relative to the bounds recorded alongside it; the
term search in the clone module is the one absolute decision procedure, and
the cross-check harness treats any disagreement between a found majority
term and a failing condition as a fatal implementation bug.
"""

from __future__ import annotations

import itertools
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from math import comb

import numpy as np

from .algebra import (
    FiniteAlgebra,
    SubPower,
    content_key,
    power,
    product,
    quotient,
    tuple_engine,
)
from .clone import CloneSearchReport, find_majority_term
from .config import RunConfig
from .congruence import all_congruences
from .crt import check_pcrt
from .errors import GuardError
from .relations import (
    BinaryRelation,
    check_majority_selecting,
    direct_decomposability,
)

CONDITIONS = (
    "MAJ-SELECT",
    "PIXLEY-REFL-II",
    "PIXLEY-REFL-III",
    "PIXLEY-CONG",
    "BERGMAN",
    "PCRT",
    "IMAGE-MEET",
    "DDRR",
)

# Conditions whose failure alone proves no majority term exists, while their
# pass proves nothing.
IMPLICATION_ONLY = ("IMAGE-MEET", "DDRR")


@dataclass(frozen=True)
class CheckOutcome:
    condition: str
    verdict: str
    witness: dict | None
    bounds: dict

    def to_json_dict(self) -> dict:
        return {
            "id": self.condition,
            "verdict": self.verdict,
            "bounds": self.bounds,
            "witness": self.witness,
        }


def _kept_powers(algebra: FiniteAlgebra, powers, guard):
    kept, skipped = [], []
    for e in powers:
        if algebra.size ** e <= guard:
            kept.append(e)
        else:
            skipped.append(e)
    return kept, skipped


# ---------------------------------------------------------------------------
# Enumeration helpers


_SUBPOWER_CACHE: dict = {}


def enumerate_subpowers(factors, gen_cap: int, closure_budget: int):
    """Generated subpowers in generator-set order, deduplicated.

    The effective generator cap shrinks until the number of generator sets
    fits the closure budget.  Enumeration is exhaustive over all subpowers
    exactly when the cap reaches the universe size.
    """
    engine = tuple_engine(tuple(factors))
    key = (tuple(content_key(f) for f in factors), gen_cap, closure_budget)
    cached = _SUBPOWER_CACHE.get(key)
    if cached is not None:
        return engine, cached[0], cached[1]
    universe = engine.codec.total
    cap = min(gen_cap, universe)
    while cap > 1 and sum(comb(universe, c) for c in range(1, cap + 1)) > closure_budget:
        cap -= 1
    seen: set[frozenset[int]] = set()
    results = []
    for size in range(1, cap + 1):
        for gens in itertools.combinations(range(universe), size):
            codes = frozenset(engine.close(gens))
            if codes in seen:
                continue
            seen.add(codes)
            results.append((gens, codes))
    bounds = {
        "universe": universe,
        "generator_cap": gen_cap,
        "effective_cap": cap,
        "generator_sets": sum(comb(universe, c) for c in range(1, cap + 1)),
        "distinct_subpowers": len(results),
        "exhaustive": cap >= universe,
    }
    if len(_SUBPOWER_CACHE) > 64:
        _SUBPOWER_CACHE.clear()
    _SUBPOWER_CACHE[key] = (results, bounds)
    return engine, results, bounds


_RELATION_CACHE: dict = {}


def enumerate_reflexive_relations(
    base: FiniteAlgebra, cfg: RunConfig
) -> tuple[list[BinaryRelation], dict]:
    """Reflexive compatible relations on an algebra, canonically sorted.

    Exhaustive by subset scan when the off-diagonal cell count is small,
    otherwise generated by closing the diagonal plus small pair sets.
    """
    key = (
        content_key(base),
        cfg.relation_exhaustive_bits,
        cfg.relation_gen_cap,
        cfg.closure_budget,
    )
    cached = _RELATION_CACHE.get(key)
    if cached is not None:
        return cached
    n = base.size
    offdiag = [(x, y) for x in range(n) for y in range(n) if x != y]
    engine = tuple_engine((base, base))
    diagonal = [engine.codec.encode((x, x)) for x in range(n)]
    relations: set[tuple[int, ...]] = set()
    if len(offdiag) <= cfg.relation_exhaustive_bits:
        exhaustive = True
        for mask in range(1 << len(offdiag)):
            pairs = [p for i, p in enumerate(offdiag) if mask >> i & 1]
            codes = set(diagonal) | {engine.codec.encode(p) for p in pairs}
            if engine.closure_witness(codes) is None:
                rel = BinaryRelation.from_pairs(
                    n, [engine.codec.decode(c) for c in codes]
                )
                relations.add(rel.rows)
    else:
        exhaustive = False
        cap = cfg.relation_gen_cap
        while cap > 1 and sum(
            comb(len(offdiag), c) for c in range(1, cap + 1)
        ) > cfg.closure_budget:
            cap -= 1
        relations.add(BinaryRelation.diagonal(n).rows)
        for size in range(1, cap + 1):
            for extra in itertools.combinations(offdiag, size):
                codes = engine.close(
                    diagonal + [engine.codec.encode(p) for p in extra]
                )
                rel = BinaryRelation.from_pairs(
                    n, [engine.codec.decode(c) for c in codes]
                )
                relations.add(rel.rows)
    ordered = sorted(
        (BinaryRelation(n, rows) for rows in relations), key=lambda r: r.pairs()
    )
    bounds = {
        "relation_count": len(ordered),
        "exhaustive": exhaustive,
    }
    result = (ordered, bounds)
    if len(_RELATION_CACHE) > 64:
        _RELATION_CACHE.clear()
    _RELATION_CACHE[key] = result
    return result


# ---------------------------------------------------------------------------
# Pixley congruence identity


def check_pixley_congruences(
    algebra: FiniteAlgebra, powers=None, cfg: RunConfig = RunConfig()
) -> CheckOutcome:
    """Test a(meet)(b o c) = (a meet b) o (a meet c) over all congruence triples."""
    powers = cfg.powers if powers is None else tuple(powers)
    kept, skipped = _kept_powers(algebra, powers, cfg.cong_size_guard)
    bounds = {
        "powers": list(kept),
        "skipped_powers": list(skipped),
        "exhaustive_over_bounds": True,
    }
    for e in kept:
        base, _ = power(algebra, e)
        congs = all_congruences(base, cfg.cong_size_guard)
        rels = [c.as_relation() for c in congs]
        for (ia, ra), (ib, rb), (ic, rc) in itertools.product(
            enumerate(rels), repeat=3
        ):
            lhs = ra.meet(rb.compose(rc))
            rhs = ra.meet(rb).compose(ra.meet(rc))
            if lhs != rhs:
                pair = min(set(lhs.pairs()) ^ set(rhs.pairs()))
                witness = {
                    "power": e,
                    "size": base.size,
                    "alpha": congs[ia].to_json_dict()["blocks"],
                    "beta": congs[ib].to_json_dict()["blocks"],
                    "gamma": congs[ic].to_json_dict()["blocks"],
                    "pair": list(pair),
                }
                return CheckOutcome("PIXLEY-CONG", "fail", witness, bounds)
    verdict = "pass" if kept else "unknown"
    return CheckOutcome("PIXLEY-CONG", verdict, None, bounds)


# ---------------------------------------------------------------------------
# Pixley containments for reflexive relations


def check_pixley_reflexive(
    algebra: FiniteAlgebra, powers=None, cfg: RunConfig = RunConfig()
) -> tuple[CheckOutcome, CheckOutcome]:
    """Test both reflexive-relation containments over enumerated triples.

    Condition II: (A o B) meet (A o C) contained in A o (B meet C).
    Condition III: A meet (B o C) contained in (A meet B) o (A meet C).
    """
    powers = cfg.powers if powers is None else tuple(powers)
    kept = [e for e in powers if (algebra.size ** e) ** 2 <= cfg.relation_space_cap]
    skipped = [e for e in powers if e not in kept]
    fail_ii = fail_iii = None
    exhaustive = True
    count_cap_hit = False
    for e in kept:
        base, _ = power(algebra, e)
        rels, rel_bounds = enumerate_reflexive_relations(base, cfg)
        exhaustive = exhaustive and rel_bounds["exhaustive"]
        if len(rels) > cfg.relation_list_cap:
            rels = rels[: cfg.relation_list_cap]
            count_cap_hit = True
        n = base.size
        stack = np.zeros((len(rels), n, n), dtype=np.uint8)
        for i, r in enumerate(rels):
            for x, y in r.pairs():
                stack[i, x, y] = 1
        # all pairwise composites and meets, reused across the triple scan
        composites = (np.einsum("bij,cjk->bcik", stack, stack) > 0).astype(np.uint8)
        meets = stack[:, None, :, :] & stack[None, :, :, :]

        def witness_payload(a, idx, kind):
            b, c, x, y = (int(v) for v in idx)
            return {
                "power": e,
                "containment": kind,
                "a": rels[a].to_json_dict()["pairs"],
                "b": rels[b].to_json_dict()["pairs"],
                "c": rels[c].to_json_dict()["pairs"],
                "pair": [x, y],
            }

        for a in range(len(rels)):
            if fail_ii is None:
                lhs = composites[a][:, None] & composites[a][None, :]
                rhs = np.einsum("ij,bcjk->bcik", stack[a], meets) > 0
                viol = lhs & ~rhs
                if viol.any():
                    fail_ii = witness_payload(a, np.argwhere(viol)[0], "II")
            if fail_iii is None:
                lhs = stack[a][None, None] & composites
                inter = stack[a][None] & stack
                rhs = np.einsum("bij,cjk->bcik", inter, inter) > 0
                viol = lhs & ~rhs
                if viol.any():
                    fail_iii = witness_payload(a, np.argwhere(viol)[0], "III")
            if fail_ii is not None and fail_iii is not None:
                break
        if fail_ii is not None and fail_iii is not None:
            break
    bounds = {
        "powers": list(kept),
        "skipped_powers": list(skipped),
        "relations_exhaustive": exhaustive and not count_cap_hit,
    }
    pass_verdict = "pass" if kept else "unknown"
    out_ii = CheckOutcome(
        "PIXLEY-REFL-II",
        "fail" if fail_ii else pass_verdict,
        fail_ii,
        bounds,
    )
    out_iii = CheckOutcome(
        "PIXLEY-REFL-III",
        "fail" if fail_iii else pass_verdict,
        fail_iii,
        bounds,
    )
    return out_ii, out_iii


# ---------------------------------------------------------------------------
# Two-fold decomposition of subpowers


def _pair_masks(tuples, sizes):
    arr = np.array(sorted(tuples), dtype=np.int64)
    masks = {}
    k = len(sizes)
    for i in range(k):
        for j in range(i + 1, k):
            m = np.zeros((sizes[i], sizes[j]), dtype=bool)
            m[arr[:, i], arr[:, j]] = True
            masks[(i, j)] = m
    return masks


def _reconstruction_extra(tuples, sizes, masks):
    """Count of the pairwise reconstruction and its first tuple outside the set."""
    k = len(sizes)
    if k == 3:
        by_first: dict[int, np.ndarray] = {}
        for t in tuples:
            sl = by_first.get(t[0])
            if sl is None:
                sl = np.zeros((sizes[1], sizes[2]), dtype=bool)
                by_first[t[0]] = sl
            sl[t[1], t[2]] = True
        empty = np.zeros((sizes[1], sizes[2]), dtype=bool)
        count = 0
        first_extra = None
        for x in range(sizes[0]):
            cand = masks[(0, 1)][x][:, None] & masks[(0, 2)][x][None, :] & masks[(1, 2)]
            count += int(cand.sum())
            if first_extra is None:
                extra = cand & ~by_first.get(x, empty)
                if extra.any():
                    y, z = (int(c) for c in np.argwhere(extra)[0])
                    first_extra = (x, y, z)
        return count, first_extra
    grid = np.ones(sizes, dtype=bool)
    for (i, j), m in masks.items():
        shape = [1] * k
        shape[i] = sizes[i]
        shape[j] = sizes[j]
        grid &= m.reshape(shape)
    count = int(grid.sum())
    member = set(tuples)
    first_extra = None
    if count != len(member):
        for t in np.argwhere(grid):
            tt = tuple(int(c) for c in t)
            if tt not in member:
                first_extra = tt
                break
    return count, first_extra


def check_bergman(
    algebra: FiniteAlgebra, n_factors=None, cfg: RunConfig = RunConfig()
) -> CheckOutcome:
    """Whether every enumerated subpower is pinned down by its pairwise images."""
    k = cfg.n_factors if n_factors is None else n_factors
    factors = tuple([algebra] * k)
    sizes = tuple(f.size for f in factors)
    engine, subpowers, bounds = enumerate_subpowers(
        factors, cfg.gen_cap, cfg.closure_budget
    )
    bounds = dict(bounds, n_factors=k)
    for gens, codes in subpowers:
        tuples = engine.decode_codes(sorted(codes))
        masks = _pair_masks(tuples, sizes)
        count, extra = _reconstruction_extra(tuples, sizes, masks)
        if count != len(tuples):
            witness = {
                "n_factors": k,
                "generators": [list(t) for t in engine.decode_codes(gens)],
                "subpower": [list(t) for t in sorted(tuples)],
                "subpower_size": len(tuples),
                "reconstruction_size": count,
                "extra_tuple": list(extra),
            }
            return CheckOutcome("BERGMAN", "fail", witness, bounds)
    return CheckOutcome("BERGMAN", "pass", None, bounds)


def check_majority_selecting_all(
    algebra: FiniteAlgebra, power_triples=None, cfg: RunConfig = RunConfig()
) -> CheckOutcome:
    """Run the ternary Horn check over enumerated subpowers of algebra powers."""
    triples = tuple(power_triples) if power_triples is not None else ((1, 1, 1),)
    all_bounds = []
    for pt in triples:
        factors = tuple(power(algebra, e)[0] for e in pt)
        engine, subpowers, bounds = enumerate_subpowers(
            factors, cfg.gen_cap, cfg.closure_budget
        )
        all_bounds.append(dict(bounds, power_triple=list(pt)))
        for gens, codes in subpowers:
            sub = SubPower(
                factors=factors,
                tuples=frozenset(engine.decode_codes(sorted(codes))),
            )
            witness = check_majority_selecting(sub)
            if witness is not None:
                payload = {
                    "power_triple": list(pt),
                    "generators": [list(t) for t in engine.decode_codes(gens)],
                    "subpower": [list(t) for t in sub.sorted_tuples],
                    "witness": witness.to_json_dict(),
                }
                return CheckOutcome(
                    "MAJ-SELECT", "fail", payload, {"searched": all_bounds}
                )
    return CheckOutcome("MAJ-SELECT", "pass", None, {"searched": all_bounds})


# ---------------------------------------------------------------------------
# Image meet preservation (implication-only)


def check_image_meet_preservation(
    algebra: FiniteAlgebra, powers=None, cfg: RunConfig = RunConfig()
) -> CheckOutcome:
    """Whether quotient maps preserve meets of reflexive compatible relations."""
    powers = cfg.powers if powers is None else tuple(powers)
    kept, skipped = _kept_powers(algebra, powers, cfg.cong_size_guard)
    exhaustive = True
    for e in kept:
        base, _ = power(algebra, e)
        congs = all_congruences(base, cfg.cong_size_guard)
        rels, rel_bounds = enumerate_reflexive_relations(base, cfg)
        exhaustive = exhaustive and rel_bounds["exhaustive"]
        if len(rels) > cfg.relation_list_cap:
            rels = rels[: cfg.relation_list_cap]
            exhaustive = False
        n = base.size
        stack = np.zeros((len(rels), n, n), dtype=np.uint8)
        for i, r in enumerate(rels):
            for x, y in r.pairs():
                stack[i, x, y] = 1
        meets = stack[:, None, :, :] & stack[None, :, :, :]
        for theta in congs:
            _, hom = quotient(base, theta)
            fibers = np.zeros((n, hom.codomain.size), dtype=np.uint8)
            for x, u in enumerate(hom.mapping):
                fibers[x, u] = 1
            images = (np.einsum("xu,kxy,yv->kuv", fibers, stack, fibers) > 0).astype(
                np.uint8
            )
            lhs = np.einsum("xu,klxy,yv->kluv", fibers, meets, fibers) > 0
            rhs = (images[:, None] & images[None, :]) > 0
            mismatch = (lhs != rhs).any(axis=(2, 3))
            if mismatch.any():
                k, l = (int(v) for v in np.argwhere(mismatch)[0])
                diff = rhs[k, l] & ~lhs[k, l]
                u, v = (int(v) for v in np.argwhere(diff)[0])
                witness = {
                    "power": e,
                    "theta": theta.to_json_dict()["blocks"],
                    "r": rels[k].to_json_dict()["pairs"],
                    "s": rels[l].to_json_dict()["pairs"],
                    "pair": [u, v],
                }
                bounds = {
                    "powers": list(kept),
                    "skipped_powers": list(skipped),
                    "relations_exhaustive": exhaustive,
                }
                return CheckOutcome("IMAGE-MEET", "fail", witness, bounds)
    bounds = {
        "powers": list(kept),
        "skipped_powers": list(skipped),
        "relations_exhaustive": exhaustive,
    }
    verdict = "pass" if kept else "unknown"
    return CheckOutcome("IMAGE-MEET", verdict, None, bounds)


# ---------------------------------------------------------------------------
# Directly decomposable reflexive relations (implication-only)


def check_ddrr(algebra: FiniteAlgebra, cfg: RunConfig = RunConfig()) -> CheckOutcome:
    """Whether reflexive compatible relations on algebra x algebra decompose as
    transpose products of their projections."""
    prod, _ = product((algebra, algebra))
    rels, rel_bounds = enumerate_reflexive_relations(prod, cfg)
    bounds = dict(rel_bounds, product_size=prod.size)
    for rel in rels:
        report = direct_decomposability(algebra, algebra, rel, validate=False)
        if not report.holds:
            witness = {
                "relation": rel.to_json_dict()["pairs"],
                "r1": report.r1.to_json_dict()["pairs"],
                "r2": report.r2.to_json_dict()["pairs"],
                "pair": list(report.witness_pair),
                "relation_pairs": report.relation_pairs,
                "product_pairs": report.product_pairs,
            }
            return CheckOutcome("DDRR", "fail", witness, bounds)
    return CheckOutcome("DDRR", "pass", None, bounds)


# ---------------------------------------------------------------------------
# Cross-check harness


@dataclass(frozen=True)
class CrossCheckMatrix:
    algebra: str
    majority: CloneSearchReport
    outcomes: tuple[CheckOutcome, ...]
    fatal: bool
    notes: tuple[str, ...]

    def outcome(self, condition: str) -> CheckOutcome:
        for o in self.outcomes:
            if o.condition == condition:
                return o
        raise KeyError(condition)

    def to_json_dict(self) -> dict:
        return {
            "algebra": self.algebra,
            "majority": self.majority.to_json_dict(),
            "conditions": [o.to_json_dict() for o in self.outcomes],
            "consistency": {"fatal": self.fatal, "notes": list(self.notes)},
        }


def cross_check(algebra: FiniteAlgebra, cfg: RunConfig = RunConfig()) -> CrossCheckMatrix:
    """Run the term search plus every condition check and reconcile them.

    A found majority term is definitive for the whole variety the algebra
    generates, so any failing condition alongside it is flagged as fatal.
    Unknown verdicts are propagated, never silently converted.
    """
    majority = find_majority_term(
        algebra, cfg.clone_coord_budget, cfg.clone_size_budget
    )

    tasks = {
        "MAJ-SELECT": lambda: check_majority_selecting_all(algebra, None, cfg),
        "PIXLEY-REFL": lambda: check_pixley_reflexive(algebra, None, cfg),
        "PIXLEY-CONG": lambda: check_pixley_congruences(algebra, None, cfg),
        "BERGMAN": lambda: check_bergman(algebra, None, cfg),
        "PCRT": lambda: check_pcrt(algebra, None, cfg),
        "IMAGE-MEET": lambda: check_image_meet_preservation(algebra, None, cfg),
        "DDRR": lambda: check_ddrr(algebra, cfg),
    }
    if cfg.threads > 1:
        with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
            futures = {name: pool.submit(fn) for name, fn in tasks.items()}
            results = {name: f.result() for name, f in futures.items()}
    else:
        results = {name: fn() for name, fn in tasks.items()}

    refl_ii, refl_iii = results["PIXLEY-REFL"]
    by_condition = {
        "MAJ-SELECT": results["MAJ-SELECT"],
        "PIXLEY-REFL-II": refl_ii,
        "PIXLEY-REFL-III": refl_iii,
        "PIXLEY-CONG": results["PIXLEY-CONG"],
        "BERGMAN": results["BERGMAN"],
        "PCRT": results["PCRT"],
        "IMAGE-MEET": results["IMAGE-MEET"],
        "DDRR": results["DDRR"],
    }
    outcomes = tuple(by_condition[c] for c in CONDITIONS)

    notes = [
        "fail verdicts are definitive; pass verdicts hold relative to the recorded bounds",
        "IMAGE-MEET and DDRR are implication-only: their failure rules out a majority "
        "term, their pass proves nothing",
        "PIXLEY-CONG covers plain and kernel-induced equivalence relations at once; "
        "the two coincide on finite algebras",
    ]
    fatal = False
    if majority.found is not None:
        for o in outcomes:
            if o.verdict == "fail":
                fatal = True
                notes.append(
                    f"FATAL: majority term found but {o.condition} reported a "
                    "counterexample; implementation bug"
                )
    else:
        failing = [o.condition for o in outcomes if o.verdict == "fail"]
        if failing and not majority.exhausted:
            notes.append(
                "majority search hit its budget; the failing conditions "
                f"({', '.join(failing)}) independently rule a majority term out"
            )
    return CrossCheckMatrix(
        algebra=algebra.name,
        majority=majority,
        outcomes=outcomes,
        fatal=fatal,
        notes=tuple(notes),
    )
