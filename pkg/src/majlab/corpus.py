"""Built-in corpus of small algebras used by the CLI and the test suite."""

from __future__ import annotations

import itertools
from pathlib import Path

from .algebra import FiniteAlgebra, Signature, algebra_to_json


def _binary_table(size: int, fn) -> tuple[int, ...]:
    return tuple(fn(x, y) for x in range(size) for y in range(size))


def _lattice(name: str, size: int, meet_fn, join_fn) -> FiniteAlgebra:
    return FiniteAlgebra(
        name=name,
        size=size,
        signature=Signature((("meet", 2), ("join", 2))),
        tables=(_binary_table(size, meet_fn), _binary_table(size, join_fn)),
    )


def lattice2() -> FiniteAlgebra:
    return _lattice("lattice2", 2, min, max)


def lattice3() -> FiniteAlgebra:
    return _lattice("lattice3", 3, min, max)


def lattice_m3() -> FiniteAlgebra:
    """Five-element diamond: bottom 0, atoms 1..3, top 4."""

    def meet(x, y):
        if x == y:
            return x
        if x == 4:
            return y
        if y == 4:
            return x
        return 0

    def join(x, y):
        if x == y:
            return x
        if x == 0:
            return y
        if y == 0:
            return x
        return 4

    return _lattice("latticeM3", 5, meet, join)


def z2() -> FiniteAlgebra:
    return FiniteAlgebra(
        name="z2",
        size=2,
        signature=Signature((("add", 2),)),
        tables=(_binary_table(2, lambda x, y: (x + y) % 2),),
    )


def z3() -> FiniteAlgebra:
    return FiniteAlgebra(
        name="z3",
        size=3,
        signature=Signature((("add", 2),)),
        tables=(_binary_table(3, lambda x, y: (x + y) % 3),),
    )


def z2xz2() -> FiniteAlgebra:
    return FiniteAlgebra(
        name="z2xz2",
        size=4,
        signature=Signature((("add", 2),)),
        tables=(_binary_table(4, lambda x, y: x ^ y),),
    )


def s3() -> FiniteAlgebra:
    """Symmetric group on 3 points; elements are permutations in one-line
    lexicographic order, multiplication is composition (left acts last)."""
    perms = list(itertools.permutations(range(3)))
    index = {p: i for i, p in enumerate(perms)}

    def mul(x, y):
        p, q = perms[x], perms[y]
        return index[tuple(p[q[i]] for i in range(3))]

    return FiniteAlgebra(
        name="s3",
        size=6,
        signature=Signature((("mul", 2),)),
        tables=(_binary_table(6, mul),),
    )


def boolring2() -> FiniteAlgebra:
    return FiniteAlgebra(
        name="boolring2",
        size=2,
        signature=Signature((("add", 2), ("mul", 2), ("zero", 0), ("one", 0))),
        tables=(
            _binary_table(2, lambda x, y: x ^ y),
            _binary_table(2, lambda x, y: x & y),
            (0,),
            (1,),
        ),
    )


def majalg2() -> FiniteAlgebra:
    return FiniteAlgebra(
        name="majalg2",
        size=2,
        signature=Signature((("maj", 3),)),
        tables=(
            tuple(
                1 if x + y + z >= 2 else 0
                for x in range(2)
                for y in range(2)
                for z in range(2)
            ),
        ),
    )


def one() -> FiniteAlgebra:
    return FiniteAlgebra(name="one", size=1, signature=Signature(()), tables=())


CORPUS = {
    "lattice2": lattice2,
    "lattice3": lattice3,
    "latticeM3": lattice_m3,
    "z2": z2,
    "z3": z3,
    "z2xz2": z2xz2,
    "s3": s3,
    "boolring2": boolring2,
    "majalg2": majalg2,
    "one": one,
}


def build_corpus() -> dict[str, FiniteAlgebra]:
    return {name: builder() for name, builder in CORPUS.items()}


def write_corpus(out_dir: str | Path) -> list[Path]:
    """Write every corpus algebra as a JSON file; returns the paths written."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = []
    for name, builder in CORPUS.items():
        path = out / f"{name}.json"
        path.write_text(algebra_to_json(builder()), encoding="utf-8")
        paths.append(path)
    return paths
