"""Finite universal-algebra workbench.

Builds finite algebras from operation tables and makes a family of
majority-term characterizations executable on them: term synthesis, the
Pixley congruence identity, two-fold subpower decompositions, pairwise
Chinese remainder solvability, and a cross-check harness that insists the
conditions agree.
"""

from .algebra import (
    App,
    FiniteAlgebra,
    Homomorphism,
    ProductCodec,
    Signature,
    SubPower,
    TermExpr,
    Var,
    eval_term,
    generate_subpower,
    image_of_hom,
    parse_algebra,
    power,
    product,
    quotient,
)
from .checkers import (
    CheckOutcome,
    CrossCheckMatrix,
    check_bergman,
    check_ddrr,
    check_image_meet_preservation,
    check_majority_selecting_all,
    check_pixley_congruences,
    check_pixley_reflexive,
    cross_check,
)
from .clone import (
    CloneSearchReport,
    TermOperation,
    find_majority_term,
    find_nu_term,
    free_subpower,
)
from .config import RunConfig
from .congruence import (
    Congruence,
    all_congruences,
    check_inverse_image_identity,
    congruence_compose,
    congruence_join,
    congruence_meet,
    kernel,
    principal_congruence,
)
from .crt import (
    CongruenceSystem,
    SolveReport,
    check_pcrt,
    is_pairwise_solvable,
    parse_system,
    solve_brute,
    solve_constructive,
)
from .errors import GuardError, MajlabError, ParseError, ValidationError
from .relations import (
    BinaryRelation,
    DecompositionReport,
    TernaryWitness,
    check_majority_selecting,
    compose,
    direct_decomposability,
    j_image,
    meet,
    opposite,
    pullback_reconstruct,
    transpose_product,
    union_transitive_closure,
)

__all__ = [name for name in dir() if not name.startswith("_")]
