"""Decision procedure for the intuitionistic tense logics IK_tC, C a subset of {T, B, D}.

Typical use::

    from nested_tense import parse, SeqTree, prove, extract_proof, check_proof

    verdict = prove(SeqTree.of_formula(parse("box p -> dia p")), "D")
    proof = extract_proof(verdict)
    assert check_proof(proof, "D")
"""

from .countermodel import (
    Blueprint,
    KripkeModel,
    build_blueprint,
    check_frame_conditions,
    eval_formula,
    extract_model,
    morphic_reachability,
    verify_countermodel,
)
from .formula import (
    BBox,
    BDia,
    Bottom,
    Box,
    Dia,
    Direction,
    Formula,
    Imp,
    And,
    Or,
    Atom,
    ParseError,
    formula_length,
    modal_depth,
    parse,
    render,
    subformulas,
)
from .morphism import (
    Morphism,
    MorphismKind,
    compose_morphisms,
    find_strong_morphism,
    morphically_equivalent,
    verify_morphism,
)
from .oracle import BoundedSearchResult, Invalid, NoCounterModelUpTo, brute_force_validity
from .proof import Proof, check_proof, expand_identities, extract_proof
from .prover import (
    BudgetExceeded,
    ComputationTree,
    Verdict,
    db_premises,
    is_initial,
    is_repeat,
    is_saturated,
    is_stable,
    prove,
)
from .sequent import (
    SeqTree,
    Sequent,
    c_closure,
    compose,
    depth_of,
    parse_seqtree,
    plug_at,
    project,
    propagates,
    render_seqtree,
    sequent_modal_depth,
    strip_consequents,
)
