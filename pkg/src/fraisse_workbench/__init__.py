"""Finite structures, amalgamation classes and approximations of their
generic limits, with the combinatorics of closure operators and
independent sets."""

from .amalgam import amalgamate, check_K, check_Kk, check_member, enumerate_K, enumerate_Kk, joint_embed
from .closure import ClosureOperator, GeneratedClosure, RelativeClosure, StructureClosure, cl, is_independent
from .combinatorics import GnFamily, build_gn_family, find_independent_set, threshold_probe, verify_gn_family
from .errors import BudgetExceeded, PreconditionError, SignatureMismatch, StructureError, StructureParseError
from .generic import (
    DiagramFormula,
    GenericChain,
    build_chain,
    check_isolation,
    indiscernibility_check,
    isolating_diagram,
    verify_extension_property,
    verify_recorded_facts,
)
from .prime import TypeP, build_prime, check_substitution, extend_automorphism, find_p_witness_candidates
from .structure import (
    L,
    Embedding,
    FiniteStructure,
    Lk,
    Lprime,
    Signature,
    TupleRecord,
    parse_structure,
    serialize_structure,
)
from .witness import extend_with_witness, verify_local_membership

__version__ = "0.1.0"

__all__ = [
    "BudgetExceeded",
    "ClosureOperator",
    "DiagramFormula",
    "Embedding",
    "FiniteStructure",
    "GeneratedClosure",
    "GenericChain",
    "GnFamily",
    "L",
    "Lk",
    "Lprime",
    "PreconditionError",
    "RelativeClosure",
    "Signature",
    "SignatureMismatch",
    "StructureClosure",
    "StructureError",
    "StructureParseError",
    "TupleRecord",
    "TypeP",
    "amalgamate",
    "build_chain",
    "build_gn_family",
    "build_prime",
    "check_K",
    "check_Kk",
    "check_isolation",
    "check_member",
    "check_substitution",
    "cl",
    "enumerate_K",
    "enumerate_Kk",
    "extend_automorphism",
    "extend_with_witness",
    "find_independent_set",
    "find_p_witness_candidates",
    "indiscernibility_check",
    "is_independent",
    "isolating_diagram",
    "joint_embed",
    "parse_structure",
    "serialize_structure",
    "threshold_probe",
    "verify_extension_property",
    "verify_gn_family",
    "verify_local_membership",
    "verify_recorded_facts",
]
