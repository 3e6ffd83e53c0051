"""Verification laboratory for convex regularization and approximate subdifferential calculus.

Exact finite-dimensional implementations (R^d, d <= 3) of Legendre-Fenchel
conjugation, convex envelopes, lower semicontinuous hulls, inf-convolution,
eps-subdifferential sets, constructive subgradient relocation, subdifferential
integration, and verifiers for the split-union sum rules and their envelope
equivalences, with a deterministic instance-file CLI.
"""

from __future__ import annotations

from .errors import (
    DimensionError,
    DomainError,
    EmptyDomainError,
    EnvelopeImproperError,
    FenchelLabError,
    HypothesisError,
    ImproperFunctionError,
    InstanceSchemaError,
    InvalidOracleError,
    NotEpsSubgradientError,
    ScopeError,
    SlopeRangeWarning,
    UnboundedError,
)
from .extended import INF, NEG_INF, ExtReal, ext_add, ext_mul, ext_sub, is_finite
from .functions import (
    AffinePiece,
    ConvexPolyhedralFunction,
    Grid,
    GridFunction,
    PiecewiseMinFunction,
    build_indicator,
    eval_function,
    is_proper,
    make_cpf,
)
from .geometry import Halfspace, Polyhedron
from .relaxation import (
    MinProblem,
    RelaxationReport,
    relax_and_compare,
)
from .sumrules import (
    EquivalenceReport,
    QualificationStatus,
    Rule,
    RuleStatus,
    SetCompareReport,
    WitnessRow,
    WitnessTable,
    check_conjugate_identity,
    check_intersection_closure,
    check_regularization_equality,
    check_sum_rules,
    equivalence_harness,
    exact_sum_rule_check,
    finite_split_union_gap,
    outer_limit_subdiff,
    qualification_check,
    sequential_witnesses,
    set_compare,
)
from .subgradients import (
    BRWitness,
    EpsSubdiffQuery,
    SubgradientOracle,
    brondsted_rockafellar,
    eps_subdiff_set,
    eps_threshold,
    integrate_subdiff,
    selection_oracle,
)
from .transforms import (
    affine_minorant,
    conjugate,
    convex_envelope,
    inf_convolution,
    lsc_hull,
)

__version__ = "0.1.0"

__all__ = [
    "AffinePiece",
    "BRWitness",
    "ConvexPolyhedralFunction",
    "DimensionError",
    "DomainError",
    "EmptyDomainError",
    "EnvelopeImproperError",
    "EpsSubdiffQuery",
    "EquivalenceReport",
    "ExtReal",
    "FenchelLabError",
    "Grid",
    "GridFunction",
    "Halfspace",
    "HypothesisError",
    "INF",
    "ImproperFunctionError",
    "InstanceSchemaError",
    "InvalidOracleError",
    "MinProblem",
    "NEG_INF",
    "NotEpsSubgradientError",
    "PiecewiseMinFunction",
    "Polyhedron",
    "QualificationStatus",
    "RelaxationReport",
    "Rule",
    "RuleStatus",
    "ScopeError",
    "SetCompareReport",
    "SlopeRangeWarning",
    "SubgradientOracle",
    "UnboundedError",
    "WitnessRow",
    "WitnessTable",
    "affine_minorant",
    "brondsted_rockafellar",
    "build_indicator",
    "check_conjugate_identity",
    "check_intersection_closure",
    "check_regularization_equality",
    "check_sum_rules",
    "conjugate",
    "convex_envelope",
    "eps_subdiff_set",
    "eps_threshold",
    "equivalence_harness",
    "eval_function",
    "exact_sum_rule_check",
    "finite_split_union_gap",
    "ext_add",
    "ext_mul",
    "ext_sub",
    "inf_convolution",
    "integrate_subdiff",
    "is_finite",
    "is_proper",
    "lsc_hull",
    "make_cpf",
    "outer_limit_subdiff",
    "qualification_check",
    "relax_and_compare",
    "selection_oracle",
    "sequential_witnesses",
    "set_compare",
]
