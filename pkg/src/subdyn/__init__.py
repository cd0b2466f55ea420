"""Positive strong submeasures and partially defined maps on finite metric spaces."""

from .core import (
    FiniteSpace,
    Multimap,
    build_multimap,
    build_space,
    compose_multimaps,
    derive_cluster_multimap,
    discrete_space,
    identity_map,
    neighborhood,
    omega_infinity,
    relation_composition,
)
from .entropy import (
    cylinder_entropy,
    parry_measure,
    refined_partition_entropy,
    submeasure_entropy,
    top_entropy,
    variational_check,
)
from .errors import (
    BadFiberSpec,
    DegreeViolation,
    DimensionMismatch,
    DomainNotDense,
    EmptyImage,
    Infeasible,
    MetricViolation,
    NegativeScalar,
    NoConvergence,
    NotAMeasure,
    PreconditionFailed,
    ReducibleGraph,
    SchemaError,
    SelectionExplosion,
    SparseCompositionDomain,
    SubdynError,
)
from .invariant import (
    cesaro_sequence,
    check_invariance,
    cycle_invariant_measures,
    inv_geq,
    inv_leq,
    lift_invariant,
)
from .markov import MarkovMeasure, OrbitShift, markov_entropy, orbit_graph
from .optim import hull_membership, maximize_concave_over_polytope, power_iteration
from .submeasure import (
    Submeasure,
    add,
    canonicalize,
    dirac,
    evaluate,
    leq,
    norm,
    scale,
    set_value,
    sup_combine,
    top,
    usc_extend,
    weak_distance,
)
from .transfer import (
    blowup_construct,
    blowup_decompose,
    covering_pushforward_function,
    pullback_function,
    pullback_submeasure,
    pushforward,
)

__version__ = "0.1.0"

__all__ = [
    "BadFiberSpec",
    "DegreeViolation",
    "DimensionMismatch",
    "DomainNotDense",
    "EmptyImage",
    "FiniteSpace",
    "Infeasible",
    "MarkovMeasure",
    "MetricViolation",
    "Multimap",
    "NegativeScalar",
    "NoConvergence",
    "NotAMeasure",
    "OrbitShift",
    "PreconditionFailed",
    "ReducibleGraph",
    "SchemaError",
    "SelectionExplosion",
    "SparseCompositionDomain",
    "SubdynError",
    "Submeasure",
    "add",
    "blowup_construct",
    "blowup_decompose",
    "build_multimap",
    "build_space",
    "canonicalize",
    "cesaro_sequence",
    "check_invariance",
    "compose_multimaps",
    "covering_pushforward_function",
    "cycle_invariant_measures",
    "cylinder_entropy",
    "derive_cluster_multimap",
    "dirac",
    "discrete_space",
    "evaluate",
    "hull_membership",
    "identity_map",
    "inv_geq",
    "inv_leq",
    "leq",
    "lift_invariant",
    "markov_entropy",
    "maximize_concave_over_polytope",
    "neighborhood",
    "norm",
    "omega_infinity",
    "orbit_graph",
    "parry_measure",
    "power_iteration",
    "pullback_function",
    "pullback_submeasure",
    "pushforward",
    "refined_partition_entropy",
    "relation_composition",
    "scale",
    "set_value",
    "submeasure_entropy",
    "sup_combine",
    "top",
    "top_entropy",
    "usc_extend",
    "variational_check",
    "weak_distance",
]
