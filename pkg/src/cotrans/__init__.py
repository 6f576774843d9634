"""Cotranslations over groups: construction, law verification and completion of partial cotranslations."""

__version__ = "0.1.0"

from .errors import (
    CotransError,
    DimensionError,
    DivergenceError,
    GridRangeError,
    GroupError,
    ReplayError,
    SingularError,
    SpecError,
    VerificationError,
)
from .groups import FiniteGroup, FreeGroup, IntegerGroup, LatticeGroup, check_preserves_relations, cyclic_group
from .cotranslation import (
    Cotranslation,
    DifferenceSeq,
    Hull,
    cocycle_check,
    cot_inverse_law_check,
    extract_morphism,
    from_difference_seq,
    from_generator_maps,
    from_hull,
    from_morphism,
    hull_axiom_check,
    is_autonomous,
    shift_by_morphism,
    to_hull,
)
from .evolution import (
    CoeffFn,
    EvolutionGrid,
    check_derivative_identities,
    cotranslation_of,
    evolution_of,
    infinitesimal_generator,
    integrate,
)
from .partial import (
    ConjugationMap,
    PartialCotranslation,
    ProjectorMap,
    complete,
    conjugate,
    kernel_constancy_check,
    law_check,
    normalize_units,
    orthogonal_sum,
    restrict,
    units_projector,
)
from .report import LawEntry, VerificationReport

__all__ = [
    "__version__",
    "CoeffFn",
    "ConjugationMap",
    "CotransError",
    "Cotranslation",
    "DifferenceSeq",
    "DimensionError",
    "DivergenceError",
    "EvolutionGrid",
    "FiniteGroup",
    "FreeGroup",
    "GridRangeError",
    "GroupError",
    "Hull",
    "IntegerGroup",
    "LatticeGroup",
    "LawEntry",
    "PartialCotranslation",
    "ProjectorMap",
    "ReplayError",
    "SingularError",
    "SpecError",
    "VerificationError",
    "VerificationReport",
    "check_derivative_identities",
    "check_preserves_relations",
    "cocycle_check",
    "complete",
    "conjugate",
    "cot_inverse_law_check",
    "cotranslation_of",
    "cyclic_group",
    "evolution_of",
    "extract_morphism",
    "from_difference_seq",
    "from_generator_maps",
    "from_hull",
    "from_morphism",
    "hull_axiom_check",
    "infinitesimal_generator",
    "integrate",
    "is_autonomous",
    "kernel_constancy_check",
    "law_check",
    "normalize_units",
    "orthogonal_sum",
    "restrict",
    "shift_by_morphism",
    "to_hull",
    "units_projector",
]
