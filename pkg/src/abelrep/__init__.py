"""abelrep: exact linear configuration systems over finite abelian groups.

Integer-matrix reductions (Smith form, determinantals, circular matrices),
chains of mu-equivalent systems with exhaustive certification, colored
hypergraph representations with an RP1-RP4 verifier, permutation patterns and
the corner/homothetic constructions.
"""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    AbelrepError,
    CapExceededError,
    DegenerateSystemError,
    InvalidInputError,
    PreconditionError,
)
from .groups import FiniteAbelianGroup, GroupElement  # noqa: E402
from .homsystem import HomSystem, SolutionSet, count_solutions, enumerate_solutions  # noqa: E402
from .intmatrix import IntMatrix, smith_normal_form  # noqa: E402
from .pipeline import EquivalenceMap, PipelineTrace, run_full_pipeline, verify_equivalence  # noqa: E402
from .hypergraph import (  # noqa: E402
    ColoredHypergraph,
    RepresentationCertificate,
    build_K_from_circular,
    enumerate_copies,
    verify_rp_properties,
)
from .perms import Permutation, occurrences  # noqa: E402

__all__ = [
    "AbelrepError",
    "CapExceededError",
    "DegenerateSystemError",
    "InvalidInputError",
    "PreconditionError",
    "FiniteAbelianGroup",
    "GroupElement",
    "HomSystem",
    "SolutionSet",
    "count_solutions",
    "enumerate_solutions",
    "IntMatrix",
    "smith_normal_form",
    "EquivalenceMap",
    "PipelineTrace",
    "run_full_pipeline",
    "verify_equivalence",
    "ColoredHypergraph",
    "RepresentationCertificate",
    "build_K_from_circular",
    "enumerate_copies",
    "verify_rp_properties",
    "Permutation",
    "occurrences",
]
