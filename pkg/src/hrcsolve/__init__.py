"""Exact solver workbench for most-stable matchings in the Hospitals/Residents
problem with Couples."""

from .model import (
    Couple,
    Hospital,
    HrcError,
    Instance,
    Matching,
    MatchingError,
    ParseError,
    RestrictionProfile,
    SingleResident,
    ValidationError,
    Violation,
    is_valid,
    parse_instance,
    parse_matching,
    serialize_instance,
    serialize_matching,
    validate,
)
from .stability import (
    BlockingPair,
    StabilityMode,
    blocking_pair_count,
    blocking_pairs,
    hosp_would_prefer,
    hosp_would_prefer2,
    hosp_would_prefer_exc_partner,
    is_stable,
)
from .preprocess import (
    FixedAssignment,
    Fig2Block,
    Figure2Component,
    PresolveResult,
    decompose_212,
    fixed_assignments,
    satisfy_iteratively,
    solve_212,
    solve_gamma1,
)
from .search import (
    BpBoundExceeded,
    Solution,
    SolveOptions,
    SolveStats,
    SolveTimeout,
    brute_force_oracle,
    prove_unsolvable,
    solve_most_stable,
)
from .gen import (
    CubicGraph,
    GenParams,
    experiment1_params,
    figure2_instance,
    k4_graph,
    petersen_graph,
    random_instance,
    vc3_reduce,
    vc_to_matching,
)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
