"""Discrete factor-graph modeling and inference.

Graphs are built once and stay immutable during a solve; engines
(sum-product, min-sum, k-best, Gibbs, and the accelerator backend) all
consume the same graph and schedule objects.
"""

from .errors import (
    ConstraintViolationError,
    ContradictionError,
    FgkitError,
    GraphCycleError,
    MalformedStreamError,
    ModelError,
    ModelFormatError,
    ScheduleError,
    StreamEndError,
    StuckChainError,
)
from .model import (
    BIT,
    DiscreteDomain,
    Factor,
    FactorGraph,
    FactorTable,
    Variable,
    normalize_table,
)
from .schedules import (
    F2V,
    V2F,
    Schedule,
    Step,
    default_schedule,
    flooding_schedule,
    is_acyclic,
    sequential_schedule,
    tree_schedule,
    validate_custom,
)
from .solvers import (
    MIN_SUM,
    SUM_PRODUCT,
    SolveOptions,
    SolveResult,
    solve,
    solve_kbest,
)

__version__ = "0.1.0"

__all__ = [
    "BIT",
    "DiscreteDomain",
    "Factor",
    "FactorGraph",
    "FactorTable",
    "Variable",
    "normalize_table",
    "Schedule",
    "Step",
    "V2F",
    "F2V",
    "flooding_schedule",
    "sequential_schedule",
    "tree_schedule",
    "default_schedule",
    "validate_custom",
    "is_acyclic",
    "solve",
    "solve_kbest",
    "SolveOptions",
    "SolveResult",
    "SUM_PRODUCT",
    "MIN_SUM",
    "FgkitError",
    "ModelError",
    "ScheduleError",
    "GraphCycleError",
    "ContradictionError",
    "StuckChainError",
    "StreamEndError",
    "ConstraintViolationError",
    "MalformedStreamError",
    "ModelFormatError",
    "__version__",
]
