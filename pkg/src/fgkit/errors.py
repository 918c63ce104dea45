"""Exception hierarchy shared across the package."""


class FgkitError(Exception):
    """Base class for all errors raised by this package."""


class ModelError(FgkitError):
    """Invalid model construction: bad domains, tables, factors, or nesting."""


class ScheduleError(FgkitError):
    """Invalid schedule: dangling edges, cycles where a tree is required."""


class GraphCycleError(ScheduleError):
    """Raised when an acyclic graph is required; carries one offending cycle."""

    def __init__(self, message, cycle_edges):
        super().__init__(message)
        self.cycle_edges = list(cycle_edges)


class ContradictionError(FgkitError):
    """Evidence and factors rule out every value of some variable.

    ``variable_id`` names the variable whose belief (or message) numerator
    vanished; ``edges`` lists the (factor_id, variable_id) pairs feeding it.
    """

    def __init__(self, message, variable_id, edges=()):
        super().__init__(message)
        self.variable_id = variable_id
        self.edges = list(edges)


class StuckChainError(FgkitError):
    """Gibbs sampler could not find or keep a positive-weight state."""

    def __init__(self, message, variable_id=None):
        super().__init__(message)
        self.variable_id = variable_id


class StreamEndError(FgkitError):
    """advance() called after the data source was exhausted."""


class ConstraintViolationError(FgkitError):
    """Graph violates accelerator limits; carries the full violation list."""

    def __init__(self, violations):
        lines = "; ".join(str(v) for v in violations)
        super().__init__(f"accelerator constraints violated: {lines}")
        self.violations = list(violations)


class MalformedStreamError(FgkitError):
    """Instruction stream references unallocated or unloaded operands."""


class ModelFormatError(FgkitError):
    """Model file does not conform to the documented JSON schema."""
