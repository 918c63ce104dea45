"""Message-passing engines: sum-product, min-sum, and k-best variants.

Both semirings share one kernel. The factor update walks the table's stored
entries in their canonical (lexicographic) order and accumulates with
``np.add.at`` / ``np.minimum.at``, which apply strictly in entry order. That
ordering is the contract that makes sparse and dense encodings of the same
weights, and the accelerator simulator, produce bitwise-identical messages.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ContradictionError, ModelError, ScheduleError
from .numerics import (
    COST_CAP,
    costs_to_probabilities,
    normalize_min,
    normalize_sum,
    weights_to_costs,
)
from .schedules import F2V, V2F, Schedule, default_schedule

SUM_PRODUCT = "sum_product"
MIN_SUM = "min_sum"


@dataclass
class SolveOptions:
    """Iteration, convergence, truncation, and damping knobs."""

    iterations: int = 100
    convergence_epsilon: float = 1e-9
    k: int | None = None
    damping: float = 0.0

    def __post_init__(self):
        if self.iterations < 1:
            raise ModelError("iterations must be >= 1")
        if not self.convergence_epsilon > 0.0:
            raise ModelError("convergence_epsilon must be positive")
        if self.k is not None and self.k < 1:
            raise ModelError("k must be >= 1")
        if not 0.0 <= self.damping < 1.0:
            raise ModelError("damping must lie in [0, 1)")


@dataclass
class SolveResult:
    beliefs: dict  # variable id -> probability vector (sums to 1)
    iterations_run: int
    converged: bool
    pass_changes: list
    semiring: str
    assignment: dict | None = None  # min-sum: variable id -> domain value
    cost_beliefs: dict | None = None  # min-sum: variable id -> cost vector (min 0)
    messages: "MessageStore | None" = None

    def belief_of(self, variable) -> np.ndarray:
        return self.beliefs[variable.id]


@dataclass
class MessageStore:
    """Current directed messages, keyed by (factor id, variable id)."""

    v2f: dict = field(default_factory=dict)
    f2v: dict = field(default_factory=dict)


def truncate_message(msg: np.ndarray, k: int, semiring: str) -> np.ndarray:
    """Drop every entry strictly worse than the k-th best one.

    Sum-product keeps the k largest weights, min-sum the k smallest costs;
    dropped entries become 0 weight / saturated cost. Entries tied with the
    k-th best are kept, so an uninformative (uniform) message is never
    truncated into a contradiction.
    """
    if k >= msg.size:
        return msg
    if semiring == SUM_PRODUCT:
        threshold = msg[np.argsort(-msg, kind="stable")[k - 1]]
        return np.where(msg >= threshold, msg, 0.0)
    threshold = msg[np.argsort(msg, kind="stable")[k - 1]]
    return np.where(msg <= threshold, msg, COST_CAP)


class Engine:
    """One solve: owns the message store over a read-only graph."""

    def __init__(self, graph, semiring=SUM_PRODUCT, options=None):
        if semiring not in (SUM_PRODUCT, MIN_SUM):
            raise ModelError(f"unknown semiring {semiring!r}")
        self.graph = graph
        self.semiring = semiring
        self.options = options or SolveOptions()
        self.variables = graph.all_variables()
        self.factors = graph.all_factors()
        self.var_by_id = {v.id: v for v in self.variables}
        self.factor_by_id = {f.id: f for f in self.factors}
        if self.options.k is not None:
            dmin = min((v.domain.size for v in self.variables), default=1)
            if self.options.k > dmin:
                raise ModelError(
                    f"k={self.options.k} exceeds the smallest domain size {dmin}"
                )
        self.attached = {v: [] for v in self.variables}
        for f in sorted(self.factors, key=lambda f: f.id):
            for v in f.variables:
                self.attached[v].append(f)
        if self.semiring == SUM_PRODUCT:
            self.node_input = {v.id: v.input for v in self.variables}
        else:
            self.node_input = {v.id: weights_to_costs(v.input) for v in self.variables}
        self.store = MessageStore()
        for f in self.factors:
            for v in f.variables:
                self.store.v2f[(f.id, v.id)] = self._uniform(v.domain.size)
                self.store.f2v[(f.id, v.id)] = self._uniform(v.domain.size)

    def _uniform(self, d: int) -> np.ndarray:
        if self.semiring == SUM_PRODUCT:
            return np.full(d, 1.0 / d)
        return np.zeros(d)

    # -- single updates ------------------------------------------------------

    def update_var_to_factor(self, variable, target_factor) -> np.ndarray:
        edges = []
        if self.semiring == SUM_PRODUCT:
            out = self.node_input[variable.id].copy()
            for f in self.attached[variable]:
                if f is target_factor:
                    continue
                out = out * self.store.f2v[(f.id, variable.id)]
                edges.append((f.id, variable.id))
            return normalize_sum(out, variable.id, edges)
        out = self.node_input[variable.id].copy()
        for f in self.attached[variable]:
            if f is target_factor:
                continue
            out = out + self.store.f2v[(f.id, variable.id)]
        return normalize_min(out)

    def update_factor_to_var(self, factor, target_variable) -> np.ndarray:
        table = factor.table
        t = factor.position_of(target_variable)
        idx = table.indices
        k = self.options.k
        if self.semiring == SUM_PRODUCT:
            acc = table.weights.copy()
            for p, u in enumerate(factor.variables):
                if p == t:
                    continue
                msg = self.store.v2f[(factor.id, u.id)]
                if k is not None and k < msg.size:
                    msg = truncate_message(msg, k, self.semiring)
                acc = acc * msg[idx[:, p]]
            out = np.zeros(target_variable.domain.size)
            np.add.at(out, idx[:, t], acc)
            edges = [(factor.id, u.id) for u in factor.variables if u is not target_variable]
            return normalize_sum(out, target_variable.id, edges)
        acc = table.costs().copy()
        for p, u in enumerate(factor.variables):
            if p == t:
                continue
            msg = self.store.v2f[(factor.id, u.id)]
            if k is not None and k < msg.size:
                msg = truncate_message(msg, k, self.semiring)
            acc = acc + msg[idx[:, p]]
        np.minimum(acc, COST_CAP, out=acc)
        out = np.full(target_variable.domain.size, COST_CAP)
        np.minimum.at(out, idx[:, t], acc)
        if out.min() >= COST_CAP:
            raise ContradictionError(
                f"every value of variable {target_variable.id} has saturated cost",
                target_variable.id,
                [(factor.id, u.id) for u in factor.variables],
            )
        return normalize_min(out)

    # -- schedule execution ----------------------------------------------------

    def run_step(self, step) -> float:
        if step.direction == V2F:
            f = self.factor_by_id[step.factor_id]
            v = self.var_by_id[step.variable_id]
            new = self.update_var_to_factor(v, f)
            slot = self.store.v2f
        elif step.direction == F2V:
            f = self.factor_by_id[step.factor_id]
            v = self.var_by_id[step.variable_id]
            new = self.update_factor_to_var(f, v)
            if self.options.damping > 0.0:
                lam = self.options.damping
                mixed = (1.0 - lam) * new + lam * self.store.f2v[(f.id, v.id)]
                if self.semiring == SUM_PRODUCT:
                    new = normalize_sum(mixed, v.id)
                else:
                    new = normalize_min(mixed)
            slot = self.store.f2v
        else:
            raise ScheduleError(f"unknown direction {step.direction!r}")
        key = (step.factor_id, step.variable_id)
        change = float(np.max(np.abs(new - slot[key]))) if slot[key].size else 0.0
        slot[key] = new
        return change

    def run(self, schedule: Schedule) -> SolveResult:
        opts = self.options
        passes = 1 if not schedule.repeat_unit else opts.iterations
        pass_changes = []
        converged = not schedule.repeat_unit
        ran = 0
        for _ in range(passes):
            delta = 0.0
            for step in schedule.steps:
                delta = max(delta, self.run_step(step))
            pass_changes.append(delta)
            ran += 1
            if schedule.repeat_unit and delta <= opts.convergence_epsilon:
                converged = True
                break
        return self._finish(pass_changes, ran, converged)

    def _finish(self, pass_changes, ran, converged) -> SolveResult:
        beliefs = {}
        assignment = None
        cost_beliefs = None
        if self.semiring == MIN_SUM:
            assignment = {}
            cost_beliefs = {}
        for v in self.variables:
            if self.semiring == SUM_PRODUCT:
                b = self.node_input[v.id].copy()
                edges = []
                for f in self.attached[v]:
                    b = b * self.store.f2v[(f.id, v.id)]
                    edges.append((f.id, v.id))
                b = normalize_sum(b, v.id, edges)
                beliefs[v.id] = b
            else:
                c = self.node_input[v.id].copy()
                for f in self.attached[v]:
                    c = c + self.store.f2v[(f.id, v.id)]
                c = normalize_min(c)
                if c.min() >= COST_CAP:
                    raise ContradictionError(
                        f"every value of variable {v.id} has saturated cost", v.id
                    )
                cost_beliefs[v.id] = c
                beliefs[v.id] = costs_to_probabilities(c)
                assignment[v.id] = v.domain.values[int(np.argmin(c))]
            v.belief = beliefs[v.id]
        return SolveResult(
            beliefs=beliefs,
            iterations_run=ran,
            converged=converged,
            pass_changes=pass_changes,
            semiring=self.semiring,
            assignment=assignment,
            cost_beliefs=cost_beliefs,
            messages=self.store,
        )


def solve(graph, schedule=None, options=None, semiring=SUM_PRODUCT) -> SolveResult:
    """Run message passing and return normalized beliefs.

    min_sum additionally returns the per-variable argmin assignment (ties go
    to the lowest domain index) and the cost beliefs themselves.
    """
    if schedule is None:
        schedule = default_schedule(graph)
    return Engine(graph, semiring, options).run(schedule)


def solve_kbest(graph, schedule=None, options=None, semiring=SUM_PRODUCT) -> SolveResult:
    """solve() with mandatory k-best truncation of incoming variable messages."""
    if options is None or options.k is None:
        raise ModelError("solve_kbest requires options.k")
    return solve(graph, schedule, options, semiring)
