"""Orderings of directed edge updates.

A schedule is the single currency between graphs and engines: the software
solvers and the accelerator compiler consume the same step lists, so results
are comparable across backends.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import GraphCycleError, ScheduleError

V2F = "v2f"
F2V = "f2v"


@dataclass(frozen=True)
class Step:
    direction: str  # V2F or F2V
    factor_id: int
    variable_id: int


@dataclass(frozen=True)
class Schedule:
    """steps applied in order; repeat_unit means one pass = one iteration."""

    steps: tuple
    repeat_unit: bool = True

    def __len__(self) -> int:
        return len(self.steps)


def _edges(graph):
    return [(f, v) for f in graph.all_factors() for v in f.variables]


def flooding_schedule(graph) -> Schedule:
    """All variable-to-factor updates, then all factor-to-variable updates.

    Both blocks are ordered by (variable id, factor id) ascending, which makes
    one pass equivalent to a synchronous (Jacobi) update.
    """
    if not graph.all_variables():
        raise ScheduleError("cannot schedule an empty graph")
    edges = sorted(_edges(graph), key=lambda fv: (fv[1].id, fv[0].id))
    steps = [Step(V2F, f.id, v.id) for f, v in edges]
    steps += [Step(F2V, f.id, v.id) for f, v in edges]
    return Schedule(tuple(steps), repeat_unit=True)


def sequential_schedule(graph) -> Schedule:
    """Per-factor blocks: refresh all of a factor's inputs, then all of its
    outputs, walking factors in id order (Gauss-Seidel flavor)."""
    if not graph.all_variables():
        raise ScheduleError("cannot schedule an empty graph")
    steps = []
    for f in sorted(graph.all_factors(), key=lambda f: f.id):
        steps += [Step(V2F, f.id, v.id) for v in f.variables]
        steps += [Step(F2V, f.id, v.id) for v in f.variables]
    return Schedule(tuple(steps), repeat_unit=True)


def is_acyclic(graph):
    """(True, None) for forests, else (False, edges of one offending cycle).

    Nodes are variables and factors of the flattened graph; an edge exists per
    factor-variable incidence. A variable appears at most once per factor, so
    the incidence graph is simple and undirected DFS sees only tree and back
    edges.
    """
    adjacency = {}
    for f in graph.all_factors():
        fk = ("f", f.id)
        for v in f.variables:
            vk = ("v", v.id)
            adjacency.setdefault(fk, []).append(vk)
            adjacency.setdefault(vk, []).append(fk)
    for node in adjacency:
        adjacency[node].sort()
    parent = {}
    for start in sorted(adjacency):
        if start in parent:
            continue
        parent[start] = None
        stack = [(start, iter(adjacency[start]))]
        while stack:
            node, it = stack[-1]
            for nxt in it:
                if nxt == parent[node]:
                    continue
                if nxt in parent:
                    return False, _cycle_edges(parent, node, nxt)
                parent[nxt] = node
                stack.append((nxt, iter(adjacency[nxt])))
                break
            else:
                stack.pop()
    return True, None


def _cycle_edges(parent, node, ancestor):
    path = [node]
    while path[-1] != ancestor:
        path.append(parent[path[-1]])
    edges = []
    for a, b in zip(path, path[1:] + [node]):
        fk, vk = (a, b) if a[0] == "f" else (b, a)
        edges.append((fk[1], vk[1]))
    return edges


def tree_schedule(graph) -> Schedule:
    """Two-pass schedule for forests: leaves to root, then root to leaves.

    One application yields exact sum-product marginals. The root of each
    component is its highest-id variable; children are visited in ascending
    node order, so the schedule is a pure function of topology.
    """
    if not graph.all_variables():
        raise ScheduleError("cannot schedule an empty graph")
    ok, cycle = is_acyclic(graph)
    if not ok:
        raise GraphCycleError(f"graph contains a cycle through edges {cycle}", cycle)

    factors = {f.id: f for f in graph.all_factors()}
    adjacency = {}
    for f in factors.values():
        fk = ("f", f.id)
        for v in f.variables:
            vk = ("v", v.id)
            adjacency.setdefault(fk, []).append(vk)
            adjacency.setdefault(vk, []).append(fk)
    for node in adjacency:
        adjacency[node].sort()

    def step_for(parent, child, upward):
        # upward: child sends toward parent; downward: parent toward child
        src, dst = (child, parent) if upward else (parent, child)
        if src[0] == "v":
            return Step(V2F, dst[1], src[1])
        return Step(F2V, src[1], dst[1])

    assigned = set()
    steps_up, steps_down = [], []
    var_nodes = sorted(("v", v.id) for v in graph.all_variables())
    for component_seed in var_nodes[::-1]:  # highest-id variables become roots
        if component_seed in assigned or component_seed not in adjacency:
            assigned.add(component_seed)
            continue
        root = component_seed
        order = []  # (node, parent) in DFS preorder
        stack = [(root, None)]
        seen = {root}
        while stack:
            node, parent = stack.pop()
            order.append((node, parent))
            for nxt in sorted(adjacency[node], reverse=True):
                if nxt not in seen:
                    seen.add(nxt)
                    stack.append((nxt, node))
        assigned.update(seen)
        for node, parent in reversed(order):  # postorder: leaves first
            if parent is not None:
                steps_up.append(step_for(parent, node, upward=True))
        for node, parent in order:  # preorder: root first
            if parent is not None:
                steps_down.append(step_for(parent, node, upward=False))
    return Schedule(tuple(steps_up + steps_down), repeat_unit=False)


def validate_custom(graph, steps) -> Schedule:
    """Accept a user step list verbatim after checking every edge exists."""
    factors = {f.id: f for f in graph.all_factors()}
    out = []
    for raw in steps:
        if isinstance(raw, Step):
            step = raw
        else:
            direction, fid, vid = raw
            step = Step(direction, int(fid), int(vid))
        if step.direction not in (V2F, F2V):
            raise ScheduleError(f"unknown direction {step.direction!r}")
        f = factors.get(step.factor_id)
        if f is None:
            raise ScheduleError(f"schedule references unknown factor {step.factor_id}")
        if not any(v.id == step.variable_id for v in f.variables):
            raise ScheduleError(
                f"factor {step.factor_id} is not connected to variable "
                f"{step.variable_id}"
            )
        out.append(step)
    return Schedule(tuple(out), repeat_unit=True)


def default_schedule(graph) -> Schedule:
    """Tree schedule when the graph is a forest, flooding otherwise."""
    ok, _ = is_acyclic(graph)
    return tree_schedule(graph) if ok else flooding_schedule(graph)
