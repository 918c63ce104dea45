"""Solver-independent factor-graph representation.

Variables live in ordered finite domains; factors hold weighted tables over
the cartesian product of their variables' domains. Graphs support nested
templates (boundary variables aliased at instantiation), vectorized factor
creation over variable arrays, and joining factors into clusters.

Index convention: every index tuple in this module is zero-based.
"""

from __future__ import annotations

import hashlib
import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ModelError
from .numerics import weights_to_costs

MAX_NESTING_DEPTH = 64
JOIN_CELL_CAP = 2**24
DIRECTED_TOLERANCE = 1e-9


@dataclass(frozen=True)
class DiscreteDomain:
    """Ordered finite set of scalar values; order defines indices 0..d-1."""

    values: tuple

    def __init__(self, values):
        vals = tuple(values)
        if not vals:
            raise ModelError("domain must be nonempty")
        if len(set(vals)) != len(vals):
            raise ModelError(f"domain values contain duplicates: {vals!r}")
        object.__setattr__(self, "values", vals)

    @property
    def size(self) -> int:
        return len(self.values)

    def index_of(self, value) -> int:
        try:
            return self.values.index(value)
        except ValueError:
            raise ModelError(f"value {value!r} not in domain {self.values!r}") from None

    def __len__(self) -> int:
        return len(self.values)

    def __repr__(self) -> str:
        return f"DiscreteDomain({list(self.values)!r})"


BIT = DiscreteDomain((0, 1))


class Variable:
    """A discrete variable: prior input weights in, posterior belief out."""

    __slots__ = ("id", "name", "domain", "_input", "belief", "_root")

    def __init__(self, vid: int, domain: DiscreteDomain, name: str, root):
        self.id = vid
        self.name = name
        self.domain = domain
        self._input = np.ones(domain.size, dtype=np.float64)
        self.belief = None  # set by solvers
        self._root = root

    @property
    def input(self) -> np.ndarray:
        return self._input

    @input.setter
    def input(self, weights):
        w = np.asarray(weights, dtype=np.float64).reshape(-1)
        if w.shape != (self.domain.size,):
            raise ModelError(
                f"input for {self.name} must have length {self.domain.size}, got {w.shape}"
            )
        if not np.all(np.isfinite(w)) or np.any(w < 0.0):
            raise ModelError(f"input for {self.name} must be finite and nonnegative")
        if not np.any(w > 0.0):
            raise ModelError(f"input for {self.name} needs at least one positive entry")
        self._input = w.copy()

    def __repr__(self) -> str:
        return f"Variable({self.name}, d={self.domain.size})"


class FactorTable:
    """Weighted (possibly sparse) tensor over a list of dimension sizes.

    Dense storage keeps one weight per cell of the cartesian product in
    lexicographic (row-major) order. Sparse storage keeps only strictly
    positive entries, sorted lexicographically so dense and sparse kernels
    visit shared entries in the same order.
    """

    __slots__ = ("kind", "dims", "weights", "_indices", "_costs", "_dense_array", "_key")

    def __init__(self, kind: str, dims, weights: np.ndarray, indices=None):
        self.kind = kind
        self.dims = tuple(int(d) for d in dims)
        self.weights = weights
        self._indices = indices
        self._costs = None
        self._dense_array = None
        self._key = None

    # -- constructors ------------------------------------------------------

    @staticmethod
    def dense(dims, weights) -> "FactorTable":
        dims = tuple(int(d) for d in dims)
        if any(d < 1 for d in dims):
            raise ModelError(f"dimension sizes must be positive: {dims}")
        w = np.asarray(weights, dtype=np.float64).reshape(-1)
        ncells = math.prod(dims)
        if w.size != ncells:
            raise ModelError(f"dense table needs {ncells} weights, got {w.size}")
        FactorTable._check_weights(w)
        return FactorTable("dense", dims, w.copy())

    @staticmethod
    def sparse(dims, indices, weights) -> "FactorTable":
        dims = tuple(int(d) for d in dims)
        idx = np.asarray(indices, dtype=np.int64)
        if idx.ndim == 1:
            idx = idx.reshape(-1, 1)
        w = np.asarray(weights, dtype=np.float64).reshape(-1)
        if idx.shape[0] != w.size:
            raise ModelError("indices and weights must have the same length")
        if idx.size and (idx.shape[1] != len(dims)):
            raise ModelError(f"index tuples must have {len(dims)} positions")
        if np.any(idx < 0) or np.any(idx >= np.asarray(dims, dtype=np.int64)):
            raise ModelError("sparse index out of bounds")
        FactorTable._check_weights(w)
        if np.any(w <= 0.0):
            raise ModelError("sparse entries must have strictly positive weight")
        # canonical order: lexicographic over index tuples
        order = np.lexsort(idx.T[::-1]) if idx.size else np.arange(0)
        idx = idx[order]
        w = w[order]
        if idx.shape[0] > 1 and np.any(np.all(idx[1:] == idx[:-1], axis=1)):
            raise ModelError("duplicate index tuple in sparse table")
        return FactorTable("sparse", dims, w, idx)

    @staticmethod
    def from_function(domains, fn) -> "FactorTable":
        """Materialize a dense table by evaluating fn over all joint values."""
        dims = tuple(d.size for d in domains)
        weights = np.empty(math.prod(dims), dtype=np.float64)
        for flat, values in enumerate(itertools.product(*[d.values for d in domains])):
            w = float(fn(*values))
            if math.isnan(w) or w < 0.0 or math.isinf(w):
                raise ModelError(
                    f"factor function returned invalid weight {w!r} at {values!r}"
                )
            weights[flat] = w
        if not np.any(weights > 0.0):
            raise ModelError("factor function is zero everywhere")
        return FactorTable("dense", dims, weights)

    @staticmethod
    def _check_weights(w: np.ndarray):
        if not np.all(np.isfinite(w)) or np.any(w < 0.0):
            raise ModelError("table weights must be finite and nonnegative")
        if w.size == 0:
            raise ModelError("table must have at least one entry")
        if not np.any(w > 0.0):
            raise ModelError("table weights are all zero")

    # -- views -------------------------------------------------------------

    @property
    def degree(self) -> int:
        return len(self.dims)

    @property
    def num_entries(self) -> int:
        return int(self.weights.size)

    @property
    def num_cells(self) -> int:
        return math.prod(self.dims)

    @property
    def indices(self) -> np.ndarray:
        """(E, n) index tuples of stored entries, lexicographic order."""
        if self._indices is None:
            grids = np.indices(self.dims).reshape(len(self.dims), -1).T
            self._indices = np.ascontiguousarray(grids, dtype=np.int64)
        return self._indices

    def costs(self) -> np.ndarray:
        """Per-entry negative-log weights (cached; zero weight saturates)."""
        if self._costs is None:
            self._costs = weights_to_costs(self.weights)
        return self._costs

    def to_dense_array(self) -> np.ndarray:
        if self._dense_array is None:
            if self.num_cells > JOIN_CELL_CAP:
                raise ModelError(
                    f"table with {self.num_cells} cells exceeds dense cap {JOIN_CELL_CAP}"
                )
            if self.kind == "dense":
                arr = self.weights.reshape(self.dims)
            else:
                arr = np.zeros(self.dims, dtype=np.float64)
                arr[tuple(self.indices.T)] = self.weights
            self._dense_array = arr
        return self._dense_array

    def entry_bytes(self) -> int:
        """Serialized bytes per stored entry (weights f64; sparse adds u32 indices)."""
        return 8 if self.kind == "dense" else 8 + 4 * self.degree

    def nbytes(self) -> int:
        return self.num_entries * self.entry_bytes()

    def structural_key(self) -> bytes:
        if self._key is None:
            h = hashlib.sha256()
            h.update(self.kind.encode())
            h.update(np.asarray(self.dims, dtype=np.int64).tobytes())
            if self.kind == "sparse":
                h.update(self.indices.tobytes())
            h.update(self.weights.tobytes())
            self._key = h.digest()
        return self._key

    # -- transforms ----------------------------------------------------------

    def normalized(self, over) -> "FactorTable":
        """New table whose slices sum to 1 over the given position(s).

        For every configuration of the remaining positions, the weights over
        ``over`` must have a positive sum.
        """
        axes = (over,) if isinstance(over, int) else tuple(over)
        for ax in axes:
            if not 0 <= ax < self.degree:
                raise ModelError(f"normalize position {ax} out of range")
        arr = self.to_dense_array().copy()
        sums = arr.sum(axis=axes, keepdims=True)
        if np.any(sums <= 0.0):
            raise ModelError("cannot normalize: a slice sums to zero")
        arr = arr / sums
        if self.kind == "dense":
            return FactorTable.dense(self.dims, arr)
        mask = arr[tuple(self.indices.T)]
        return FactorTable.sparse(self.dims, self.indices, mask)

    def conditional_sums(self, axes) -> np.ndarray:
        """Sums over the given positions, one per remaining configuration."""
        return self.to_dense_array().sum(axis=tuple(axes))

    def __repr__(self) -> str:
        return f"FactorTable({self.kind}, dims={self.dims}, entries={self.num_entries})"


class Factor:
    """A table attached to an ordered tuple of variables."""

    __slots__ = ("id", "table", "variables", "directed_to", "_root")

    def __init__(self, fid: int, table: FactorTable, variables, root):
        variables = tuple(variables)
        if len(variables) < 1:
            raise ModelError("factor needs at least one variable")
        if len(set(variables)) != len(variables):
            raise ModelError("a variable may appear at most once per factor")
        if table.degree != len(variables):
            raise ModelError(
                f"table degree {table.degree} != number of variables {len(variables)}"
            )
        for pos, (dim, var) in enumerate(zip(table.dims, variables)):
            if dim != var.domain.size:
                raise ModelError(
                    f"table dimension {pos} is {dim} but {var.name} has domain size "
                    f"{var.domain.size}"
                )
        self.id = fid
        self.table = table
        self.variables = variables
        self.directed_to = None
        self._root = root

    @property
    def degree(self) -> int:
        return len(self.variables)

    def position_of(self, var: Variable) -> int:
        for pos, v in enumerate(self.variables):
            if v is var:
                return pos
        raise ModelError(f"{var.name} is not connected to factor {self.id}")

    def set_directed_to(self, directed_vars):
        """Mark a subset of variables as outputs of a conditional table.

        Accepted only if, for every configuration of the remaining positions,
        the table sums to 1 over the directed positions (within 1e-9).
        """
        directed = tuple(directed_vars)
        positions = tuple(self.position_of(v) for v in directed)
        sums = self.table.conditional_sums(positions)
        if not np.allclose(sums, 1.0, atol=DIRECTED_TOLERANCE, rtol=0.0):
            worst = float(np.abs(sums - 1.0).max())
            raise ModelError(
                f"directed factor {self.id}: slices sum off 1 by up to {worst:.3g}"
            )
        self.directed_to = directed

    def __repr__(self) -> str:
        names = ",".join(v.name for v in self.variables)
        return f"Factor({self.id}: {names})"


@dataclass
class NestedGraphInstance:
    """One use of a template inside a parent graph.

    Internal (non-boundary) template variables are freshly copied per
    instance; boundary variables are aliased to the caller's ``bound`` list.
    """

    template: "FactorGraph"
    bound: tuple
    variables: list = field(default_factory=list)
    factors: list = field(default_factory=list)
    children: list = field(default_factory=list)


class FactorGraph:
    """Container of variables, factors, and nested template instances."""

    def __init__(self):
        self.variables: list[Variable] = []
        self.factors: list[Factor] = []
        self.boundary: tuple = ()
        self.children: list[NestedGraphInstance] = []
        self._next_var_id = 0
        self._next_factor_id = 0

    # -- variables -----------------------------------------------------------

    def _fresh_variable(self, domain: DiscreteDomain, name=None) -> Variable:
        vid = self._next_var_id
        self._next_var_id += 1
        return Variable(vid, domain, name if name is not None else f"v{vid}", self)

    def add_variable(self, domain, shape=None, name=None):
        """Add one variable, or an object ndarray of variables when ``shape``
        is given. Inputs default to uniform weights."""
        if not isinstance(domain, DiscreteDomain):
            domain = DiscreteDomain(domain)
        if shape is None:
            v = self._fresh_variable(domain, name)
            self.variables.append(v)
            return v
        shape = (shape,) if isinstance(shape, int) else tuple(int(s) for s in shape)
        count = math.prod(shape)
        if count <= 0:
            raise ModelError(f"variable array shape {shape} has zero size")
        out = np.empty(count, dtype=object)
        for i in range(count):
            vname = f"{name}{i}" if name is not None else None
            v = self._fresh_variable(domain, vname)
            self.variables.append(v)
            out[i] = v
        return out.reshape(shape)

    def add_bits(self, shape=None, name=None):
        return self.add_variable(BIT, shape, name)

    # -- factors -------------------------------------------------------------

    def _check_vars_mine(self, variables):
        for v in variables:
            if not isinstance(v, Variable) or v._root is not self:
                raise ModelError(
                    f"variable {getattr(v, 'name', v)!r} does not belong to this graph"
                )

    def _attach(self, table: FactorTable, variables) -> Factor:
        self._check_vars_mine(variables)
        f = Factor(self._next_factor_id, table, variables, self)
        self._next_factor_id += 1
        self.factors.append(f)
        return f

    def add_factor_table(self, table: FactorTable, *variables) -> Factor:
        return self._attach(table, variables)

    def add_factor_dense(self, fn, *variables) -> Factor:
        """Materialize fn over the joint domain (d^n evaluations) and attach."""
        table = FactorTable.from_function([v.domain for v in variables], fn)
        return self._attach(table, variables)

    def add_factor_sparse(self, indices, weights, *variables) -> Factor:
        dims = [v.domain.size for v in variables]
        table = FactorTable.sparse(dims, indices, weights)
        return self._attach(table, variables)

    def add_factor_vectorized(self, table_or_fn, *slices) -> list:
        """One factor per element of the broadcast of the slice arguments.

        Tables are deduplicated: a shared FactorTable object is reused as-is,
        and tables built from a function are created once per distinct domain
        signature in the batch.
        """
        arrays = [np.asarray(s, dtype=object) for s in slices]
        try:
            arrays = np.broadcast_arrays(*arrays)
        except ValueError as exc:
            raise ModelError(f"slice arguments do not broadcast: {exc}") from exc
        shape = arrays[0].shape
        if math.prod(shape) == 0:
            raise ModelError("vectorized factor creation over an empty batch")
        table_cache: dict = {}
        made = []
        for pos in np.ndindex(shape):
            vars_here = tuple(arr[pos] for arr in arrays)
            if isinstance(table_or_fn, FactorTable):
                table = table_or_fn
            else:
                sig = tuple(v.domain for v in vars_here)
                table = table_cache.get(sig)
                if table is None:
                    table = FactorTable.from_function(list(sig), table_or_fn)
                    table_cache[sig] = table
            made.append(self._attach(table, vars_here))
        return made

    # -- nesting ---------------------------------------------------------------

    def set_boundary(self, variables):
        variables = tuple(variables)
        self._check_vars_mine(variables)
        self.boundary = variables

    def add_nested_graph(self, template: "FactorGraph", bound_variables) -> NestedGraphInstance:
        """Instantiate a template: boundary aliased to ``bound_variables``,
        everything else freshly copied into this graph."""
        bound = tuple(bound_variables)
        if template is self:
            raise ModelError("a graph cannot be nested into itself")
        if self._template_tree_contains(template, self):
            raise ModelError("nesting cycle: template already contains this graph")
        if len(bound) != len(template.boundary):
            raise ModelError(
                f"template has {len(template.boundary)} boundary variables, "
                f"got {len(bound)} bindings"
            )
        self._check_vars_mine(bound)
        for b, t in zip(bound, template.boundary):
            if b.domain != t.domain:
                raise ModelError(
                    f"boundary domain mismatch: {t.name} vs {b.name}"
                )
        mapping = {t: b for t, b in zip(template.boundary, bound)}
        inst = NestedGraphInstance(template=template, bound=bound)
        self._clone_body(template, inst, mapping, depth=1)
        self.children.append(inst)
        return inst

    def _template_tree_contains(self, template, needle, depth=0) -> bool:
        if depth > MAX_NESTING_DEPTH:
            raise ModelError(f"nesting depth exceeds {MAX_NESTING_DEPTH}")
        if template is needle:
            return True
        return any(
            self._template_tree_contains(ch.template, needle, depth + 1)
            for ch in template.children
        )

    def _clone_body(self, src, dst, mapping, depth):
        if depth > MAX_NESTING_DEPTH:
            raise ModelError(f"nesting depth exceeds {MAX_NESTING_DEPTH}")
        for v in src.variables:
            if v in mapping:
                continue
            clone = self._fresh_variable(v.domain)
            clone.name = f"{v.name}.{clone.id}"  # keep names unique across instances
            clone.input = v.input
            mapping[v] = clone
            dst.variables.append(clone)
        for ch in src.children:
            sub = NestedGraphInstance(
                template=ch.template,
                bound=tuple(mapping[b] for b in ch.bound),
            )
            self._clone_body(ch, sub, mapping, depth + 1)
            dst.children.append(sub)
        for f in src.factors:
            nf = Factor(
                self._next_factor_id,
                f.table,
                tuple(mapping.get(v, v) for v in f.variables),
                self,
            )
            self._next_factor_id += 1
            if f.directed_to is not None:
                nf.directed_to = tuple(mapping.get(v, v) for v in f.directed_to)
            dst.factors.append(nf)

    # -- traversal ---------------------------------------------------------------

    def all_variables(self) -> list:
        out = []

        def walk(holder):
            out.extend(holder.variables)
            for ch in holder.children:
                walk(ch)

        walk(self)
        return out

    def all_factors(self) -> list:
        out = []

        def walk(holder):
            out.extend(holder.factors)
            for ch in holder.children:
                walk(ch)

        walk(self)
        return out

    def variable_degrees(self) -> dict:
        deg = {v: 0 for v in self.all_variables()}
        for f in self.all_factors():
            for v in f.variables:
                deg[v] += 1
        return deg

    def flatten(self) -> "FactorGraph":
        """Equivalent graph with zero children; ids/names/inputs preserved."""
        flat = FactorGraph()
        mapping = {}
        for v in self.all_variables():
            clone = Variable(v.id, v.domain, v.name, flat)
            clone.input = v.input
            mapping[v] = clone
            flat.variables.append(clone)
        for f in self.all_factors():
            nf = Factor(f.id, f.table, tuple(mapping[v] for v in f.variables), flat)
            if f.directed_to is not None:
                nf.directed_to = tuple(mapping[v] for v in f.directed_to)
            flat.factors.append(nf)
        flat.boundary = tuple(mapping[v] for v in self.boundary)
        flat._next_var_id = self._next_var_id
        flat._next_factor_id = self._next_factor_id
        return flat

    # -- clustering ----------------------------------------------------------------

    def join_factors(self, factors_to_join, size_cap=JOIN_CELL_CAP) -> Factor:
        """Replace several factors by their product over the union of their
        variables; the originals are removed from the graph."""
        factors_to_join = list(factors_to_join)
        if len(factors_to_join) < 2:
            raise ModelError("join needs at least two factors")
        if len(set(factors_to_join)) != len(factors_to_join):
            raise ModelError("cannot join a factor with itself")
        mine = set(self.all_factors())
        for f in factors_to_join:
            if f not in mine:
                raise ModelError(f"factor {f.id} does not belong to this graph")
        joint_vars = []
        for f in factors_to_join:
            for v in f.variables:
                if v not in joint_vars:
                    joint_vars.append(v)
        dims = tuple(v.domain.size for v in joint_vars)
        ncells = math.prod(dims)
        if ncells > size_cap:
            raise ModelError(
                f"joined table would have {ncells} cells, above the cap {size_cap}"
            )
        arr = np.ones(dims, dtype=np.float64)
        for f in factorize_positions(factors_to_join, joint_vars):
            factor, axes = f
            view = factor.table.to_dense_array()
            expand = [None] * len(dims)
            for src_pos, dst_axis in enumerate(axes):
                expand[dst_axis] = src_pos
            arr = arr * np.transpose(
                view, np.argsort(axes)
            ).reshape([dims[i] if i in axes else 1 for i in range(len(dims))])
        any_sparse = any(f.table.kind == "sparse" for f in factors_to_join)
        if any_sparse:
            flat = arr.reshape(-1)
            keep = np.flatnonzero(flat > 0.0)
            idx = np.stack(np.unravel_index(keep, dims), axis=1)
            table = FactorTable.sparse(dims, idx, flat[keep])
        else:
            table = FactorTable.dense(dims, arr)
        self._remove_factors(factors_to_join)
        return self._attach(table, joint_vars)

    def _remove_factors(self, factors):
        doomed = set(factors)

        def walk(holder):
            holder.factors = [f for f in holder.factors if f not in doomed]
            for ch in holder.children:
                walk(ch)

        walk(self)

    def __repr__(self) -> str:
        return (
            f"FactorGraph(vars={len(self.all_variables())}, "
            f"factors={len(self.all_factors())})"
        )


def factorize_positions(factors, joint_vars):
    """Pair each factor with the joint-variable axes its positions map to."""
    index = {v: i for i, v in enumerate(joint_vars)}
    return [(f, tuple(index[v] for v in f.variables)) for f in factors]


def normalize_table(table: FactorTable, over) -> FactorTable:
    """Functional alias for FactorTable.normalized."""
    return table.normalized(over)
