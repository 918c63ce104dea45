"""Single-site Gibbs sampling over the shared graph representation.

Randomness comes from numpy's Philox generator, a counter-based PRNG with a
stable cross-platform stream, so a (graph, options) pair always reproduces
the same chain bitwise. Draw order: initial-state restarts first (if any),
then the scan-order table (random scan only), then one uniform per site
update.

The sweep loop is compiled with numba when available and falls back to pure
Python with identical semantics otherwise.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ModelError, StuckChainError

try:  # pragma: no cover - exercised implicitly
    from numba import njit as _njit
except ImportError:  # pragma: no cover
    def _njit(*a, **k):
        if a and callable(a[0]):
            return a[0]
        return lambda fn: fn

MAX_RESTARTS = 100


@dataclass
class GibbsOptions:
    burn_in: int = 1000
    samples: int = 10000
    seed: int = 0
    scan_order: str = "fixed"  # "fixed" (ascending id) or "random"

    def __post_init__(self):
        if self.samples < 1:
            raise ModelError("samples must be >= 1")
        if self.burn_in < 0:
            raise ModelError("burn_in must be >= 0")
        if self.scan_order not in ("fixed", "random"):
            raise ModelError(f"unknown scan order {self.scan_order!r}")


@dataclass
class GibbsResult:
    beliefs: dict  # variable id -> empirical marginal
    final_sample: dict  # variable id -> domain value
    sweeps: int

    def belief_of(self, variable) -> np.ndarray:
        return self.beliefs[variable.id]


def conditional_distribution(variable, assignment) -> np.ndarray:
    """Full conditional of one variable given indices for all its neighbors.

    ``assignment`` maps Variable objects to domain indices. The result is
    normalized; a conditional that is zero everywhere raises StuckChainError.
    """
    graph = variable._root
    weights = variable.input.astype(np.float64).copy()
    for f in graph.all_factors():
        if variable not in f.variables:
            continue
        arr = f.table.to_dense_array()
        sel = []
        for v in f.variables:
            if v is variable:
                sel.append(slice(None))
            else:
                if v not in assignment:
                    raise ModelError(
                        f"neighbor {v.name} of {variable.name} is unassigned"
                    )
                sel.append(int(assignment[v]))
        weights = weights * arr[tuple(sel)]
    total = weights.sum()
    if total <= 0.0:
        raise StuckChainError(
            f"variable {variable.name} has no positive-weight value given its "
            f"neighbors",
            variable.id,
        )
    return weights / total


@_njit(cache=True)
def _run_sweeps(
    dims,
    inputs,
    attach_ptr,
    attach_fac,
    attach_pos,
    fac_ptr,
    fweights,
    fac_nvars,
    fac_vars,
    fac_strides,
    state,
    scan,
    uniforms,
    burn_in,
    counts,
    trace,
    keep_trace,
):
    nsweeps = uniforms.shape[0]
    nv = dims.shape[0]
    dmax = inputs.shape[1]
    w = np.empty(dmax, dtype=np.float64)
    for s in range(nsweeps):
        for j in range(nv):
            i = scan[s, j]
            d = dims[i]
            total = 0.0
            for x in range(d):
                w[x] = inputs[i, x]
            for a in range(attach_ptr[i], attach_ptr[i + 1]):
                fi = attach_fac[a]
                pos = attach_pos[a]
                base = fac_ptr[fi]
                off = 0
                for q in range(fac_nvars[fi]):
                    if q != pos:
                        off += fac_strides[fi, q] * state[fac_vars[fi, q]]
                stride = fac_strides[fi, pos]
                for x in range(d):
                    w[x] *= fweights[base + off + stride * x]
            total = 0.0
            last_pos = -1
            for x in range(d):
                total += w[x]
                if w[x] > 0.0:
                    last_pos = x
            if last_pos < 0:
                return i  # stuck: no positive-weight value exists
            u = uniforms[s, j] * total
            cum = 0.0
            chosen = last_pos
            for x in range(d):
                cum += w[x]
                if cum > u and w[x] > 0.0:
                    chosen = x
                    break
            state[i] = chosen
        if s >= burn_in:
            for i in range(nv):
                counts[i, state[i]] += 1.0
        if keep_trace:
            for i in range(nv):
                trace[s, i] = state[i]
    return -1


def _pack(graph):
    variables = graph.all_variables()
    factors = graph.all_factors()
    vindex = {v: i for i, v in enumerate(variables)}
    nv = len(variables)
    dims = np.array([v.domain.size for v in variables], dtype=np.int64)
    dmax = int(dims.max()) if nv else 1
    inputs = np.zeros((nv, dmax), dtype=np.float64)
    for i, v in enumerate(variables):
        inputs[i, : dims[i]] = v.input
    nmax = max((f.degree for f in factors), default=1)
    nf = len(factors)
    fac_nvars = np.zeros(nf, dtype=np.int64)
    fac_vars = np.zeros((nf, nmax), dtype=np.int64)
    fac_strides = np.zeros((nf, nmax), dtype=np.int64)
    fac_ptr = np.zeros(nf + 1, dtype=np.int64)
    chunks = []
    attach = {i: [] for i in range(nv)}
    for fi, f in enumerate(factors):
        flat = np.ascontiguousarray(f.table.to_dense_array(), dtype=np.float64).reshape(-1)
        chunks.append(flat)
        fac_ptr[fi + 1] = fac_ptr[fi] + flat.size
        fac_nvars[fi] = f.degree
        stride = 1
        strides = [0] * f.degree
        for q in range(f.degree - 1, -1, -1):
            strides[q] = stride
            stride *= f.table.dims[q]
        for q, v in enumerate(f.variables):
            fac_vars[fi, q] = vindex[v]
            fac_strides[fi, q] = strides[q]
            attach[vindex[v]].append((fi, q))
    fweights = np.concatenate(chunks) if chunks else np.zeros(0, dtype=np.float64)
    attach_ptr = np.zeros(nv + 1, dtype=np.int64)
    attach_fac, attach_pos = [], []
    for i in range(nv):
        attach_ptr[i + 1] = attach_ptr[i] + len(attach[i])
        for fi, q in attach[i]:
            attach_fac.append(fi)
            attach_pos.append(q)
    return (
        variables,
        factors,
        dims,
        inputs,
        attach_ptr,
        np.array(attach_fac, dtype=np.int64),
        np.array(attach_pos, dtype=np.int64),
        fac_ptr,
        fweights,
        fac_nvars,
        fac_vars,
        fac_strides,
    )


def _joint_positive(state, inputs, dims, fac_ptr, fweights, fac_nvars, fac_vars, fac_strides):
    for i in range(dims.shape[0]):
        if inputs[i, state[i]] <= 0.0:
            return False
    for fi in range(fac_nvars.shape[0]):
        off = fac_ptr[fi]
        for q in range(fac_nvars[fi]):
            off += fac_strides[fi, q] * state[fac_vars[fi, q]]
        if fweights[off] <= 0.0:
            return False
    return True


def run_gibbs(graph, options: GibbsOptions | None = None, keep_trace: bool = False):
    """Sample the graph and return empirical marginals plus the final state.

    The initial state is the per-variable input argmax; if its joint weight is
    zero, up to 100 random restarts are attempted before giving up.
    """
    options = options or GibbsOptions()
    (
        variables,
        factors,
        dims,
        inputs,
        attach_ptr,
        attach_fac,
        attach_pos,
        fac_ptr,
        fweights,
        fac_nvars,
        fac_vars,
        fac_strides,
    ) = _pack(graph)
    nv = len(variables)
    if nv == 0:
        raise ModelError("cannot sample an empty graph")

    rng = np.random.Generator(np.random.Philox(key=options.seed))
    state = np.array([int(np.argmax(v.input)) for v in variables], dtype=np.int64)
    attempts = 0
    while not _joint_positive(
        state, inputs, dims, fac_ptr, fweights, fac_nvars, fac_vars, fac_strides
    ):
        attempts += 1
        if attempts > MAX_RESTARTS:
            raise StuckChainError(
                f"no positive-weight initial state found in {MAX_RESTARTS} restarts"
            )
        state = np.array(
            [int(rng.integers(0, dims[i])) for i in range(nv)], dtype=np.int64
        )

    nsweeps = options.burn_in + options.samples
    if options.scan_order == "random":
        scan = rng.integers(0, nv, size=(nsweeps, nv)).astype(np.int64)
    else:
        scan = np.tile(np.arange(nv, dtype=np.int64), (nsweeps, 1))
    uniforms = rng.random((nsweeps, nv))
    counts = np.zeros((nv, inputs.shape[1]), dtype=np.float64)
    trace = np.zeros((nsweeps if keep_trace else 1, nv), dtype=np.int64)

    stuck = _run_sweeps(
        dims,
        inputs,
        attach_ptr,
        attach_fac,
        attach_pos,
        fac_ptr,
        fweights,
        fac_nvars,
        fac_vars,
        fac_strides,
        state,
        scan,
        uniforms,
        options.burn_in,
        counts,
        trace,
        keep_trace,
    )
    if stuck >= 0:
        raise StuckChainError(
            f"sampler reached a state where variable {variables[stuck].name} has "
            f"no positive-weight value",
            variables[stuck].id,
        )

    beliefs = {}
    for i, v in enumerate(variables):
        marg = counts[i, : dims[i]] / float(options.samples)
        beliefs[v.id] = marg
        v.belief = marg
    final_sample = {
        v.id: v.domain.values[int(state[i])] for i, v in enumerate(variables)
    }
    result = GibbsResult(beliefs=beliefs, final_sample=final_sample, sweeps=options.samples)
    if keep_trace:
        result.trace = trace  # sweep-by-sweep states, for diagnostics/tests
    return result
