"""Seeded random graph builders for oracle-based testing."""

import numpy as np

from fgkit import DiscreteDomain, FactorGraph, FactorTable

JOINT_CELL_CAP = 200_000  # keep brute-force enumeration cheap


def _random_table(rng, dims, allow_sparse=True):
    """Random positive table; sometimes one cell is zeroed and the table is
    stored sparse. At most one zero per table so no belief can fully vanish
    on a tree with positive inputs."""
    weights = rng.uniform(0.1, 2.0, size=dims)
    flat = weights.reshape(-1)
    sparse = allow_sparse and rng.random() < 0.5
    if sparse and flat.size > 1 and rng.random() < 0.5:
        flat[rng.integers(0, flat.size)] = 0.0
    if sparse:
        keep = np.flatnonzero(flat > 0)
        idx = np.stack(np.unravel_index(keep, dims), axis=1)
        return FactorTable.sparse(dims, idx, flat[keep])
    return FactorTable.dense(dims, flat)


def random_tree_graph(seed, max_vars=10, max_domain=5):
    """A random forest-shaped factor graph with mixed factor degrees and
    dense/sparse tables; all inputs strictly positive."""
    rng = np.random.default_rng(seed)
    nv = int(rng.integers(2, max_vars + 1))
    dims = rng.integers(2, max_domain + 1, nv)
    while int(np.prod(dims.astype(np.float64))) > JOINT_CELL_CAP:
        dims[rng.integers(0, nv)] = 2
    g = FactorGraph()
    variables = [g.add_variable(DiscreteDomain(range(d))) for d in dims]
    for v in variables:
        v.input = rng.uniform(0.1, 1.0, v.domain.size)
    connected = [variables[0]]
    pending = list(variables[1:])
    rng.shuffle(pending)
    while pending:
        anchor = connected[rng.integers(0, len(connected))]
        take = min(len(pending), int(rng.integers(1, 3)))
        fresh = [pending.pop() for _ in range(take)]
        fvars = [anchor] + fresh
        table = _random_table(rng, tuple(v.domain.size for v in fvars))
        g.add_factor_table(table, *fvars)
        connected.extend(fresh)
    # sprinkle unary factors; they never create cycles
    for v in variables:
        if rng.random() < 0.3:
            g.add_factor_table(
                _random_table(rng, (v.domain.size,), allow_sparse=False), v
            )
    return g


def random_positive_graph(seed, max_vars=6, max_domain=4, extra_edges=2):
    """Random (possibly loopy) graph with strictly positive weights, for
    Gibbs testing: every joint state has positive probability."""
    rng = np.random.default_rng(seed)
    nv = int(rng.integers(2, max_vars + 1))
    dims = rng.integers(2, max_domain + 1, nv)
    g = FactorGraph()
    variables = [g.add_variable(DiscreteDomain(range(d))) for d in dims]
    for v in variables:
        v.input = rng.uniform(0.3, 1.0, v.domain.size)
    for i in range(1, nv):
        j = int(rng.integers(0, i))
        table = FactorTable.dense(
            (dims[i], dims[j]), rng.uniform(0.5, 1.5, (dims[i], dims[j]))
        )
        g.add_factor_table(table, variables[i], variables[j])
    for _ in range(int(rng.integers(0, extra_edges + 1))):
        i, j = rng.choice(nv, size=2, replace=False)
        table = FactorTable.dense(
            (dims[i], dims[j]), rng.uniform(0.5, 1.5, (dims[i], dims[j]))
        )
        g.add_factor_table(table, variables[i], variables[j])
    return g
