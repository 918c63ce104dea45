"""Brute-force oracles: exhaustive enumeration over the joint assignment
space. Deliberately independent of the message-passing kernels."""

import numpy as np


def joint_array(graph):
    """(variables in id order, full joint weight tensor)."""
    variables = sorted(graph.all_variables(), key=lambda v: v.id)
    index = {v: i for i, v in enumerate(variables)}
    dims = [v.domain.size for v in variables]
    joint = np.ones(dims)
    for v in variables:
        shape = [1] * len(dims)
        shape[index[v]] = dims[index[v]]
        joint = joint * v.input.reshape(shape)
    for f in graph.all_factors():
        arr = f.table.to_dense_array()
        axes = [index[v] for v in f.variables]
        arr = np.transpose(arr, np.argsort(axes))
        shape = [dims[i] if i in axes else 1 for i in range(len(dims))]
        joint = joint * arr.reshape(shape)
    return variables, joint


def brute_marginals(graph):
    variables, joint = joint_array(graph)
    total = joint.sum()
    assert total > 0, "graph has zero total weight"
    out = {}
    for i, v in enumerate(variables):
        others = tuple(j for j in range(joint.ndim) if j != i)
        out[v.id] = joint.sum(axis=others) / total
    return out


def brute_map(graph):
    """(assignment dict, unique flag); unique means a strict gap to 2nd best."""
    variables, joint = joint_array(graph)
    flat = joint.reshape(-1)
    best = int(np.argmax(flat))
    idx = np.unravel_index(best, joint.shape)
    assignment = {v.id: v.domain.values[idx[i]] for i, v in enumerate(variables)}
    ordered = np.sort(flat)
    unique = ordered[-1] > 0 and (
        flat.size == 1 or ordered[-2] < ordered[-1] * (1.0 - 1e-9)
    )
    return assignment, unique


def brute_max_marginals(graph):
    """Per-variable max over the joint with that value fixed (max-product)."""
    variables, joint = joint_array(graph)
    out = {}
    for i, v in enumerate(variables):
        others = tuple(j for j in range(joint.ndim) if j != i)
        out[v.id] = joint.max(axis=others)
    return out
