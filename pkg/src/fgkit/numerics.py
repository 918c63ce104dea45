"""Normative message arithmetic.

Both the software solvers and the accelerator simulator must produce
bitwise-identical beliefs, so the few floating-point conventions they share
live here:

* products/sums over a factor's entries accumulate in stored-entry order
  (``np.add.at`` / ``np.minimum.at`` are order-preserving),
* costs are negative-log weights, with zero weight saturated at ``COST_CAP``
  instead of infinity so hard constraints never produce NaNs,
* sum-product messages are normalized to sum 1, min-sum messages to min 0,
  and min-sum values are clipped back into ``[0, COST_CAP]`` after every
  update so iterated hard constraints cannot overflow.
"""

from __future__ import annotations

import numpy as np

from .errors import ContradictionError

# Saturating stand-in for an infinite cost. Degree <= 16 plus one table term
# keeps any single accumulation below 18 * COST_CAP < float64 max.
COST_CAP = 1e300


def weights_to_costs(weights: np.ndarray) -> np.ndarray:
    """Negative-log transform with zero weights saturated at COST_CAP."""
    w = np.asarray(weights, dtype=np.float64)
    costs = np.full(w.shape, COST_CAP, dtype=np.float64)
    pos = w > 0.0
    costs[pos] = -np.log(w[pos])
    return costs


def normalize_sum(values: np.ndarray, variable_id=None, edges=()) -> np.ndarray:
    """Normalize a weight vector to sum 1; all-zero input is a contradiction."""
    total = values.sum()
    if total <= 0.0 or not np.isfinite(total):
        raise ContradictionError(
            f"all-zero message/belief for variable {variable_id}",
            variable_id,
            edges,
        )
    return values / total


def normalize_min(costs: np.ndarray) -> np.ndarray:
    """Shift a cost vector so its minimum is exactly 0, saturated at COST_CAP."""
    clipped = np.minimum(costs, COST_CAP)
    return clipped - clipped.min()


def costs_to_probabilities(costs: np.ndarray) -> np.ndarray:
    """Normalized exp(-cost); used to publish min-sum beliefs as probabilities."""
    p = np.exp(-normalize_min(costs))
    return p / p.sum()
