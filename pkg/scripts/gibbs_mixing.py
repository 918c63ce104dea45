#!/usr/bin/env python3
"""Gibbs error vs sweep count on a random positive-weight graph, against
exhaustive-enumeration marginals."""

import argparse
import sys

import numpy as np

sys.path.insert(0, "tests")  # reuse the test-suite oracle

from fgkit.gibbs import GibbsOptions, run_gibbs
from generators import random_positive_graph
from oracles import brute_marginals


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--burn-in", type=int, default=1000)
    args = ap.parse_args()

    graph = random_positive_graph(args.seed)
    exact = brute_marginals(graph)
    print(f"graph: {graph!r}")
    print(f"{'sweeps':>10} {'max |err|':>12}")
    for sweeps in (100, 1000, 10_000, 100_000, 1_000_000):
        res = run_gibbs(
            graph, GibbsOptions(burn_in=args.burn_in, samples=sweeps, seed=args.seed)
        )
        err = max(
            float(np.abs(res.beliefs[vid] - exact[vid]).max()) for vid in exact
        )
        print(f"{sweeps:>10} {err:>12.5f}")


if __name__ == "__main__":
    main()
