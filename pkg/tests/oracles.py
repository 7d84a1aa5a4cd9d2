"""Independent reference computations used by the tests."""

import itertools

import numpy as np
from scipy.sparse.csgraph import shortest_path

from freep.molecule import Molecule
from freep.space import QuasiMetricSpace
from freep.trees import brute_force_trees


def tree_flow_norm(mu: Molecule, p: float) -> float:
    """Minimum over spanning trees (found by subset filtering) of
    ``(sum |flow_e| ** p * d_e ** p) ** (1/p)`` where ``flow_e`` is the
    mass on the side of ``e`` away from the base."""
    X = mu.space
    n = len(X)
    best = np.inf
    for edges in brute_force_trees(n):
        adj = {i: set() for i in range(n)}
        for u, v in edges:
            adj[u].add(v)
            adj[v].add(u)
        cost = 0.0
        for u, v in edges:
            # component of u after deleting (u, v)
            seen, stack = {u}, [u]
            while stack:
                a = stack.pop()
                for b in adj[a]:
                    if (a, b) in ((u, v), (v, u)) or b in seen:
                        continue
                    seen.add(b)
                    stack.append(b)
            side = seen if X.base_index not in seen else set(range(n)) - seen
            flow = sum(mu.coeffs[i] for i in side)
            cost += abs(flow * X.dist[u, v]) ** p
        best = min(best, cost)
    return best ** (1 / p)


def random_metric_table(n: int, rng) -> np.ndarray:
    W = rng.uniform(0.5, 2.0, size=(n, n))
    W = np.triu(W, 1)
    W = W + W.T
    D = shortest_path(W, directed=False)
    upper = np.triu(D, 1)
    return upper + upper.T


def random_space(n: int, p: float, rng) -> QuasiMetricSpace:
    """Complete-graph shortest-path metric raised to ``1/p``."""
    return QuasiMetricSpace(range(n), 0, random_metric_table(n, rng) ** (1 / p), p)


def random_molecule(X: QuasiMetricSpace, rng) -> Molecule:
    return Molecule(X, {x: float(rng.normal()) for x in X.nonbase})


def all_pairs(points):
    return itertools.combinations(points, 2)
