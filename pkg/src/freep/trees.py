"""Enumeration of labelled spanning trees of K_n via Pruefer sequences.

Decoding a Pruefer sequence always leaves the largest label ``n - 1`` for
last, and the neighbour a leaf is attached to when it is removed is its
parent in the tree rooted at ``n - 1``.  The removal order is therefore a
leaves-first topological order, which is exactly what leaf-peeling needs.
The tables below are decoded for all ``n**(n-2)`` sequences at once.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np


@lru_cache(maxsize=None)
def rooted_tree_table(n: int) -> tuple[np.ndarray, np.ndarray]:
    """All spanning trees of K_n rooted at ``n - 1``.

    Returns
    -------
    parent : ndarray of int8, shape (n**(n-2), n)
        ``parent[t, v]`` is the parent of ``v`` in tree ``t``; ``-1`` at the root.
    order : ndarray of int8, shape (n**(n-2), n - 1)
        Non-root vertices of tree ``t``, children before parents.
    """
    if n < 1:
        raise ValueError("need at least one vertex")
    if n == 1:
        return np.full((1, 1), -1, dtype=np.int8), np.zeros((1, 0), dtype=np.int8)
    if n == 2:
        return np.array([[1, -1]], dtype=np.int8), np.array([[0]], dtype=np.int8)
    count = n ** (n - 2)
    idx = np.arange(count, dtype=np.int64)
    seq = np.empty((count, n - 2), dtype=np.int8)
    for k in range(n - 2):
        seq[:, k] = (idx // n ** (n - 3 - k)) % n
    rows = idx
    degree = np.ones((count, n), dtype=np.int8)
    for k in range(n - 2):
        np.add.at(degree, (rows, seq[:, k]), 1)
    parent = np.full((count, n), -1, dtype=np.int8)
    order = np.empty((count, n - 1), dtype=np.int8)
    for k in range(n - 2):
        leaf = np.argmax(degree == 1, axis=1)
        order[:, k] = leaf
        parent[rows, leaf] = seq[:, k]
        degree[rows, leaf] = 0
        degree[rows, seq[:, k]] -= 1
    last = np.argmax(degree == 1, axis=1)
    order[:, n - 2] = last
    parent[rows, last] = n - 1
    parent.setflags(write=False)
    order.setflags(write=False)
    return parent, order


def decode(seq, n: int) -> np.ndarray:
    """Parent array (rooted at ``n - 1``) of a single Pruefer sequence."""
    seq = list(seq)
    degree = [1] * n
    for s in seq:
        degree[s] += 1
    parent = [-1] * n
    for s in seq:
        leaf = next(v for v in range(n) if degree[v] == 1)
        parent[leaf] = s
        degree[leaf] = 0
        degree[s] -= 1
    u = next(v for v in range(n - 1) if degree[v] == 1)
    parent[u] = n - 1
    return np.array(parent)


def brute_force_trees(n: int) -> list[frozenset]:
    """Every spanning tree of K_n as a frozenset of edges, by subset filtering.

    Independent of the Pruefer route; only usable for small ``n``.
    """
    import itertools

    pairs = list(itertools.combinations(range(n), 2))
    out = []
    for edges in itertools.combinations(pairs, n - 1):
        root = list(range(n))

        def find(a):
            while root[a] != a:
                root[a] = root[root[a]]
                a = root[a]
            return a

        ok = True
        for u, v in edges:
            ru, rv = find(u), find(v)
            if ru == rv:
                ok = False
                break
            root[ru] = rv
        if ok:
            out.append(frozenset(edges))
    return out
