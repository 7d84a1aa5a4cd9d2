"""Free p-space norms of molecules on finite spaces.

The norm of a molecule is the infimum of ``(sum |a_j|**p)**(1/p)`` over all
ways of writing it as a combination of elementary molecules.  On a finite
space the objective is concave on each orthant of the (affine) feasible set,
so the infimum is attained at a basic solution, whose support is a forest of
pairs; padding with zero coefficients turns any forest into a spanning tree.
:func:`norm_exact` therefore takes the minimum over all spanning trees of the
complete graph on the space, solving each tree by leaf-peeling: the edge
from ``v`` to its parent carries the total mass of the subtree below ``v``.

:func:`norm_search` gives an uncertified upper bound (local search over tree
supports, or reweighted least squares over arbitrary supports), and
:func:`dual_lower_bound` the scalar Lipschitz dual, which is a lower bound for
every ``p`` and equals the norm at ``p = 1``.
"""

from __future__ import annotations

import itertools
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linprog

from .errors import ExponentError, FreepError, SizeCapError, SpaceMismatchError
from .molecule import PRUNE_TOL, ElementaryDecomposition, Molecule, pushforward
from .space import QuasiMetricSpace, SubsetSelection, label_str
from .trees import decode, rooted_tree_table

EXACT_CAP = 9
CHUNK = 1 << 17
# relative size under which a subtree mass is treated as exact cancellation
CANCEL_RTOL = 1e-12


@dataclass(frozen=True)
class NormResult:
    value: float
    witness: ElementaryDecomposition
    method: str
    certified: bool

    def to_dict(self) -> dict:
        return {
            "value": self.value,
            "witness": self.witness.to_list(),
            "method": self.method,
            "certified": self.certified,
        }


def _check_exponent(space: QuasiMetricSpace, p: float) -> None:
    if not 0 < p <= 1:
        raise ExponentError(f"norm exponent must lie in (0, 1], got {p}")
    if p > space.p + 1e-12:
        raise ExponentError(f"exponent {p} exceeds the space exponent {space.p}")


def _labelling(space: QuasiMetricSpace) -> np.ndarray:
    """Space index of each tree label; the base point gets the root label n-1."""
    others = [i for i in range(len(space)) if i != space.base_index]
    return np.array(others + [space.base_index])


def _tree_costs(par, order, mass, D, p, tol):
    rows = np.arange(par.shape[0])
    S = np.broadcast_to(mass, (par.shape[0], mass.size)).copy()
    for k in range(order.shape[1]):
        v = order[:, k]
        S[rows, par[rows, v]] += S[rows, v]
    n = mass.size
    child = np.arange(n - 1)
    S = S[:, : n - 1]
    S[np.abs(S) < tol] = 0.0
    lengths = D[child[None, :], par[:, : n - 1]]
    return np.sum(np.abs(S * lengths) ** p, axis=1)


def _peel(parent, mass, D, tol):
    """Subtree masses for one rooted tree (root = last label)."""
    n = mass.size
    S = mass.astype(float).copy()
    depth = np.zeros(n, dtype=int)
    for v in range(n - 1):
        u, k = v, 0
        while parent[u] >= 0:
            u, k = parent[u], k + 1
        depth[v] = k
    for v in sorted(range(n - 1), key=lambda v: -depth[v]):
        S[parent[v]] += S[v]
    S = S[: n - 1]
    S[np.abs(S) < tol] = 0.0
    return S


def _witness(space, labels, parent, S, D):
    terms = []
    for v in range(len(labels) - 1):
        a = float(S[v] * D[v, parent[v]])
        if abs(a) >= PRUNE_TOL:
            terms.append((space.points[labels[v]], space.points[labels[parent[v]]], a))
    return ElementaryDecomposition(tuple(terms))


def _edge_keys(par, labels, n):
    """Sorted undirected edge codes per tree, in space indices, for tie-breaks."""
    child = labels[np.arange(n - 1)][None, :]
    parent = labels[par[:, : n - 1].astype(np.int64)]
    lo = np.minimum(child, parent)
    hi = np.maximum(child, parent)
    return np.sort(lo * n + hi, axis=1)


def norm_exact(mu: Molecule, p: float, cap: int = EXACT_CAP, workers: int = 1) -> NormResult:
    """Certified norm by enumerating all spanning trees of the space.

    Raises :class:`SizeCapError` above ``cap`` points (use :func:`norm_search`)
    and :class:`ExponentError` when ``p`` exceeds the space exponent.
    """
    space = mu.space
    n = len(space)
    _check_exponent(space, p)
    if n > cap:
        raise SizeCapError(f"{n} points exceed the exact-norm cap {cap}; use norm_search")
    if mu.is_zero():
        return NormResult(0.0, ElementaryDecomposition(()), "enumeration", True)
    labels = _labelling(space)
    mass = mu.coeffs[labels]
    D = space.dist[np.ix_(labels, labels)]
    tol = CANCEL_RTOL * float(np.sum(np.abs(mass)))
    par, order = rooted_tree_table(n)
    starts = range(0, par.shape[0], CHUNK)

    def run(s):
        return _tree_costs(par[s : s + CHUNK], order[s : s + CHUNK], mass, D, p, tol)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(run, starts))
    else:
        parts = [run(s) for s in starts]
    costs = np.concatenate(parts)
    cmin = float(costs.min())
    ties = np.flatnonzero(costs <= cmin * (1 + 1e-12))
    if ties.size > 1:
        keys = _edge_keys(par[ties], labels, n)
        best = ties[np.lexsort(keys.T[::-1])[0]]
    else:
        best = ties[0]
    parent = par[best].astype(int)
    S = _peel(parent, mass, D, tol)
    witness = _witness(space, labels, parent, S, D)
    return NormResult(cmin ** (1.0 / p), witness, "enumeration", True)


def _tree_cost_from_edges(edges, n, mass, D, p, tol):
    """Root the undirected tree at label n-1, peel, and return (cost, parent, S)."""
    adj = [[] for _ in range(n)]
    for u, v in edges:
        adj[u].append(v)
        adj[v].append(u)
    parent = [-1] * n
    seen = [False] * n
    seen[n - 1] = True
    order = []
    stack = [n - 1]
    while stack:
        u = stack.pop()
        order.append(u)
        for w in adj[u]:
            if not seen[w]:
                seen[w] = True
                parent[w] = u
                stack.append(w)
    S = mass.astype(float).copy()
    for u in reversed(order):
        if parent[u] >= 0:
            S[parent[u]] += S[u]
    cost = 0.0
    for v in range(n - 1):
        s = S[v] if abs(S[v]) >= tol else 0.0
        S[v] = s
        cost += abs(s * D[v, parent[v]]) ** p
    return cost, parent, S[: n - 1]


def _components_without(edges, drop, n):
    adj = [[] for _ in range(n)]
    for k, (u, v) in enumerate(edges):
        if k != drop:
            adj[u].append(v)
            adj[v].append(u)
    side = [False] * n
    start = edges[drop][0]
    side[start] = True
    stack = [start]
    while stack:
        u = stack.pop()
        for w in adj[u]:
            if not side[w]:
                side[w] = True
                stack.append(w)
    return side


def _search_trees(mu, p, restarts, rng):
    space = mu.space
    n = len(space)
    labels = _labelling(space)
    mass = mu.coeffs[labels]
    D = space.dist[np.ix_(labels, labels)]
    tol = CANCEL_RTOL * float(np.sum(np.abs(mass)))
    best = (np.inf, None, None)
    for _ in range(max(1, restarts)):
        par0 = decode(rng.integers(0, n, size=n - 2), n) if n > 2 else np.array([1, -1][:n])
        edges = [(v, int(par0[v])) for v in range(n - 1)]
        cost, parent, S = _tree_cost_from_edges(edges, n, mass, D, p, tol)
        improved = True
        while improved:
            improved = False
            for k in rng.permutation(len(edges)):
                side = _components_without(edges, k, n)
                a_side = [v for v in range(n) if side[v]]
                b_side = [v for v in range(n) if not side[v]]
                for u, v in itertools.product(a_side, b_side):
                    cand = (u, v)
                    if {u, v} == set(edges[k]):
                        continue
                    trial = edges[:k] + [cand] + edges[k + 1 :]
                    c2, par2, S2 = _tree_cost_from_edges(trial, n, mass, D, p, tol)
                    if c2 < cost * (1 - 1e-13):
                        edges, cost, parent, S = trial, c2, par2, S2
                        improved = True
                        break
                if improved:
                    break
        if cost < best[0]:
            best = (cost, parent, S)
    cost, parent, S = best
    witness = _witness(space, labels, np.asarray(parent), S, D)
    return NormResult(float(cost) ** (1.0 / p), witness, "local-search", False)


def _pair_matrix(space: QuasiMetricSpace):
    """Columns = elementary molecules of all pairs, rows = non-base points."""
    n = len(space)
    pairs = list(itertools.combinations(range(n), 2))
    B = np.zeros((n, len(pairs)))
    for e, (i, j) in enumerate(pairs):
        dij = space.dist[i, j]
        B[i, e] = 1.0 / dij
        B[j, e] = -1.0 / dij
    keep = [i for i in range(n) if i != space.base_index]
    return B[keep], pairs


def _search_any(mu, p, restarts, rng, iterations=80):
    space = mu.space
    B, pairs = _pair_matrix(space)
    keep = [i for i in range(len(space)) if i != space.base_index]
    m = mu.coeffs[keep]
    R = max(1, restarts)
    a_ls = np.linalg.lstsq(B, m, rcond=None)[0]
    scale = float(np.max(np.abs(a_ls)))
    # random feasible starting decompositions over all pairs
    _, sv, Vt = np.linalg.svd(B)
    null = Vt[np.sum(sv > 1e-12 * sv[0]) :]
    A = a_ls[None, :] + scale * rng.standard_normal((R, null.shape[0])) @ null
    eps = scale
    for _ in range(iterations):
        winv = (A**2 + eps**2) ** (1 - p / 2)
        G = np.einsum("ie,re,je->rij", B, winv, B)
        y = np.linalg.solve(G, np.broadcast_to(m, (R, m.size))[..., None])[..., 0]
        A = winv * (y @ B)
        eps = max(eps * 0.7, 1e-10 * scale)
    # drop numerically vanished coefficients and refit on the surviving support
    mask = np.abs(A) > 1e-9 * scale
    winv = np.where(mask, np.abs(A), 0.0)
    G = np.einsum("ie,re,je->rij", B, winv, B)
    y = np.einsum("rij,j->ri", np.linalg.pinv(G), m)
    A2 = winv * (y @ B)
    resid = np.abs(A2 @ B.T - m[None, :]).max(axis=1)
    A = np.where((resid <= 1e-10 * max(1.0, np.abs(m).max()))[:, None], A2, A)
    A[np.abs(A) < PRUNE_TOL] = 0.0
    costs = np.sum(np.abs(A) ** p, axis=1)
    r = int(np.argmin(costs))
    terms = tuple(
        (space.points[i], space.points[j], float(A[r, e])) for e, (i, j) in enumerate(pairs) if A[r, e] != 0
    )
    return NormResult(float(costs[r]) ** (1.0 / p), ElementaryDecomposition(terms), "local-search", False)


def norm_search(mu: Molecule, p: float, restarts: int = 20, seed=0, support: str = "tree") -> NormResult:
    """Uncertified upper bound on the norm by randomised local descent.

    ``support="tree"`` runs edge-swap descent over spanning trees, re-solving
    each tree by leaf-peeling.  ``support="any"`` starts from random dense
    decompositions over all pairs and runs iteratively reweighted least
    squares, which never restricts the support to a tree.
    """
    _check_exponent(mu.space, p)
    if mu.is_zero():
        return NormResult(0.0, ElementaryDecomposition(()), "local-search", False)
    rng = np.random.default_rng(seed)
    if support == "tree":
        return _search_trees(mu, p, restarts, rng)
    if support == "any":
        return _search_any(mu, p, restarts, rng)
    raise ValueError(f"unknown support mode {support!r}")


def dual_lower_bound(mu: Molecule, p: float = 1.0) -> float:
    """max sum a_x f(x) over scalar f with |f(x) - f(y)| <= d(x, y), f(0) = 0."""
    space = mu.space
    _check_exponent(space, p)
    if mu.is_zero():
        return 0.0
    keep = [i for i in range(len(space)) if i != space.base_index]
    k = len(keep)
    rows, rhs = [], []
    for a, b in itertools.combinations(range(k), 2):
        row = np.zeros(k)
        row[a], row[b] = 1.0, -1.0
        dab = space.dist[keep[a], keep[b]]
        rows += [row, -row]
        rhs += [dab, dab]
    bounds = [(-space.dist[i, space.base_index], space.dist[i, space.base_index]) for i in keep]
    res = linprog(
        -mu.coeffs[keep],
        A_ub=np.array(rows) if rows else None,
        b_ub=np.array(rhs) if rhs else None,
        bounds=bounds,
        method="highs",
    )
    if res.status != 0:
        raise FreepError(f"dual LP did not converge: {res.message}")
    return float(-res.fun)


def norm(mu: Molecule, p: float, method: str = "exact", **kw) -> NormResult:
    if method == "exact":
        return norm_exact(mu, p, **kw)
    if method == "search":
        return norm_search(mu, p, **kw)
    if method == "dual":
        return NormResult(dual_lower_bound(mu, p), ElementaryDecomposition(()), "dual", False)
    raise ValueError(f"unknown method {method!r}")


def norm_upper(mu: Molecule, p: float, cap: int = EXACT_CAP, restarts: int = 8) -> float:
    """Upper bound on the norm in ``mu.space`` using only the support.

    Restricting to support + base can only increase the norm (the inclusion
    of a subspace is non-expansive), so the exact value on the restriction,
    or a search value when the restriction is still too large, bounds the
    ambient norm from above.
    """
    if mu.is_zero():
        return 0.0
    sub = mu.space.restrict(set(mu.support) | {mu.space.base})
    nu = Molecule(sub, {x: a for x, a in mu.items()})
    if len(sub) <= cap:
        return norm_exact(nu, p, cap=cap).value
    return norm_search(nu, p, restarts=restarts).value


def envelope_compare(mu: Molecule, p: float, q: float) -> tuple[float, float]:
    """Certified norms of ``mu`` at levels p <= q."""
    if p > q:
        raise ExponentError(f"need p <= q, got p={p}, q={q}")
    a = norm_exact(mu, p).value
    b = a if q == p else norm_exact(mu, q).value
    return a, b


@dataclass(frozen=True)
class DistortionReport:
    norm_sub: float
    norm_parent: float
    ratio: float
    bound: float | None
    counterexample: bool

    def to_dict(self) -> dict:
        return {
            "norm_sub": self.norm_sub,
            "norm_parent": self.norm_parent,
            "ratio": self.ratio,
            "bound": self.bound,
            "counterexample": self.counterexample,
        }


def distortion(
    parent: QuasiMetricSpace, sub: SubsetSelection, mu: Molecule, p: float, bound: float | None = None
) -> DistortionReport:
    """Compare the norm of ``mu`` in F_p(N) with its image in F_p(M).

    ``mu`` may live on ``sub.space()`` or on ``parent`` (then its support must
    lie in N).  ``bound`` is the embedding constant to test against,
    typically ``A**(1/p)``; ratios above it are flagged.
    """
    if not sub.parent.same_as(parent):
        raise SpaceMismatchError("subset does not belong to the parent space")
    N = sub.space()
    escaped = [x for x in mu.support if x not in sub.members]
    if escaped:
        raise SpaceMismatchError(f"molecule support escapes the subset: {[label_str(x) for x in escaped]}")
    mu_n = Molecule(N, {x: a for x, a in mu.items()})
    mu_m = pushforward(mu_n, lambda x: x, parent)
    a = norm_exact(mu_n, p).value
    b = norm_exact(mu_m, p).value
    ratio = 1.0 if a == b else (a / b if b > 0 else float("inf"))
    flagged = bound is not None and ratio > bound * (1 + 1e-9)
    return DistortionReport(a, b, ratio, bound, flagged)
