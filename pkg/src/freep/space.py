"""Finite pointed quasi-metric spaces and the standard test families.

A :class:`QuasiMetricSpace` is an ordered list of hashable point labels, a
distinguished base point, a symmetric distance table and the exponent ``p``
for which the table is claimed to satisfy

    d(x, z)**p <= d(x, y)**p + d(y, z)**p.

Spaces are immutable; the distance table is stored as a read-only float64
array.  Structural problems (asymmetry, negative or zero off-diagonal
entries) raise :class:`~freep.errors.SpaceStructureError` at construction;
the p-triangle inequality is checked separately by :func:`validate`, because
several builders produce large tables where an O(n^3) sweep is optional.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Hashable, Iterable, Sequence

import networkx as nx
import numpy as np

from .errors import (
    ExponentError,
    SizeCapError,
    SpaceStructureError,
    TreeError,
    TriangleError,
)

TRIANGLE_RTOL = 1e-9
GRID_SIZE_CAP = 20000

Label = Hashable


def label_str(label: Label) -> str:
    """Stable string form of a point label, used by the JSON formats."""
    if isinstance(label, tuple):
        return ",".join(str(c) for c in label)
    return str(label)


def _check_table(dist: np.ndarray, n: int) -> str | None:
    if dist.shape != (n, n):
        return f"distance table has shape {dist.shape}, expected {(n, n)}"
    if not np.all(np.isfinite(dist)):
        return "distance table contains non-finite entries"
    if np.any(dist < 0):
        i, j = np.argwhere(dist < 0)[0]
        return f"negative distance at ({i}, {j})"
    if np.any(np.diag(dist) != 0):
        return "nonzero diagonal entry"
    off = dist + np.eye(n)
    if np.any(off <= 0):
        i, j = np.argwhere(off <= 0)[0]
        return f"zero distance between distinct points ({i}, {j})"
    if not np.array_equal(dist, dist.T):
        i, j = np.argwhere(dist != dist.T)[0]
        return f"asymmetric entries at ({i}, {j})"
    return None


class QuasiMetricSpace:
    """Finite pointed p-metric space.

    Parameters
    ----------
    points : sequence of hashable
        Point labels, in a fixed order that indexes ``dist``.
    base : hashable
        The base point; must be one of ``points``.
    dist : array_like, shape (n, n)
        Symmetric distance table with zero diagonal and positive off-diagonal.
    p : float
        Declared exponent in (0, 1].
    """

    __slots__ = ("points", "base", "dist", "p", "_index", "base_index")

    def __init__(self, points: Sequence[Label], base: Label, dist, p: float):
        points = tuple(points)
        if len(set(points)) != len(points):
            raise SpaceStructureError("duplicate point labels")
        if not 0 < p <= 1:
            raise ExponentError(f"space exponent must lie in (0, 1], got {p}")
        table = np.array(dist, dtype=float)
        problem = _check_table(table, len(points))
        if problem is not None:
            raise SpaceStructureError(problem)
        index = {x: i for i, x in enumerate(points)}
        if base not in index:
            raise SpaceStructureError(f"base point {base!r} is not a point of the space")
        table.setflags(write=False)
        object.__setattr__(self, "points", points)
        object.__setattr__(self, "base", base)
        object.__setattr__(self, "dist", table)
        object.__setattr__(self, "p", float(p))
        object.__setattr__(self, "_index", index)
        object.__setattr__(self, "base_index", index[base])

    def __setattr__(self, name, value):
        raise AttributeError("QuasiMetricSpace is immutable")

    def __len__(self) -> int:
        return len(self.points)

    def __contains__(self, x) -> bool:
        return x in self._index

    def __repr__(self) -> str:
        return f"QuasiMetricSpace(n={len(self)}, base={self.base!r}, p={self.p})"

    def same_as(self, other: "QuasiMetricSpace") -> bool:
        """Content equality: same labels, base, exponent and distance table."""
        if self is other:
            return True
        return (
            isinstance(other, QuasiMetricSpace)
            and self.points == other.points
            and self.base == other.base
            and self.p == other.p
            and np.array_equal(self.dist, other.dist)
        )

    def index(self, x: Label) -> int:
        try:
            return self._index[x]
        except KeyError:
            raise KeyError(f"{x!r} is not a point of this space") from None

    def d(self, x: Label, y: Label) -> float:
        return float(self.dist[self._index[x], self._index[y]])

    @property
    def nonbase(self) -> tuple:
        return tuple(x for x in self.points if x != self.base)

    def restrict(self, members: Iterable[Label]) -> "QuasiMetricSpace":
        """Subspace on ``members`` (parent order kept); must contain the base."""
        wanted = set(members)
        missing = wanted - set(self.points)
        if missing:
            raise SpaceStructureError(f"points not in space: {sorted(map(str, missing))}")
        if self.base not in wanted:
            raise SpaceStructureError("a pointed subspace must contain the base point")
        idx = [i for i, x in enumerate(self.points) if x in wanted]
        pts = [self.points[i] for i in idx]
        return QuasiMetricSpace(pts, self.base, self.dist[np.ix_(idx, idx)], self.p)

    def with_exponent(self, p: float) -> "QuasiMetricSpace":
        return QuasiMetricSpace(self.points, self.base, self.dist, p)

    def to_dict(self) -> dict:
        return {
            "points": [label_str(x) for x in self.points],
            "base": label_str(self.base),
            "p": self.p,
            "dist": self.dist.tolist(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "QuasiMetricSpace":
        return cls(list(data["points"]), data["base"], data["dist"], data["p"])

    def lookup(self, name: str) -> Label:
        """Map a JSON point name back to the label it was written from."""
        for x in self.points:
            if label_str(x) == name or x == name:
                return x
        raise KeyError(f"no point named {name!r}")


@dataclass(frozen=True)
class ValidityReport:
    ok: bool
    worst_triple: tuple | None
    worst_ratio: float
    structural: str | None = None

    def __bool__(self) -> bool:
        return self.ok


def validate_table(points: Sequence[Label], dist, p: float) -> ValidityReport:
    """Check a raw table: structural sanity first, then the p-triangle law.

    ``worst_ratio`` is ``max d(x,z)^p / (d(x,y)^p + d(y,z)^p)`` over triples
    of distinct points; the check passes when it is at most ``1 + 1e-9``.
    """
    table = np.asarray(dist, dtype=float)
    problem = _check_table(table, len(points))
    if problem is not None:
        return ValidityReport(False, None, float("nan"), structural=problem)
    n = len(points)
    if n < 3:
        return ValidityReport(True, None, 0.0)
    P = table**p
    worst, where = -1.0, None
    with np.errstate(divide="ignore", invalid="ignore"):
        for y in range(n):
            denom = P[:, y, None] + P[None, y, :]
            ratio = np.where(denom > 0, P / denom, 0.0)
            ratio[y, :] = 0.0
            ratio[:, y] = 0.0
            np.fill_diagonal(ratio, 0.0)
            k = int(np.argmax(ratio))
            if ratio.flat[k] > worst:
                worst = float(ratio.flat[k])
                where = (points[k // n], points[y], points[k % n])
    return ValidityReport(worst <= 1 + TRIANGLE_RTOL, where, worst)


def validate(space: QuasiMetricSpace, p: float | None = None) -> ValidityReport:
    """Validate ``space`` at its declared exponent, or at ``p`` if given."""
    return validate_table(space.points, space.dist, space.p if p is None else p)


def ensure_valid(space: QuasiMetricSpace) -> QuasiMetricSpace:
    report = validate(space)
    if not report.ok:
        raise TriangleError(
            f"p-triangle inequality fails at {report.worst_triple} (ratio {report.worst_ratio:.6g})",
            triple=report.worst_triple,
            ratio=report.worst_ratio,
        )
    return space


def snowflake(space: QuasiMetricSpace, r: float) -> QuasiMetricSpace:
    """Replace d by d**r; the result is declared min(1, p/r)-metric."""
    if not r > 0:
        raise ExponentError(f"snowflake exponent must be positive, got {r}")
    if r == 1:
        return space
    out = QuasiMetricSpace(space.points, space.base, space.dist**r, min(1.0, space.p / r))
    return ensure_valid(out)


def from_points(coords: dict, base: Label, p: float = 1.0, ord=np.inf, power: float = 1.0):
    """Space on labelled real vectors with distance ``|u - v|_ord ** power``."""
    labels = list(coords)
    X = np.array([np.atleast_1d(np.asarray(coords[k], dtype=float)) for k in labels])
    diff = X[:, None, :] - X[None, :, :]
    if ord == np.inf:
        D = np.abs(diff).max(axis=2)
    else:
        D = (np.abs(diff) ** ord).sum(axis=2) ** (1.0 / ord)
    return QuasiMetricSpace(labels, base, D**power, p)


def line_space(xs: Sequence[float], base=0, p: float = 1.0) -> QuasiMetricSpace:
    """Points of the real line labelled by themselves, d(x,y) = |x - y|."""
    return from_points({x: [x] for x in xs}, base, p)


def grid_space(dim: int, q: float, t: float = 1.0, radius: int = 1, cap: int = GRID_SIZE_CAP):
    """Window ``{w in Z^dim : |w|_inf <= radius}`` of ``(tZ^dim, |.|_inf^(1/q))``.

    Points are labelled by their integer index vectors ``w`` (tuples); the
    actual location is ``t*w``, so distances are ``(t*|u - v|_inf)**(1/q)``.
    The declared exponent is ``min(q, 1)``.
    """
    if dim < 1 or radius < 1:
        raise ValueError("dim and radius must be positive")
    if not q > 0 or not t > 0:
        raise ExponentError("q and t must be positive")
    size = (2 * radius + 1) ** dim
    if dim * size > cap:
        raise SizeCapError(f"grid window with {size} points in dimension {dim} exceeds cap {cap}")
    labels = list(itertools.product(range(-radius, radius + 1), repeat=dim))
    W = np.array(labels, dtype=float)
    D = (float(t) * np.abs(W[:, None, :] - W[None, :, :]).max(axis=2)) ** (1.0 / q)
    return QuasiMetricSpace(labels, (0,) * dim, D, min(float(q), 1.0))


@dataclass(frozen=True)
class WeightedTree:
    """Finite tree with positive edge weights and a root used as base point."""

    vertices: tuple
    edges: tuple
    root: Label
    _graph: nx.Graph = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "vertices", tuple(self.vertices))
        object.__setattr__(self, "edges", tuple((u, v, float(w)) for u, v, w in self.edges))
        if self.root not in self.vertices:
            raise TreeError("root is not a vertex")
        G = nx.Graph()
        G.add_nodes_from(self.vertices)
        for u, v, w in self.edges:
            if u not in G or v not in G:
                raise TreeError(f"edge ({u!r}, {v!r}) uses an unknown vertex")
            if not w > 0:
                raise TreeError(f"edge ({u!r}, {v!r}) has non-positive weight {w}")
            if u == v or G.has_edge(u, v):
                raise TreeError(f"edge ({u!r}, {v!r}) is a loop or repeated")
            G.add_edge(u, v, weight=w)
        if not nx.is_connected(G):
            raise TreeError("tree is disconnected")
        if G.number_of_edges() != len(self.vertices) - 1:
            raise TreeError("graph contains a cycle")
        object.__setattr__(self, "_graph", G)

    @property
    def graph(self) -> nx.Graph:
        return self._graph

    def path_lengths(self) -> np.ndarray:
        lengths = dict(nx.all_pairs_dijkstra_path_length(self._graph))
        D = np.array([[lengths[u][v] for v in self.vertices] for u in self.vertices])
        # path sums depend on summation order; mirror the upper triangle
        upper = np.triu(D, 1)
        return upper + upper.T

    def to_dict(self) -> dict:
        return {
            "vertices": [label_str(v) for v in self.vertices],
            "edges": [[label_str(u), label_str(v), w] for u, v, w in self.edges],
            "root": label_str(self.root),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "WeightedTree":
        return cls(tuple(data["vertices"]), tuple(tuple(e) for e in data["edges"]), data["root"])


def skeleton_tree_space(tree: WeightedTree, p: float = 1.0) -> QuasiMetricSpace:
    """Vertex set of ``tree`` with distance (path weight)**(1/p), base = root."""
    return QuasiMetricSpace(tree.vertices, tree.root, tree.path_lengths() ** (1.0 / p), p)


def leaves(tree: WeightedTree) -> frozenset:
    """The root together with every vertex whose root path cannot be extended."""
    G = tree.graph
    out = {tree.root}
    for v in tree.vertices:
        if v != tree.root and G.degree(v) == 1:
            out.add(v)
    return frozenset(out)


@dataclass(frozen=True)
class SubsetSelection:
    """Pointed subset N of a parent space M (always contains the base)."""

    parent: QuasiMetricSpace
    members: frozenset

    def __post_init__(self):
        members = frozenset(self.members)
        object.__setattr__(self, "members", members)
        extra = [x for x in members if x not in self.parent]
        if extra:
            raise SpaceStructureError(f"members not in parent: {extra}")
        if self.parent.base not in members:
            raise SpaceStructureError("subset must contain the base point")

    @property
    def ordered(self) -> tuple:
        return tuple(x for x in self.parent.points if x in self.members)

    @property
    def complement(self) -> tuple:
        return tuple(x for x in self.parent.points if x not in self.members)

    def space(self) -> QuasiMetricSpace:
        return self.parent.restrict(self.members)

    def to_dict(self) -> dict:
        return {"members": [label_str(x) for x in self.ordered]}

    @classmethod
    def from_dict(cls, parent: QuasiMetricSpace, data: dict) -> "SubsetSelection":
        names = data["members"] if isinstance(data, dict) else data
        return cls(parent, frozenset(parent.lookup(str(x)) for x in names))
