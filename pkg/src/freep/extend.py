"""Linear extension of Lipschitz maps N -> X to maps M -> L_p([0,1), X).

Values of the extension are step functions on ``[0, 1)``.  For ``x`` in the
complement V of N, the active Whitney sets of ``x`` split ``[0, 1)`` into
consecutive intervals of length ``phi_j(x)`` (in construction order), and
the interval of set ``j`` carries ``f(x_j)`` at that set's anchor.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import ExponentError, MapError, SpaceMismatchError
from .space import QuasiMetricSpace, SubsetSelection, label_str
from .whitney import PartitionOfUnity

MERGE_TOL = 1e-12


@dataclass(frozen=True)
class PNormedValueSpace:
    """``R^m`` with the p-norm ``(sum |v_i|**p)**(1/p)``."""

    m: int
    p: float

    def __post_init__(self):
        if not 0 < self.p <= 1:
            raise ExponentError(f"value exponent must lie in (0, 1], got {self.p}")

    def norm(self, v) -> float:
        v = np.asarray(v, dtype=float)
        return float(np.sum(np.abs(v) ** self.p) ** (1.0 / self.p))

    def triangle_ratio(self, rng, samples: int = 1000) -> float:
        """Worst ``||x+y||^p / (||x||^p + ||y||^p)`` on random pairs."""
        X = rng.normal(size=(samples, self.m))
        Y = rng.normal(size=(samples, self.m))
        f = lambda A: np.sum(np.abs(A) ** self.p, axis=1)
        return float(np.max(f(X + Y) / (f(X) + f(Y))))


class StepFunction:
    """Piecewise-constant map ``[0, 1) -> R^m``.

    ``breakpoints`` run from 0 to 1, strictly increasing; ``values[i]`` is
    the value on ``[breakpoints[i], breakpoints[i+1])``.  Breakpoints may be
    floats or :class:`fractions.Fraction` (lengths then stay exact).
    """

    __slots__ = ("breakpoints", "values")

    def __init__(self, breakpoints, values):
        bp = tuple(breakpoints)
        vals = np.array(values, dtype=float)
        if vals.ndim == 1:
            vals = vals[:, None]
        if len(bp) < 2 or bp[0] != 0 or bp[-1] != 1:
            raise ValueError("breakpoints must start at 0 and end at 1")
        if any(b <= a for a, b in zip(bp, bp[1:])):
            raise ValueError("breakpoints must be strictly increasing")
        if vals.shape[0] != len(bp) - 1:
            raise ValueError("need one value per interval")
        vals.setflags(write=False)
        object.__setattr__(self, "breakpoints", bp)
        object.__setattr__(self, "values", vals)

    def __setattr__(self, name, value):
        raise AttributeError("StepFunction is immutable")

    @classmethod
    def constant(cls, v) -> "StepFunction":
        return cls((0, 1), [np.atleast_1d(np.asarray(v, dtype=float))])

    @classmethod
    def indicator(cls, a, b, m: int = 1) -> "StepFunction":
        """``chi_[a, b)`` on ``[0, 1)`` for ``0 <= a <= b <= 1``."""
        bp, vals = [0], []
        for lo, hi, v in ((0, a, 0.0), (a, b, 1.0), (b, 1, 0.0)):
            if hi > lo:
                bp.append(hi)
                vals.append(np.full(m, v))
        if len(bp) == 1:
            raise ValueError("empty ambient interval")
        return cls(bp, vals)

    @property
    def dim(self) -> int:
        return self.values.shape[1]

    def lengths(self) -> list:
        return [b - a for a, b in zip(self.breakpoints, self.breakpoints[1:])]

    def __call__(self, t):
        i = bisect.bisect_right(self.breakpoints, t) - 1
        return self.values[min(i, len(self.values) - 1)]

    def equals(self, other: "StepFunction") -> bool:
        """Bitwise equality of breakpoints and values."""
        return self.breakpoints == other.breakpoints and np.array_equal(self.values, other.values)

    def __sub__(self, other):
        return step_sub(self, other)

    def __add__(self, other):
        return _combine(self, other, np.add)

    def __mul__(self, c):
        return StepFunction(self.breakpoints, float(c) * self.values)

    __rmul__ = __mul__

    def __repr__(self) -> str:
        return f"StepFunction({len(self.values)} pieces, dim={self.dim})"


def _merged_grid(f: StepFunction, g: StepFunction) -> list:
    points = sorted(set(f.breakpoints) | set(g.breakpoints))
    grid = [points[0]]
    for t in points[1:]:
        if t - grid[-1] > MERGE_TOL:
            grid.append(t)
    if grid[-1] != 1:
        grid[-1] = 1
    return grid


def _combine(f: StepFunction, g: StepFunction, op) -> StepFunction:
    if f.dim != g.dim:
        raise SpaceMismatchError(f"value dimensions differ: {f.dim} vs {g.dim}")
    grid = _merged_grid(f, g)
    vals = []
    for a, b in zip(grid, grid[1:]):
        mid = (a + b) / 2
        vals.append(op(f(mid), g(mid)))
    return StepFunction(grid, vals)


def step_sub(f: StepFunction, g: StepFunction) -> StepFunction:
    """Pointwise difference on the merged breakpoint grid."""
    return _combine(f, g, np.subtract)


def step_norm_pow(f: StepFunction, p: float, value_p: float | None = None):
    """``sum length * ||value||**p``; exact when lengths are Fractions and
    every value has norm 0 or 1."""
    vp = p if value_p is None else value_p
    weights = np.sum(np.abs(f.values) ** vp, axis=1) ** (p / vp)
    total = 0
    for length, w in zip(f.lengths(), weights):
        if w == 0:
            continue
        total += length if w == 1 else float(length) * float(w)
    return total


def step_norm(f: StepFunction, p: float, value_p: float | None = None) -> float:
    """``(sum length * ||value||**p)**(1/p)`` with the l_{value_p} value norm."""
    if not 0 < p <= 1:
        raise ExponentError(f"exponent must lie in (0, 1], got {p}")
    return float(step_norm_pow(f, p, value_p)) ** (1.0 / p)


@dataclass(frozen=True)
class IntervalAssignment:
    """``intervals[x] = ((j, a_j, b_j), ...)`` over every index ``j``."""

    order: tuple
    intervals: dict

    def active(self, x) -> list:
        return [(j, a, b) for j, a, b in self.intervals[x] if b > a]


def interval_assignment(pou: PartitionOfUnity, order=None) -> IntervalAssignment:
    """Cumulative sums of the ``phi_j(x)`` in ``order`` (default: row order).

    The end of the last active interval is set to exactly 1, which moves it
    by at most the rounding in the sum of the ``phi``.
    """
    J = pou.phi.shape[0]
    order = tuple(range(J)) if order is None else tuple(order)
    if sorted(order) != list(range(J)):
        raise ValueError("order must be a permutation of the set indices")
    out = {}
    for i, x in enumerate(pou.V):
        col = pou.phi[:, i]
        last = max(k for k, j in enumerate(order) if col[j] > 0)
        rows, a = [], 0.0
        for k, j in enumerate(order):
            b = 1.0 if k >= last else a + float(col[j])
            if k > last:
                a = 1.0
            rows.append((j, a, b))
            a = b
        total = sum(b - a for _, a, b in rows)
        if abs(total - 1) > 1e-12 or rows[-1][2] != 1.0:
            raise ValueError(f"intervals at {x!r} do not partition [0, 1)")
        out[x] = tuple(rows)
    return IntervalAssignment(order, out)


def _as_vector(v) -> np.ndarray:
    return np.atleast_1d(np.asarray(v, dtype=float))


def extend(f, pou: PartitionOfUnity, assignment: IntervalAssignment | None = None) -> dict:
    """Tabulated extension ``T(f)``: point label -> :class:`StepFunction`.

    ``f`` maps every point of N to a vector (or scalar); ``f(base) = 0``.
    """
    N = pou.subset
    M = pou.space
    assignment = interval_assignment(pou) if assignment is None else assignment
    vals = {}
    for x in N.ordered:
        try:
            vals[x] = _as_vector(f[x])
        except KeyError:
            raise MapError(f"map undefined at {x!r}") from None
    dims = {v.shape for v in vals.values()}
    if len(dims) != 1:
        raise SpaceMismatchError("map values have different dimensions")
    if np.any(vals[M.base] != 0):
        raise MapError("map must send the base point to zero")
    for a in pou.anchors:
        if a not in N.members:
            raise MapError(f"anchor {a!r} does not lie in N")
    out = {}
    for x in M.points:
        if x in N.members:
            out[x] = StepFunction((0, 1), [vals[x]])
            continue
        bp, cells = [0.0], []
        for j, a, b in assignment.active(x):
            if b > bp[-1]:
                bp.append(b)
                cells.append(vals[pou.anchors[j]])
        bp[-1] = 1.0
        out[x] = StepFunction(bp, cells)
    return out


def measured_lip(Tf: dict, M: QuasiMetricSpace, p: float | None = None) -> tuple[float, tuple]:
    """``max ||Tf(x) - Tf(y)||_p / d(x, y)`` over pairs, with a worst pair."""
    p = M.p if p is None else p
    best, where = 0.0, None
    pts = M.points
    for i in range(len(pts)):
        for k in range(i + 1, len(pts)):
            x, y = pts[i], pts[k]
            r = step_norm(Tf[x] - Tf[y], p) / M.d(x, y)
            if r > best:
                best, where = r, (x, y)
    return best, where


def map_lipschitz(f, space: QuasiMetricSpace, p: float | None = None) -> float:
    """Lipschitz constant of a vector map with the l_p value norm."""
    p = space.p if p is None else p
    X = np.array([_as_vector(f[x]) for x in space.points])
    if len(X) < 2:
        return 0.0
    num = np.sum(np.abs(X[:, None, :] - X[None, :, :]) ** p, axis=2) ** (1.0 / p)
    den = space.dist + np.eye(len(X))
    return float(np.max(num / den))


def bound_D(p: float, kappa: float, gamma: float, beta: float, alpha: float) -> float:
    """``(8 e ln2 gamma (2+beta) (1+alpha)^2/alpha kappa ln(2 kappa))**(1/p)``."""
    if not 0 < p <= 1:
        raise ExponentError(f"p must lie in (0, 1], got {p}")
    if kappa < 2:
        raise ValueError(f"kappa must be at least 2, got {kappa}")
    if gamma < 1 or alpha < 1:
        raise ValueError("gamma and alpha must be at least 1")
    if not beta > 0:
        raise ValueError("beta must be positive")
    base = (
        8 * math.e * math.log(2) * gamma * (2 + beta) * (1 + alpha) ** 2 / alpha
        * kappa * math.log(2 * kappa)
    )
    return base ** (1.0 / p)


def case_constants(pou: PartitionOfUnity) -> dict:
    """The three pair-case constants ``C1 <= C2 <= C3``."""
    nu, mu, a, k, g = pou.nu, pou.mu, pou.alpha, pou.kappa, pou.gamma
    return {
        "boundary": 1 + nu,
        "disjoint": (1 + nu) * (1 + 2 * g),
        "shared": 4 * nu * mu * (1 + a) * (1 + 1 / a) * k,
    }


@dataclass(frozen=True)
class ExtensionReport:
    measured_lip: float
    worst_pair: tuple
    lip_f: float
    bound_D: float
    cases: dict

    @property
    def margin(self) -> float:
        return self.bound_D * self.lip_f - self.measured_lip

    @property
    def ok(self) -> bool:
        return self.measured_lip <= self.bound_D * self.lip_f * (1 + 1e-9) and all(
            c["ok"] for c in self.cases.values()
        )

    def to_dict(self) -> dict:
        return {
            "measured_lip": self.measured_lip,
            "lip_f": self.lip_f,
            "bound_D": self.bound_D,
            "margin": self.margin,
            "worst_pair": [label_str(x) for x in self.worst_pair] if self.worst_pair else None,
            "cases": {
                k: dict(v, pair=[label_str(x) for x in v["pair"]] if v["pair"] else None)
                for k, v in self.cases.items()
            },
        }


def extension_report(f, pou: PartitionOfUnity, Tf: dict | None = None) -> ExtensionReport:
    """Measured Lipschitz constant of ``T(f)`` with the per-case ratios

    ``||Tf(x) - Tf(y)|| / (C**(1/p) Lip(f) d(x, y))``, each expected ``<= 1``.
    """
    M, N = pou.space, pou.subset
    p = M.p
    Tf = extend(f, pou) if Tf is None else Tf
    lip_f = map_lipschitz(f, N.space(), p)
    consts = case_constants(pou)
    worst = {k: (0.0, None) for k in consts}
    supp = {x: set(pou.active(x).tolist()) for x in pou.V}
    pts = M.points
    best, where = 0.0, None
    for i in range(len(pts)):
        for k in range(i + 1, len(pts)):
            x, y = pts[i], pts[k]
            dxy = M.d(x, y)
            r = step_norm(Tf[x] - Tf[y], p) / dxy
            if r > best:
                best, where = r, (x, y)
            inx, iny = x in N.members, y in N.members
            if inx and iny:
                continue
            if inx or iny:
                case = "boundary"
            elif supp[x] & supp[y]:
                case = "shared"
            else:
                case = "disjoint"
            denom = consts[case] ** (1.0 / p) * lip_f
            ratio = r / denom if denom > 0 else (0.0 if r == 0 else math.inf)
            if ratio > worst[case][0]:
                worst[case] = (ratio, (x, y))
    cases = {
        k: {"constant": consts[k], "worst_ratio": w, "pair": pr, "ok": w <= 1 + 1e-9}
        for k, (w, pr) in worst.items()
    }
    K, g, b, a = pou.kappa, pou.gamma, pou.beta, pou.alpha
    return ExtensionReport(best, where, lip_f, bound_D(p, K, g, b, a), cases)


def random_lipschitz_map(N: QuasiMetricSpace, m: int, rng, kind: str = "random") -> dict:
    """A map ``N -> (R^m, l_p)`` with ``f(base) = 0`` scaled to Lipschitz constant 1.

    ``kind="random"`` draws Gaussian values; ``kind="distance"`` uses
    ``d(x, z)**p - d(base, z)**p`` for random points ``z`` of N.
    """
    p = N.p
    pts = N.points
    b = N.base_index
    if kind == "random":
        X = rng.normal(size=(len(pts), m))
    elif kind == "distance":
        cols = rng.integers(0, len(pts), size=m)
        P = N.dist**p
        X = P[:, cols] - P[b, cols][None, :]
    else:
        raise ValueError(f"unknown map kind {kind!r}")
    X[b] = 0.0
    f = {x: X[i] for i, x in enumerate(pts)}
    L = map_lipschitz(f, N, p)
    if L == 0:
        return f
    return {x: v / L for x, v in f.items()}
