"""Tiles of the unit cube, the lattice embedding ``tau`` and lattice retractions.

For an integer ``w`` and a real ``x`` the tile ``R[w, x]`` is a half-open
subinterval of ``[0, 1)``; as ``w`` ranges over the integers, the nonempty
tiles are those at ``floor(x)`` and ``ceil(x)`` and they partition
``[0, 1)``.  Products give boxes ``R_d[w, x]`` in ``[0, 1)^d``, and

    tau(x) = sum_w  chi_{R_d[w, x]} (x) delta(w)

is a step function on the cube with values in the free p-space of the
lattice, which is Lipschitz from ``|.|_1**(1/q)``.

All interval endpoints are :class:`fractions.Fraction`, so partition and
measure identities are checked exactly.  Lattice points are labelled by
their integer index vectors; the lattice ``t Z^d`` uses the same labels with
distances scaled by ``t``.
"""

from __future__ import annotations

import bisect
import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .errors import ExponentError, SizeCapError
from .freenorm import norm_upper
from .molecule import Molecule, pushforward
from .space import QuasiMetricSpace, grid_space

ZERO, ONE = Fraction(0), Fraction(1)


def _frac(x) -> Fraction:
    """Exact rational; floats are read through their shortest decimal form."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, float):
        return Fraction(repr(x))
    return Fraction(x)


# --------------------------------------------------------------------------
# tiles


def tile_1d(w: int, x) -> tuple | None:
    """``R[w, x]`` as ``(lo, hi)`` with ``lo < hi``, or None when empty."""
    u = _frac(w) - _frac(x)
    if -1 <= u <= 0:
        lo, hi = ZERO, 1 + u
    elif 0 <= u <= 1:
        lo, hi = u, ONE
    else:
        return None
    return (lo, hi) if lo < hi else None


@dataclass(frozen=True)
class Tile:
    """Product box ``prod_j [lo_j, hi_j)``; ``axes`` is None for the empty box."""

    axes: tuple | None

    @property
    def empty(self) -> bool:
        return self.axes is None

    @property
    def volume(self) -> Fraction:
        if self.axes is None:
            return ZERO
        v = ONE
        for lo, hi in self.axes:
            v *= hi - lo
        return v

    def intersect(self, other: "Tile") -> "Tile":
        if self.empty or other.empty:
            return Tile(None)
        out = []
        for (a, b), (c, d) in zip(self.axes, other.axes):
            lo, hi = max(a, c), min(b, d)
            if lo >= hi:
                return Tile(None)
            out.append((lo, hi))
        return Tile(tuple(out))

    def sym_diff_volume(self, other: "Tile") -> Fraction:
        return self.volume + other.volume - 2 * self.intersect(other).volume


def tile(w: Sequence[int], x: Sequence) -> Tile:
    """``R_d[w, x] = prod_j R[w_j, x_j]``."""
    if len(w) != len(x):
        raise ValueError("w and x must have the same dimension")
    axes = []
    for wj, xj in zip(w, x):
        iv = tile_1d(wj, xj)
        if iv is None:
            return Tile(None)
        axes.append(iv)
    return Tile(tuple(axes))


def support(x: Sequence) -> list:
    """``V_d(x) = prod_j {floor(x_j), ceil(x_j)}`` as sorted integer tuples."""
    axes = [sorted({math.floor(_frac(c)), math.ceil(_frac(c))}) for c in x]
    return [tuple(w) for w in itertools.product(*axes)]


def _near(x: Sequence) -> list:
    """Integer vectors from ``floor(x) - 1`` to ``floor(x) + 2`` in every coordinate."""
    axes = [range(math.floor(_frac(c)) - 1, math.floor(_frac(c)) + 3) for c in x]
    return [tuple(w) for w in itertools.product(*axes)]


@dataclass(frozen=True)
class PropertyReport:
    results: dict
    samples: int

    @property
    def ok(self) -> bool:
        return all(v["ok"] for v in self.results.values())

    def failed(self) -> list:
        return [k for k, v in self.results.items() if not v["ok"]]

    def to_dict(self) -> dict:
        return {"ok": self.ok, "samples": self.samples, "results": self.results}


def dyadic(rng, lo: float, hi: float, bits: int = 20) -> Fraction:
    """Uniform dyadic rational in ``[lo, hi]`` with denominator ``2**bits``."""
    scale = 1 << bits
    return Fraction(int(rng.integers(int(lo * scale), int(hi * scale) + 1)), scale)


def _reflect(iv):
    """Image of ``[lo, hi)`` under ``t -> 1 - t`` (up to its endpoints)."""
    return None if iv is None else (1 - iv[1], 1 - iv[0])


def _len(iv) -> Fraction:
    return ZERO if iv is None else iv[1] - iv[0]


def _sym_1d(a, b) -> Fraction:
    if a is None or b is None:
        return _len(a) + _len(b)
    inter = max(ZERO, min(a[1], b[1]) - max(a[0], b[0]))
    return _len(a) + _len(b) - 2 * inter


def _boundary_cases_1d() -> list:
    xs = [Fraction(k, 1) for k in range(-3, 4)] + [Fraction(k, 2) for k in range(-5, 6, 2)]
    return [(w, x) for x in xs for w in range(-4, 5)]


def verify_tile_properties(d: int = 1, samples: int = 10_000, seed: int = 0, span: float = 3.0) -> PropertyReport:
    """Check the tile identities exactly on random dyadic inputs and boundary cases.

    One-dimensional keys: ``support``, ``partition``, ``shift invariance``,
    ``reflection``, ``measure identity on [0,1]``, ``measure bound``.  The
    d-dimensional keys (prefixed ``cube``) add ``diagonal is full cube`` and
    ``volume at most one``; their measure bound is ``|x - y|_1``.
    """
    rng = np.random.default_rng(seed)
    res: dict = {}

    def record(key, ok, detail=None):
        entry = res.setdefault(key, {"ok": True, "checked": 0, "counterexample": None})
        entry["checked"] += 1
        if not ok and entry["ok"]:
            entry["ok"] = False
            entry["counterexample"] = detail

    # one dimension
    pts = [dyadic(rng, -span, span) for _ in range(samples)]
    pts += [x for _, x in _boundary_cases_1d()]
    for k, x in enumerate(pts):
        nonempty = [w for w in _near([x]) if tile_1d(w[0], x) is not None]
        record("support", sorted(w[0] for w in nonempty) == sorted({math.floor(x), math.ceil(x)}), str(x))
        ivs = sorted(tile_1d(w[0], x) for w in nonempty)
        contiguous = ivs[0][0] == 0 and ivs[-1][1] == 1 and all(a[1] == b[0] for a, b in zip(ivs, ivs[1:]))
        record("partition", contiguous, str(x))
        u = int(rng.integers(-5, 6))
        w = int(rng.integers(math.floor(x) - 1, math.floor(x) + 3))
        record("shift invariance", tile_1d(w - u, x - u) == tile_1d(w, x), (w, str(x), u))
        record("reflection", _reflect(tile_1d(w, x)) == tile_1d(-w, -x), (w, str(x)))
        y = pts[(k * 7919 + 1) % len(pts)]
        if 0 <= x <= 1 and 0 <= y <= 1:
            record("measure identity on [0,1]", _sym_1d(tile_1d(0, x), tile_1d(0, y)) == abs(x - y), (str(x), str(y)))
        record("measure bound", _sym_1d(tile_1d(w, x), tile_1d(w, y)) <= abs(x - y), (w, str(x), str(y)))
    for _ in range(min(samples, 2000)):
        x, y = dyadic(rng, 0, 1), dyadic(rng, 0, 1)
        record("measure identity on [0,1]", _sym_1d(tile_1d(0, x), tile_1d(0, y)) == abs(x - y), (str(x), str(y)))

    # d dimensions
    if d >= 1:
        cube = Tile(tuple((ZERO, ONE) for _ in range(d)))
        vecs = [tuple(dyadic(rng, -span, span) for _ in range(d)) for _ in range(samples)]
        specials = [tuple(Fraction(int(c)) for c in rng.integers(-3, 4, size=d)) for _ in range(20)]
        specials += [tuple(Fraction(int(c), 2) for c in rng.integers(-6, 7, size=d)) for _ in range(20)]
        vecs += specials
        for k, x in enumerate(vecs):
            near = _near(x)
            boxes = {w: tile(w, x) for w in near}
            nonempty = sorted(w for w, b in boxes.items() if not b.empty)
            record("cube support", nonempty == sorted(support(x)), tuple(map(str, x)))
            tiles = [boxes[w] for w in nonempty]
            total = sum((b.volume for b in tiles), ZERO)
            disjoint = all(a.intersect(b).empty for a, b in itertools.combinations(tiles, 2))
            record("cube partition", total == 1 and disjoint, tuple(map(str, x)))
            w = tuple(int(c) for c in rng.integers(-3, 4, size=d))
            record("cube diagonal is full cube", tile(w, w) == cube, w)
            u = tuple(int(c) for c in rng.integers(-5, 6, size=d))
            w = nonempty[int(rng.integers(len(nonempty)))]
            shifted = tile(tuple(a - b for a, b in zip(w, u)), tuple(a - b for a, b in zip(x, u)))
            record("cube shift invariance", shifted == tile(w, x), (w, u))
            refl = tile(tuple(-a for a in w), tuple(-a for a in x))
            mirrored = None if boxes[w].empty else tuple(_reflect(iv) for iv in boxes[w].axes)
            record("cube reflection", (refl.axes if not refl.empty else None) == mirrored, w)
            record("cube volume at most one", all(b.volume <= 1 for b in boxes.values()), tuple(map(str, x)))
            if k < len(vecs) - 1:
                yv = vecs[(k * 7919 + 3) % len(vecs)]
                if int(rng.integers(0, 4)) == 0:
                    yv = tuple(c + dyadic(rng, -0.5, 0.5) for c in x)
                dist1 = sum(abs(a - b) for a, b in zip(x, yv))
                wv = nonempty[int(rng.integers(len(nonempty)))]
                record("cube measure bound", tile(wv, x).sym_diff_volume(tile(wv, yv)) <= dist1, (wv, tuple(map(str, x))))
    return PropertyReport(res, samples)


# --------------------------------------------------------------------------
# lattice step functions


@dataclass(frozen=True)
class LatticeStep:
    """Step function on ``[0, 1)^d`` with lattice-molecule values.

    ``axes[j]`` are the breakpoints on axis ``j`` (0 to 1, Fractions); the
    value on the cell with multi-index ``c`` is ``cells.get(c, ())``, a
    sorted tuple of ``(w, coefficient)`` pairs without the base point.
    ``p`` is the level of the free space the values live in and ``q`` the
    outer Lebesgue exponent.
    """

    window: QuasiMetricSpace = field(repr=False)
    p: float
    q: float
    axes: tuple
    cells: dict

    @property
    def dim(self) -> int:
        return len(self.axes)

    def cell_volume(self, c) -> Fraction:
        v = ONE
        for j, i in enumerate(c):
            v *= self.axes[j][i + 1] - self.axes[j][i]
        return v

    def molecule(self, c) -> Molecule:
        return Molecule(self.window, dict(self.cells.get(c, ())))

    def at_level(self, r: float) -> "LatticeStep":
        """The same step function with values read in the free r-space."""
        if r < self.p or r > self.window.p + 1e-12:
            raise ExponentError(f"level {r} must lie in [{self.p}, {self.window.p}]")
        return LatticeStep(self.window, r, self.q, self.axes, self.cells)

    def same_as(self, other: "LatticeStep") -> bool:
        """Bitwise equality of level, exponent, breakpoints and values."""
        return (
            self.p == other.p
            and self.q == other.q
            and self.axes == other.axes
            and self.cells == other.cells
            and self.window.same_as(other.window)
        )

    def _lookup(self, grid_axes, c):
        out = []
        for j, i in enumerate(c):
            mid = (grid_axes[j][i] + grid_axes[j][i + 1]) / 2
            out.append(bisect.bisect_right(self.axes[j], mid) - 1)
        return tuple(out)

    def __sub__(self, other: "LatticeStep") -> "LatticeStep":
        return self._combine(other, -1.0)

    def __add__(self, other: "LatticeStep") -> "LatticeStep":
        return self._combine(other, 1.0)

    def _combine(self, other, sign):
        if not self.window.same_as(other.window) or self.p != other.p or self.dim != other.dim:
            raise ValueError("lattice step functions live in different spaces")
        axes = tuple(tuple(sorted(set(a) | set(b))) for a, b in zip(self.axes, other.axes))
        cells = {}
        for c in itertools.product(*(range(len(a) - 1) for a in axes)):
            acc = dict(self.cells.get(self._lookup(axes, c), ()))
            for w, a in other.cells.get(other._lookup(axes, c), ()):
                acc[w] = acc.get(w, 0.0) + sign * a
            val = tuple(sorted((w, a) for w, a in acc.items() if a != 0))
            if val:
                cells[c] = val
        return LatticeStep(self.window, self.p, self.q, axes, cells)

    def norm(self, cache: dict | None = None) -> float:
        """``(sum_cells volume * ||value||_p**q)**(1/q)``; value norms are exact
        on the support plus base, hence upper bounds for the window norm."""
        cache = {} if cache is None else cache
        total = 0.0
        for c, val in self.cells.items():
            key = (self.p, val)
            if key not in cache:
                cache[key] = norm_upper(Molecule(self.window, dict(val)), self.p)
            total += float(self.cell_volume(c)) * cache[key] ** self.q
        return total ** (1.0 / self.q)


def lattice_window(d: int, q: float, radius: int, t: float = 1.0) -> QuasiMetricSpace:
    """``{w : |w|_inf <= radius}`` in ``(t Z^d, |.|_inf**(1/q))``; labels are index vectors."""
    return grid_space(d, q, t=t, radius=radius)


def tau_combination(terms, window: QuasiMetricSpace, p: float, q: float, t=1) -> LatticeStep:
    """``sum_k c_k tau_t(x_k)`` for ``terms = [(c_k, x_k), ...]``.

    ``tau_t(x) = tau(x / t)`` with labels unchanged: the label ``w`` stands
    for the lattice point ``t w``.
    """
    if not 0 < p <= q <= 1:
        raise ExponentError(f"need 0 < p <= q <= 1, got p={p}, q={q}")
    d = len(window.base)
    radius = max(abs(c) for c in window.points[-1])
    t = _frac(t)
    xs = []
    for c, x in terms:
        x = tuple(_frac(v) / t for v in x)
        if len(x) != d:
            raise ValueError("point dimension does not match the window")
        if max(abs(v) for v in x) + 1 > radius:
            raise SizeCapError(f"window radius {radius} too small for a point of size {max(abs(v) for v in x)}")
        xs.append((float(c), x))
    # breakpoints: tile endpoints of every point on every axis
    axes = []
    for j in range(d):
        bps = {ZERO, ONE}
        for _, x in xs:
            for wj in {math.floor(x[j]), math.ceil(x[j])}:
                iv = tile_1d(wj, x[j])
                if iv is not None:
                    bps.update(iv)
        axes.append(tuple(sorted(bps)))
    axes = tuple(axes)
    # on each axis and for each point, the lattice coordinate owning each cell
    owner = []
    for _, x in xs:
        per_axis = []
        for j in range(d):
            cand = [(tile_1d(wj, x[j]), wj) for wj in {math.floor(x[j]), math.ceil(x[j])}]
            cand = [(iv, wj) for iv, wj in cand if iv is not None]
            row = []
            for i in range(len(axes[j]) - 1):
                mid = (axes[j][i] + axes[j][i + 1]) / 2
                row.append(next(wj for iv, wj in cand if iv[0] <= mid < iv[1]))
            per_axis.append(row)
        owner.append(per_axis)
    base = window.base
    cells = {}
    for cidx in itertools.product(*(range(len(a) - 1) for a in axes)):
        acc = {}
        for (c, _), per_axis in zip(xs, owner):
            w = tuple(per_axis[j][i] for j, i in enumerate(cidx))
            if w != base:
                acc[w] = acc.get(w, 0.0) + c
        val = tuple(sorted((w, a) for w, a in acc.items() if a != 0))
        if val:
            cells[cidx] = val
    return LatticeStep(window, p, q, axes, cells)


def tau(x, window: QuasiMetricSpace, p: float, q: float, t=1) -> LatticeStep:
    """``tau_t(x)``: boxes ``R_d[w, x/t]`` carrying ``delta(w)``."""
    return tau_combination([(1.0, x)], window, p, q, t)


def constant_step(mu: Molecule, p: float, q: float) -> LatticeStep:
    """``chi_[0,1)^d (x) mu``."""
    d = len(mu.space.base)
    val = tuple(sorted(mu.items()))
    return LatticeStep(mu.space, p, q, tuple((ZERO, ONE) for _ in range(d)),
                       {(0,) * d: val} if val else {})


def tau_constant(p: float, q: float, d: int) -> float:
    """``2**(1/p - 1/q) * (2**(2d) - 1)**(1/p)``."""
    return 2 ** (1 / p - 1 / q) * (2 ** (2 * d) - 1) ** (1 / p)


@dataclass(frozen=True)
class LipReport:
    ok: bool
    max_ratio: float
    bound: float
    worst_pair: tuple | None
    pairs: int

    def to_dict(self) -> dict:
        def s(v):
            return [str(c) for c in v]

        return {
            "ok": self.ok,
            "maxRatio": self.max_ratio,
            "bound": self.bound,
            "pairs": self.pairs,
            "worst_pair": [s(v) for v in self.worst_pair] if self.worst_pair else None,
        }


def sample_pairs(d: int, pairs: int, rng, span: float = 2.0) -> list:
    """Random dyadic pairs in ``[-span, span]^d`` plus structured cases:
    equal points, lattice points, integer offsets and nearby pairs."""
    out = []
    for k in range(pairs):
        x = tuple(dyadic(rng, -span, span) for _ in range(d))
        mode = k % 5
        if mode == 0:
            y = tuple(dyadic(rng, -span, span) for _ in range(d))
        elif mode == 1:
            y = tuple(v + dyadic(rng, -0.25, 0.25) for v in x)
            y = tuple(max(min(v, Fraction(span)), Fraction(-span)) for v in y)
        elif mode == 2:
            y = tuple(Fraction(int(rng.integers(-span, span + 1))) for _ in range(d))
        elif mode == 3:
            y = tuple(v + int(rng.integers(-1, 2)) for v in x)
            y = tuple(max(min(v, Fraction(span)), Fraction(-span)) for v in y)
        else:
            y = x
        out.append((x, y))
    return out


def tau_lip_check(p: float, q: float, d: int, pairs: int = 1000, window: int | None = None,
                  seed: int = 0, t=1, span: float = 2.0) -> LipReport:
    """Worst ``||tau(x) - tau(y)|| / |x - y|_1**(1/q)`` over sampled pairs,
    against ``2**(1/p - 1/q) (2**(2d) - 1)**(1/p)``."""
    if not 0 < p <= q <= 1:
        raise ExponentError(f"need 0 < p <= q <= 1, got p={p}, q={q}")
    t = _frac(t)
    radius = window if window is not None else int(math.ceil(span / t)) + 1
    W = lattice_window(d, q, radius, float(t))
    rng = np.random.default_rng(seed)
    C = tau_constant(p, q, d)
    cache: dict = {}
    worst, where = 0.0, None
    for x, y in sample_pairs(d, pairs, rng, span):
        dist1 = sum(abs(a - b) for a, b in zip(x, y))
        step = tau_combination([(1.0, x), (-1.0, y)], W, p, q, t)
        val = step.norm(cache)
        if dist1 == 0:
            if val != 0:
                return LipReport(False, math.inf, C, (x, y), pairs)
            continue
        ratio = val / float(dist1) ** (1 / q)
        if ratio > worst:
            worst, where = ratio, (x, y)
    return LipReport(worst <= C * (1 + 1e-12), worst, C, where, pairs)


def retraction_identity_check(d: int, q: float, p: float, radius: int, t=1) -> bool:
    """``tau_t`` at every lattice point ``t w`` is ``chi (x) delta(w)``, and so
    is the combination for a random molecule on the lattice."""
    W = lattice_window(d, q, radius + 1, float(t))
    t = _frac(t)
    pts = [w for w in W.points if max(map(abs, w)) <= radius]
    for w in pts:
        lhs = tau(tuple(t * c for c in w), W, p, q, t)
        if not lhs.same_as(constant_step(Molecule.delta(W, w), p, q)):
            return False
    rng = np.random.default_rng(len(pts))
    coeffs = {w: float(rng.normal()) for w in pts}
    lhs = tau_combination([(a, tuple(t * c for c in w)) for w, a in coeffs.items()], W, p, q, t)
    return lhs.same_as(constant_step(Molecule(W, coeffs), p, q))


# --------------------------------------------------------------------------
# retractions onto lattice balls


def retraction(n: int, w: Sequence[int]) -> tuple:
    """``min(1, n / |w|_inf) * w``, evaluated exactly.

    Coordinates are ints when integral and Fractions otherwise; for ``d >= 2``
    the image need not be a lattice point.
    """
    if n < 1:
        raise ValueError("n must be a positive integer")
    m = max((abs(Fraction(c)) for c in w), default=ZERO)
    if m <= n:
        return tuple(w)
    out = []
    for c in w:
        v = Fraction(n) * Fraction(c) / m
        out.append(int(v) if v.denominator == 1 else v)
    return tuple(out)


def clamp_retraction(n: int, w: Sequence[int]) -> tuple:
    """Coordinatewise clamp to ``[-n, n]``: a lattice-valued 1-Lipschitz retraction in ``|.|_inf``."""
    if n < 1:
        raise ValueError("n must be a positive integer")
    return tuple(max(-n, min(n, c)) for c in w)


@dataclass(frozen=True)
class RetractionReport:
    ok: bool
    lipschitz: float
    lipschitz_exact: Fraction
    idempotent: bool
    fixes_ball: bool
    lattice_valued: bool
    worst_pair: tuple | None

    def to_dict(self) -> dict:
        def s(v):
            return [str(c) for c in v]

        return {
            "ok": self.ok,
            "lipschitz": self.lipschitz,
            "sup_ratio_inf_norm": str(self.lipschitz_exact),
            "idempotent": self.idempotent,
            "fixes_ball": self.fixes_ball,
            "lattice_valued": self.lattice_valued,
            "worst_pair": [[s(a), s(b)] for a, b in [self.worst_pair]][0] if self.worst_pair else None,
        }


def retraction_check(d: int, n: int, radius: int, q: float = 1.0, kind: str = "radial") -> RetractionReport:
    """Exhaustive check over the window ``|w|_inf <= radius``.

    The Lipschitz constant in ``|.|_inf**(1/q)`` is ``L**(1/q)`` where ``L``
    is the exact supremum of ``|r(u) - r(v)|_inf / |u - v|_inf``.  ``ok``
    requires constant 1 (within 1e-12), idempotence and identity on the ball.
    """
    r = {"radial": retraction, "clamp": clamp_retraction}[kind]
    pts = list(itertools.product(range(-radius, radius + 1), repeat=d))
    image = {w: r(n, w) for w in pts}
    idem = all(r(n, v) == v for v in image.values())
    fixes = all(image[w] == w for w in pts if max(map(abs, w), default=0) <= n)
    lattice = all(all(isinstance(c, int) for c in v) for v in image.values())
    L, where = ZERO, None
    for u, v in itertools.combinations(pts, 2):
        num = max(abs(Fraction(a) - Fraction(b)) for a, b in zip(image[u], image[v]))
        den = max(abs(a - b) for a, b in zip(u, v))
        ratio = num / den
        if ratio > L:
            L, where = ratio, (u, v)
    lip = float(L) ** (1 / q)
    ok = abs(lip - 1.0) <= 1e-12 and idem and fixes
    return RetractionReport(ok, lip, L, idem, fixes, lattice, where)


# --------------------------------------------------------------------------
# commuting square and dilations


def point_space(points, q: float, ord=1, p: float | None = None) -> QuasiMetricSpace:
    """Finite subset of ``R^d`` (Fraction coordinates) with ``|.|_ord**(1/q)``;
    the origin is added as base point."""
    pts = list(dict.fromkeys(tuple(_frac(c) for c in x) for x in points))
    d = len(pts[0])
    origin = (ZERO,) * d
    if origin not in pts:
        pts.insert(0, origin)
    X = np.array([[float(c) for c in x] for x in pts])
    diff = np.abs(X[:, None, :] - X[None, :, :])
    D = diff.sum(axis=2) if ord == 1 else diff.max(axis=2)
    return QuasiMetricSpace(pts, origin, D ** (1 / q), q if p is None else p)


def dilate(t, x) -> tuple:
    t = _frac(t)
    return tuple(t * _frac(c) for c in x)


@dataclass(frozen=True)
class SquareReport:
    ok: bool
    checks: dict

    def to_dict(self) -> dict:
        return {"ok": self.ok, "checks": self.checks}


def commuting_square_check(p: float, r: float, q: float, d: int, t=Fraction(1, 2), samples: int = 20,
                           seed: int = 0, span: int = 2) -> SquareReport:
    """Molecule-level checks of the level-change square and the dilation identities.

    * ``tau`` at level r of a molecule equals ``tau`` at level p with values
      reread at level r (bitwise), and rereading never increases the norm;
    * ``D_t L_{1/t} = L C_t`` and ``B_t C_{1/t} = Id`` as pushforwards;
    * pushforward along ``x -> t x`` sends ``delta(w)`` to ``delta(t w)``.
    """
    if not 0 < p <= r <= q <= 1:
        raise ExponentError(f"need 0 < p <= r <= q <= 1, got {p}, {r}, {q}")
    t = _frac(t)
    rng = np.random.default_rng(seed)
    radius = int(math.ceil(span / t)) + 2
    W = lattice_window(d, q, radius, float(t))
    checks = {"level square bitwise": True, "level change contracts": True,
              "dilation conjugation": True, "dilation inverse": True, "dilation of point masses": True}
    cache: dict = {}
    for _ in range(samples):
        k = int(rng.integers(1, 4))
        xs = [tuple(dyadic(rng, -span, span, bits=6) for _ in range(d)) for _ in range(k)]
        cs = [float(rng.normal()) for _ in range(k)]
        terms = list(zip(cs, xs))
        low = tau_combination(terms, W, p, q, t)
        high = tau_combination(terms, W, r, q, t)
        if not high.same_as(low.at_level(r)):
            checks["level square bitwise"] = False
        if high.norm(cache) > low.norm(cache) * (1 + 1e-12):
            checks["level change contracts"] = False

        # molecule on the coarse lattice t^-1 Z^d, coordinates as Fractions
        ks = [tuple(int(c) for c in rng.integers(-span, span + 1, size=d)) for _ in range(k)]
        ys = [tuple(Fraction(c) / t for c in kv) for kv in ks]
        src = point_space(ys, q, ord=np.inf)
        mol = Molecule(src, {y: c for y, c in zip(ys, cs)})
        images = [dilate(t, y) for y in src.points]
        tgt = point_space(images, q, ord=1)
        left = pushforward(pushforward(mol, lambda y: y, point_space(src.points, q, ord=1)),
                           lambda y: dilate(t, y), tgt)
        lattice = point_space(images, q, ord=np.inf)
        right = pushforward(pushforward(mol, lambda y: dilate(t, y), lattice), lambda y: y, tgt)
        if not left.equals(right):
            checks["dilation conjugation"] = False

        fine_pts = [dilate(t, kv) for kv in ks]
        fine = point_space(fine_pts, q, ord=np.inf)
        nu = Molecule(fine, {y: c for y, c in zip(fine_pts, cs)})
        mid = point_space([dilate(1 / t, y) for y in fine.points], q, ord=np.inf)
        back = pushforward(pushforward(nu, lambda y: dilate(1 / t, y), mid), lambda y: dilate(t, y), fine)
        if not back.equals(nu):
            checks["dilation inverse"] = False

        w = fine_pts[0]
        if any(c != 0 for c in w):
            img_space = point_space([dilate(t, w)], q, ord=np.inf)
            pm = pushforward(Molecule.delta(fine, w), lambda y: dilate(t, y), img_space)
            if not pm.equals(Molecule.delta(img_space, dilate(t, w))):
                checks["dilation of point masses"] = False
    return SquareReport(all(checks.values()), checks)
