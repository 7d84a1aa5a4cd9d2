"""Molecules: finitely supported signed combinations of point masses.

A molecule is stored as a dense coefficient vector over the points of its
space.  The base point's coefficient is identically zero (the point mass at
the base point is the zero vector), and coefficients below ``PRUNE_TOL`` in
absolute value are dropped after arithmetic.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Mapping

import numpy as np

from .errors import MapError, SpaceMismatchError
from .space import QuasiMetricSpace, label_str

PRUNE_TOL = 1e-12


def _prune(c: np.ndarray) -> np.ndarray:
    c = np.where(np.abs(c) < PRUNE_TOL, 0.0, c)
    c.setflags(write=False)
    return c


class Molecule:
    """Signed point-mass combination on a fixed :class:`QuasiMetricSpace`."""

    __slots__ = ("space", "coeffs")

    def __init__(self, space: QuasiMetricSpace, coeffs=None):
        if coeffs is None:
            vec = np.zeros(len(space))
        elif isinstance(coeffs, Mapping):
            vec = np.zeros(len(space))
            for x, a in coeffs.items():
                vec[space.index(x)] += float(a)
        else:
            vec = np.array(coeffs, dtype=float)
            if vec.shape != (len(space),):
                raise ValueError(f"coefficient vector must have length {len(space)}")
        vec[space.base_index] = 0.0
        object.__setattr__(self, "space", space)
        object.__setattr__(self, "coeffs", _prune(vec))

    def __setattr__(self, name, value):
        raise AttributeError("Molecule is immutable")

    @classmethod
    def delta(cls, space: QuasiMetricSpace, x) -> "Molecule":
        return cls(space, {x: 1.0})

    def coeff(self, x) -> float:
        return float(self.coeffs[self.space.index(x)])

    @property
    def support(self) -> tuple:
        return tuple(x for x, a in zip(self.space.points, self.coeffs) if a != 0)

    def items(self):
        return [(x, float(a)) for x, a in zip(self.space.points, self.coeffs) if a != 0]

    def is_zero(self) -> bool:
        return not np.any(self.coeffs)

    def _check(self, other: "Molecule"):
        if not isinstance(other, Molecule):
            return NotImplemented
        if not self.space.same_as(other.space):
            raise SpaceMismatchError("molecules live on different spaces")
        return None

    def __add__(self, other):
        if self._check(other) is NotImplemented:
            return NotImplemented
        return Molecule(self.space, self.coeffs + other.coeffs)

    def __sub__(self, other):
        if self._check(other) is NotImplemented:
            return NotImplemented
        return Molecule(self.space, self.coeffs - other.coeffs)

    def __neg__(self):
        return Molecule(self.space, -self.coeffs)

    def __mul__(self, c):
        return Molecule(self.space, float(c) * self.coeffs)

    __rmul__ = __mul__

    def equals(self, other: "Molecule") -> bool:
        """Bitwise equality of coefficients on the same space."""
        return self.space.same_as(other.space) and np.array_equal(self.coeffs, other.coeffs)

    def allclose(self, other: "Molecule", atol: float = 1e-9) -> bool:
        self._check(other)
        return bool(np.allclose(self.coeffs, other.coeffs, rtol=0, atol=atol))

    def __repr__(self) -> str:
        inner = ", ".join(f"{x!r}: {a:.6g}" for x, a in self.items())
        return f"Molecule({{{inner}}})"

    def to_dict(self) -> dict:
        return {"coeffs": {label_str(x): a for x, a in self.items()}}

    @classmethod
    def from_dict(cls, space: QuasiMetricSpace, data: dict) -> "Molecule":
        coeffs = data["coeffs"] if "coeffs" in data else data
        return cls(space, {space.lookup(str(k)): v for k, v in coeffs.items()})


def elementary(space: QuasiMetricSpace, x, y) -> Molecule:
    """(delta(x) - delta(y)) / d(x, y)."""
    if x == y:
        raise ValueError("elementary molecule needs two distinct points")
    dxy = space.d(x, y)
    return Molecule(space, {x: 1.0 / dxy, y: -1.0 / dxy})


@dataclass(frozen=True)
class ElementaryDecomposition:
    """Terms ``(x, y, a)`` standing for ``a * elementary(x, y)``."""

    terms: tuple

    def reconstruct(self, space: QuasiMetricSpace) -> Molecule:
        vec = np.zeros(len(space))
        for x, y, a in self.terms:
            dxy = space.d(x, y)
            vec[space.index(x)] += a / dxy
            vec[space.index(y)] -= a / dxy
        return Molecule(space, vec)

    def value(self, p: float) -> float:
        if not self.terms:
            return 0.0
        a = np.abs(np.array([t[2] for t in self.terms]))
        return float(np.sum(a**p) ** (1.0 / p))

    def to_list(self) -> list:
        return [[label_str(x), label_str(y), a] for x, y, a in self.terms]


def _as_callable(h) -> Callable:
    if callable(h):
        return h
    return lambda x: h[x]


def pushforward(mu: Molecule, h, target: QuasiMetricSpace) -> Molecule:
    """Transport coefficients along the point map ``h`` (mapping or callable).

    Mass landing on the target base point is dropped.
    """
    f = _as_callable(h)
    try:
        image_base = f(mu.space.base)
    except (KeyError, IndexError):
        image_base = target.base
    if image_base != target.base:
        raise MapError(f"map sends the base point to {image_base!r}, not {target.base!r}")
    vec = np.zeros(len(target))
    for x, a in mu.items():
        try:
            w = f(x)
        except (KeyError, IndexError) as exc:
            raise MapError(f"map undefined at support point {x!r}") from exc
        if w not in target:
            raise MapError(f"map sends {x!r} to {w!r}, which is not a point of the target")
        vec[target.index(w)] += a
    return Molecule(target, vec)


def lipschitz_constant(h, source: QuasiMetricSpace, target: QuasiMetricSpace) -> float:
    """max over x != y of d_target(h(x), h(y)) / d_source(x, y)."""
    f = _as_callable(h)
    if len(source) < 2:
        return 0.0
    try:
        idx = np.array([target.index(f(x)) for x in source.points])
    except KeyError as exc:
        raise MapError(str(exc)) from exc
    num = target.dist[np.ix_(idx, idx)]
    den = source.dist + np.eye(len(source))
    return float(np.max(num / den))
