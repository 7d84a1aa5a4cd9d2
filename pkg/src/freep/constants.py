"""Closed-form constants of the extension and embedding bounds, and their audit.

All logarithms are natural.  The universal embedding constant is

    A = c * min_{R > 1} f(R),   f(R) = R^4 (R+1)^2 (7R^2 + 7R - 6) / ((R-1)(R^2+R-1)),

where the prefactor ``c`` can be read off in two ways: the printed closed
form uses ``16 e ln2 ln12``, while evaluating the extension bound
``8 e ln2 gamma (2+beta) (1+alpha)^2/alpha kappa ln(2 kappa)`` at
``kappa = 6``, ``alpha = R^2+R-1``, ``beta = 14 alpha``, ``gamma = R^2/(R-1)``
gives ``96 e ln2 ln12 f(R)``.  The audit reports both, together with the
printed decimal value, and never reconciles them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar

from .extend import bound_D
from .grid import tau_constant
from .whitney import mu_constant, whitney_params

PRINTED_A = 13982.5641659317
PRINTED_PREFACTOR = 16 * math.e * math.log(2) * math.log(12)


def mu_const(kappa: float, gamma: float) -> float:
    """``2 e ln2 gamma ln(2 kappa)``."""
    if kappa < 2:
        raise ValueError(f"kappa must be at least 2, got {kappa}")
    if gamma < 1:
        raise ValueError(f"gamma must be at least 1, got {gamma}")
    return mu_constant(kappa, gamma)


def nu_floor(beta: float) -> float:
    """``2 + beta``; admissible ``nu`` must exceed it strictly."""
    if not beta > 0:
        raise ValueError(f"beta must be positive, got {beta}")
    return 2.0 + beta


def rational_factor(R: float) -> float:
    """``R^4 (R+1)^2 (7R^2+7R-6) / ((R-1)(R^2+R-1))``."""
    if not R > 1:
        raise ValueError("R must exceed 1")
    return R**4 * (R + 1) ** 2 * (7 * R * R + 7 * R - 6) / ((R - 1) * (R * R + R - 1))


def A_of_R(R: float) -> float:
    """The printed closed form ``16 e ln2 ln12 f(R)``."""
    return PRINTED_PREFACTOR * rational_factor(R)


def tree_whitney_params(R: float) -> tuple:
    """``(kappa, gamma, beta, alpha)`` for Nagata ``(1, 6)`` data at ratio ``R``."""
    return whitney_params(R, 1, 6.0)


def A_primitive_of_R(R: float) -> float:
    """Extension bound (at exponent 1) for the tree Whitney parameters at ``R``."""
    return bound_D(1.0, *tree_whitney_params(R))


@dataclass(frozen=True)
class Minimum:
    R: float
    factor: float
    A_printed_form: float
    A_primitive: float
    scan_R: float = field(default=float("nan"))


def A_min(lo: float = 1.0, hi: float = 100.0, points: int = 4000) -> Minimum:
    """Minimize ``f`` over ``(lo, hi]``: log-spaced scan of ``R - 1``, then
    bounded golden-section refinement around the best scan point."""
    s = np.geomspace(1e-6, hi - lo, points)
    Rs = lo + s
    vals = np.array([rational_factor(R) for R in Rs])
    k = int(np.argmin(vals))
    a = Rs[max(k - 1, 0)]
    b = Rs[min(k + 1, len(Rs) - 1)]
    res = minimize_scalar(rational_factor, bracket=(a, Rs[k], b), method="golden",
                          tol=1e-12, options={"xtol": 1e-12, "maxiter": 10_000})
    R = float(res.x)
    f = rational_factor(R)
    return Minimum(R, f, PRINTED_PREFACTOR * f, A_primitive_of_R(R), float(Rs[k]))


@dataclass(frozen=True)
class ConstantAudit:
    name: str
    value: float
    provenance: str
    printed: float | None = None
    ratio: float | None = None
    notes: str = ""

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "value": self.value,
            "provenance": self.provenance,
            "printed": self.printed,
            "ratio": self.ratio,
            "notes": self.notes,
        }


def audit_all(p: float = 1.0, q: float | None = None, d: int = 2, Rs=(1.5, 2.0, 3.0)) -> list:
    """Every constant, evaluated from its primitive formula, with printed values
    attached as annotations and discrepancy ratios reported."""
    if not 0 < p <= 1:
        raise ValueError(f"p must lie in (0, 1], got {p}")
    q = 1.0 if q is None else q
    m = A_min()
    out = [
        ConstantAudit("mu(6,1)", mu_const(6, 1), "primitive", notes="2 e ln2 gamma ln(2 kappa)"),
        ConstantAudit("mu(2,1)", mu_const(2, 1), "primitive", notes="equals 4 e (ln 2)^2"),
        ConstantAudit("rational factor f(2)", rational_factor(2.0), "primitive"),
        ConstantAudit("argmin R*", m.R, "primitive", notes="golden-section refinement of a log scan"),
        ConstantAudit("min f", m.factor, "primitive"),
        ConstantAudit(
            "A (printed closed form at the minimum)",
            m.A_printed_form,
            "printed-form",
            printed=PRINTED_A,
            ratio=PRINTED_A / m.A_printed_form,
            notes="16 e ln2 ln12 min f; printed decimal / this value",
        ),
        ConstantAudit(
            "A (primitive product at the minimum)",
            m.A_primitive,
            "primitive",
            printed=PRINTED_A,
            ratio=PRINTED_A / m.A_primitive,
            notes="8 e ln2 gamma (2+beta)(1+alpha)^2/alpha kappa ln(2 kappa) with tree Whitney parameters",
        ),
        ConstantAudit(
            "primitive / printed closed form",
            m.A_primitive / m.A_printed_form,
            "primitive",
            notes="constant in R; the primitive prefactor is 96 e ln2 ln12",
        ),
        ConstantAudit(f"A_primitive^(1/p) at p={p}", m.A_primitive ** (1 / p), "primitive"),
        ConstantAudit(f"tau constant (p={p}, q={max(p, q)}, d={d})", tau_constant(p, max(p, q), d), "primitive"),
    ]
    for R in Rs:
        kappa, gamma, beta, alpha = tree_whitney_params(R)
        D = bound_D(p, kappa, gamma, beta, alpha)
        out.append(ConstantAudit(f"whitney params (n=1, lambda=6) at R={R}", float(beta), "primitive",
                                 notes=f"kappa={kappa}, gamma={gamma}, beta={beta}, alpha={alpha}"))
        out.append(ConstantAudit(f"bound_D at R={R}, p={p}", D, "primitive"))
        out.append(ConstantAudit(
            f"primitive / printed form at R={R}", A_primitive_of_R(R) / A_of_R(R), "primitive"))
    return out
