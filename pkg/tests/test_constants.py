import math

import pytest
from scipy.optimize import brentq

from freep.constants import (
    PRINTED_A,
    A_min,
    A_of_R,
    A_primitive_of_R,
    audit_all,
    mu_const,
    nu_floor,
    rational_factor,
    tree_whitney_params,
)
from freep.extend import bound_D
from freep.grid import tau_constant


def log_derivative(R):
    """d/dR log f(R), written out by hand."""
    return (4 / R + 2 / (R + 1) + (14 * R + 7) / (7 * R * R + 7 * R - 6)
            - 1 / (R - 1) - (2 * R + 1) / (R * R + R - 1))


def test_rational_factor_at_two():
    assert rational_factor(2.0) == pytest.approx(16 * 9 * 36 / 5, rel=1e-12)
    assert abs(rational_factor(2.0) - 1036.8) < 1e-12 * 1036.8


def test_rational_factor_diverges_at_both_ends():
    assert rational_factor(1 + 1e-9) > 1e9
    assert rational_factor(1e4) > 1e20


def test_mu_const_values():
    assert mu_const(6, 1) == pytest.approx(2 * math.e * math.log(2) * math.log(12), rel=1e-15)
    assert abs(mu_const(6, 1) - 9.363970070034554) < 1e-12
    assert mu_const(2, 1) == pytest.approx(4 * math.e * math.log(2) ** 2, rel=1e-15)
    assert mu_const(6, 2.5) == pytest.approx(2.5 * mu_const(6, 1), rel=1e-15)


def test_mu_const_domain():
    with pytest.raises(ValueError):
        mu_const(1, 1)
    with pytest.raises(ValueError):
        nu_floor(0)
    assert nu_floor(3.0) == 5.0


def test_minimum_against_root_of_derivative():
    m = A_min()
    R_star = brentq(log_derivative, 1.01, 3.0, xtol=1e-15)
    assert m.R == pytest.approx(R_star, rel=1e-7)
    assert m.factor == pytest.approx(rational_factor(R_star), rel=1e-12)
    assert m.factor == pytest.approx(373.3075837853492, rel=1e-12)


def test_minimum_first_order_condition():
    m = A_min()
    h = 1e-6 * m.R
    slope = (A_of_R(m.R + h) - A_of_R(m.R - h)) / (2 * h)
    assert abs(slope) < 1e-6 * A_of_R(m.R)


def test_minimum_is_reproducible():
    assert A_min().R == A_min().R


def test_primitive_is_six_times_printed_form():
    for R in (1.1, 1.5, 2.0, 3.0, 10.0):
        assert A_primitive_of_R(R) / A_of_R(R) == pytest.approx(6.0, rel=1e-12)


def test_primitive_at_two_by_hand():
    kappa, gamma, beta, alpha = 6, 4.0, 14 * 5.0, 5.0
    want = 8 * math.e * math.log(2) * gamma * (2 + beta) * (1 + alpha) ** 2 / alpha * kappa * math.log(12)
    assert tree_whitney_params(2.0) == (kappa, gamma, beta, alpha)
    assert bound_D(1, kappa, gamma, beta, alpha) == pytest.approx(want, rel=1e-14)


def test_printed_value_is_half_of_printed_form():
    m = A_min()
    assert PRINTED_A / m.A_printed_form == pytest.approx(0.5, rel=1e-9)


def test_audit_reports_without_reconciling():
    rows = {a.name: a for a in audit_all(0.5)}
    prim = rows["A (primitive product at the minimum)"]
    printed = rows["A (printed closed form at the minimum)"]
    assert prim.printed == PRINTED_A and printed.printed == PRINTED_A
    assert prim.ratio == pytest.approx(PRINTED_A / prim.value)
    assert prim.value != PRINTED_A
    assert all(a.value > 0 for a in rows.values())
    assert {a.provenance for a in rows.values()} <= {"primitive", "printed-form"}


def test_audit_rejects_bad_exponent():
    with pytest.raises(ValueError):
        audit_all(0)


def test_tau_constant_equal_levels():
    assert tau_constant(0.5, 0.5, 2) == pytest.approx(15.0**2)
